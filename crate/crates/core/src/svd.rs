//! Singular value decomposition and the spectral thresholding operators.
//!
//! The decomposition itself is delegated to `faer`, forced onto its
//! sequential code path so that results depend only on the input matrix.
//! Everything downstream (rank-r hard thresholding, singular value soft
//! thresholding) is built on top of it.

use dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{svd as faer_svd, svd_scratch, ComputeSvdVectors};
use faer::{diag::Diag, Mat, Par, Spec};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Thin SVD factors: `source = left * diag(singular) * right^T`.
///
/// `left` is `rows x k` and `right` is `cols x k` with orthonormal columns,
/// `k = min(rows, cols)`, and `singular` is nonincreasing and nonnegative.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub left: DenseMatrix,
    pub singular: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdFactors {
    /// Multiply the factors back together.
    pub fn reconstruct(&self) -> DenseMatrix {
        reconstruct_truncated(&self.left, &self.singular, &self.right, self.singular.len())
    }

    /// Keep only the leading `r` singular triplets.
    pub fn truncate(&self, r: usize) -> SvdFactors {
        let r = r.min(self.singular.len());
        let keep_cols = |m: &DenseMatrix| {
            DenseMatrix::from_fn(m.rows(), r.max(1), |i, j| if j < r { m.get(i, j) } else { 0.0 })
        };
        SvdFactors {
            left: keep_cols(&self.left),
            singular: self.singular[..r].to_vec(),
            right: keep_cols(&self.right),
        }
    }
}

/// Thin singular value decomposition.
///
/// Deterministic for a fixed input: the backend runs single-threaded and
/// performs no randomized steps.
pub fn svd(m: &DenseMatrix) -> Result<SvdFactors> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("svd input has non-finite entries".into()));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);

    let a = Mat::<f64>::from_fn(rows, cols, |i, j| m.get(i, j));
    let mut u = Mat::<f64>::zeros(rows, k);
    let mut v = Mat::<f64>::zeros(cols, k);
    let mut s = Diag::<f64>::zeros(k);

    let compute = ComputeSvdVectors::Thin;
    let mut buf = MemBuffer::new(svd_scratch::<f64>(
        rows,
        cols,
        compute,
        compute,
        Par::Seq,
        Spec::default(),
    ));
    faer_svd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Spec::default(),
    )
    .map_err(|_| Error::InvalidInput("svd did not converge".into()))?;

    let left = DenseMatrix::from_fn(rows, k, |i, j| u[(i, j)]);
    let right = DenseMatrix::from_fn(cols, k, |i, j| v[(i, j)]);
    let singular: Vec<f64> = (0..k).map(|i| s[i]).collect();
    Ok(SvdFactors { left, singular, right })
}

/// Rank-r hard thresholding: the nearest matrix of rank at most `r` in
/// Frobenius norm, obtained by truncating the SVD after `r` triplets.
///
/// When `sigma_r = sigma_{r+1}` the minimizer is not unique; this keeps the
/// first `r` triplets in the order the decomposition returns them, so the
/// result is one deterministic choice among the minimizers.
pub fn hard_threshold_rank(w: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    Ok(hard_threshold_with_factors(w, r)?.0)
}

/// Hard thresholding that also returns the truncated factors of the result.
/// Solvers keep the factors around (NIHT projects gradients onto the column
/// space of the current iterate).
pub fn hard_threshold_with_factors(w: &DenseMatrix, r: usize) -> Result<(DenseMatrix, SvdFactors)> {
    let max = w.rows().min(w.cols());
    if r == 0 || r > max {
        return Err(Error::InvalidRank { rank: r, max });
    }
    let factors = svd(w)?;
    if r == max {
        // Full budget: thresholding is the identity, skip the re-multiplication.
        return Ok((w.clone(), factors));
    }
    let truncated = factors.truncate(r);
    let out = reconstruct_truncated(&factors.left, &factors.singular, &factors.right, r);
    Ok((out, truncated))
}

/// Soft thresholding of the singular values: shrink each by `tau`, floor at
/// zero, keep the singular vectors.
pub fn soft_threshold_singular(w: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(soft_threshold_with_rank(w, tau)?.0)
}

/// Soft thresholding that also reports how many singular values survived.
pub(crate) fn soft_threshold_with_rank(w: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, usize)> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("threshold must be nonnegative, got {tau}")));
    }
    if tau == 0.0 {
        let rank = numerical_rank(w, 1e-12)?;
        return Ok((w.clone(), rank));
    }
    let factors = svd(w)?;
    let shrunk: Vec<f64> = factors.singular.iter().map(|&s| (s - tau).max(0.0)).collect();
    let kept = shrunk.iter().take_while(|&&s| s > 0.0).count();
    let out = reconstruct_truncated(&factors.left, &shrunk, &factors.right, kept);
    Ok((out, kept))
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    let singular = svd(m)?.singular;
    let top = singular.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(singular.iter().filter(|&&s| s > rel_tol * top).count())
}

/// `left[:, ..r] * diag(singular[..r]) * right[:, ..r]^T`.
fn reconstruct_truncated(
    left: &DenseMatrix,
    singular: &[f64],
    right: &DenseMatrix,
    r: usize,
) -> DenseMatrix {
    let rows = left.rows();
    let cols = right.rows();
    let mut out = DenseMatrix::zeros(rows, cols);
    for t in 0..r.min(singular.len()) {
        let s = singular[t];
        if s == 0.0 {
            continue;
        }
        for i in 0..rows {
            let li = s * left.get(i, t);
            if li == 0.0 {
                continue;
            }
            let row = &mut out.entries_mut()[i * cols..(i + 1) * cols];
            for (j, o) in row.iter_mut().enumerate() {
                *o += li * right.get(j, t);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let f = svd(&DenseMatrix::identity(2, 2)).unwrap();
        assert!((f.singular[0] - 1.0).abs() < 1e-12);
        assert!((f.singular[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_singular_values_sorted() {
        let f = svd(&DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0])).unwrap();
        assert!((f.singular[0] - 3.0).abs() < 1e-12);
        assert!((f.singular[1] - 2.0).abs() < 1e-12);
        assert!((f.singular[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_5x4_reconstructs() {
        let m = random_matrix(5, 4, 7);
        let f = svd(&m).unwrap();
        let err = f.reconstruct().frob_dist(&m).unwrap() / m.frob_norm();
        assert!(err <= 1e-10, "relative reconstruction error {err}");
        // singular values nonincreasing and nonnegative
        for w in f.singular.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(f.singular.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = DenseMatrix::zeros(2, 2);
        m.set(0, 0, f64::NAN);
        assert!(svd(&m).is_err());
    }

    #[test]
    fn hard_threshold_truncates_smallest() {
        let w = DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let h = hard_threshold_rank(&w, 2).unwrap();
        let want = DenseMatrix::from_diagonal(&[3.0, 2.0, 0.0]);
        assert!(h.frob_dist(&want).unwrap() < 1e-12);
    }

    #[test]
    fn hard_threshold_is_identity_on_low_rank() {
        // rank-1 matrix, budget 2
        let m = DenseMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.0));
        let h = hard_threshold_rank(&m, 2).unwrap();
        assert!(h.frob_dist(&m).unwrap() <= 1e-10 * m.frob_norm().max(1.0));
    }

    #[test]
    fn hard_threshold_rank_bounds() {
        let w = DenseMatrix::zeros(3, 4);
        assert!(matches!(hard_threshold_rank(&w, 0), Err(Error::InvalidRank { .. })));
        assert!(matches!(hard_threshold_rank(&w, 4), Err(Error::InvalidRank { .. })));
        assert!(hard_threshold_rank(&w, 3).is_ok());
    }

    #[test]
    fn eckart_young_on_random_candidates() {
        // H_r(W) beats 1000 random rank-2 matrices in Frobenius distance.
        let w = random_matrix(6, 6, 42);
        let h = hard_threshold_rank(&w, 2).unwrap();
        let best = h.frob_dist(&w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..1000 {
            let a = DenseMatrix::from_fn(6, 2, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let b = DenseMatrix::from_fn(2, 6, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let candidate = a.matmul(&b).unwrap();
            assert!(candidate.frob_dist(&w).unwrap() >= best - 1e-12);
        }
    }

    #[test]
    fn hard_threshold_error_is_tail_sum() {
        let w = random_matrix(6, 6, 11);
        let singular = svd(&w).unwrap().singular;
        let h = hard_threshold_rank(&w, 2).unwrap();
        let err_sq = {
            let d = h.frob_dist(&w).unwrap();
            d * d
        };
        let tail: f64 = singular[2..].iter().map(|s| s * s).sum();
        assert!((err_sq - tail).abs() <= 1e-8 * tail.max(1e-300));
    }

    #[test]
    fn soft_threshold_zero_is_identity() {
        let w = random_matrix(4, 4, 5);
        assert_eq!(soft_threshold_singular(&w, 0.0).unwrap(), w);
    }

    #[test]
    fn soft_threshold_shrinks_values() {
        let w = DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let s = soft_threshold_singular(&w, 1.5).unwrap();
        let want = DenseMatrix::from_diagonal(&[1.5, 0.5, 0.0]);
        assert!(s.frob_dist(&want).unwrap() < 1e-12);
    }

    #[test]
    fn soft_threshold_full_shrinkage_gives_zero() {
        let w = random_matrix(4, 4, 9);
        let top = svd(&w).unwrap().singular[0];
        let s = soft_threshold_singular(&w, top + 1.0).unwrap();
        assert_eq!(s.frob_norm(), 0.0);
    }

    #[test]
    fn soft_threshold_rejects_negative_tau() {
        let w = DenseMatrix::zeros(2, 2);
        assert!(soft_threshold_singular(&w, -0.1).is_err());
    }

    #[test]
    fn numerical_rank_detects_low_rank() {
        let m = DenseMatrix::from_fn(5, 5, |i, j| (i as f64 + 1.0) * (j as f64 + 1.0));
        assert_eq!(numerical_rank(&m, 1e-8).unwrap(), 1);
        assert_eq!(numerical_rank(&DenseMatrix::zeros(3, 3), 1e-8).unwrap(), 0);
    }
}
