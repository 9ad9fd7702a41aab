//! Subspaces of matrix space spanned by a few matrices, and orthogonal
//! projection onto them under the trace inner product.
//!
//! These show up in the convergence analysis: the contraction and
//! co-coercivity inequalities are stated for gradients projected onto the
//! span of two or three iterates, and the subspace-restricted isometry
//! constants are computed over exactly these spans.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative tolerance for dropping a near-dependent matrix during
/// orthonormalization, measured against the largest input norm.
const DROP_TOL_REL: f64 = 1e-10;

/// An orthonormal basis of a subspace of `ambient_rows x ambient_cols`
/// matrix space.
#[derive(Debug, Clone)]
pub struct SubspaceProjector {
    basis: Vec<DenseMatrix>,
    ambient_rows: usize,
    ambient_cols: usize,
}

impl SubspaceProjector {
    pub fn basis(&self) -> &[DenseMatrix] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_shape(&self) -> (usize, usize) {
        (self.ambient_rows, self.ambient_cols)
    }
}

/// Orthonormal basis for the linear span of `mats`, by modified
/// Gram-Schmidt with one re-orthogonalization pass. Near-dependent
/// elements are dropped at `DROP_TOL_REL` times the largest input norm,
/// so `{X, 2X}` yields a one-element basis and zero matrices contribute
/// nothing.
pub fn span_of(mats: &[DenseMatrix]) -> Result<SubspaceProjector> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidInput("span of an empty list".into()))?;
    let shape = first.shape();
    for m in mats {
        m.check_same_shape(first)?;
        if !m.is_finite() {
            return Err(Error::InvalidInput("span input has non-finite entries".into()));
        }
    }

    let scale = mats.iter().map(|m| m.frob_norm()).fold(0.0_f64, f64::max);
    let drop_tol = DROP_TOL_REL * scale;

    let mut basis: Vec<DenseMatrix> = Vec::new();
    for m in mats {
        let mut residual = m.clone();
        // two orthogonalization passes; the second mops up rounding from the first
        for _ in 0..2 {
            for b in &basis {
                let coeff = residual.inner(b)?;
                residual.axpy(-coeff, b)?;
            }
        }
        let norm = residual.frob_norm();
        if norm > drop_tol {
            basis.push(residual.scale(1.0 / norm));
        }
    }

    Ok(SubspaceProjector {
        basis,
        ambient_rows: shape.0,
        ambient_cols: shape.1,
    })
}

/// Orthogonal projection of `x` onto the span: `sum_i <B_i, x> B_i`.
pub fn project_span(x: &DenseMatrix, p: &SubspaceProjector) -> Result<DenseMatrix> {
    if x.shape() != p.ambient_shape() {
        return Err(Error::DimensionMismatch {
            expected: p.ambient_shape(),
            found: x.shape(),
        });
    }
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for b in &p.basis {
        let coeff = x.inner(b)?;
        out.axpy(coeff, b)?;
    }
    Ok(out)
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
    fn single_matrix_gives_one_element_basis() {
        let x = random_matrix(3, 3, 1);
        let p = span_of(std::slice::from_ref(&x)).unwrap();
        assert_eq!(p.dim(), 1);
        assert!((p.basis()[0].frob_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dependent_matrices_are_dropped() {
        let x = random_matrix(3, 4, 2);
        let p = span_of(&[x.clone(), x.scale(2.0)]).unwrap();
        assert_eq!(p.dim(), 1);
    }

    #[test]
    fn zero_matrices_give_empty_basis() {
        let p = span_of(&[DenseMatrix::zeros(2, 2), DenseMatrix::zeros(2, 2)]).unwrap();
        assert_eq!(p.dim(), 0);
    }

    #[test]
    fn empty_list_is_an_error() {
        assert!(span_of(&[]).is_err());
    }

    #[test]
    fn members_reconstruct_under_projection() {
        let x = random_matrix(4, 4, 3);
        let y = random_matrix(4, 4, 4);
        let p = span_of(&[x.clone(), y.clone()]).unwrap();
        assert_eq!(p.dim(), 2);
        for m in [&x, &y] {
            let proj = project_span(m, &p).unwrap();
            assert!(proj.frob_dist(m).unwrap() <= 1e-10 * m.frob_norm());
        }
    }

    #[test]
    fn projection_is_idempotent_and_pythagorean() {
        let x = random_matrix(5, 3, 5);
        let y = random_matrix(5, 3, 6);
        let z = random_matrix(5, 3, 7);
        let p = span_of(&[x, y]).unwrap();
        let pz = project_span(&z, &p).unwrap();
        let ppz = project_span(&pz, &p).unwrap();
        assert!(ppz.frob_dist(&pz).unwrap() <= 1e-10 * pz.frob_norm().max(1.0));

        // ||Pz||^2 + ||z - Pz||^2 = ||z||^2
        let tail = z.sub(&pz).unwrap();
        let lhs = pz.frob_norm_sq() + tail.frob_norm_sq();
        assert!((lhs - z.frob_norm_sq()).abs() <= 1e-10 * z.frob_norm_sq());
        assert!(pz.frob_norm() <= z.frob_norm() + 1e-12);
    }

    #[test]
    fn orthogonal_input_projects_to_zero() {
        // E11 and E22 are orthogonal under the trace inner product
        let mut e11 = DenseMatrix::zeros(2, 2);
        e11.set(0, 0, 1.0);
        let mut e22 = DenseMatrix::zeros(2, 2);
        e22.set(1, 1, 1.0);
        let p = span_of(std::slice::from_ref(&e11)).unwrap();
        let proj = project_span(&e22, &p).unwrap();
        assert_eq!(proj.frob_norm(), 0.0);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let p = span_of(&[DenseMatrix::zeros(2, 2)]).unwrap();
        assert!(project_span(&DenseMatrix::zeros(3, 2), &p).is_err());
    }
}
