//! The affine measurement map `A : R^{n1 x n2} -> R^m` and its gradients.
//!
//! Two operator kinds are supported: a dense ensemble of explicit sensing
//! matrices `A_l` (measurements `y_l = <A_l, X>`), and entry sampling for
//! matrix completion (`y_l = scale * X[i_l, j_l]`). Sensing matrices are
//! stored dense; the intended scale is desk-sized problems, about
//! `m <= 1e4` measurements on matrices up to 64x64 for the ensemble kind.
//!
//! The cost function is `F(X) = (1/m) ||y - A(X)||^2`, with stochastic
//! pieces `f_B(X) = (1/|B|) sum_{l in B} (y_l - <A_l, X>)^2` over index
//! batches `B`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::subspace::SubspaceProjector;

/// A linear measurement map given by `m` scalar functionals.
#[derive(Debug, Clone)]
pub enum MeasurementOp {
    /// Explicit sensing matrices, all of one shape.
    DenseEnsemble { sensing: Vec<DenseMatrix> },
    /// Sampling of individual entries, each scaled by `scale`.
    ///
    /// The default scale is `sqrt(n1*n2)`, which makes `(1/m)||A(X)||^2`
    /// an unbiased estimate of `||X||_F^2` under uniform sampling, so the
    /// restricted isometry constants are meaningful for completion problems.
    EntrySampling {
        rows: usize,
        cols: usize,
        indices: Vec<(usize, usize)>,
        scale: f64,
    },
}

impl MeasurementOp {
    pub fn dense_ensemble(sensing: Vec<DenseMatrix>) -> Result<Self> {
        let first = sensing
            .first()
            .ok_or_else(|| Error::InvalidInput("ensemble needs at least one sensing matrix".into()))?;
        let shape = first.shape();
        for a in &sensing {
            if a.shape() != shape {
                return Err(Error::DimensionMismatch {
                    expected: shape,
                    found: a.shape(),
                });
            }
            if !a.is_finite() {
                return Err(Error::InvalidInput("sensing matrix has non-finite entries".into()));
            }
        }
        Ok(MeasurementOp::DenseEnsemble { sensing })
    }

    pub fn entry_sampling(
        rows: usize,
        cols: usize,
        indices: Vec<(usize, usize)>,
        scale: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("ambient dimensions must be positive".into()));
        }
        if indices.is_empty() {
            return Err(Error::InvalidInput("entry sampling needs at least one index".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        let mut seen = vec![false; rows * cols];
        for &(i, j) in &indices {
            if i >= rows || j >= cols {
                return Err(Error::InvalidInput(format!(
                    "sample index ({i},{j}) outside {rows}x{cols}"
                )));
            }
            if seen[i * cols + j] {
                return Err(Error::InvalidInput(format!("duplicate sample index ({i},{j})")));
            }
            seen[i * cols + j] = true;
        }
        Ok(MeasurementOp::EntrySampling {
            rows,
            cols,
            indices,
            scale,
        })
    }

    /// Entry sampling with the default `sqrt(n1*n2)` normalization.
    pub fn entry_sampling_scaled(
        rows: usize,
        cols: usize,
        indices: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let scale = ((rows * cols) as f64).sqrt();
        Self::entry_sampling(rows, cols, indices, scale)
    }

    pub fn measurement_count(&self) -> usize {
        match self {
            MeasurementOp::DenseEnsemble { sensing } => sensing.len(),
            MeasurementOp::EntrySampling { indices, .. } => indices.len(),
        }
    }

    pub fn ambient_shape(&self) -> (usize, usize) {
        match self {
            MeasurementOp::DenseEnsemble { sensing } => sensing[0].shape(),
            MeasurementOp::EntrySampling { rows, cols, .. } => (*rows, *cols),
        }
    }

    /// `<A_l, X>` for a single functional.
    #[inline]
    fn functional(&self, l: usize, x: &DenseMatrix) -> f64 {
        match self {
            MeasurementOp::DenseEnsemble { sensing } => {
                let a = &sensing[l];
                a.entries()
                    .iter()
                    .zip(x.entries())
                    .map(|(p, q)| p * q)
                    .sum()
            }
            MeasurementOp::EntrySampling { indices, scale, .. } => {
                let (i, j) = indices[l];
                scale * x.get(i, j)
            }
        }
    }

    /// `out += c * A_l`.
    #[inline]
    fn add_scaled_functional(&self, l: usize, c: f64, out: &mut DenseMatrix) {
        match self {
            MeasurementOp::DenseEnsemble { sensing } => {
                let a = &sensing[l];
                for (o, &v) in out.entries_mut().iter_mut().zip(a.entries()) {
                    *o += c * v;
                }
            }
            MeasurementOp::EntrySampling { indices, scale, cols, .. } => {
                let (i, j) = indices[l];
                out.entries_mut()[i * cols + j] += c * scale;
            }
        }
    }
}

/// A measurement instance: the operator, the observed vector `y`, the rank
/// budget, and (for evaluation only) the ground truth.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub op: MeasurementOp,
    pub y: Vec<f64>,
    pub rank_budget: usize,
    pub truth: Option<DenseMatrix>,
    pub noiseless: bool,
}

impl ProblemInstance {
    pub fn new(
        op: MeasurementOp,
        y: Vec<f64>,
        rank_budget: usize,
        truth: Option<DenseMatrix>,
        noiseless: bool,
    ) -> Result<Self> {
        if y.len() != op.measurement_count() {
            return Err(Error::InvalidInput(format!(
                "measurement vector length {} does not match operator count {}",
                y.len(),
                op.measurement_count()
            )));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("measurements contain non-finite values".into()));
        }
        let (rows, cols) = op.ambient_shape();
        let max_rank = rows.min(cols);
        if rank_budget == 0 || rank_budget > max_rank {
            return Err(Error::InvalidRank {
                rank: rank_budget,
                max: max_rank,
            });
        }
        if let Some(t) = &truth {
            if t.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch {
                    expected: (rows, cols),
                    found: t.shape(),
                });
            }
            if noiseless {
                let scale = y.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
                for (l, &yl) in y.iter().enumerate() {
                    if (op.functional(l, t) - yl).abs() > 1e-12 * scale {
                        return Err(Error::InvalidInput(
                            "noiseless flag set but y != A(truth)".into(),
                        ));
                    }
                }
            }
        }
        Ok(ProblemInstance {
            op,
            y,
            rank_budget,
            truth,
            noiseless,
        })
    }

    /// Instance with `y = A(truth)` and no noise.
    pub fn noiseless(op: MeasurementOp, truth: DenseMatrix, rank_budget: usize) -> Result<Self> {
        let y = apply_op(&op, &truth)?;
        Self::new(op, y, rank_budget, Some(truth), true)
    }

    pub fn measurement_count(&self) -> usize {
        self.op.measurement_count()
    }

    /// Unnormalized squared residual `||y - A(X)||^2`, the quantity the
    /// stopping rule tests.
    pub fn residual_norm_sq(&self, x: &DenseMatrix) -> Result<f64> {
        self.check_ambient(x)?;
        let mut acc = 0.0;
        for (l, &yl) in self.y.iter().enumerate() {
            let r = yl - self.op.functional(l, x);
            acc += r * r;
        }
        Ok(acc)
    }

    /// Relative recovery error against the stored truth, if present.
    pub fn relative_error(&self, x: &DenseMatrix) -> Option<f64> {
        let t = self.truth.as_ref()?;
        let denom = t.frob_norm();
        let dist = x.frob_dist(t).ok()?;
        Some(if denom > 0.0 { dist / denom } else { dist })
    }

    fn check_ambient(&self, x: &DenseMatrix) -> Result<()> {
        if x.shape() != self.op.ambient_shape() {
            return Err(Error::DimensionMismatch {
                expected: self.op.ambient_shape(),
                found: x.shape(),
            });
        }
        Ok(())
    }
}

/// A nonempty set of distinct measurement indices together with the id of
/// the RNG stream that drew it.
#[derive(Debug, Clone)]
pub struct IndexBatch {
    indices: Vec<usize>,
    stream_id: u64,
}

impl IndexBatch {
    pub fn new(indices: Vec<usize>, m: usize, stream_id: u64) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty index batch".into()));
        }
        let mut seen = vec![false; m];
        for &l in &indices {
            if l >= m {
                return Err(Error::InvalidInput(format!("batch index {l} out of range {m}")));
            }
            if seen[l] {
                return Err(Error::InvalidInput(format!("duplicate batch index {l}")));
            }
            seen[l] = true;
        }
        Ok(IndexBatch { indices, stream_id })
    }

    /// The full batch `0..m`, in index order.
    pub fn full(m: usize) -> Self {
        IndexBatch {
            indices: (0..m).collect(),
            stream_id: 0,
        }
    }

    /// Draw `size` distinct indices uniformly without replacement.
    /// A full-size draw returns `0..m` in order so that the full batch
    /// degenerates exactly to the deterministic case.
    pub fn sample<R: Rng>(rng: &mut R, m: usize, size: usize, stream_id: u64) -> Result<Self> {
        if size == 0 || size > m {
            return Err(Error::InvalidInput(format!("batch size {size} outside 1..={m}")));
        }
        if size == m {
            return Ok(Self::full(m));
        }
        let indices = rand::seq::index::sample(rng, m, size).into_vec();
        Ok(IndexBatch { indices, stream_id })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

/// Apply the measurement map: component `l` is `<A_l, X>`.
pub fn apply_op(op: &MeasurementOp, x: &DenseMatrix) -> Result<Vec<f64>> {
    if x.shape() != op.ambient_shape() {
        return Err(Error::DimensionMismatch {
            expected: op.ambient_shape(),
            found: x.shape(),
        });
    }
    Ok((0..op.measurement_count()).map(|l| op.functional(l, x)).collect())
}

/// The cost `F(X) = (1/m) sum_l (y_l - <A_l, X>)^2`.
pub fn objective(inst: &ProblemInstance, x: &DenseMatrix) -> Result<f64> {
    Ok(inst.residual_norm_sq(x)? / inst.measurement_count() as f64)
}

/// Shared gradient accumulation: `(2/|set|) sum_{l in set} A_l (<A_l,X> - y_l)`.
///
/// Both the full and the stochastic gradient go through this one loop, in
/// the same index order, so a full-size batch reproduces the full gradient
/// exactly (not just up to rounding).
fn gradient_over(inst: &ProblemInstance, x: &DenseMatrix, set: &[usize]) -> Result<DenseMatrix> {
    inst.check_ambient(x)?;
    let (rows, cols) = inst.op.ambient_shape();
    let coeff = 2.0 / set.len() as f64;
    let mut g = DenseMatrix::zeros(rows, cols);
    for &l in set {
        let r = inst.op.functional(l, x) - inst.y[l];
        inst.op.add_scaled_functional(l, coeff * r, &mut g);
    }
    Ok(g)
}

/// Gradient of `F`: `(2/m) sum_l A_l (<A_l,X> - y_l)`.
pub fn full_gradient(inst: &ProblemInstance, x: &DenseMatrix) -> Result<DenseMatrix> {
    let all: Vec<usize> = (0..inst.measurement_count()).collect();
    gradient_over(inst, x, &all)
}

/// Gradient of the batch cost `f_B`: `(2/|B|) sum_{l in B} A_l (<A_l,X> - y_l)`.
pub fn stochastic_gradient(
    inst: &ProblemInstance,
    x: &DenseMatrix,
    batch: &IndexBatch,
) -> Result<DenseMatrix> {
    for &l in batch.indices() {
        if l >= inst.measurement_count() {
            return Err(Error::InvalidInput(format!("batch index {l} out of range")));
        }
    }
    gradient_over(inst, x, batch.indices())
}

/// The variance-reduced direction
/// `V = (grad f_B(X_t) - grad f_B(snapshot)) + g_k`,
/// where `g_k` is the full gradient at the snapshot (caller contract).
///
/// Both degenerate cases are exact, not merely exact up to rounding: at
/// `X_t == snapshot` the stochastic difference cancels bitwise and `g_k`
/// comes back unchanged, and a full batch short-circuits to the plain
/// batch gradient (its correction is identically zero by the caller
/// contract).
pub fn variance_reduced_direction(
    inst: &ProblemInstance,
    x_t: &DenseMatrix,
    snapshot: &DenseMatrix,
    gk: &DenseMatrix,
    batch: &IndexBatch,
) -> Result<DenseMatrix> {
    snapshot.check_same_shape(gk)?;
    if batch.len() == inst.measurement_count() {
        return stochastic_gradient(inst, x_t, batch);
    }
    let t_cur = stochastic_gradient(inst, x_t, batch)?;
    let t_snap = stochastic_gradient(inst, snapshot, batch)?;
    t_cur.sub(&t_snap)?.add(gk)
}

/// Extreme values of the restricted Rayleigh quotient
/// `(1/m) ||A(Z)||^2 / ||Z||_F^2` over the span of `p`, computed exactly as
/// the extreme eigenvalues of the Gram form `G_ij = (1/m) <A(B_i), A(B_j)>`.
pub fn estimate_subspace_rip(op: &MeasurementOp, p: &SubspaceProjector) -> Result<(f64, f64)> {
    let all: Vec<usize> = (0..op.measurement_count()).collect();
    estimate_subspace_rip_batch(op, p, &all)
}

/// Same as [`estimate_subspace_rip`], restricted to the sub-operator formed
/// by the given functionals with `(1/|set|)` normalization.
pub fn estimate_subspace_rip_batch(
    op: &MeasurementOp,
    p: &SubspaceProjector,
    set: &[usize],
) -> Result<(f64, f64)> {
    let d = p.dim();
    if d == 0 {
        return Err(Error::InvalidInput("subspace has an empty basis".into()));
    }
    if set.is_empty() {
        return Err(Error::InvalidInput("empty functional set".into()));
    }
    if p.ambient_shape() != op.ambient_shape() {
        return Err(Error::DimensionMismatch {
            expected: op.ambient_shape(),
            found: p.ambient_shape(),
        });
    }
    let images: Vec<Vec<f64>> = p
        .basis()
        .iter()
        .map(|b| set.iter().map(|&l| op.functional(l, b)).collect())
        .collect();
    let norm = 1.0 / set.len() as f64;
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v: f64 = images[i].iter().zip(&images[j]).map(|(a, b)| a * b).sum();
            gram[i * d + j] = norm * v;
            gram[j * d + i] = norm * v;
        }
    }
    let eigs = symmetric_eigenvalues(&mut gram, d);
    let lower = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lower, upper))
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
/// The Gram forms here are at most a handful of rows, so the simple method
/// is both fast and accurate.
fn symmetric_eigenvalues(a: &mut [f64], d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![a[0]];
    }
    let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1e-300);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[i * d + j].abs();
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let apq = a[i * d + j];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = a[i * d + i];
                let aqq = a[j * d + j];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let aik = a[i * d + k];
                    let ajk = a[j * d + k];
                    a[i * d + k] = c * aik - s * ajk;
                    a[j * d + k] = s * aik + c * ajk;
                }
                for k in 0..d {
                    let aki = a[k * d + i];
                    let akj = a[k * d + j];
                    a[k * d + i] = c * aki - s * akj;
                    a[k * d + j] = s * aki + c * akj;
                }
            }
        }
    }
    (0..d).map(|i| a[i * d + i]).collect()
}
