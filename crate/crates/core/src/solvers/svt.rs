use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operators::{apply_op, ProblemInstance};
use crate::svd::soft_threshold_with_rank;

use super::{entry_sampling_parts, RecoveryResult, Run, SolverConfig, Termination};

/// Singular value thresholding: dual ascent along the residual with a
/// singular-value soft-thresholding primal step.
///
/// For entry sampling the dual state is a matrix supported on the observed
/// set, updated by `Y += step_delta * P_Omega(M - X)` with `M` the observed
/// values; for dense ensembles it is a measurement-space vector `q` with
/// `Y = (1/m) sum_l q_l A_l`. Either way the primal iterate is
/// `X = S_tau(Y)`, whose rank is free to exceed the budget; the rank
/// actually reached is recorded in the trace.
///
/// Stops on the residual tolerance or the iteration budget.
pub fn svt(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    tau: f64,
    step_delta: f64,
) -> Result<RecoveryResult> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("threshold tau {tau} must be nonnegative")));
    }
    if !(step_delta > 0.0 && step_delta.is_finite()) {
        return Err(Error::Config(format!("dual step {step_delta} must be positive")));
    }
    let m = inst.measurement_count();
    let (rows, cols) = inst.op.ambient_shape();
    let mut run = Run::new(inst);
    // reuse the shared validation; the iterate itself starts at the dual zero
    let (_, _, inner, _) = super::prepare(inst, cfg, 1, &mut run)?;

    let mut x = DenseMatrix::zeros(rows, cols);
    let mut x_rank = 0usize;
    let residual = run.record_with_rank(0, &x, x_rank, 0.0)?;
    if residual <= cfg.tolerance {
        return Ok(run.finish(x, Termination::ResidualTol));
    }

    let entry_parts = entry_sampling_parts(&inst.op).map(|(idx, scale)| (idx.to_vec(), scale));
    let mut dual_matrix = DenseMatrix::zeros(rows, cols);
    let mut dual_vec = vec![0.0; m];

    for k in 0..cfg.outer_iterations {
        for _ in 0..inner {
            match &entry_parts {
                Some((indices, scale)) => {
                    // accumulate P_Omega(M - X) into the dual matrix
                    for (l, &(i, j)) in indices.iter().enumerate() {
                        let observed = inst.y[l] / scale;
                        let r = observed - x.get(i, j);
                        let cur = dual_matrix.get(i, j);
                        dual_matrix.set(i, j, cur + step_delta * r);
                    }
                }
                None => {
                    let image = apply_op(&inst.op, &x)?;
                    for (q, (&yl, al)) in dual_vec.iter_mut().zip(inst.y.iter().zip(image.iter())) {
                        *q += step_delta * (yl - al);
                    }
                    dual_matrix = assemble_dual(inst, &dual_vec)?;
                }
            }
            run.grads += m as u64;
            let (next, rank) = soft_threshold_with_rank(&dual_matrix, tau)?;
            x = next;
            x_rank = rank;
        }
        run.check_finite(&x, k)?;

        let residual = run.record_with_rank(k + 1, &x, x_rank, step_delta)?;
        if residual <= cfg.tolerance {
            return Ok(run.finish(x, Termination::ResidualTol));
        }
    }

    Ok(run.finish(x, Termination::Budget))
}

/// The conventional threshold for completion problems, `5 sqrt(n1 n2)`.
pub fn svt_default_tau(inst: &ProblemInstance) -> f64 {
    let (rows, cols) = inst.op.ambient_shape();
    5.0 * ((rows * cols) as f64).sqrt()
}

/// The conventional dual step: `1.2 / sample_ratio` for entry sampling,
/// `1.2` otherwise.
pub fn svt_default_step(inst: &ProblemInstance) -> f64 {
    let (rows, cols) = inst.op.ambient_shape();
    match entry_sampling_parts(&inst.op) {
        Some((indices, _)) => 1.2 * (rows * cols) as f64 / indices.len() as f64,
        None => 1.2,
    }
}

/// `(1/m) sum_l q_l A_l` for dense ensembles.
fn assemble_dual(inst: &ProblemInstance, q: &[f64]) -> Result<DenseMatrix> {
    let (rows, cols) = inst.op.ambient_shape();
    let mut y = DenseMatrix::zeros(rows, cols);
    if let crate::operators::MeasurementOp::DenseEnsemble { sensing } = &inst.op {
        let inv_m = 1.0 / sensing.len() as f64;
        for (ql, al) in q.iter().zip(sensing) {
            y.axpy(ql * inv_m, al)?;
        }
    }
    Ok(y)
}
