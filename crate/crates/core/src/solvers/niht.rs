use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::operators::{apply_op, full_gradient, ProblemInstance};
use crate::svd::{hard_threshold_with_factors, SvdFactors};

use super::{descend, prepare, rank_from_singulars, RecoveryResult, Run, SolverConfig, Termination};

/// Normalized iterative hard thresholding: the SVP recursion with a
/// per-iteration step that is exact steepest descent restricted to the
/// column space of the current iterate,
///
/// `eta_t = ||P_U grad F||_F^2 / ((2/m) ||A(P_U grad F)||^2)`,
///
/// where `P_U` projects onto the span of the iterate's left singular
/// vectors. When the denominator underflows (zero projected gradient, or a
/// rank-0 iterate as at a zero start) the step falls back to the
/// configuration's resolved constant step.
pub fn niht(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<RecoveryResult> {
    let m = inst.measurement_count();
    let mut run = Run::new(inst);
    let (mut x, mut factors, inner, base_step) = prepare(inst, cfg, 1, &mut run)?;

    let residual = run.record(0, &x, factors.as_ref(), 0.0)?;
    if residual <= cfg.tolerance {
        return Ok(run.finish(x, Termination::ResidualTol));
    }

    let mut eta = base_step;
    for k in 0..cfg.outer_iterations {
        let snapshot = x.clone();
        for _ in 0..inner {
            let g = full_gradient(inst, &x)?;
            run.grads += m as u64;
            eta = match restricted_step(inst, &g, factors.as_ref())? {
                Some(step) => {
                    run.grads += m as u64; // the operator application in the denominator
                    step
                }
                None => base_step,
            };
            let w = descend(&x, eta, &g)?;
            let (next, f) = hard_threshold_with_factors(&w, inst.rank_budget)?;
            x = next;
            factors = Some(f);
        }
        run.check_finite(&x, k)?;

        let residual = run.record(k + 1, &x, factors.as_ref(), eta)?;
        let moved_sq = {
            let d = x.frob_dist(&snapshot)?;
            d * d
        };
        if residual <= cfg.tolerance {
            return Ok(run.finish(x, Termination::ResidualTol));
        }
        if moved_sq <= cfg.tolerance {
            return Ok(run.finish(x, Termination::IterateTol));
        }
    }

    Ok(run.finish(x, Termination::Budget))
}

/// The restricted steepest-descent step, or `None` when it degenerates.
fn restricted_step(
    inst: &ProblemInstance,
    gradient: &DenseMatrix,
    factors: Option<&SvdFactors>,
) -> Result<Option<f64>> {
    let Some(f) = factors else {
        return Ok(None);
    };
    let rank = rank_from_singulars(&f.singular);
    if rank == 0 {
        return Ok(None);
    }
    // P_U g = U (U^T g) over the columns with non-negligible singular values
    let (rows, cols) = gradient.shape();
    let mut projected = DenseMatrix::zeros(rows, cols);
    for t in 0..rank {
        // u_t^T G, then add u_t * (u_t^T G)
        let mut row = vec![0.0; cols];
        for i in 0..rows {
            let u = f.left.get(i, t);
            if u == 0.0 {
                continue;
            }
            for (j, v) in row.iter_mut().enumerate() {
                *v += u * gradient.get(i, j);
            }
        }
        for i in 0..rows {
            let u = f.left.get(i, t);
            for (j, &v) in row.iter().enumerate() {
                let cur = projected.get(i, j);
                projected.set(i, j, cur + u * v);
            }
        }
    }

    let num = projected.frob_norm_sq();
    if num == 0.0 {
        return Ok(None);
    }
    let image = apply_op(&inst.op, &projected)?;
    let denom = 2.0 / inst.measurement_count() as f64 * image.iter().map(|v| v * v).sum::<f64>();
    if !(denom.is_finite()) || denom <= f64::MIN_POSITIVE * num {
        return Ok(None);
    }
    let eta = num / denom;
    if !eta.is_finite() || eta <= 0.0 {
        return Ok(None);
    }
    Ok(Some(eta))
}
