use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::operators::{full_gradient, ProblemInstance};
use crate::svd::hard_threshold_with_factors;

use super::{bb_step, descend, prepare, RecoveryResult, Run, SolverConfig, StepRule, Termination};

/// Singular value projection: hard-thresholded full-gradient descent,
/// `X_{t+1} = H_r(X_t - eta * grad F(X_t))`.
///
/// Stopping is checked every `inner_iterations` steps (default 1). A
/// Barzilai-Borwein rule adapts the step across those blocks using the
/// gradient already computed at each block's first iterate.
pub fn svp(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<RecoveryResult> {
    let m = inst.measurement_count();
    let mut run = Run::new(inst);
    let (mut x, mut factors, inner, base_step) = prepare(inst, cfg, 1, &mut run)?;

    let residual = run.record(0, &x, factors.as_ref(), 0.0)?;
    if residual <= cfg.tolerance {
        return Ok(run.finish(x, Termination::ResidualTol));
    }

    let mut prev: Option<(DenseMatrix, DenseMatrix)> = None;
    let mut eta = base_step;

    for k in 0..cfg.outer_iterations {
        let snapshot = x.clone();
        let mut snapshot_grad: Option<DenseMatrix> = None;

        for t in 0..inner {
            let g = full_gradient(inst, &x)?;
            run.grads += m as u64;
            if t == 0 {
                if let StepRule::BarzilaiBorwein {
                    fallback,
                    clamp_min,
                    clamp_max,
                } = cfg.step
                {
                    eta = match &prev {
                        None => fallback.clamp(clamp_min, clamp_max),
                        Some((ps, pg)) => {
                            bb_step(ps, &snapshot, pg, &g, inner, fallback, clamp_min, clamp_max)
                                .unwrap_or(eta)
                        }
                    };
                }
                snapshot_grad = Some(g.clone());
            }
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
        prev = snapshot_grad.map(|g| (snapshot, g));

        if residual <= cfg.tolerance {
            return Ok(run.finish(x, Termination::ResidualTol));
        }
        if moved_sq <= cfg.tolerance {
            return Ok(run.finish(x, Termination::IterateTol));
        }
    }

    Ok(run.finish(x, Termination::Budget))
}
