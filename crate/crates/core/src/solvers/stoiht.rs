use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::operators::{full_gradient, stochastic_gradient, IndexBatch, ProblemInstance};
use crate::rng::stream;
use crate::svd::hard_threshold_with_factors;

use super::{bb_step, descend, prepare, RecoveryResult, Run, SolverConfig, StepRule, Termination};

/// Stochastic iterative hard thresholding:
/// `X_{t+1} = H_r(X_t - eta * grad f_B(X_t))` with batches drawn uniformly
/// without replacement per step. Stopping is checked every
/// `inner_iterations` steps (default one expected pass, `n = m`).
///
/// A Barzilai-Borwein rule needs full gradients at the block snapshots;
/// those extra evaluations are charged to the gradient counter. With
/// `batch_size = m` every step uses the full gradient and the trajectory
/// coincides with SVP's under the same step sequence.
pub fn stoiht(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<RecoveryResult> {
    let m = inst.measurement_count();
    let mut run = Run::new(inst);
    let default_inner = m.div_ceil(cfg.batch_size.max(1));
    let (mut x, mut factors, inner, base_step) = prepare(inst, cfg, default_inner, &mut run)?;
    let mut rng = stream(cfg.rng_seed);

    let residual = run.record(0, &x, factors.as_ref(), 0.0)?;
    if residual <= cfg.tolerance {
        return Ok(run.finish(x, Termination::ResidualTol));
    }

    let mut prev: Option<(DenseMatrix, DenseMatrix)> = None;
    let mut eta = base_step;

    for k in 0..cfg.outer_iterations {
        let snapshot = x.clone();
        if let StepRule::BarzilaiBorwein {
            fallback,
            clamp_min,
            clamp_max,
        } = cfg.step
        {
            let g = full_gradient(inst, &snapshot)?;
            run.grads += m as u64;
            eta = match &prev {
                None => fallback.clamp(clamp_min, clamp_max),
                Some((ps, pg)) => {
                    bb_step(ps, &snapshot, pg, &g, inner, fallback, clamp_min, clamp_max)
                        .unwrap_or(eta)
                }
            };
            prev = Some((snapshot.clone(), g));
        }

        for _ in 0..inner {
            let batch = IndexBatch::sample(&mut rng, m, cfg.batch_size, cfg.rng_seed)?;
            let g = stochastic_gradient(inst, &x, &batch)?;
            run.grads += batch.len() as u64;
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
