use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::operators::{full_gradient, variance_reduced_direction, IndexBatch, ProblemInstance};
use crate::rng::stream;
use crate::svd::hard_threshold_with_factors;

use super::{bb_step, descend, prepare, RecoveryResult, Run, SolverConfig, StepRule, Termination};

/// Stochastic variance-reduced gradient descent with rank-r hard
/// thresholding.
///
/// Each outer loop `k` recomputes the full gradient `g_k` at the snapshot;
/// each of the `n` inner steps draws a batch, forms the variance-reduced
/// direction `V_t = grad f_B(X_t) - grad f_B(snapshot) + g_k`, moves by
/// `-eta V_t` and projects back onto rank `<= r` by hard thresholding. The
/// run stops once the squared residual or the squared snapshot change drops
/// to the tolerance, or when the outer budget runs out.
///
/// With `batch_size = m` the correction term cancels exactly and the inner
/// updates reduce to full-gradient thresholded steps.
pub fn svrg_arm(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<RecoveryResult> {
    let m = inst.measurement_count();
    let mut run = Run::new(inst);
    let default_inner = m.div_ceil(cfg.batch_size.max(1));
    let (mut snapshot, mut snap_factors, inner, base_step) = prepare(inst, cfg, default_inner, &mut run)?;
    let mut rng = stream(cfg.rng_seed);

    let residual = run.record(0, &snapshot, snap_factors.as_ref(), 0.0)?;
    if residual <= cfg.tolerance {
        return Ok(run.finish(snapshot, Termination::ResidualTol));
    }

    let mut prev: Option<(DenseMatrix, DenseMatrix)> = None; // (snapshot, gradient)
    let mut eta = base_step;

    for k in 0..cfg.outer_iterations {
        let g = full_gradient(inst, &snapshot)?;
        run.grads += m as u64;

        if let StepRule::BarzilaiBorwein {
            fallback,
            clamp_min,
            clamp_max,
        } = cfg.step
        {
            eta = match &prev {
                None => fallback.clamp(clamp_min, clamp_max),
                Some((prev_snap, prev_grad)) => {
                    bb_step(prev_snap, &snapshot, prev_grad, &g, inner, fallback, clamp_min, clamp_max)
                        // degenerate displacement: keep the previous step
                        .unwrap_or(eta)
                }
            };
        }

        let mut x = snapshot.clone();
        let mut factors = None;
        for _ in 0..inner {
            let batch = IndexBatch::sample(&mut rng, m, cfg.batch_size, cfg.rng_seed)?;
            let v = variance_reduced_direction(inst, &x, &snapshot, &g, &batch)?;
            run.grads += 2 * batch.len() as u64;
            let w = descend(&x, eta, &v)?;
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
        prev = Some((snapshot, g));
        snapshot = x;
        snap_factors = factors;
        let _ = snap_factors;

        if residual <= cfg.tolerance {
            return Ok(run.finish(snapshot, Termination::ResidualTol));
        }
        if moved_sq <= cfg.tolerance {
            return Ok(run.finish(snapshot, Termination::IterateTol));
        }
    }

    Ok(run.finish(snapshot, Termination::Budget))
}
