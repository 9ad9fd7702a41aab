//! The iterative recovery solvers.
//!
//! All five share one configuration type and one trace format:
//!
//! * [`svrg_arm`]: stochastic variance-reduced gradient with rank-r hard
//!   thresholding; outer loops recompute a full gradient at the snapshot,
//!   inner loops take variance-reduced stochastic steps.
//! * [`svp`]: plain hard-thresholded gradient descent with a fixed (or
//!   Barzilai-Borwein) step.
//! * [`niht`]: hard-thresholded gradient descent with the restricted
//!   steepest-descent step, exact for the column space of the iterate.
//! * [`stoiht`]: stochastic hard-thresholded gradient descent.
//! * [`svt`]: dual ascent with singular value soft thresholding (the one
//!   solver whose iterates can exceed the rank budget).
//!
//! `outer_iterations x inner_iterations` is the iteration budget for every
//! solver; stopping conditions are evaluated at outer boundaries (every
//! `inner_iterations` steps). For the stochastic solvers the natural inner
//! count is one expected pass over the measurements per outer loop
//! (`n = ceil(m / batch_size)`, the default); for the full-gradient solvers
//! the default is `n = 1`.

mod niht;
mod stoiht;
mod svp;
mod svrg;
mod svt;

pub use niht::niht;
pub use stoiht::stoiht;
pub use svp::svp;
pub use svrg::svrg_arm;
pub use svt::{svt, svt_default_step, svt_default_tau};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operators::{full_gradient, MeasurementOp, ProblemInstance};
use crate::rng::{mix_seed, stream};
use crate::subspace::span_of;
use crate::svd::{hard_threshold_with_factors, SvdFactors};
use crate::theory::theorem1_interval;

/// Relative threshold for the numerical rank reported in traces.
pub const RANK_TOL: f64 = 1e-8;

/// How the initial iterate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// Start from the zero matrix.
    Zero,
    /// One hard-thresholded gradient step from zero:
    /// `H_r(-eta0 * grad F(0))`.
    SpectralOneStep,
}

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Constant step.
    Fixed(f64),
    /// Barzilai-Borwein secant step across snapshots, safeguarded by a
    /// fallback value and a clamp interval. The first outer loop (no
    /// previous snapshot) uses the clamped fallback.
    BarzilaiBorwein {
        fallback: f64,
        clamp_min: f64,
        clamp_max: f64,
    },
    /// Step placed inside the admissible interval of the iterate-contraction
    /// analysis for an assumed isometry constant `delta`: `placement` = 0
    /// picks the lower endpoint, 1 the upper.
    TheoryGuided { delta: f64, placement: f64 },
}

impl StepRule {
    /// Barzilai-Borwein with the default clamp `[1e-6, 1e2]`.
    pub fn bb(fallback: f64) -> Self {
        StepRule::BarzilaiBorwein {
            fallback,
            clamp_min: 1e-6,
            clamp_max: 1e2,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            StepRule::Fixed(eta) => {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::Config(format!("fixed step {eta} must be positive")));
                }
            }
            StepRule::BarzilaiBorwein {
                fallback,
                clamp_min,
                clamp_max,
            } => {
                if !(fallback > 0.0 && fallback.is_finite()) {
                    return Err(Error::Config(format!("fallback step {fallback} must be positive")));
                }
                if !(clamp_min > 0.0 && clamp_max >= clamp_min) {
                    return Err(Error::Config(format!(
                        "clamp [{clamp_min}, {clamp_max}] must be positive and ordered"
                    )));
                }
            }
            StepRule::TheoryGuided { delta, placement } => {
                if !(0.0..1.0).contains(&delta) {
                    return Err(Error::Config(format!("assumed delta {delta} outside [0, 1)")));
                }
                if !(0.0..=1.0).contains(&placement) {
                    return Err(Error::Config(format!("placement {placement} outside [0, 1]")));
                }
                let interval = theorem1_interval(delta)?;
                if !interval.nonempty() {
                    return Err(Error::Config(format!(
                        "admissible step interval is empty at delta = {delta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The constant step this rule resolves to before any snapshot history
    /// exists (also the fallback for adaptive rules).
    pub(crate) fn base_step(&self) -> f64 {
        match *self {
            StepRule::Fixed(eta) => eta,
            StepRule::BarzilaiBorwein {
                fallback,
                clamp_min,
                clamp_max,
            } => fallback.clamp(clamp_min, clamp_max),
            StepRule::TheoryGuided { delta, placement } => theorem1_interval(delta)
                .expect("validated")
                .at(placement),
        }
    }
}

/// Run parameters shared by every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Outer-loop budget `K`.
    pub outer_iterations: usize,
    /// Inner steps per outer loop; `None` picks the solver default
    /// (`m` for the stochastic solvers, 1 for the full-gradient ones).
    pub inner_iterations: Option<usize>,
    /// Stopping tolerance on the squared residual and on the squared
    /// snapshot change.
    pub tolerance: f64,
    pub step: StepRule,
    /// Measurement indices drawn per stochastic step.
    pub batch_size: usize,
    pub rng_seed: u64,
    pub init: InitPolicy,
}

impl SolverConfig {
    pub fn new(rng_seed: u64) -> Self {
        SolverConfig {
            outer_iterations: 50,
            inner_iterations: None,
            tolerance: 1e-8,
            step: StepRule::bb(0.5),
            batch_size: 1,
            rng_seed,
            init: InitPolicy::Zero,
        }
    }

    fn validate(&self, inst: &ProblemInstance) -> Result<()> {
        if self.outer_iterations == 0 {
            return Err(Error::Config("outer iteration budget must be at least 1".into()));
        }
        if self.inner_iterations == Some(0) {
            return Err(Error::Config("inner iteration count must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        let m = inst.measurement_count();
        if self.batch_size == 0 || self.batch_size > m {
            return Err(Error::Config(format!(
                "batch size {} outside 1..={m}",
                self.batch_size
            )));
        }
        self.step.validate()
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `||y - A(X)||^2 <= tolerance`.
    ResidualTol,
    /// `||X_{k+1} - X_k||_F^2 <= tolerance`.
    IterateTol,
    /// Iteration budget exhausted.
    Budget,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::ResidualTol => "residual-tolerance",
            Termination::IterateTol => "iterate-tolerance",
            Termination::Budget => "budget",
        };
        f.write_str(s)
    }
}

/// One row per outer iteration (row 0 is the initial iterate).
///
/// `wall_clock` is observability only: it is the one field exempt from the
/// bit-reproducibility guarantee, and report writers leave it out.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub outer_index: usize,
    pub residual_sq: f64,
    pub objective: f64,
    pub relative_error: Option<f64>,
    /// Step size used during the outer loop that produced this iterate
    /// (0 for the initial row).
    pub step: f64,
    /// Seconds since the solve started.
    pub wall_clock: f64,
    /// Cumulative gradient evaluations in single-measurement units.
    pub gradient_evaluations: u64,
    /// Numerical rank of the iterate at the `RANK_TOL` relative threshold.
    pub iterate_rank: usize,
}

/// Per-outer-iteration history of a run.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
}

impl SolveTrace {
    pub fn final_row(&self) -> &TraceRow {
        self.rows.last().expect("trace is never empty")
    }

    /// Gradient evaluations spent until the squared residual first dropped
    /// to `target`, if it did.
    pub fn evaluations_to_residual(&self, target: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.residual_sq <= target)
            .map(|r| r.gradient_evaluations)
    }
}

/// A recovered estimate with its run history.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub estimate: DenseMatrix,
    pub trace: SolveTrace,
    pub terminated: Termination,
}

/// Barzilai-Borwein step across snapshots:
/// `||s||_F^2 / (n <s, g_k - g_{k-1}>)` with `s = snapshot - prev_snapshot`.
///
/// Nonpositive curvature or a value outside the clamp interval returns the
/// clamped fallback. Identical snapshots are an error; the caller keeps its
/// previous step.
#[allow(clippy::too_many_arguments)]
pub fn bb_step(
    prev_snapshot: &DenseMatrix,
    snapshot: &DenseMatrix,
    prev_grad: &DenseMatrix,
    grad: &DenseMatrix,
    inner_n: usize,
    fallback: f64,
    clamp_min: f64,
    clamp_max: f64,
) -> Result<f64> {
    let s = snapshot.sub(prev_snapshot)?;
    if s.frob_norm_sq() == 0.0 {
        return Err(Error::DegenerateStep);
    }
    let g = grad.sub(prev_grad)?;
    let curvature = s.inner(&g)?;
    let safeguarded = fallback.clamp(clamp_min, clamp_max);
    if curvature <= 0.0 {
        return Ok(safeguarded);
    }
    let eta = s.frob_norm_sq() / (inner_n as f64 * curvature);
    if !eta.is_finite() || eta < clamp_min || eta > clamp_max {
        return Ok(safeguarded);
    }
    Ok(eta)
}

/// Default step for full-gradient moves: `1/(2 U)` where `U` is the upper
/// isometry estimate of the operator on the span of a random rank-r probe.
pub fn default_full_step(inst: &ProblemInstance, seed: u64) -> Result<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let (rows, cols) = inst.op.ambient_shape();
    let r = inst.rank_budget;
    let mut rng = stream(mix_seed(seed, &[0x70726f_u64]));
    let l = DenseMatrix::from_fn(rows, r, |_, _| StandardNormal.sample(&mut rng));
    let rt = DenseMatrix::from_fn(r, cols, |_, _| StandardNormal.sample(&mut rng));
    let probe = l.matmul(&rt)?;
    let span = span_of(std::slice::from_ref(&probe))?;
    let (_, upper) = crate::operators::estimate_subspace_rip(&inst.op, &span)?;
    if !(upper > 0.0 && upper.is_finite()) {
        return Err(Error::InvalidInput("probe produced a degenerate isometry estimate".into()));
    }
    Ok(1.0 / (2.0 * upper))
}

/// Worst-case smoothness of the batch sub-operators: an upper bound on
/// `(1/b) ||A_B(Z)||^2 / ||Z||_F^2` over all size-`b` batches and all `Z`.
///
/// Entry sampling is exact (`scale^2 / b`: a batch of distinct entries is a
/// set of orthogonal rank-1 functionals); dense ensembles use the trace
/// bound, the largest sensing-matrix norm.
pub fn batch_smoothness_upper(op: &MeasurementOp, batch_size: usize) -> f64 {
    match op {
        MeasurementOp::EntrySampling { scale, .. } => scale * scale / batch_size as f64,
        MeasurementOp::DenseEnsemble { sensing } => sensing
            .iter()
            .map(|a| a.frob_norm_sq())
            .fold(0.0, f64::max),
    }
}

/// Default step for stochastic moves with the given batch size: `1/(2 S)`
/// where `S` is the batch smoothness bound. For singleton batches on entry
/// sampling this is the per-entry exact-projection step.
pub fn default_stochastic_step(inst: &ProblemInstance, batch_size: usize) -> Result<f64> {
    if batch_size == 0 || batch_size > inst.measurement_count() {
        return Err(Error::Config(format!("batch size {batch_size} out of range")));
    }
    let s = batch_smoothness_upper(&inst.op, batch_size);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput("degenerate batch smoothness bound".into()));
    }
    Ok(1.0 / (2.0 * s))
}

/// Barzilai-Borwein rule tuned for the stochastic solvers on this instance:
/// the fallback is the default stochastic step (safe for the very first
/// outer loop, before any secant information exists) and the clamps keep a
/// curvature misestimate within a factor 32 of it. The secant step divides
/// by the inner count, so its natural magnitude lives in the same range.
pub fn bb_rule_for(inst: &ProblemInstance, batch_size: usize) -> Result<StepRule> {
    let fallback = default_stochastic_step(inst, batch_size)?;
    Ok(StepRule::BarzilaiBorwein {
        fallback,
        clamp_min: 1e-3 * fallback,
        clamp_max: 32.0 * fallback,
    })
}

// ---------------------------------------------------------------------------
// shared run machinery

pub(crate) struct Run<'a> {
    pub inst: &'a ProblemInstance,
    pub grads: u64,
    pub trace: SolveTrace,
    started: Instant,
}

impl<'a> Run<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        Run {
            inst,
            grads: 0,
            trace: SolveTrace::default(),
            started: Instant::now(),
        }
    }

    /// Append a trace row for the iterate; rank comes from the thresholding
    /// factors when the caller has them, otherwise from a fresh SVD.
    pub fn record(
        &mut self,
        outer_index: usize,
        x: &DenseMatrix,
        factors: Option<&SvdFactors>,
        step: f64,
    ) -> Result<f64> {
        let rank = match factors {
            Some(f) => rank_from_singulars(&f.singular),
            None => crate::svd::numerical_rank(x, RANK_TOL)?,
        };
        self.record_with_rank(outer_index, x, rank, step)
    }

    /// Trace-row variant for solvers that already know the iterate's rank.
    pub fn record_with_rank(
        &mut self,
        outer_index: usize,
        x: &DenseMatrix,
        rank: usize,
        step: f64,
    ) -> Result<f64> {
        let residual_sq = self.inst.residual_norm_sq(x)?;
        self.trace.rows.push(TraceRow {
            outer_index,
            residual_sq,
            objective: residual_sq / self.inst.measurement_count() as f64,
            relative_error: self.inst.relative_error(x),
            step,
            wall_clock: self.started.elapsed().as_secs_f64(),
            gradient_evaluations: self.grads,
            iterate_rank: rank,
        });
        Ok(residual_sq)
    }

    pub fn check_finite(&self, x: &DenseMatrix, outer: usize) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::Divergence { iteration: outer });
        }
        Ok(())
    }

    pub fn finish(self, estimate: DenseMatrix, terminated: Termination) -> RecoveryResult {
        RecoveryResult {
            estimate,
            trace: self.trace,
            terminated,
        }
    }
}

pub(crate) fn rank_from_singulars(singular: &[f64]) -> usize {
    let top = singular.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Validate the configuration and resolve the iterate the run starts from.
/// Returns `(x0, factors, resolved_inner, base_step)` and charges the
/// spectral-init gradient to the run.
pub(crate) fn prepare(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    default_inner: usize,
    run: &mut Run<'_>,
) -> Result<(DenseMatrix, Option<SvdFactors>, usize, f64)> {
    cfg.validate(inst)?;
    let inner = cfg.inner_iterations.unwrap_or(default_inner).max(1);
    let base = cfg.step.base_step();
    let (rows, cols) = inst.op.ambient_shape();
    let (x0, factors) = match cfg.init {
        InitPolicy::Zero => (DenseMatrix::zeros(rows, cols), None),
        InitPolicy::SpectralOneStep => {
            let g0 = full_gradient(inst, &DenseMatrix::zeros(rows, cols))?;
            run.grads += inst.measurement_count() as u64;
            let (x, f) = hard_threshold_with_factors(&g0.scale(-base), inst.rank_budget)?;
            (x, Some(f))
        }
    };
    Ok((x0, factors, inner, base))
}

/// `X - eta * D`.
pub(crate) fn descend(x: &DenseMatrix, eta: f64, direction: &DenseMatrix) -> Result<DenseMatrix> {
    let mut w = x.clone();
    w.axpy(-eta, direction)?;
    Ok(w)
}

/// Entry-sampling metadata needed by SVT; `None` for dense ensembles.
pub(crate) fn entry_sampling_parts(op: &MeasurementOp) -> Option<(&[(usize, usize)], f64)> {
    match op {
        MeasurementOp::EntrySampling { indices, scale, .. } => Some((indices, *scale)),
        MeasurementOp::DenseEnsemble { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(v: Vec<f64>) -> DenseMatrix {
        DenseMatrix::from_vec(2, 2, v).unwrap()
    }

    #[test]
    fn bb_step_reference_cases() {
        let zero = matrix(vec![0.0; 4]);
        let s = matrix(vec![1.0, 2.0, -1.0, 0.5]);
        // gradient difference equal to the displacement: eta = 1
        let eta = bb_step(&zero, &s, &zero, &s, 1, 0.1, 1e-6, 1e2).unwrap();
        assert!((eta - 1.0).abs() < 1e-15);
        // gradient difference twice the displacement: eta = 1/2
        let eta = bb_step(&zero, &s, &zero, &s.scale(2.0), 1, 0.1, 1e-6, 1e2).unwrap();
        assert!((eta - 0.5).abs() < 1e-15);
        // the inner count divides the quotient
        let eta = bb_step(&zero, &s, &zero, &s, 4, 0.1, 1e-6, 1e2).unwrap();
        assert!((eta - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bb_step_safeguards() {
        let zero = matrix(vec![0.0; 4]);
        let s = matrix(vec![1.0, 2.0, -1.0, 0.5]);
        // nonpositive curvature falls back
        let eta = bb_step(&zero, &s, &zero, &s.scale(-1.0), 1, 0.3, 1e-6, 1e2).unwrap();
        assert_eq!(eta, 0.3);
        // fallback is clamped
        let eta = bb_step(&zero, &s, &zero, &s.scale(-1.0), 1, 7e2, 1e-6, 1e2).unwrap();
        assert_eq!(eta, 1e2);
        // out-of-clamp quotient falls back: curvature tiny makes eta huge
        let eta = bb_step(&zero, &s, &zero, &s.scale(1e-9), 1, 0.3, 1e-6, 1e2).unwrap();
        assert_eq!(eta, 0.3);
        // identical snapshots are an error
        assert!(matches!(
            bb_step(&s, &s, &zero, &zero, 1, 0.3, 1e-6, 1e2),
            Err(Error::DegenerateStep)
        ));
    }

    #[test]
    fn step_rule_validation() {
        assert!(StepRule::Fixed(0.0).validate().is_err());
        assert!(StepRule::Fixed(0.5).validate().is_ok());
        assert!(StepRule::bb(0.5).validate().is_ok());
        assert!(StepRule::TheoryGuided {
            delta: 0.0,
            placement: 0.5
        }
        .validate()
        .is_ok());
        // interval empty at delta past the admissible range
        assert!(StepRule::TheoryGuided {
            delta: 0.1,
            placement: 0.5
        }
        .validate()
        .is_err());
    }

    #[test]
    fn theory_guided_step_is_interval_point() {
        let rule = StepRule::TheoryGuided {
            delta: 0.0,
            placement: 0.5,
        };
        assert!((rule.base_step() - 0.5).abs() < 1e-15);
    }
}
