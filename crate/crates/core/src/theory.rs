//! Closed-form convergence constants, admissible step-size intervals, the
//! iteration-complexity estimate, and runnable checkers for the inequalities
//! behind them.
//!
//! The contraction analysis works with a restricted isometry parameter
//! `delta` and a step size `eta`. Two regimes are quantified:
//!
//! * iterate contraction: per-inner-step factor
//!   `rho = 2 sqrt(1 - 2(1-delta)(2 eta - 2 eta^2 (1+delta)))` and
//!   per-outer-loop factor `kappa = (-3 rho^{n+1} + rho^n + 2 rho)/(1 - rho)`,
//!   admissible for `delta < 1/71` with `eta` in an open interval around `1/2`;
//! * objective contraction: per-inner-step factor
//!   `mu = (1+delta)/(1-delta) - 2 eta (1+delta)(1 - 4 eta (1+delta))`,
//!   coupling term `nu = 32 delta eta^2`, and per-outer-loop factor
//!   `beta = mu^n + nu (1 - mu^n)/(1 - mu)`, admissible for `delta <= 1/20`
//!   with `eta` in a closed interval.
//!
//! The lemma checker replaces the global constant `delta_s` (intractable to
//! compute) by exact per-subspace extremes from
//! [`estimate_subspace_rip`](crate::operators::estimate_subspace_rip): each
//! inequality only ever uses the isometry bounds on the specific span of the
//! matrices involved, which the Gram form computes exactly. That keeps every
//! inequality falsifiable at desk scale without weakening it.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operators::{
    apply_op, estimate_subspace_rip, full_gradient, objective, ProblemInstance,
};
use crate::rng::{mix_seed, stream};
use crate::subspace::span_of;
use rand_distr::{Distribution, StandardNormal};

/// An admissible step-size interval. `closed` records whether the endpoints
/// belong to it; an open interval with coincident endpoints is empty, so the
/// degenerate point at the edge of the admissible `delta` range reports its
/// endpoints but counts as empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInterval {
    pub lower: f64,
    pub upper: f64,
    pub closed: bool,
}

impl StepInterval {
    pub fn nonempty(&self) -> bool {
        if self.closed {
            self.lower <= self.upper
        } else {
            self.lower < self.upper
        }
    }

    /// Point at `placement` in [0, 1] between the endpoints.
    pub fn at(&self, placement: f64) -> f64 {
        self.lower + placement * (self.upper - self.lower)
    }
}

/// Step interval of the iterate-contraction regime:
/// `(6 - 6 delta -/+ sqrt(71 delta^2 - 72 delta + 1)) / (12 - 12 delta^2)`,
/// open, nonempty exactly for `delta < 1/71`.
///
/// The discriminant factors as `(71 delta - 1)(delta - 1)`, which is the
/// form evaluated here; it avoids cancellation near `delta = 1/71`.
pub fn theorem1_interval(delta: f64) -> Result<StepInterval> {
    check_delta(delta)?;
    let radicand = (71.0 * delta - 1.0) * (delta - 1.0);
    let denom = 12.0 - 12.0 * delta * delta;
    if radicand < 0.0 {
        return Ok(StepInterval {
            lower: f64::NAN,
            upper: f64::NAN,
            closed: false,
        });
    }
    let root = radicand.sqrt();
    Ok(StepInterval {
        lower: (6.0 - 6.0 * delta - root) / denom,
        upper: (6.0 - 6.0 * delta + root) / denom,
        closed: false,
    })
}

/// Step interval of the objective-contraction regime:
/// `(2(1+delta) sqrt(1-delta) -/+ sqrt(-68 delta^3 - 388 delta^2 - 60 delta + 4))
///  / ((16 delta^2 + 96 delta + 16) sqrt(1-delta))`, closed.
pub fn theorem2_interval(delta: f64) -> Result<StepInterval> {
    check_delta(delta)?;
    let radicand = ((-68.0 * delta - 388.0) * delta - 60.0) * delta + 4.0;
    if radicand < 0.0 {
        return Ok(StepInterval {
            lower: f64::NAN,
            upper: f64::NAN,
            closed: true,
        });
    }
    let root = radicand.sqrt();
    let sqrt1d = (1.0 - delta).sqrt();
    let denom = (16.0 * delta * delta + 96.0 * delta + 16.0) * sqrt1d;
    Ok(StepInterval {
        lower: (2.0 * (1.0 + delta) * sqrt1d - root) / denom,
        upper: (2.0 * (1.0 + delta) * sqrt1d + root) / denom,
        closed: true,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta {delta} outside [0, 1)")));
    }
    Ok(())
}

/// The full set of contraction constants for one `(delta, eta, n)` choice.
#[derive(Debug, Clone, Copy)]
pub struct TheoryConstants {
    pub delta: f64,
    pub eta: f64,
    pub inner_n: usize,
    /// Per-inner-step iterate contraction factor.
    pub rho: f64,
    /// Per-outer-loop iterate contraction factor; `None` when `rho >= 1`
    /// (the geometric sum does not contract and the powers overflow).
    pub kappa: Option<f64>,
    /// Per-inner-step objective contraction factor.
    pub mu: f64,
    /// Snapshot coupling term.
    pub nu: f64,
    /// Per-outer-loop objective contraction factor.
    pub beta: f64,
}

impl TheoryConstants {
    pub fn kappa_lt_one(&self) -> bool {
        self.kappa.map(|k| k < 1.0).unwrap_or(false)
    }

    pub fn beta_lt_one(&self) -> bool {
        self.beta.is_finite() && self.beta < 1.0
    }
}

/// Evaluate `rho`, `kappa`, `mu`, `nu`, `beta` at the given parameters.
///
/// Errors when the `rho` radicand is negative or `mu = 1` (the geometric
/// sum for `beta` degenerates). `rho >= 1` is not an error: `kappa` is then
/// reported as undefined.
pub fn convergence_constants(delta: f64, eta: f64, inner_n: usize) -> Result<TheoryConstants> {
    check_delta(delta)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("eta {eta} must be positive")));
    }
    if inner_n == 0 {
        return Err(Error::Domain("inner loop count must be at least 1".into()));
    }

    let radicand = 1.0 - 2.0 * (1.0 - delta) * (2.0 * eta - 2.0 * eta * eta * (1.0 + delta));
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "contraction radicand {radicand} negative at delta={delta}, eta={eta}"
        )));
    }
    let rho = 2.0 * radicand.sqrt();
    let n = inner_n as i32;
    let kappa = if rho < 1.0 {
        let rho_n = rho.powi(n);
        Some((-3.0 * rho_n * rho + rho_n + 2.0 * rho) / (1.0 - rho))
    } else {
        None
    };

    let mu = (1.0 + delta) / (1.0 - delta)
        - 2.0 * eta * (1.0 + delta) * (1.0 - 4.0 * eta * (1.0 + delta));
    let nu = 32.0 * delta * eta * eta;
    if mu == 1.0 {
        return Err(Error::Domain("mu = 1: geometric sum for beta degenerates".into()));
    }
    let mu_n = mu.powi(n);
    let beta = mu_n + nu * (1.0 - mu_n) / (1.0 - mu);

    Ok(TheoryConstants {
        delta,
        eta,
        inner_n,
        rho,
        kappa,
        mu,
        nu,
        beta,
    })
}

/// Per-outer-loop cost line items and the outer-loop count needed to close
/// a `log(initial_gap / epsilon)` optimality gap at contraction `beta`.
#[derive(Debug, Clone, Copy)]
pub struct CostSummary {
    /// Outer loops needed; `None` when `beta >= 1` gives no guarantee.
    pub outer_loops: Option<u64>,
    /// Gradient work per outer loop, `m + n*b` single-measurement units.
    pub gradient_cost: u64,
    /// Decomposition work per outer loop, `r^3`.
    pub svd_cost: u64,
    pub no_guarantee: bool,
}

impl CostSummary {
    pub fn per_outer_total(&self) -> u64 {
        self.gradient_cost + self.svd_cost
    }

    pub fn total(&self) -> Option<u64> {
        self.outer_loops.map(|k| k * self.per_outer_total())
    }
}

/// Cost of reaching gap `epsilon` from `initial_gap` with per-outer
/// contraction `beta`: the smallest `k` with `initial_gap * beta^k <= epsilon`
/// plus the `m + n*b + r^3` per-outer line items.
pub fn complexity_estimate(
    m: usize,
    inner_n: usize,
    max_batch: usize,
    rank: usize,
    epsilon: f64,
    beta: f64,
    initial_gap: f64,
) -> Result<CostSummary> {
    if m == 0 || inner_n == 0 || max_batch == 0 || rank == 0 {
        return Err(Error::Domain("all cost parameters must be positive".into()));
    }
    if !(epsilon > 0.0) || !(initial_gap >= 0.0) || !(beta > 0.0) {
        return Err(Error::Domain("epsilon, beta, initial gap must be positive".into()));
    }
    let gradient_cost = (m + inner_n * max_batch) as u64;
    let svd_cost = (rank as u64).pow(3);

    if initial_gap <= epsilon {
        return Ok(CostSummary {
            outer_loops: Some(0),
            gradient_cost,
            svd_cost,
            no_guarantee: false,
        });
    }
    if beta >= 1.0 {
        return Ok(CostSummary {
            outer_loops: None,
            gradient_cost,
            svd_cost,
            no_guarantee: true,
        });
    }
    // log-based first guess, then correct by direct multiplication so that
    // exact boundaries (gap * beta^k == epsilon) round the right way
    let guess = ((initial_gap / epsilon).ln() / (1.0 / beta).ln() - 1e-9).ceil().max(0.0) as u64;
    let reached = |k: u64| initial_gap * beta.powi(k.min(i32::MAX as u64) as i32) <= epsilon;
    let mut k = guess;
    while !reached(k) {
        k += 1;
    }
    while k > 0 && reached(k - 1) {
        k -= 1;
    }
    Ok(CostSummary {
        outer_loops: Some(k),
        gradient_cost,
        svd_cost,
        no_guarantee: false,
    })
}

/// Pass/fail tally for one inequality across checker trials.
#[derive(Debug, Clone, Copy, Default)]
pub struct CheckStat {
    pub checked: usize,
    pub violations: usize,
    /// Smallest relative margin `(bound - value) / scale` seen; negative
    /// means a violation by that relative amount.
    pub worst_margin: f64,
}

impl CheckStat {
    fn new() -> Self {
        CheckStat {
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64, tol: f64) {
        self.checked += 1;
        if margin < -tol {
            self.violations += 1;
        }
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
    }
}

/// Outcome of [`lemma_checker`]: one tally per inequality.
///
/// `gradient_identity` is the exact identity
/// `<X-Y, grad F(X) - grad F(Y)> = (2/m) ||A(X-Y)||^2`; the rest are the
/// monotonicity, co-coercivity, contraction, and variance bounds with their
/// constants replaced by exact per-subspace isometry extremes. The
/// `gradient_lower_strong` form (squared-constant variant of the gradient
/// lower bound) is recorded for reference but not counted as a failure
/// source by [`LemmaReport::asserted_violations`].
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub trials: usize,
    pub gradient_identity: CheckStat,
    pub monotone_lower: CheckStat,
    pub co_coercivity: CheckStat,
    pub contraction_full: CheckStat,
    pub contraction_stochastic: CheckStat,
    pub variance_at_truth: CheckStat,
    pub gradient_lower_weak: CheckStat,
    pub gradient_lower_strong: CheckStat,
    pub reduced_direction_bound: CheckStat,
}

impl LemmaReport {
    /// Total violations across the asserted inequalities (the recorded-only
    /// strong gradient bound is excluded).
    pub fn asserted_violations(&self) -> usize {
        self.gradient_identity.violations
            + self.monotone_lower.violations
            + self.co_coercivity.violations
            + self.contraction_full.violations
            + self.contraction_stochastic.violations
            + self.variance_at_truth.violations
            + self.gradient_lower_weak.violations
            + self.reduced_direction_bound.violations
    }
}

impl std::fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "lemma checks over {} trials", self.trials)?;
        let mut line = |name: &str, s: &CheckStat| {
            writeln!(
                f,
                "  {name:<28} {}/{} pass, worst margin {:+.3e}",
                s.checked - s.violations,
                s.checked,
                s.worst_margin
            )
        };
        line("gradient identity", &self.gradient_identity)?;
        line("monotone lower bound", &self.monotone_lower)?;
        line("co-coercivity", &self.co_coercivity)?;
        line("contraction (full)", &self.contraction_full)?;
        line("contraction (stochastic)", &self.contraction_stochastic)?;
        line("variance at truth", &self.variance_at_truth)?;
        line("gradient lower (stated)", &self.gradient_lower_weak)?;
        line("gradient lower (proof)", &self.gradient_lower_strong)?;
        line("reduced-direction bound", &self.reduced_direction_bound)
    }
}

/// Relative slack for inequality checks; several bounds hold with equality
/// by construction, so exact zero margins must not count as violations.
const CHECK_TOL: f64 = 1e-9;

/// A standard-normal sensing ensemble over a random rank-`rank` truth, the
/// reference instance family for the inequality checker.
pub fn gaussian_ensemble_instance(
    rows: usize,
    cols: usize,
    m: usize,
    rank: usize,
    seed: u64,
) -> Result<ProblemInstance> {
    use crate::operators::MeasurementOp;
    let mut rng = stream(mix_seed(seed, &[0x656e73]));
    let sensing: Vec<DenseMatrix> = (0..m)
        .map(|_| DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let op = MeasurementOp::dense_ensemble(sensing)?;
    let l = DenseMatrix::from_fn(rows, rank, |_, _| StandardNormal.sample(&mut rng));
    let r = DenseMatrix::from_fn(rank, cols, |_, _| StandardNormal.sample(&mut rng));
    ProblemInstance::noiseless(op, l.matmul(&r)?, rank)
}

/// Verify the convergence inequalities on random low-rank pairs drawn from
/// the instance's rank budget, using exact per-subspace isometry constants.
/// Requires the instance to carry its ground truth.
pub fn lemma_checker(inst: &ProblemInstance, trials: usize, seed: u64) -> Result<LemmaReport> {
    let truth = inst
        .truth
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("lemma checker needs the ground truth".into()))?;
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial required".into()));
    }
    let (rows, cols) = inst.op.ambient_shape();
    let r = inst.rank_budget;
    let m = inst.measurement_count();

    let mut report = LemmaReport {
        trials,
        gradient_identity: CheckStat::new(),
        monotone_lower: CheckStat::new(),
        co_coercivity: CheckStat::new(),
        contraction_full: CheckStat::new(),
        contraction_stochastic: CheckStat::new(),
        variance_at_truth: CheckStat::new(),
        gradient_lower_weak: CheckStat::new(),
        gradient_lower_strong: CheckStat::new(),
        reduced_direction_bound: CheckStat::new(),
    };

    for trial in 0..trials {
        let mut rng = stream(mix_seed(seed, &[trial as u64]));
        let low_rank = |rng: &mut rand_chacha::ChaCha8Rng| {
            let l = DenseMatrix::from_fn(rows, r, |_, _| StandardNormal.sample(rng));
            let rt = DenseMatrix::from_fn(r, cols, |_, _| StandardNormal.sample(rng));
            l.matmul(&rt).expect("factor shapes agree")
        };
        let x = low_rank(&mut rng);
        let y = low_rank(&mut rng);

        let diff = x.sub(&y)?;
        let a_diff = apply_op(&inst.op, &diff)?;
        let sum_sq = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();

        // exact identity: <X-Y, grad F(X) - grad F(Y)> = (2/m) ||A(X-Y)||^2
        let gx = full_gradient(inst, &x)?;
        let gy = full_gradient(inst, &y)?;
        let gdiff = gx.sub(&gy)?;
        let lhs_inner = diff.inner(&gdiff)?;
        let rhs_inner = 2.0 / m as f64 * sum_sq(&a_diff);
        let scale = rhs_inner.abs().max(1e-300);
        report
            .gradient_identity
            .record(-((lhs_inner - rhs_inner).abs()) / scale, 1e-10);

        // monotonicity with the exact constant on span{X-Y}
        let span_diff = span_of(std::slice::from_ref(&diff))?;
        if span_diff.dim() > 0 {
            let (lo_d, _) = estimate_subspace_rip(&inst.op, &span_diff)?;
            let bound = 2.0 * lo_d * diff.frob_norm_sq();
            report
                .monotone_lower
                .record((lhs_inner - bound) / bound.abs().max(1e-300), CHECK_TOL);
        }

        // spans and their isometry extremes
        let gamma = span_of(&[x.clone(), y.clone()])?;
        let (lo_g, up_g) = estimate_subspace_rip(&inst.op, &gamma)?;
        let gamma_images: Vec<Vec<f64>> = gamma
            .basis()
            .iter()
            .map(|b| apply_op(&inst.op, b))
            .collect::<Result<_>>()?;
        // per-singleton upper constant on the span: ||P A_l||^2
        let proj_sq_gamma: Vec<f64> = (0..m)
            .map(|l| gamma_images.iter().map(|im| im[l] * im[l]).sum())
            .collect();
        let up_single_gamma = proj_sq_gamma.iter().cloned().fold(0.0, f64::max);

        // co-coercivity on a random singleton:
        // ||P_G (grad f_l(X) - grad f_l(Y))||^2 <= 2 U <X-Y, grad f_l(X) - grad f_l(Y)>
        let l = rng.gen_range(0..m);
        let c_l = a_diff[l];
        let lhs_co = 4.0 * c_l * c_l * proj_sq_gamma[l];
        let rhs_co = 2.0 * proj_sq_gamma[l] * 2.0 * c_l * c_l;
        report
            .co_coercivity
            .record((rhs_co - lhs_co) / rhs_co.abs().max(1e-300), CHECK_TOL);

        // contraction of the full-gradient step on span{X, Y}
        let diff_coords: Vec<f64> = gamma.basis().iter().map(|b| diff.inner(b)).collect::<Result<_>>()?;
        let gdiff_coords: Vec<f64> =
            gamma.basis().iter().map(|b| gdiff.inner(b)).collect::<Result<_>>()?;
        {
            let eta = 0.8 / up_g;
            let radicand = 1.0 - 2.0 * lo_g * (2.0 * eta - 2.0 * eta * eta * up_g);
            if radicand >= 0.0 {
                let cross: f64 = diff_coords.iter().zip(&gdiff_coords).map(|(a, b)| a * b).sum();
                let proj_norm_sq: f64 = gdiff_coords.iter().map(|v| v * v).sum();
                let lhs_sq =
                    diff.frob_norm_sq() - 2.0 * eta * cross + eta * eta * proj_norm_sq;
                let rhs_sq = radicand * diff.frob_norm_sq();
                report
                    .contraction_full
                    .record((rhs_sq - lhs_sq) / rhs_sq.abs().max(1e-300), CHECK_TOL);
            }
        }

        // contraction of the stochastic step in expectation over singletons
        {
            let eta = 0.8 / up_single_gamma.max(1e-300);
            let radicand = 1.0 - 2.0 * lo_g * (2.0 * eta - 2.0 * eta * eta * up_single_gamma);
            if radicand >= 0.0 {
                // E||X-Y - eta P(grad f_l(X) - grad f_l(Y))||^2, terms in coords:
                // grad f_l difference projects to 2 c_l a^l
                let mut expect = 0.0;
                for l in 0..m {
                    let cl = a_diff[l];
                    let mut cross = 0.0;
                    let mut pnorm = 0.0;
                    for (i, coords) in gamma_images.iter().enumerate() {
                        let pi = 2.0 * cl * coords[l];
                        cross += diff_coords[i] * pi;
                        pnorm += pi * pi;
                    }
                    expect += diff.frob_norm_sq() - 2.0 * eta * cross + eta * eta * pnorm;
                }
                expect /= m as f64;
                let rhs_sq = radicand * diff.frob_norm_sq();
                report
                    .contraction_stochastic
                    .record((rhs_sq - expect) / rhs_sq.abs().max(1e-300), CHECK_TOL);
            }
        }

        // bounds involving the truth: spans Lambda = span{X, X*} and
        // Omega = span{Y, X, X*}
        let lambda = span_of(&[x.clone(), truth.clone()])?;
        let lambda_images: Vec<Vec<f64>> = lambda
            .basis()
            .iter()
            .map(|b| apply_op(&inst.op, b))
            .collect::<Result<_>>()?;
        let proj_sq_lambda: Vec<f64> = (0..m)
            .map(|l| lambda_images.iter().map(|im| im[l] * im[l]).sum())
            .collect();
        let up_single_lambda = proj_sq_lambda.iter().cloned().fold(0.0, f64::max);

        let fx = objective(inst, &x)?;
        let fy = objective(inst, &y)?;
        let fstar = objective(inst, truth)?;
        let gap_x = fx - fstar;
        let gap_y = fy - fstar;

        // variance of the stochastic gradient difference to the truth:
        // E||P_L (grad f_l(X) - grad f_l(X*))||^2 <= 4 U_single (F(X) - F*)
        let e_x = apply_op(&inst.op, &x.sub(truth)?)?;
        {
            let mut lhs = 0.0;
            for l in 0..m {
                lhs += 4.0 * e_x[l] * e_x[l] * proj_sq_lambda[l];
            }
            lhs /= m as f64;
            let rhs = 4.0 * up_single_lambda * gap_x;
            report
                .variance_at_truth
                .record((rhs - lhs) / rhs.abs().max(1e-300), CHECK_TOL);
        }

        // gradient lower bounds on Lambda (stated and proof-strength forms)
        {
            let (lo_l, up_l) = estimate_subspace_rip(&inst.op, &lambda)?;
            let pg_sq: f64 = lambda
                .basis()
                .iter()
                .map(|b| gx.inner(b).map(|v| v * v))
                .sum::<Result<f64>>()?;
            let weak = 2.0 * lo_l / up_l * gap_x;
            let strong = 4.0 * lo_l * lo_l / up_l * gap_x;
            report
                .gradient_lower_weak
                .record((pg_sq - weak) / weak.abs().max(1e-300), CHECK_TOL);
            report
                .gradient_lower_strong
                .record((pg_sq - strong) / strong.abs().max(1e-300), CHECK_TOL);
        }

        // variance-reduced direction bound on Omega = span{Y, X, X*}, with
        // Y standing for the snapshot and X for the inner iterate
        {
            let omega = span_of(&[y.clone(), x.clone(), truth.clone()])?;
            let (lo_o, up_o) = estimate_subspace_rip(&inst.op, &omega)?;
            let omega_images: Vec<Vec<f64>> = omega
                .basis()
                .iter()
                .map(|b| apply_op(&inst.op, b))
                .collect::<Result<_>>()?;
            let proj_sq_omega: Vec<f64> = (0..m)
                .map(|l| omega_images.iter().map(|im| im[l] * im[l]).sum())
                .collect();
            let up_single_omega = proj_sq_omega.iter().cloned().fold(0.0, f64::max);

            let g_snapshot = gy.clone();
            let q_coords: Vec<f64> = omega
                .basis()
                .iter()
                .map(|b| g_snapshot.inner(b))
                .collect::<Result<_>>()?;
            // V_l = 2 A_l <A_l, X - Y> + grad F(Y); coords are 2 c_l a^l + q
            let mut lhs = 0.0;
            for l in 0..m {
                let cl = a_diff[l];
                let mut term = 0.0;
                for (i, im) in omega_images.iter().enumerate() {
                    let v = 2.0 * cl * im[l] + q_coords[i];
                    term += v * v;
                }
                lhs += term;
            }
            lhs /= m as f64;
            let rhs = 8.0 * up_single_omega * gap_x
                + (8.0 * up_single_omega - 8.0 * lo_o * lo_o / up_o) * gap_y;
            report
                .reduced_direction_bound
                .record((rhs - lhs) / rhs.abs().max(1e-300), CHECK_TOL);
        }
    }

    Ok(report)
}

// rand::Rng is needed for gen_range in the checker loop.
use rand::Rng;
