//! Experiment runners: recovery-frequency sweeps, phase-transition grids,
//! noise sweeps, and image completion.
//!
//! Reproducibility contract: a runner's output is a pure function of its
//! parameters and master seed. Per-trial streams derive from the master
//! seed mixed with the (cell, trial, solver) labels, trials execute in a
//! thread pool of any size, and records are aggregated in deterministic
//! order, so reports are byte-identical across reruns and across `--jobs`
//! settings. The problem instance seed deliberately omits the solver label:
//! every solver sees the same instance in a given (cell, trial) slot, which
//! is what makes paired comparisons meaningful.

use rayon::prelude::*;

use lowrank_core::matrix::DenseMatrix;
use lowrank_core::metrics::{psnr, ssim};
use lowrank_core::operators::{apply_op, MeasurementOp, ProblemInstance};
use lowrank_core::rng::mix_seed;
use lowrank_core::solvers::{niht, stoiht, svp, svrg_arm, svt, RecoveryResult, SolverConfig};
use lowrank_core::synth::{add_noise, gen_low_rank, gen_mask, SyntheticSpec};
use lowrank_core::Error;

use crate::config::{RunConfig, SolverKind};
use crate::pixmap::{PixmapImage, PEAK};

/// The exact-recovery criterion: relative error at or below this value.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

/// One solver run on one synthetic instance.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub solver: &'static str,
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub sample_ratio: f64,
    pub noise_sigma: f64,
    pub trial: usize,
    /// Seed of the instance this trial solved.
    pub seed: u64,
    pub success: bool,
    pub relative_error: f64,
    pub residual_sq: f64,
    pub gradient_evaluations: u64,
    /// Observability only; never serialized into reports.
    pub wall_clock: f64,
    pub terminated: &'static str,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
}

/// Dispatch one solver on one instance.
pub fn run_solver(
    kind: SolverKind,
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    run_cfg: &RunConfig,
) -> Result<RecoveryResult, Error> {
    match kind {
        SolverKind::SvrgArm => svrg_arm(inst, cfg),
        SolverKind::Svp => svp(inst, cfg),
        SolverKind::Niht => niht(inst, cfg),
        SolverKind::Stoiht => stoiht(inst, cfg),
        SolverKind::Svt => {
            let (tau, step) = run_cfg.svt_params(inst);
            svt(inst, cfg, tau, step)
        }
    }
}

/// Build the completion instance for one cell/trial slot.
pub fn build_instance(
    base: &RunConfig,
    rank: usize,
    ratio: f64,
    sigma: f64,
    instance_seed: u64,
) -> Result<ProblemInstance, Error> {
    let spec = SyntheticSpec {
        n1: base.n1,
        n2: base.n2,
        rank,
        sample_ratio: ratio,
        noise_sigma: sigma,
        seed: instance_seed,
    };
    let truth = gen_low_rank(&spec)?;
    let mask = gen_mask(&spec)?;
    let op = MeasurementOp::entry_sampling_scaled(base.n1, base.n2, mask)?;
    if sigma == 0.0 {
        ProblemInstance::noiseless(op, truth, rank)
    } else {
        let clean = apply_op(&op, &truth)?;
        let y = add_noise(&clean, sigma, instance_seed)?;
        ProblemInstance::new(op, y, rank, Some(truth), false)
    }
}

/// Run one (cell, trial, solver) slot. Solver failures (divergence) become
/// failed records rather than aborting a sweep.
fn run_trial(
    base: &RunConfig,
    kind: SolverKind,
    rank: usize,
    ratio: f64,
    sigma: f64,
    master_seed: u64,
    cell: u64,
    trial: usize,
    solver_index: u64,
) -> TrialRecord {
    let instance_seed = mix_seed(master_seed, &[cell, trial as u64]);
    let solver_seed = mix_seed(master_seed, &[cell, trial as u64, solver_index]);
    let mut record = TrialRecord {
        solver: kind.name(),
        n1: base.n1,
        n2: base.n2,
        rank,
        sample_ratio: ratio,
        noise_sigma: sigma,
        trial,
        seed: instance_seed,
        success: false,
        relative_error: f64::INFINITY,
        residual_sq: f64::INFINITY,
        gradient_evaluations: 0,
        wall_clock: 0.0,
        terminated: "error",
        psnr: None,
        ssim: None,
    };

    let outcome = build_instance(base, rank, ratio, sigma, instance_seed).and_then(|inst| {
        let cfg = base.solver_config(kind, &inst, solver_seed)?;
        let out = run_solver(kind, &inst, &cfg, base)?;
        Ok((inst, out))
    });
    match outcome {
        Ok((inst, out)) => {
            let err = inst.relative_error(&out.estimate).unwrap_or(f64::INFINITY);
            let last = out.trace.final_row();
            record.relative_error = err;
            record.success = err <= SUCCESS_THRESHOLD;
            record.residual_sq = last.residual_sq;
            record.gradient_evaluations = last.gradient_evaluations;
            record.wall_clock = last.wall_clock;
            record.terminated = match out.terminated {
                lowrank_core::solvers::Termination::ResidualTol => "residual-tolerance",
                lowrank_core::solvers::Termination::IterateTol => "iterate-tolerance",
                lowrank_core::solvers::Termination::Budget => "budget",
            };
        }
        Err(Error::Divergence { .. }) => record.terminated = "diverged",
        Err(_) => record.terminated = "error",
    }
    record
}

fn pooled<T: Send, F: Fn(usize) -> T + Sync + Send>(jobs: usize, count: usize, f: F) -> Vec<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

/// Success fraction per (rank, solver) pair.
#[derive(Debug, Clone)]
pub struct FreqRow {
    pub rank: usize,
    pub solver: &'static str,
    pub trials: usize,
    pub successes: usize,
    pub success_fraction: f64,
    pub mean_relative_error: f64,
    pub mean_gradient_evaluations: f64,
}

/// Recovery frequency as a function of rank, at the base sample ratio.
pub fn run_recovery_frequency(
    base: &RunConfig,
    ranks: &[usize],
    solvers: &[SolverKind],
    trials: usize,
    master_seed: u64,
    jobs: usize,
) -> (Vec<TrialRecord>, Vec<FreqRow>) {
    let slots: Vec<(usize, usize, usize)> = (0..ranks.len())
        .flat_map(|r| (0..solvers.len()).flat_map(move |s| (0..trials).map(move |t| (r, s, t))))
        .collect();
    let records = pooled(jobs, slots.len(), |i| {
        let (r, s, t) = slots[i];
        run_trial(
            base,
            solvers[s],
            ranks[r],
            base.sample_ratio,
            base.noise_sigma,
            master_seed,
            r as u64,
            t,
            s as u64,
        )
    });

    let mut rows = Vec::new();
    for (r, &rank) in ranks.iter().enumerate() {
        for (s, kind) in solvers.iter().enumerate() {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .skip((r * solvers.len() + s) * trials)
                .take(trials)
                .collect();
            debug_assert!(cell.iter().all(|rec| rec.rank == rank && rec.solver == kind.name()));
            rows.push(summarize_freq(rank, kind.name(), &cell));
        }
    }
    (records, rows)
}

fn summarize_freq(rank: usize, solver: &'static str, cell: &[&TrialRecord]) -> FreqRow {
    let successes = cell.iter().filter(|r| r.success).count();
    let mean_err = cell.iter().map(|r| r.relative_error).sum::<f64>() / cell.len() as f64;
    let mean_grads = cell
        .iter()
        .map(|r| r.gradient_evaluations as u128)
        .sum::<u128>() as f64
        / cell.len() as f64;
    FreqRow {
        rank,
        solver,
        trials: cell.len(),
        successes,
        success_fraction: successes as f64 / cell.len() as f64,
        mean_relative_error: mean_err,
        mean_gradient_evaluations: mean_grads,
    }
}

/// Success-fraction surface over a (rank, sample-ratio) grid for one solver.
#[derive(Debug, Clone)]
pub struct GridReport {
    pub ranks: Vec<usize>,
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Row-major over ranks x ratios.
    pub fractions: Vec<f64>,
}

impl GridReport {
    pub fn fraction(&self, rank_idx: usize, ratio_idx: usize) -> f64 {
        self.fractions[rank_idx * self.ratios.len() + ratio_idx]
    }
}

pub fn run_phase_transition(
    base: &RunConfig,
    ranks: &[usize],
    ratios: &[f64],
    solver: SolverKind,
    trials: usize,
    master_seed: u64,
    jobs: usize,
) -> (Vec<TrialRecord>, GridReport) {
    let cells: Vec<(usize, usize, usize)> = (0..ranks.len())
        .flat_map(|r| (0..ratios.len()).flat_map(move |p| (0..trials).map(move |t| (r, p, t))))
        .collect();
    let records = pooled(jobs, cells.len(), |i| {
        let (r, p, t) = cells[i];
        // infeasible cells (budget above the sample count) are failures by
        // definition; skip the solve to keep grids cheap
        let rank = ranks[r];
        let ratio = ratios[p];
        let cell = (r * ratios.len() + p) as u64;
        let samples = (ratio * (base.n1 * base.n2) as f64).floor() as usize;
        if rank > base.n1.min(base.n2) || samples == 0 {
            let mut rec = run_trial_stub(base, solver, rank, ratio, master_seed, cell, t);
            rec.terminated = "infeasible";
            return rec;
        }
        run_trial(base, solver, rank, ratio, base.noise_sigma, master_seed, cell, t, 0)
    });

    let mut fractions = Vec::with_capacity(ranks.len() * ratios.len());
    for r in 0..ranks.len() {
        for p in 0..ratios.len() {
            let start = (r * ratios.len() + p) * trials;
            let succ = records[start..start + trials].iter().filter(|x| x.success).count();
            fractions.push(succ as f64 / trials as f64);
        }
    }
    (
        records,
        GridReport {
            ranks: ranks.to_vec(),
            ratios: ratios.to_vec(),
            trials,
            master_seed,
            fractions,
        },
    )
}

fn run_trial_stub(
    base: &RunConfig,
    kind: SolverKind,
    rank: usize,
    ratio: f64,
    master_seed: u64,
    cell: u64,
    trial: usize,
) -> TrialRecord {
    TrialRecord {
        solver: kind.name(),
        n1: base.n1,
        n2: base.n2,
        rank,
        sample_ratio: ratio,
        noise_sigma: base.noise_sigma,
        trial,
        seed: mix_seed(master_seed, &[cell, trial as u64]),
        success: false,
        relative_error: f64::INFINITY,
        residual_sq: f64::INFINITY,
        gradient_evaluations: 0,
        wall_clock: 0.0,
        terminated: "infeasible",
        psnr: None,
        ssim: None,
    }
}

/// Mean relative error per (noise level, solver).
#[derive(Debug, Clone)]
pub struct NoiseRow {
    pub sigma: f64,
    pub solver: &'static str,
    pub trials: usize,
    pub mean_relative_error: f64,
    pub max_relative_error: f64,
    pub diverged: usize,
}

pub fn run_noise_sweep(
    base: &RunConfig,
    sigmas: &[f64],
    solvers: &[SolverKind],
    trials: usize,
    master_seed: u64,
    jobs: usize,
) -> (Vec<TrialRecord>, Vec<NoiseRow>) {
    let slots: Vec<(usize, usize, usize)> = (0..sigmas.len())
        .flat_map(|g| (0..solvers.len()).flat_map(move |s| (0..trials).map(move |t| (g, s, t))))
        .collect();
    let records = pooled(jobs, slots.len(), |i| {
        let (g, s, t) = slots[i];
        run_trial(
            base,
            solvers[s],
            base.rank,
            base.sample_ratio,
            sigmas[g],
            master_seed,
            g as u64,
            t,
            s as u64,
        )
    });

    let mut rows = Vec::new();
    for (g, &sigma) in sigmas.iter().enumerate() {
        for (s, kind) in solvers.iter().enumerate() {
            let start = (g * solvers.len() + s) * trials;
            let cell = &records[start..start + trials];
            let mean = cell.iter().map(|r| r.relative_error).sum::<f64>() / trials as f64;
            let max = cell.iter().map(|r| r.relative_error).fold(0.0, f64::max);
            let diverged = cell.iter().filter(|r| r.terminated == "diverged").count();
            rows.push(NoiseRow {
                sigma,
                solver: kind.name(),
                trials,
                mean_relative_error: mean,
                max_relative_error: max,
                diverged,
            });
        }
    }
    (records, rows)
}

/// An image-completion task.
#[derive(Debug, Clone)]
pub struct ImageTask {
    pub source: PixmapImage,
    pub observed_fraction: f64,
    pub mask_seed: u64,
    pub rank: usize,
    pub per_channel: bool,
}

/// Completion outcome: the restored image and its quality metrics.
#[derive(Debug, Clone)]
pub struct ImageOutcome {
    pub restored: PixmapImage,
    pub psnr: f64,
    pub ssim: f64,
    pub gradient_evaluations: u64,
    pub terminated: &'static str,
}

/// Complete a partially observed image with the chosen solver and measure
/// PSNR/SSIM against the source. The mask (missing pixels) is shared across
/// channels; estimates are clamped to `[0, peak]` before comparison.
pub fn image_complete(
    task: &ImageTask,
    kind: SolverKind,
    base: &RunConfig,
) -> Result<ImageOutcome, Error> {
    let (h, w) = (task.source.height, task.source.width);
    if h < 2 || w < 2 {
        return Err(Error::InvalidInput("image smaller than 2x2".into()));
    }
    if !(task.observed_fraction > 0.0 && task.observed_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "observed fraction {} outside (0, 1]",
            task.observed_fraction
        )));
    }
    if task.rank == 0 || task.rank > h.min(w) {
        return Err(Error::InvalidRank {
            rank: task.rank,
            max: h.min(w),
        });
    }

    let mask_spec = SyntheticSpec {
        n1: h,
        n2: w,
        rank: task.rank,
        sample_ratio: task.observed_fraction,
        noise_sigma: 0.0,
        seed: task.mask_seed,
    };
    let mask = gen_mask(&mask_spec)?;

    let channels: Vec<DenseMatrix> = if task.per_channel && task.source.channels == 3 {
        (0..3).map(|c| task.source.channel_matrix(c)).collect()
    } else {
        vec![task.source.luminance()]
    };

    let mut restored_channels = Vec::with_capacity(channels.len());
    let mut grads = 0u64;
    let mut terminated = "budget";
    for (c, truth) in channels.iter().enumerate() {
        let op = MeasurementOp::entry_sampling_scaled(h, w, mask.clone())?;
        let inst = ProblemInstance::noiseless(op, truth.clone(), task.rank)?;
        let seed = mix_seed(task.mask_seed, &[0x696d67, c as u64]);
        let cfg = base.solver_config(kind, &inst, seed)?;
        let out = run_solver(kind, &inst, &cfg, base)?;
        grads += out.trace.final_row().gradient_evaluations;
        terminated = match out.terminated {
            lowrank_core::solvers::Termination::ResidualTol => "residual-tolerance",
            lowrank_core::solvers::Termination::IterateTol => "iterate-tolerance",
            lowrank_core::solvers::Termination::Budget => "budget",
        };
        let mut estimate = out.estimate;
        for v in estimate.entries_mut() {
            *v = v.clamp(0.0, PEAK);
        }
        restored_channels.push(estimate);
    }

    let restored = if restored_channels.len() == 3 {
        PixmapImage::from_channels([
            &restored_channels[0],
            &restored_channels[1],
            &restored_channels[2],
        ])
    } else {
        PixmapImage::from_matrix(&restored_channels[0])
    };

    // metrics in the 8-bit image domain: compare the quantized restored
    // samples against the (equally quantized) reference channels
    let reference = if restored.channels == 3 {
        task.source.clone()
    } else {
        PixmapImage::from_matrix(&channels[0])
    };
    let mut psnr_acc = 0.0;
    let mut ssim_acc = 0.0;
    for c in 0..restored.channels {
        let truth = reference.channel_matrix(c);
        let est = restored.channel_matrix(c);
        psnr_acc += psnr(&truth, &est, PEAK)?;
        ssim_acc += ssim(&truth, &est, PEAK)?;
    }
    let n_ch = restored.channels as f64;

    Ok(ImageOutcome {
        restored,
        psnr: psnr_acc / n_ch,
        ssim: ssim_acc / n_ch,
        gradient_evaluations: grads,
        terminated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixmap::synthetic_test_image;

    fn small_base() -> RunConfig {
        let mut base = RunConfig::default();
        base.n1 = 16;
        base.n2 = 16;
        base.rank = 2;
        base.sample_ratio = 0.6;
        base.batch_size = 16;
        base.outer_iterations = 40;
        base
    }

    #[test]
    fn frequency_runner_is_deterministic_across_jobs() {
        let base = small_base();
        let ranks = [1, 2];
        let solvers = [SolverKind::SvrgArm];
        let (rec1, rows1) = run_recovery_frequency(&base, &ranks, &solvers, 3, 9, 1);
        let (rec2, rows2) = run_recovery_frequency(&base, &ranks, &solvers, 3, 9, 4);
        assert_eq!(rec1.len(), rec2.len());
        for (a, b) in rec1.iter().zip(&rec2) {
            assert_eq!(a.relative_error.to_bits(), b.relative_error.to_bits());
            assert_eq!(a.gradient_evaluations, b.gradient_evaluations);
            assert_eq!(a.seed, b.seed);
        }
        for (a, b) in rows1.iter().zip(&rows2) {
            assert_eq!(a.success_fraction, b.success_fraction);
        }
        // easy cells succeed
        assert!(rows1[0].success_fraction >= 0.99);
    }

    #[test]
    fn success_flag_matches_threshold() {
        let base = small_base();
        let (records, _) =
            run_recovery_frequency(&base, &[1, 8], &[SolverKind::SvrgArm], 2, 11, 2);
        for r in &records {
            assert_eq!(r.success, r.relative_error <= SUCCESS_THRESHOLD);
        }
    }

    #[test]
    fn phase_grid_has_expected_shape_and_extremes() {
        let mut base = small_base();
        base.outer_iterations = 50;
        let ranks = [1, 14];
        let ratios = [0.3, 0.9];
        let (_, grid) = run_phase_transition(&base, &ranks, &ratios, SolverKind::SvrgArm, 3, 5, 2);
        assert_eq!(grid.fractions.len(), 4);
        // easy corner: rank 1 at 90% observed
        assert_eq!(grid.fraction(0, 1), 1.0);
        // impossible corner: rank 14 of a 16x16 matrix at 30% observed
        // (sample count below the degrees of freedom)
        assert_eq!(grid.fraction(1, 0), 0.0);
    }

    #[test]
    fn noise_sweep_errors_grow_with_sigma() {
        let base = small_base();
        let sigmas = [0.0, 0.3];
        let (records, rows) =
            run_noise_sweep(&base, &sigmas, &[SolverKind::SvrgArm], 3, 13, 2);
        assert_eq!(records.len(), 6);
        assert!(rows[0].mean_relative_error <= 1e-3);
        assert!(rows[1].mean_relative_error > rows[0].mean_relative_error);
        assert_eq!(rows.iter().map(|r| r.diverged).sum::<usize>(), 0);
    }

    #[test]
    fn image_completion_recovers_structured_image() {
        let img = synthetic_test_image(48);
        let task = ImageTask {
            source: img,
            observed_fraction: 0.6,
            mask_seed: 3,
            rank: 10,
            per_channel: false,
        };
        let mut base = RunConfig::default();
        base.batch_size = 96;
        base.outer_iterations = 40;
        let out = image_complete(&task, SolverKind::SvrgArm, &base).unwrap();
        assert!(out.psnr >= 30.0, "psnr {}", out.psnr);
        assert!(out.ssim >= 0.8, "ssim {}", out.ssim);
        assert_eq!(out.restored.channels, 1);
    }

    #[test]
    fn fully_observed_image_with_full_rank_is_exact() {
        let img = synthetic_test_image(24);
        let task = ImageTask {
            source: img.clone(),
            observed_fraction: 1.0,
            mask_seed: 1,
            rank: 24,
            per_channel: false,
        };
        let mut base = RunConfig::default();
        base.batch_size = 64;
        base.outer_iterations = 60;
        base.tolerance = 1e-10;
        let out = image_complete(&task, SolverKind::SvrgArm, &base).unwrap();
        assert_eq!(out.psnr, f64::INFINITY);
        assert_eq!(out.restored.samples, img.samples);
    }

    #[test]
    fn image_task_validation() {
        let img = synthetic_test_image(24);
        let base = RunConfig::default();
        let bad_ratio = ImageTask {
            source: img.clone(),
            observed_fraction: 0.0,
            mask_seed: 0,
            rank: 4,
            per_channel: false,
        };
        assert!(image_complete(&bad_ratio, SolverKind::SvrgArm, &base).is_err());
        let bad_rank = ImageTask {
            source: img,
            observed_fraction: 0.5,
            mask_seed: 0,
            rank: 25,
            per_channel: false,
        };
        assert!(image_complete(&bad_rank, SolverKind::SvrgArm, &base).is_err());
    }
}
