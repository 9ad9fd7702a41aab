use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lowrank_cli::config::{parse_solver_list, RunConfig, SolverKind};
use lowrank_cli::csv::CsvTable;
use lowrank_cli::experiments::{
    build_instance, image_complete, run_noise_sweep, run_phase_transition,
    run_recovery_frequency, run_solver, ImageTask,
};
use lowrank_cli::pixmap::{read_pixmap, write_pixmap};
use lowrank_cli::report;
use lowrank_core::rng::mix_seed;
use lowrank_core::theory::{convergence_constants, lemma_checker, theorem1_interval, theorem2_interval};

#[derive(Parser)]
#[command(
    name = "lowrank",
    about = "Low-rank matrix recovery: SVRG-ARM and IHT-family solvers with a reproducible experiment harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one synthetic completion instance and print the outcome.
    Solve {
        /// Key = value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed (instance and solver streams derive from it).
        #[arg(long)]
        seed: u64,
        /// Configuration overrides, e.g. --set rank=6.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Write the per-outer-iteration trace as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recovery frequency as a function of rank.
    Freq {
        /// Ranks to sweep: `1..8` (inclusive) or `1,2,4`.
        #[arg(long)]
        ranks: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Comma-separated solvers (default: svrg).
        #[arg(long)]
        solvers: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads (results are identical for any value).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Success-fraction grid over (rank, sample ratio).
    Phase {
        #[arg(long)]
        ranks: String,
        /// Sample ratios: `0.1:0.1:0.9` (start:step:end) or a comma list.
        #[arg(long)]
        ratios: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Mean relative error versus noise level.
    Noise {
        /// Noise levels: `0:0.1:0.4` (start:step:end) or a comma list.
        #[arg(long)]
        sigmas: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Comma-separated solvers (default: svrg,svp,niht,stoiht).
        #[arg(long)]
        solvers: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Complete a partially observed PGM/PPM image.
    Image {
        /// Input image (binary PGM `P5` or PPM `P6`, maxval 255).
        #[arg(long)]
        input: PathBuf,
        /// Fraction of observed pixels.
        #[arg(long)]
        observed: Option<f64>,
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        seed: u64,
        /// Rank budget for the completion.
        #[arg(long)]
        rank: Option<usize>,
        /// `luminance` or `per-channel`.
        #[arg(long)]
        channel: Option<String>,
        /// Where to write the restored image.
        #[arg(long)]
        output_image: Option<PathBuf>,
        /// Where to write the metrics report CSV.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Evaluate step intervals and convergence constants; optionally run
    /// the inequality checker.
    Theory {
        /// Assumed isometry constant.
        #[arg(long)]
        delta: Option<f64>,
        /// Step size for the convergence constants.
        #[arg(long)]
        eta: Option<f64>,
        /// Inner loop count for the convergence constants.
        #[arg(long)]
        inner: Option<usize>,
        /// Run the inequality checker on a Gaussian-ensemble instance.
        #[arg(long)]
        lemmas: bool,
        /// Checker trials.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Seed for the checker (required with --lemmas).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Failure classes map to exit codes: usage/config 1, numerical 2, I/O 3.
enum AppError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Numerical(_) => 2,
            AppError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Numerical(m) | AppError::Io(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Usage(e.to_string())
}

fn core_err(e: lowrank_core::Error) -> AppError {
    match e {
        lowrank_core::Error::Divergence { .. } => AppError::Numerical(e.to_string()),
        other => AppError::Usage(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Solve {
            config,
            seed,
            set,
            output,
        } => cmd_solve(config, seed, set, output),
        Command::Freq {
            ranks,
            trials,
            seed,
            solvers,
            config,
            set,
            output,
            jobs,
        } => cmd_freq(ranks, trials, seed, solvers, config, set, output, jobs),
        Command::Phase {
            ranks,
            ratios,
            trials,
            seed,
            solver,
            config,
            set,
            output,
            jobs,
        } => cmd_phase(ranks, ratios, trials, seed, solver, config, set, output, jobs),
        Command::Noise {
            sigmas,
            trials,
            seed,
            solvers,
            config,
            set,
            output,
            jobs,
        } => cmd_noise(sigmas, trials, seed, solvers, config, set, output, jobs),
        Command::Image {
            input,
            observed,
            solver,
            seed,
            rank,
            channel,
            output_image,
            output,
            config,
            set,
        } => cmd_image(input, observed, solver, seed, rank, channel, output_image, output, config, set),
        Command::Theory {
            delta,
            eta,
            inner,
            lemmas,
            trials,
            seed,
            output,
        } => cmd_theory(delta, eta, inner, lemmas, trials, seed, output),
    }
}

fn load_config(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<RunConfig, AppError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p)
            .map_err(|e| AppError::Io(format!("reading {}: {e}", p.display())))?;
        cfg.apply_file(&text).map_err(usage)?;
    }
    for pair in overrides {
        cfg.apply_override(pair).map_err(usage)?;
    }
    Ok(cfg)
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), AppError> {
    match output {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| AppError::Io(format!("writing {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| AppError::Io(e.to_string()))
        }
    }
}

fn cmd_solve(
    config: Option<PathBuf>,
    seed: u64,
    set: Vec<String>,
    output: Option<PathBuf>,
) -> Result<(), AppError> {
    let cfg = load_config(config.as_deref(), &set)?;
    let instance_seed = mix_seed(seed, &[0, 0]);
    let solver_seed = mix_seed(seed, &[0, 0, 0]);
    let inst = build_instance(&cfg, cfg.rank, cfg.sample_ratio, cfg.noise_sigma, instance_seed)
        .map_err(core_err)?;
    let scfg = cfg.solver_config(cfg.solver, &inst, solver_seed).map_err(core_err)?;
    let out = run_solver(cfg.solver, &inst, &scfg, &cfg).map_err(core_err)?;

    let last = out.trace.final_row();
    for line in cfg.echo() {
        println!("{line}");
    }
    println!("# seed = {seed}");
    println!("solver: {}", cfg.solver.name());
    println!("terminated: {}", out.terminated);
    println!("residual_sq: {:.6e}", last.residual_sq);
    match last.relative_error {
        Some(e) => println!("relative_error: {e:.6e}"),
        None => println!("relative_error: n/a"),
    }
    println!("gradient_evaluations: {}", last.gradient_evaluations);
    println!("iterate_rank: {}", last.iterate_rank);

    if output.is_some() {
        let mut echo = cfg.echo();
        echo.push(format!("# seed = {seed}"));
        let bytes = report::with_header(&echo, &report::trace_table(&out.trace));
        emit(output.as_deref(), &bytes)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_freq(
    ranks: String,
    trials: Option<usize>,
    seed: u64,
    solvers: Option<String>,
    config: Option<PathBuf>,
    set: Vec<String>,
    output: Option<PathBuf>,
    jobs: usize,
) -> Result<(), AppError> {
    let cfg = load_config(config.as_deref(), &set)?;
    let ranks = parse_usize_list(&ranks).map_err(AppError::Usage)?;
    let solvers = match solvers {
        Some(s) => parse_solver_list(&s).map_err(usage)?,
        None => vec![SolverKind::SvrgArm],
    };
    let trials = trials.unwrap_or(cfg.trials);
    let (_, rows) = run_recovery_frequency(&cfg, &ranks, &solvers, trials, seed, jobs);
    let mut echo = cfg.echo();
    echo.push(format!("# seed = {seed}"));
    echo.push(format!("# ranks = {ranks:?}"));
    let bytes = report::with_header(&echo, &report::freq_table(&rows));
    emit(output.as_deref(), &bytes)
}

#[allow(clippy::too_many_arguments)]
fn cmd_phase(
    ranks: String,
    ratios: String,
    trials: Option<usize>,
    seed: u64,
    solver: Option<String>,
    config: Option<PathBuf>,
    set: Vec<String>,
    output: Option<PathBuf>,
    jobs: usize,
) -> Result<(), AppError> {
    let cfg = load_config(config.as_deref(), &set)?;
    let ranks = parse_usize_list(&ranks).map_err(AppError::Usage)?;
    let ratios = parse_f64_list(&ratios).map_err(AppError::Usage)?;
    let solver = match solver {
        Some(s) => SolverKind::parse(&s).ok_or_else(|| AppError::Usage(format!("unknown solver `{s}`")))?,
        None => cfg.solver,
    };
    let trials = trials.unwrap_or(cfg.trials);
    let (_, grid) = run_phase_transition(&cfg, &ranks, &ratios, solver, trials, seed, jobs);
    let mut echo = cfg.echo();
    echo.push(format!("# seed = {seed}"));
    echo.push(format!("# solver_swept = {}", solver.name()));
    let bytes = report::with_header(&echo, &report::grid_table(&grid));
    emit(output.as_deref(), &bytes)
}

#[allow(clippy::too_many_arguments)]
fn cmd_noise(
    sigmas: String,
    trials: Option<usize>,
    seed: u64,
    solvers: Option<String>,
    config: Option<PathBuf>,
    set: Vec<String>,
    output: Option<PathBuf>,
    jobs: usize,
) -> Result<(), AppError> {
    let cfg = load_config(config.as_deref(), &set)?;
    let sigmas = parse_f64_list(&sigmas).map_err(AppError::Usage)?;
    let solvers = match solvers {
        Some(s) => parse_solver_list(&s).map_err(usage)?,
        None => vec![
            SolverKind::SvrgArm,
            SolverKind::Svp,
            SolverKind::Niht,
            SolverKind::Stoiht,
        ],
    };
    let trials = trials.unwrap_or(cfg.trials);
    let (_, rows) = run_noise_sweep(&cfg, &sigmas, &solvers, trials, seed, jobs);
    let mut echo = cfg.echo();
    echo.push(format!("# seed = {seed}"));
    let bytes = report::with_header(&echo, &report::noise_table(&rows));
    emit(output.as_deref(), &bytes)
}

#[allow(clippy::too_many_arguments)]
fn cmd_image(
    input: PathBuf,
    observed: Option<f64>,
    solver: Option<String>,
    seed: u64,
    rank: Option<usize>,
    channel: Option<String>,
    output_image: Option<PathBuf>,
    output: Option<PathBuf>,
    config: Option<PathBuf>,
    set: Vec<String>,
) -> Result<(), AppError> {
    let mut cfg = load_config(config.as_deref(), &set)?;
    if let Some(o) = observed {
        cfg.apply_override(&format!("sample_ratio={o}")).map_err(usage)?;
    }
    if let Some(s) = &solver {
        cfg.apply_override(&format!("solver={s}")).map_err(usage)?;
    }
    if let Some(r) = rank {
        cfg.apply_override(&format!("image_rank={r}")).map_err(usage)?;
    }
    if let Some(c) = &channel {
        cfg.apply_override(&format!("channel={c}")).map_err(usage)?;
    }

    let bytes = std::fs::read(&input)
        .map_err(|e| AppError::Io(format!("reading {}: {e}", input.display())))?;
    let source = read_pixmap(&bytes).map_err(usage)?;
    let task = ImageTask {
        source,
        observed_fraction: cfg.sample_ratio,
        mask_seed: seed,
        rank: cfg.image_rank,
        per_channel: cfg.per_channel,
    };
    let outcome = image_complete(&task, cfg.solver, &cfg).map_err(core_err)?;

    println!("solver: {}", cfg.solver.name());
    println!("psnr: {:.4}", outcome.psnr);
    println!("ssim: {:.4}", outcome.ssim);
    println!("gradient_evaluations: {}", outcome.gradient_evaluations);
    println!("terminated: {}", outcome.terminated);

    if let Some(p) = &output_image {
        std::fs::write(p, write_pixmap(&outcome.restored))
            .map_err(|e| AppError::Io(format!("writing {}: {e}", p.display())))?;
    }
    if output.is_some() {
        let mut t = CsvTable::new(vec![
            "solver",
            "observed",
            "rank",
            "mask_seed",
            "psnr",
            "ssim",
            "gradient_evaluations",
            "terminated",
        ]);
        t.push_row(vec![
            cfg.solver.name().to_string(),
            lowrank_cli::csv::format_f64(cfg.sample_ratio),
            cfg.image_rank.to_string(),
            seed.to_string(),
            lowrank_cli::csv::format_f64(outcome.psnr),
            lowrank_cli::csv::format_f64(outcome.ssim),
            outcome.gradient_evaluations.to_string(),
            outcome.terminated.to_string(),
        ]);
        let mut echo = cfg.echo();
        echo.push(format!("# seed = {seed}"));
        echo.push(format!("# input = {}", input.display()));
        emit(output.as_deref(), &report::with_header(&echo, &t))?;
    }
    Ok(())
}

fn cmd_theory(
    delta: Option<f64>,
    eta: Option<f64>,
    inner: Option<usize>,
    lemmas: bool,
    trials: usize,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> Result<(), AppError> {
    if lemmas {
        let seed = seed.ok_or_else(|| {
            AppError::Usage("--seed is required with --lemmas (reports must be reproducible)".into())
        })?;
        let inst = lemma_instance(seed).map_err(core_err)?;
        let report_out = lemma_checker(&inst, trials, seed).map_err(core_err)?;
        println!("{report_out}");
        if output.is_some() {
            let echo = vec![
                format!("# lemma_trials = {trials}"),
                format!("# seed = {seed}"),
                "# instance = gaussian-ensemble 12x12, m = 200, rank 2".to_string(),
            ];
            let bytes = report::with_header(&echo, &report::lemma_table(&report_out));
            emit(output.as_deref(), &bytes)?;
        }
        if report_out.asserted_violations() > 0 {
            return Err(AppError::Numerical(format!(
                "{} inequality violations",
                report_out.asserted_violations()
            )));
        }
        return Ok(());
    }

    let d = delta.unwrap_or(0.0);
    let i1 = theorem1_interval(d).map_err(core_err)?;
    let i2 = theorem2_interval(d).map_err(core_err)?;
    println!("delta = {d}");
    println!(
        "iterate-contraction step interval: ({}, {}) {}",
        i1.lower,
        i1.upper,
        if i1.nonempty() { "nonempty" } else { "empty" }
    );
    println!(
        "objective-contraction step interval: [{}, {}] {}",
        i2.lower,
        i2.upper,
        if i2.nonempty() { "nonempty" } else { "empty" }
    );

    let constants = match (eta, inner) {
        (Some(e), Some(n)) => {
            let c = convergence_constants(d, e, n).map_err(core_err)?;
            println!(
                "rho = {}, kappa = {}, mu = {}, nu = {}, beta = {}",
                c.rho,
                c.kappa.map(|k| k.to_string()).unwrap_or_else(|| "undefined".into()),
                c.mu,
                c.nu,
                c.beta
            );
            println!("kappa < 1: {}, beta < 1: {}", c.kappa_lt_one(), c.beta_lt_one());
            Some(c)
        }
        (None, None) => None,
        _ => {
            return Err(AppError::Usage(
                "--eta and --inner must be given together".into(),
            ))
        }
    };

    if output.is_some() {
        let rows = vec![(d, i1, i2)];
        let bytes = report::with_header(&[], &report::theory_table(&rows, constants.as_ref()));
        emit(output.as_deref(), &bytes)?;
    }
    Ok(())
}

/// The checker's reference instance: 12x12 matrices, 200 standard normal
/// sensing matrices, rank-2 truth.
fn lemma_instance(seed: u64) -> Result<lowrank_core::operators::ProblemInstance, lowrank_core::Error> {
    lowrank_core::theory::gaussian_ensemble_instance(12, 12, 200, 2, seed)
}

/// `1..8` (inclusive) or `1,2,4`.
fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let lo: usize = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
        let hi: usize = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
        if lo == 0 || hi < lo {
            return Err(format!("empty or zero-based range `{s}`"));
        }
        return Ok((lo..=hi).collect());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let v: usize = part
            .trim()
            .parse()
            .map_err(|_| format!("bad list entry `{part}`"))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// `0:0.1:0.4` (start:step:end, inclusive) or `0.1,0.2`.
fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().map_err(|_| format!("bad start `{}`", parts[0]))?;
        let step: f64 = parts[1].trim().parse().map_err(|_| format!("bad step `{}`", parts[1]))?;
        let end: f64 = parts[2].trim().parse().map_err(|_| format!("bad end `{}`", parts[2]))?;
        if !(step > 0.0) || end < start {
            return Err(format!("bad sweep `{s}`"));
        }
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + step * k as f64;
            if v > end + step * 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|_| format!("bad list entry `{part}`"))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
