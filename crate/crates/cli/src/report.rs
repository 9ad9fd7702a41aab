//! Report assembly: config echo header plus CSV payload for each
//! subcommand's output.
//!
//! Wall-clock timings never appear in a report; everything written here is
//! a pure function of the configuration and the master seed.

use lowrank_core::solvers::SolveTrace;
use lowrank_core::theory::{LemmaReport, StepInterval, TheoryConstants};

use crate::csv::{format_f64, format_opt_f64, CsvTable};
use crate::experiments::{FreqRow, GridReport, NoiseRow, TrialRecord};

/// Echo block (`# key = value` lines), then the CSV table.
pub fn with_header(echo: &[String], table: &CsvTable) -> Vec<u8> {
    let mut out = Vec::new();
    for line in echo {
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    out.extend_from_slice(&table.to_bytes());
    out
}

pub fn trace_table(trace: &SolveTrace) -> CsvTable {
    let mut t = CsvTable::new(vec![
        "outer",
        "residual_sq",
        "objective",
        "relative_error",
        "step",
        "gradient_evaluations",
        "iterate_rank",
    ]);
    for row in &trace.rows {
        t.push_row(vec![
            row.outer_index.to_string(),
            format_f64(row.residual_sq),
            format_f64(row.objective),
            format_opt_f64(row.relative_error),
            format_f64(row.step),
            row.gradient_evaluations.to_string(),
            row.iterate_rank.to_string(),
        ]);
    }
    t
}

pub fn trial_table(records: &[TrialRecord]) -> CsvTable {
    let mut t = CsvTable::new(vec![
        "solver",
        "n1",
        "n2",
        "rank",
        "sample_ratio",
        "noise_sigma",
        "trial",
        "seed",
        "success",
        "relative_error",
        "residual_sq",
        "gradient_evaluations",
        "terminated",
        "psnr",
        "ssim",
    ]);
    for r in records {
        t.push_row(vec![
            r.solver.to_string(),
            r.n1.to_string(),
            r.n2.to_string(),
            r.rank.to_string(),
            format_f64(r.sample_ratio),
            format_f64(r.noise_sigma),
            r.trial.to_string(),
            r.seed.to_string(),
            (r.success as u8).to_string(),
            format_f64(r.relative_error),
            format_f64(r.residual_sq),
            r.gradient_evaluations.to_string(),
            r.terminated.to_string(),
            format_opt_f64(r.psnr),
            format_opt_f64(r.ssim),
        ]);
    }
    t
}

pub fn freq_table(rows: &[FreqRow]) -> CsvTable {
    let mut t = CsvTable::new(vec![
        "rank",
        "solver",
        "trials",
        "successes",
        "success_fraction",
        "mean_relative_error",
        "mean_gradient_evaluations",
    ]);
    for r in rows {
        t.push_row(vec![
            r.rank.to_string(),
            r.solver.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            format_f64(r.success_fraction),
            format_f64(r.mean_relative_error),
            format_f64(r.mean_gradient_evaluations),
        ]);
    }
    t
}

pub fn grid_table(grid: &GridReport) -> CsvTable {
    let mut t = CsvTable::new(vec!["rank", "sample_ratio", "trials", "success_fraction"]);
    for (i, &rank) in grid.ranks.iter().enumerate() {
        for (j, &ratio) in grid.ratios.iter().enumerate() {
            t.push_row(vec![
                rank.to_string(),
                format_f64(ratio),
                grid.trials.to_string(),
                format_f64(grid.fraction(i, j)),
            ]);
        }
    }
    t
}

pub fn noise_table(rows: &[NoiseRow]) -> CsvTable {
    let mut t = CsvTable::new(vec![
        "sigma",
        "solver",
        "trials",
        "mean_relative_error",
        "max_relative_error",
        "diverged",
    ]);
    for r in rows {
        t.push_row(vec![
            format_f64(r.sigma),
            r.solver.to_string(),
            r.trials.to_string(),
            format_f64(r.mean_relative_error),
            format_f64(r.max_relative_error),
            r.diverged.to_string(),
        ]);
    }
    t
}

pub fn theory_table(
    intervals: &[(f64, StepInterval, StepInterval)],
    constants: Option<&TheoryConstants>,
) -> CsvTable {
    let mut t = CsvTable::new(vec![
        "delta",
        "interval1_lower",
        "interval1_upper",
        "interval1_nonempty",
        "interval2_lower",
        "interval2_upper",
        "interval2_nonempty",
        "eta",
        "inner_n",
        "rho",
        "kappa",
        "mu",
        "nu",
        "beta",
    ]);
    for (delta, i1, i2) in intervals {
        let tail = match constants {
            Some(c) if c.delta == *delta => vec![
                format_f64(c.eta),
                c.inner_n.to_string(),
                format_f64(c.rho),
                format_opt_f64(c.kappa),
                format_f64(c.mu),
                format_f64(c.nu),
                format_f64(c.beta),
            ],
            _ => vec![String::new(); 7],
        };
        let mut row = vec![
            format_f64(*delta),
            format_f64(i1.lower),
            format_f64(i1.upper),
            (i1.nonempty() as u8).to_string(),
            format_f64(i2.lower),
            format_f64(i2.upper),
            (i2.nonempty() as u8).to_string(),
        ];
        row.extend(tail);
        t.push_row(row);
    }
    t
}

pub fn lemma_table(report: &LemmaReport) -> CsvTable {
    let mut t = CsvTable::new(vec!["check", "trials", "violations", "worst_margin"]);
    let mut push = |name: &str, s: &lowrank_core::theory::CheckStat| {
        t.push_row(vec![
            name.to_string(),
            s.checked.to_string(),
            s.violations.to_string(),
            format_f64(s.worst_margin),
        ]);
    };
    push("gradient_identity", &report.gradient_identity);
    push("monotone_lower", &report.monotone_lower);
    push("co_coercivity", &report.co_coercivity);
    push("contraction_full", &report.contraction_full);
    push("contraction_stochastic", &report.contraction_stochastic);
    push("variance_at_truth", &report.variance_at_truth);
    push("gradient_lower_weak", &report.gradient_lower_weak);
    push("gradient_lower_strong", &report.gradient_lower_strong);
    push("reduced_direction_bound", &report.reduced_direction_bound);
    t
}
