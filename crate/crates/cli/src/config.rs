//! Run configuration: built-in defaults, overridden by a `key = value`
//! config file, overridden by `--set key=value` command-line pairs.
//!
//! Unknown keys and out-of-range values are hard errors that name the
//! offending key (and line, for files). Every report echoes the fully
//! resolved configuration in its header so a run can be reproduced from
//! its output alone.

use std::fmt;

use lowrank_core::operators::ProblemInstance;
use lowrank_core::solvers::{
    bb_rule_for, default_full_step, default_stochastic_step, svt_default_step, svt_default_tau,
    InitPolicy, SolverConfig, StepRule,
};

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}, key `{}`: {}", self.key, self.message),
            None => write!(f, "config key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

/// Which recovery algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    SvrgArm,
    Svp,
    Niht,
    Stoiht,
    Svt,
}

impl SolverKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "svrg" | "svrg-arm" => Some(SolverKind::SvrgArm),
            "svp" => Some(SolverKind::Svp),
            "niht" => Some(SolverKind::Niht),
            "stoiht" => Some(SolverKind::Stoiht),
            "svt" => Some(SolverKind::Svt),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::SvrgArm => "svrg-arm",
            SolverKind::Svp => "svp",
            SolverKind::Niht => "niht",
            SolverKind::Stoiht => "stoiht",
            SolverKind::Svt => "svt",
        }
    }

    pub fn all() -> [SolverKind; 5] {
        [
            SolverKind::SvrgArm,
            SolverKind::Svp,
            SolverKind::Niht,
            SolverKind::Stoiht,
            SolverKind::Svt,
        ]
    }
}

/// Step-rule selector; `Auto` resolves per solver and instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepChoice {
    Auto,
    Bb,
    Fixed,
    Theory,
}

/// The resolved run configuration. `auto`-defaulting numeric knobs are
/// `Option`s; they resolve against a concrete instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub sample_ratio: f64,
    pub noise_sigma: f64,
    pub solver: SolverKind,
    pub trials: usize,
    pub outer_iterations: usize,
    pub inner_iterations: Option<usize>,
    pub batch_size: usize,
    pub tolerance: f64,
    pub step: StepChoice,
    pub eta: Option<f64>,
    pub bb_clamp_min: Option<f64>,
    pub bb_clamp_max: Option<f64>,
    pub theory_delta: f64,
    pub theory_placement: f64,
    pub init: InitPolicy,
    pub svt_tau: Option<f64>,
    pub svt_step: Option<f64>,
    pub image_rank: usize,
    pub per_channel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n1: 50,
            n2: 50,
            rank: 4,
            sample_ratio: 0.5,
            noise_sigma: 0.0,
            solver: SolverKind::SvrgArm,
            trials: 20,
            outer_iterations: 60,
            inner_iterations: None,
            batch_size: 32,
            tolerance: 1e-8,
            step: StepChoice::Auto,
            eta: None,
            bb_clamp_min: None,
            bb_clamp_max: None,
            theory_delta: 0.0,
            theory_placement: 0.5,
            init: InitPolicy::Zero,
            svt_tau: None,
            svt_step: None,
            image_rank: 30,
            per_channel: false,
        }
    }
}

impl RunConfig {
    /// Apply `key = value` lines from a config file.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(line, Some(line_no), "expected `key = value`"));
            };
            self.set(key.trim(), value.trim(), Some(line_no))?;
        }
        Ok(())
    }

    /// Apply a `key=value` override pair from the command line.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(err(pair, None, "expected `key=value`"));
        };
        self.set(key.trim(), value.trim(), None)
    }

    fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let parse_usize = |v: &str| -> Result<usize, ConfigError> {
            v.parse()
                .map_err(|_| err(key, line, format!("`{v}` is not a nonnegative integer")))
        };
        let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
            v.parse()
                .map_err(|_| err(key, line, format!("`{v}` is not a number")))
        };
        let positive = |x: usize| -> Result<usize, ConfigError> {
            if x == 0 {
                Err(err(key, line, "must be at least 1"))
            } else {
                Ok(x)
            }
        };
        match key {
            "n1" => self.n1 = positive(parse_usize(value)?)?,
            "n2" => self.n2 = positive(parse_usize(value)?)?,
            "rank" => {
                let v = value
                    .parse::<i64>()
                    .map_err(|_| err(key, line, format!("`{value}` is not an integer")))?;
                if v < 1 {
                    return Err(err(key, line, format!("rank {v} out of range (must be >= 1)")));
                }
                self.rank = v as usize;
            }
            "sample_ratio" => {
                let v = parse_f64(value)?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(err(key, line, format!("sample ratio {v} outside (0, 1]")));
                }
                self.sample_ratio = v;
            }
            "noise_sigma" => {
                let v = parse_f64(value)?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(err(key, line, format!("noise sigma {v} must be nonnegative")));
                }
                self.noise_sigma = v;
            }
            "solver" => {
                self.solver = SolverKind::parse(value).ok_or_else(|| {
                    err(key, line, format!("unknown solver `{value}` (svrg, svp, niht, stoiht, svt)"))
                })?;
            }
            "trials" => self.trials = positive(parse_usize(value)?)?,
            "outer_iterations" => self.outer_iterations = positive(parse_usize(value)?)?,
            "inner_iterations" => {
                self.inner_iterations = match value {
                    "auto" => None,
                    v => Some(positive(parse_usize(v)?)?),
                }
            }
            "batch_size" => self.batch_size = positive(parse_usize(value)?)?,
            "tolerance" => {
                let v = parse_f64(value)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(err(key, line, format!("tolerance {v} must be positive")));
                }
                self.tolerance = v;
            }
            "step" => {
                self.step = match value {
                    "auto" => StepChoice::Auto,
                    "bb" => StepChoice::Bb,
                    "fixed" => StepChoice::Fixed,
                    "theory" => StepChoice::Theory,
                    v => return Err(err(key, line, format!("unknown step rule `{v}`"))),
                }
            }
            "eta" => {
                self.eta = match value {
                    "auto" => None,
                    v => {
                        let x = parse_f64(v)?;
                        if !(x > 0.0 && x.is_finite()) {
                            return Err(err(key, line, format!("eta {x} must be positive")));
                        }
                        Some(x)
                    }
                }
            }
            "bb_clamp_min" | "bb_clamp_max" => {
                let v = match value {
                    "auto" => None,
                    v => {
                        let x = parse_f64(v)?;
                        if !(x > 0.0 && x.is_finite()) {
                            return Err(err(key, line, format!("clamp {x} must be positive")));
                        }
                        Some(x)
                    }
                };
                if key == "bb_clamp_min" {
                    self.bb_clamp_min = v;
                } else {
                    self.bb_clamp_max = v;
                }
            }
            "theory_delta" => {
                let v = parse_f64(value)?;
                if !(0.0..1.0).contains(&v) {
                    return Err(err(key, line, format!("delta {v} outside [0, 1)")));
                }
                self.theory_delta = v;
            }
            "theory_placement" => {
                let v = parse_f64(value)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(err(key, line, format!("placement {v} outside [0, 1]")));
                }
                self.theory_placement = v;
            }
            "init" => {
                self.init = match value {
                    "zero" => InitPolicy::Zero,
                    "spectral" => InitPolicy::SpectralOneStep,
                    v => return Err(err(key, line, format!("unknown init `{v}` (zero, spectral)"))),
                }
            }
            "svt_tau" => {
                self.svt_tau = match value {
                    "auto" => None,
                    v => {
                        let x = parse_f64(v)?;
                        if !(x >= 0.0 && x.is_finite()) {
                            return Err(err(key, line, format!("tau {x} must be nonnegative")));
                        }
                        Some(x)
                    }
                }
            }
            "svt_step" => {
                self.svt_step = match value {
                    "auto" => None,
                    v => {
                        let x = parse_f64(v)?;
                        if !(x > 0.0 && x.is_finite()) {
                            return Err(err(key, line, format!("dual step {x} must be positive")));
                        }
                        Some(x)
                    }
                }
            }
            "image_rank" => self.image_rank = positive(parse_usize(value)?)?,
            "channel" => {
                self.per_channel = match value {
                    "luminance" => false,
                    "per-channel" | "perchannel" => true,
                    v => return Err(err(key, line, format!("unknown channel mode `{v}`"))),
                }
            }
            other => return Err(err(other, line, "unknown key")),
        }
        Ok(())
    }

    /// Echo lines for the report header, one `# key = value` per knob, in a
    /// fixed order.
    pub fn echo(&self) -> Vec<String> {
        let opt_f64 = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into());
        let opt_usize =
            |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into());
        vec![
            format!("# n1 = {}", self.n1),
            format!("# n2 = {}", self.n2),
            format!("# rank = {}", self.rank),
            format!("# sample_ratio = {}", self.sample_ratio),
            format!("# noise_sigma = {}", self.noise_sigma),
            format!("# solver = {}", self.solver.name()),
            format!("# trials = {}", self.trials),
            format!("# outer_iterations = {}", self.outer_iterations),
            format!("# inner_iterations = {}", opt_usize(self.inner_iterations)),
            format!("# batch_size = {}", self.batch_size),
            format!("# tolerance = {}", self.tolerance),
            format!(
                "# step = {}",
                match self.step {
                    StepChoice::Auto => "auto",
                    StepChoice::Bb => "bb",
                    StepChoice::Fixed => "fixed",
                    StepChoice::Theory => "theory",
                }
            ),
            format!("# eta = {}", opt_f64(self.eta)),
            format!("# bb_clamp_min = {}", opt_f64(self.bb_clamp_min)),
            format!("# bb_clamp_max = {}", opt_f64(self.bb_clamp_max)),
            format!("# theory_delta = {}", self.theory_delta),
            format!("# theory_placement = {}", self.theory_placement),
            format!(
                "# init = {}",
                match self.init {
                    InitPolicy::Zero => "zero",
                    InitPolicy::SpectralOneStep => "spectral",
                }
            ),
            format!("# svt_tau = {}", opt_f64(self.svt_tau)),
            format!("# svt_step = {}", opt_f64(self.svt_step)),
            format!("# image_rank = {}", self.image_rank),
            format!(
                "# channel = {}",
                if self.per_channel { "per-channel" } else { "luminance" }
            ),
        ]
    }

    /// Resolve the solver parameters against a concrete instance. The
    /// automatic step rule is Barzilai-Borwein for SVRG-ARM and SVP, the
    /// stochastic default for StoIHT, and the probe step for NIHT's
    /// fallback.
    pub fn solver_config(
        &self,
        kind: SolverKind,
        inst: &ProblemInstance,
        seed: u64,
    ) -> Result<SolverConfig, lowrank_core::Error> {
        let mut cfg = SolverConfig::new(seed);
        cfg.outer_iterations = self.outer_iterations;
        cfg.inner_iterations = self.inner_iterations;
        cfg.batch_size = self.batch_size.min(inst.measurement_count());
        cfg.tolerance = self.tolerance;
        cfg.init = self.init;

        let stochastic = matches!(kind, SolverKind::SvrgArm | SolverKind::Stoiht);
        let fixed_default = || -> Result<f64, lowrank_core::Error> {
            if stochastic {
                default_stochastic_step(inst, cfg.batch_size)
            } else {
                default_full_step(inst, seed)
            }
        };
        cfg.step = match (self.step, kind) {
            (StepChoice::Theory, _) => StepRule::TheoryGuided {
                delta: self.theory_delta,
                placement: self.theory_placement,
            },
            (StepChoice::Fixed, _) => StepRule::Fixed(match self.eta {
                Some(e) => e,
                None => fixed_default()?,
            }),
            (StepChoice::Bb, _) => match self.eta {
                Some(e) => StepRule::bb(e),
                None if stochastic => bb_rule_for(inst, cfg.batch_size)?,
                None => StepRule::bb(default_full_step(inst, seed)?),
            },
            // auto: BB for the variance-reduced and full-gradient descent
            // methods, plain stochastic default for StoIHT, probe fallback
            // for NIHT's adaptive rule
            (StepChoice::Auto, SolverKind::SvrgArm) => bb_rule_for(inst, cfg.batch_size)?,
            (StepChoice::Auto, SolverKind::Svp) => StepRule::bb(default_full_step(inst, seed)?),
            (StepChoice::Auto, SolverKind::Stoiht) => {
                StepRule::Fixed(default_stochastic_step(inst, cfg.batch_size)?)
            }
            (StepChoice::Auto, SolverKind::Niht | SolverKind::Svt) => {
                StepRule::Fixed(default_full_step(inst, seed)?)
            }
        };
        if let StepRule::BarzilaiBorwein {
            fallback,
            clamp_min,
            clamp_max,
        } = cfg.step
        {
            cfg.step = StepRule::BarzilaiBorwein {
                fallback,
                clamp_min: self.bb_clamp_min.unwrap_or(clamp_min),
                clamp_max: self.bb_clamp_max.unwrap_or(clamp_max),
            };
        }
        Ok(cfg)
    }

    /// SVT's threshold and dual step for this instance.
    pub fn svt_params(&self, inst: &ProblemInstance) -> (f64, f64) {
        (
            self.svt_tau.unwrap_or_else(|| svt_default_tau(inst)),
            self.svt_step.unwrap_or_else(|| svt_default_step(inst)),
        )
    }
}

/// Parse a comma-separated solver list.
pub fn parse_solver_list(s: &str) -> Result<Vec<SolverKind>, ConfigError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let kind = SolverKind::parse(part)
            .ok_or_else(|| err("solvers", None, format!("unknown solver `{part}`")))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(err("solvers", None, "empty solver list"));
    }
    Ok(out)
}
