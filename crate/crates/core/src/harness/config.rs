//! Line-oriented `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::error::{config_err, MbpError, Result};
use crate::estimator::{FitConfig, LambdaMode, SIMULATION_C2};
use crate::link::{LinkKind, LinkSpec, DEFAULT_EPS};
use crate::markov::DecayFamily;
use crate::process::DEFAULT_BURN_IN;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ErrorVsN,
    ErrorVsSparsity,
    Grid,
    SupportRecovery,
    Diagnose,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ErrorVsN => "error_vs_n",
            ExperimentKind::ErrorVsSparsity => "error_vs_sparsity",
            ExperimentKind::Grid => "grid",
            ExperimentKind::SupportRecovery => "support_recovery",
            ExperimentKind::Diagnose => "diagnose",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = MbpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error_vs_n" => Ok(ExperimentKind::ErrorVsN),
            "error_vs_sparsity" => Ok(ExperimentKind::ErrorVsSparsity),
            "grid" => Ok(ExperimentKind::Grid),
            "support_recovery" => Ok(ExperimentKind::SupportRecovery),
            "diagnose" => Ok(ExperimentKind::Diagnose),
            other => config_err("experiment", format!("unknown experiment `{other}`")),
        }
    }
}

/// Checks the `diagnose` experiment can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnoseCheck {
    GfBound,
    EtaBound,
    KlDecomp,
    Psd,
    DecayTable,
    GradBound,
}

impl DiagnoseCheck {
    pub fn name(&self) -> &'static str {
        match self {
            DiagnoseCheck::GfBound => "gf-bound",
            DiagnoseCheck::EtaBound => "eta-bound",
            DiagnoseCheck::KlDecomp => "kl-decomp",
            DiagnoseCheck::Psd => "psd",
            DiagnoseCheck::DecayTable => "decay-table",
            DiagnoseCheck::GradBound => "grad-bound",
        }
    }
}

impl FromStr for DiagnoseCheck {
    type Err = MbpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gf-bound" => Ok(DiagnoseCheck::GfBound),
            "eta-bound" => Ok(DiagnoseCheck::EtaBound),
            "kl-decomp" => Ok(DiagnoseCheck::KlDecomp),
            "psd" => Ok(DiagnoseCheck::Psd),
            "decay-table" => Ok(DiagnoseCheck::DecayTable),
            "grad-bound" => Ok(DiagnoseCheck::GradBound),
            other => config_err("diagnose.checks", format!("unknown check `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseConfig {
    pub checks: Vec<DiagnoseCheck>,
    /// Random instances for the exact-enumeration checks.
    pub instances: usize,
    /// Entry range `[-scale, scale]` before rescaling to a mixing norm below 1.
    pub scale: f64,
    /// Horizon `n` of the mixing-coefficient enumeration.
    pub horizon: usize,
    /// Path length for the spectral check.
    pub path_length: usize,
    pub segments: usize,
    pub freq_points: usize,
    pub decay: DecayFamily,
    pub p_values: Vec<usize>,
    pub c1: f64,
    /// Optional tensor file used by the spectral and gradient checks.
    pub theta_file: Option<PathBuf>,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig {
            checks: Vec::new(),
            instances: 100,
            scale: 1.0,
            horizon: 6,
            path_length: 200_000,
            segments: 2000,
            freq_points: crate::markov::DEFAULT_FREQ_POINTS,
            decay: DecayFamily::Polynomial {
                c: 0.05,
                alpha: 2.0,
            },
            p_values: vec![16, 32, 64, 128],
            c1: 4.0,
            theta_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_dims: usize,
    pub n_lags: usize,
    pub s_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub link: LinkSpec,
    pub lambda_mode: LambdaMode,
    pub lambda_c2: f64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub burn_in: usize,
    pub magnitude_low: f64,
    pub magnitude_high: f64,
    pub fit: FitConfig,
    pub timeout: Option<Duration>,
    pub diagnose: DiagnoseConfig,
}

impl ExperimentConfig {
    /// Defaults for everything except the experiment and dimensions.
    pub fn new(experiment: ExperimentKind, n_dims: usize, n_lags: usize) -> Self {
        ExperimentConfig {
            experiment,
            n_dims,
            n_lags,
            s_values: Vec::new(),
            n_values: Vec::new(),
            replicates: 20,
            link: LinkSpec::default(),
            lambda_mode: LambdaMode::Simulation,
            lambda_c2: SIMULATION_C2,
            master_seed: 0,
            output_dir: PathBuf::from("out"),
            burn_in: DEFAULT_BURN_IN,
            magnitude_low: 0.3,
            magnitude_high: 1.0,
            fit: FitConfig::default(),
            timeout: None,
            diagnose: DiagnoseConfig::default(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    /// Checks the invariants shared by all experiments plus the sweep shape
    /// each one expects.
    pub fn validate(&self) -> Result<()> {
        if self.n_dims == 0 {
            return config_err("N", "must be positive");
        }
        if self.n_lags == 0 {
            return config_err("p", "must be positive");
        }
        if self.replicates == 0 {
            return config_err("replicates", "must be at least 1");
        }
        if self.n_values.contains(&0) {
            return config_err("sweep.n_values", "every sample size must be at least 1");
        }
        let dim = self.n_dims * self.n_dims * self.n_lags;
        if let Some(s) = self.s_values.iter().find(|&&s| s > dim) {
            return config_err(
                "sweep.s_values",
                format!("sparsity {s} exceeds N²p = {dim}"),
            );
        }
        if !(self.lambda_c2 > 0.0) {
            return config_err("lambda.c2", "must be positive");
        }
        if !(self.magnitude_low > 0.0 && self.magnitude_low <= self.magnitude_high) {
            return config_err(
                "truth.magnitude_low",
                "need 0 < magnitude_low ≤ magnitude_high",
            );
        }
        self.fit
            .validate()
            .or_else(|e| config_err("fit", e.to_string()))?;
        let sweeps = |need_one_s: bool, need_one_n: bool| -> Result<()> {
            if self.s_values.is_empty() {
                return config_err("sweep.s_values", "must not be empty");
            }
            if self.n_values.is_empty() {
                return config_err("sweep.n_values", "must not be empty");
            }
            if need_one_s && self.s_values.len() != 1 {
                return config_err("sweep.s_values", "this experiment takes a single sparsity");
            }
            if need_one_n && self.n_values.len() != 1 {
                return config_err(
                    "sweep.n_values",
                    "this experiment takes a single sample size",
                );
            }
            Ok(())
        };
        match self.experiment {
            ExperimentKind::ErrorVsN => sweeps(true, false),
            ExperimentKind::ErrorVsSparsity => sweeps(false, true),
            ExperimentKind::Grid | ExperimentKind::SupportRecovery => sweeps(false, false),
            ExperimentKind::Diagnose => {
                let d = &self.diagnose;
                if d.instances == 0 {
                    return config_err("diagnose.instances", "must be positive");
                }
                if d.horizon == 0 {
                    return config_err("diagnose.horizon", "must be positive");
                }
                if d.segments == 0 || d.path_length < 4 * d.segments {
                    return config_err(
                        "diagnose.path_length",
                        "need at least four states per segment",
                    );
                }
                if d.p_values.windows(2).any(|w| w[0] > w[1]) || d.p_values.contains(&0) {
                    return config_err("diagnose.p_values", "must be positive and ascending");
                }
                Ok(())
            }
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .or_else(|_| config_err(key, format!("cannot parse `{raw}`")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => config_err(key, format!("expected a boolean, got `{raw}`")),
    }
}

impl FromStr for ExperimentConfig {
    type Err = MbpError;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return config_err(&format!("line {}", lineno + 1), "expected `key = value`");
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if entries.insert(k.clone(), v).is_some() {
                return config_err(&k, "given more than once");
            }
        }

        let take = |entries: &mut BTreeMap<String, String>, key: &str| entries.remove(key);
        let mut e = entries;
        let experiment: ExperimentKind = match take(&mut e, "experiment") {
            Some(v) => v.parse()?,
            None => return config_err("experiment", "missing"),
        };
        let n_dims = match take(&mut e, "N") {
            Some(v) => parse_value("N", &v)?,
            None => return config_err("N", "missing"),
        };
        let n_lags = match take(&mut e, "p") {
            Some(v) => parse_value("p", &v)?,
            None => return config_err("p", "missing"),
        };
        let mut cfg = ExperimentConfig::new(experiment, n_dims, n_lags);

        if let Some(v) = take(&mut e, "sweep.s_values") {
            cfg.s_values = parse_list("sweep.s_values", &v)?;
        }
        if let Some(v) = take(&mut e, "sweep.n_values") {
            cfg.n_values = parse_list("sweep.n_values", &v)?;
        }
        if let Some(v) = take(&mut e, "replicates") {
            cfg.replicates = parse_value("replicates", &v)?;
        }

        let kind: LinkKind = match take(&mut e, "link.kind") {
            Some(v) => v
                .parse()
                .or_else(|err: MbpError| config_err("link.kind", err.to_string()))?,
            None => LinkKind::Sigmoid,
        };
        let alpha = match take(&mut e, "link.alpha") {
            Some(v) => parse_value("link.alpha", &v)?,
            None => 1.0,
        };
        let eps = match take(&mut e, "link.eps") {
            Some(v) => parse_value("link.eps", &v)?,
            None => DEFAULT_EPS,
        };
        cfg.link = match kind {
            LinkKind::Sigmoid => {
                LinkSpec::sigmoid(alpha, eps).or_else(|err| config_err("link", err.to_string()))?
            }
        };

        if let Some(v) = take(&mut e, "lambda.mode") {
            cfg.lambda_mode = v
                .parse()
                .or_else(|err: MbpError| config_err("lambda.mode", err.to_string()))?;
        }
        cfg.lambda_c2 = match (take(&mut e, "lambda.c2"), cfg.lambda_mode) {
            (Some(v), _) => parse_value("lambda.c2", &v)?,
            (None, LambdaMode::Simulation) => SIMULATION_C2,
            (None, LambdaMode::Theorem) => 1.0,
        };
        if let Some(v) = take(&mut e, "master_seed") {
            cfg.master_seed = parse_value("master_seed", &v)?;
        }
        if let Some(v) = take(&mut e, "output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = take(&mut e, "sim.burn_in") {
            cfg.burn_in = parse_value("sim.burn_in", &v)?;
        }
        if let Some(v) = take(&mut e, "truth.magnitude_low") {
            cfg.magnitude_low = parse_value("truth.magnitude_low", &v)?;
        }
        if let Some(v) = take(&mut e, "truth.magnitude_high") {
            cfg.magnitude_high = parse_value("truth.magnitude_high", &v)?;
        }
        if let Some(v) = take(&mut e, "fit.tol") {
            cfg.fit.tol = parse_value("fit.tol", &v)?;
        }
        if let Some(v) = take(&mut e, "fit.stationarity_tol") {
            cfg.fit.stationarity_tol = parse_value("fit.stationarity_tol", &v)?;
        }
        if let Some(v) = take(&mut e, "fit.max_iters") {
            cfg.fit.max_iters = parse_value("fit.max_iters", &v)?;
        }
        if let Some(v) = take(&mut e, "fit.accelerate") {
            cfg.fit.accelerate = parse_bool("fit.accelerate", &v)?;
        }
        if let Some(v) = take(&mut e, "timeout_seconds") {
            let secs: f64 = parse_value("timeout_seconds", &v)?;
            if !(secs > 0.0 && secs.is_finite()) {
                return config_err("timeout_seconds", "must be positive");
            }
            cfg.timeout = Some(Duration::from_secs_f64(secs));
        }

        let d = &mut cfg.diagnose;
        if let Some(v) = take(&mut e, "diagnose.checks") {
            d.checks = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_>>()?;
        }
        if let Some(v) = take(&mut e, "diagnose.instances") {
            d.instances = parse_value("diagnose.instances", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.scale") {
            d.scale = parse_value("diagnose.scale", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.horizon") {
            d.horizon = parse_value("diagnose.horizon", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.path_length") {
            d.path_length = parse_value("diagnose.path_length", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.segments") {
            d.segments = parse_value("diagnose.segments", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.freq_points") {
            d.freq_points = parse_value("diagnose.freq_points", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.p_values") {
            d.p_values = parse_list("diagnose.p_values", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.c1") {
            d.c1 = parse_value("diagnose.c1", &v)?;
        }
        if let Some(v) = take(&mut e, "diagnose.theta_file") {
            d.theta_file = Some(PathBuf::from(v));
        }
        let family = take(&mut e, "diagnose.decay_family");
        let c = take(&mut e, "diagnose.decay_c");
        let shape = take(&mut e, "diagnose.decay_shape");
        if family.is_some() || c.is_some() || shape.is_some() {
            let family = family.unwrap_or_else(|| "polynomial".into());
            let c = match c {
                Some(v) => parse_value("diagnose.decay_c", &v)?,
                None => 0.05,
            };
            let shape = match shape {
                Some(v) => parse_value("diagnose.decay_shape", &v)?,
                None => 2.0,
            };
            d.decay = DecayFamily::from_parts(&family, c, shape)
                .or_else(|err| config_err("diagnose.decay_family", err.to_string()))?;
        }

        if let Some(key) = e.keys().next() {
            return config_err(key, "unknown key");
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
