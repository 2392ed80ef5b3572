//! Configuration-driven experiments writing CSV artifacts.

pub mod config;
pub mod diagnose;
pub mod stats;
pub mod sweep;

pub use config::{DiagnoseCheck, DiagnoseConfig, ExperimentConfig, ExperimentKind};
pub use diagnose::{run_diagnose, CheckSummary, DiagnoseOutput};
pub use stats::{linear_fit, mean, monotone_up_to_noise, spearman, std_dev, Direction, LinearFit};
pub use sweep::{run_sweep, PointSummary, RunRecord, SparsityTrend, SweepOutput};

use std::path::PathBuf;

use crate::error::Result;

/// Runs whichever experiment `cfg` names and returns the files written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match cfg.experiment {
        ExperimentKind::Diagnose => Ok(run_diagnose(cfg)?.files),
        _ => Ok(run_sweep(cfg)?.files),
    }
}
