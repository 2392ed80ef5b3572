//! Simulate-and-fit sweeps over sparsity and sample size.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::estimator::{error_metrics, fit, lambda_policy, FitConfig, LambdaMode};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::stats::{linear_fit, mean, spearman, std_dev, LinearFit};
use crate::process::{random_sparse_theta, simulate};
use crate::seed::derive_seed;

const THETA_STREAM: u64 = 1;
const PATH_STREAM: u64 = 2;

/// One fit at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub experiment: &'static str,
    pub point: usize,
    pub replicate: usize,
    #[serde(rename = "N")]
    pub n_dims: usize,
    pub p: usize,
    pub s: usize,
    pub n: usize,
    /// Policy value for this `(n, N, p)`.
    pub lambda: f64,
    /// Weight actually placed on the ℓ1 term of the normalized loss.
    pub penalty: f64,
    pub frob_error: f64,
    pub frob_error_sq: f64,
    pub support_fraction: f64,
    pub support_defined: bool,
    pub iterations: usize,
    pub converged: bool,
    pub timed_out: bool,
    pub theta_seed: u64,
    pub path_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: usize,
    pub s: usize,
    pub n: usize,
    pub n_over_log: f64,
    pub replicates: usize,
    pub lambda: f64,
    pub mean_frob_error: f64,
    pub std_frob_error: f64,
    pub mean_frob_error_sq: f64,
    pub std_frob_error_sq: f64,
    pub mean_support_fraction: f64,
    pub std_support_fraction: f64,
    pub converged: usize,
    pub timed_out: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SparsityTrend {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub spearman: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<PointSummary>,
    /// Wall-clock seconds per record, in record order.
    pub wall_seconds: Vec<f64>,
    /// Present for sparsity sweeps with at least two distinct `s`.
    pub trend: Option<SparsityTrend>,
    pub files: Vec<PathBuf>,
}

/// Seed of the ground truth for replicate `rep` at sparsity `s`. It does not
/// depend on `n`, so fits at different sample sizes share the same truth.
pub fn theta_seed(master: u64, n_dims: usize, n_lags: usize, s: usize, rep: usize) -> u64 {
    derive_seed(&[
        master,
        THETA_STREAM,
        n_dims as u64,
        n_lags as u64,
        s as u64,
        rep as u64,
    ])
}

pub fn path_seed(master: u64, n_dims: usize, n_lags: usize, s: usize, n: usize, rep: usize) -> u64 {
    derive_seed(&[
        master,
        PATH_STREAM,
        n_dims as u64,
        n_lags as u64,
        s as u64,
        n as u64,
        rep as u64,
    ])
}

/// Weight on the ℓ1 term of the normalized loss. The simulation policy is
/// calibrated for the loss summed over time, so it is divided by `n`.
pub fn penalty_weight(lambda: f64, n: usize, mode: LambdaMode) -> f64 {
    match mode {
        LambdaMode::Simulation => lambda / n as f64,
        LambdaMode::Theorem => lambda,
    }
}

/// Sweep points `(s, n)` in output order: `s` outer, `n` inner.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    let mut pts = Vec::new();
    for &s in &cfg.s_values {
        for &n in &cfg.n_values {
            pts.push((s, n));
        }
    }
    pts
}

fn n_over_log(n: usize, dim: usize) -> f64 {
    let l = (dim as f64).ln();
    if l > 0.0 {
        n as f64 / l
    } else {
        n as f64
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    point: usize,
    s: usize,
    n: usize,
    rep: usize,
) -> Result<(RunRecord, f64)> {
    let start = Instant::now();
    let (nd, p) = (cfg.n_dims, cfg.n_lags);
    let ts = theta_seed(cfg.master_seed, nd, p, s, rep);
    let ps = path_seed(cfg.master_seed, nd, p, s, n, rep);
    let truth = random_sparse_theta(nd, p, s, cfg.magnitude_low, cfg.magnitude_high, ts)?;
    let path = simulate(&truth, &cfg.link, n, cfg.burn_in, ps)?;
    let lambda = lambda_policy(n, nd, p, &cfg.link, cfg.lambda_c2, cfg.lambda_mode)?;
    let penalty = penalty_weight(lambda, n, cfg.lambda_mode);
    let fit_cfg = FitConfig {
        lambda: penalty,
        time_limit: cfg.timeout,
        ..cfg.fit.clone()
    };
    let res = fit(&path, &cfg.link, &fit_cfg, None)?;
    let m = error_metrics(&res.theta_hat, &truth, s)?;
    let rec = RunRecord {
        experiment: cfg.experiment.name(),
        point,
        replicate: rep,
        n_dims: nd,
        p,
        s,
        n,
        lambda,
        penalty,
        frob_error: m.frob_error,
        frob_error_sq: m.frob_error_sq,
        support_fraction: m.support_fraction,
        support_defined: m.support_defined,
        iterations: res.iterations,
        converged: res.converged,
        timed_out: res.timed_out,
        theta_seed: ts,
        path_seed: ps,
    };
    Ok((rec, start.elapsed().as_secs_f64()))
}

/// Groups records by point and computes replicate means and standard
/// deviations.
pub fn summarize(records: &[RunRecord], dim: usize) -> Vec<PointSummary> {
    let mut out: Vec<PointSummary> = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let point = records[start].point;
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| r.point == point)
                .count();
        let group = &records[start..end];
        let col = |f: fn(&RunRecord) -> f64| group.iter().map(f).collect::<Vec<f64>>();
        let fe = col(|r| r.frob_error);
        let fs = col(|r| r.frob_error_sq);
        let sf = col(|r| r.support_fraction);
        let first = &group[0];
        out.push(PointSummary {
            point,
            s: first.s,
            n: first.n,
            n_over_log: n_over_log(first.n, dim),
            replicates: group.len(),
            lambda: first.lambda,
            mean_frob_error: mean(&fe),
            std_frob_error: std_dev(&fe),
            mean_frob_error_sq: mean(&fs),
            std_frob_error_sq: std_dev(&fs),
            mean_support_fraction: mean(&sf),
            std_support_fraction: std_dev(&sf),
            converged: group.iter().filter(|r| r.converged).count(),
            timed_out: group.iter().filter(|r| r.timed_out).count(),
        });
        start = end;
    }
    out
}

/// Least-squares line and Spearman correlation of mean error against `s`.
pub fn sparsity_trend(summaries: &[PointSummary]) -> Option<SparsityTrend> {
    let x: Vec<f64> = summaries.iter().map(|r| r.s as f64).collect();
    let y: Vec<f64> = summaries.iter().map(|r| r.mean_frob_error).collect();
    let LinearFit {
        intercept,
        slope,
        r_squared,
    } = linear_fit(&x, &y)?;
    Some(SparsityTrend {
        intercept,
        slope,
        r_squared,
        spearman: spearman(&x, &y).unwrap_or(f64::NAN),
    })
}

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        if !header.is_empty() {
            w.write_record(header)?;
        }
    } else {
        for r in rows {
            w.serialize(r)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_pivot(path: &Path, cfg: &ExperimentConfig, summaries: &[PointSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["s".to_string()];
    header.extend(cfg.n_values.iter().map(|n| format!("n={n}")));
    w.write_record(&header)?;
    for (row, &s) in cfg.s_values.iter().enumerate() {
        let mut rec = vec![s.to_string()];
        for col in 0..cfg.n_values.len() {
            rec.push(
                summaries[row * cfg.n_values.len() + col]
                    .mean_frob_error
                    .to_string(),
            );
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated `s n mean_error` blocks, one per `s`, separated by
/// blank lines, as expected by gnuplot's `splot … with pm3d`.
fn write_gnuplot(path: &Path, cfg: &ExperimentConfig, summaries: &[PointSummary]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# s n mean_frob_error")?;
    for (row, _) in cfg.s_values.iter().enumerate() {
        if row > 0 {
            writeln!(f)?;
        }
        for col in 0..cfg.n_values.len() {
            let r = &summaries[row * cfg.n_values.len() + col];
            writeln!(f, "{} {} {}", r.s, r.n, r.mean_frob_error)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TimingRow {
    point: usize,
    replicate: usize,
    wall_seconds: f64,
}

/// Runs one of the four sweep experiments and writes its CSV files into
/// `cfg.output_dir`. Records are ordered by `(point, replicate)` whatever
/// the schedule, and every CSV except `timing.csv` is a pure function of the
/// configuration.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    if cfg.experiment == ExperimentKind::Diagnose {
        return crate::error::config_err("experiment", "diagnose is not a sweep");
    }
    let points = sweep_points(cfg);
    let tasks: Vec<(usize, usize, usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(pt, &(s, n))| (0..cfg.replicates).map(move |rep| (pt, s, n, rep)))
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(pt, s, n, rep)| run_one(cfg, pt, s, n, rep))
        .collect::<Result<Vec<_>>>()?;
    let (records, wall_seconds): (Vec<RunRecord>, Vec<f64>) = results.into_iter().unzip();

    let dim = cfg.n_dims * cfg.n_dims * cfg.n_lags;
    let summaries = summarize(&records, dim);
    let trend = match cfg.experiment {
        ExperimentKind::ErrorVsSparsity => sparsity_trend(&summaries),
        _ => None,
    };

    fs::create_dir_all(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    let mut files = Vec::new();
    let name = cfg.experiment.name();

    let rec_path = dir.join(format!("{name}_records.csv"));
    write_rows(&rec_path, &records, &[])?;
    files.push(rec_path);
    let sum_path = dir.join(format!("{name}_summary.csv"));
    write_rows(&sum_path, &summaries, &[])?;
    files.push(sum_path);

    let timing: Vec<TimingRow> = records
        .iter()
        .zip(&wall_seconds)
        .map(|(r, &w)| TimingRow {
            point: r.point,
            replicate: r.replicate,
            wall_seconds: w,
        })
        .collect();
    let timing_path = dir.join(format!("{name}_timing.csv"));
    write_rows(&timing_path, &timing, &[])?;
    files.push(timing_path);

    if let Some(t) = &trend {
        let p = dir.join(format!("{name}_fit.csv"));
        write_rows(&p, std::slice::from_ref(t), &[])?;
        files.push(p);
    }
    if cfg.experiment == ExperimentKind::Grid {
        let p = dir.join("grid_matrix.csv");
        write_pivot(&p, cfg, &summaries)?;
        files.push(p);
        let p = dir.join("grid_gnuplot.dat");
        write_gnuplot(&p, cfg, &summaries)?;
        files.push(p);
    }

    Ok(SweepOutput {
        records,
        summaries,
        wall_seconds,
        trend,
        files,
    })
}
