//! Diagnostic checks as CSV row producers, and the `diagnose` experiment.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config_err, Result};
use crate::harness::config::{DiagnoseCheck, ExperimentConfig, ExperimentKind};
use crate::harness::sweep::write_rows;
use crate::likelihood::{grad_bound_trial, TrialRow};
use crate::link::LinkSpec;
use crate::markov::{
    check_eta_bound, check_gf_bound, check_hinf_bound, decay_scaling_report, kl_decomp_check,
    psd_estimate, DecayRow,
};
use crate::process::{random_sparse_theta, simulate, DEFAULT_BURN_IN};
use crate::seed::derive_seed;
use crate::tensor::{mixing_norm, ParamTensor};

const DIAGNOSE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GfRow {
    pub instance: usize,
    pub tau1_p_step: f64,
    pub g_f: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaRow {
    pub instance: usize,
    pub k: usize,
    pub l: usize,
    pub eta: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HinfRow {
    pub instance: usize,
    pub h_inf_sq: f64,
    pub tau1_p_step: f64,
    pub f_p: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlRow {
    pub instance: usize,
    pub z: usize,
    pub y: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdRow {
    pub freq: f64,
    pub min_eig: f64,
}

/// Outcome of one check in the diagnose summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: &'static str,
    pub items: usize,
    pub passed: usize,
    pub ok: bool,
    pub detail: String,
}

pub const SUMMARY_HEADER: [&str; 5] = ["check", "items", "passed", "ok", "detail"];

pub fn gf_rows(theta: &ParamTensor, link: &LinkSpec, instance: usize) -> Result<Vec<GfRow>> {
    let c = check_gf_bound(theta, link)?;
    Ok(vec![GfRow {
        instance,
        tau1_p_step: c.tau1_p_step,
        g_f: c.gf,
        holds: c.holds,
    }])
}

pub fn eta_rows(
    theta: &ParamTensor,
    link: &LinkSpec,
    horizon: usize,
    instance: usize,
) -> Result<(Vec<EtaRow>, HinfRow)> {
    let c = check_eta_bound(theta, link, horizon)?;
    let rows = c
        .rows
        .iter()
        .map(|r| EtaRow {
            instance,
            k: r.k,
            l: r.l,
            eta: r.eta,
            bound: r.bound,
            holds: r.holds,
        })
        .collect();
    let h = check_hinf_bound(theta, link, horizon)?;
    Ok((
        rows,
        HinfRow {
            instance,
            h_inf_sq: h.h_inf_sq,
            tau1_p_step: h.tau1_p_step,
            f_p: h.f_p,
            holds: h.holds,
        },
    ))
}

/// Every ordered pair of starting blocks.
pub fn kl_rows(theta: &ParamTensor, link: &LinkSpec, instance: usize) -> Result<Vec<KlRow>> {
    let states = 1usize << (theta.n_rows() * theta.n_lags()).min(usize::BITS as usize - 1);
    let mut rows = Vec::new();
    for z in 0..states {
        for y in 0..states {
            let c = kl_decomp_check(theta, link, z, y)?;
            rows.push(KlRow {
                instance,
                z,
                y,
                lhs: c.lhs,
                rhs: c.rhs,
                agree: c.agree,
            });
        }
    }
    Ok(rows)
}

pub fn psd_rows(
    theta: &ParamTensor,
    link: &LinkSpec,
    path_length: usize,
    segments: usize,
    freq_points: usize,
    seed: u64,
) -> Result<(Vec<PsdRow>, f64)> {
    let path = simulate(theta, link, path_length, DEFAULT_BURN_IN, seed)?;
    let rep = psd_estimate(&path, segments, freq_points)?;
    let rows = rep
        .freq_grid
        .iter()
        .zip(&rep.min_eigs)
        .map(|(&freq, &min_eig)| PsdRow { freq, min_eig })
        .collect();
    Ok((rows, rep.c_ell_sq_hat))
}

/// Random square tensor with entries uniform on `[-scale, scale]`, shrunk
/// when needed so that its mixing norm is a uniform draw below 0.99.
pub fn random_mixing_theta(
    n_dims: usize,
    n_lags: usize,
    scale: f64,
    link: &LinkSpec,
    seed: u64,
) -> Result<ParamTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = ParamTensor::from_fn(n_dims, n_dims, n_lags, |_, _, _| {
        rng.random_range(-scale..=scale)
    })?;
    let gf = mixing_norm(&theta, link);
    if gf < 1.0 {
        return Ok(theta);
    }
    let target: f64 = rng.random_range(0.0..0.99);
    Ok(theta.scaled(target / gf))
}

fn all<T>(rows: &[T], ok: impl Fn(&T) -> bool) -> (usize, usize) {
    (rows.len(), rows.iter().filter(|r| ok(r)).count())
}

fn summary(check: DiagnoseCheck, (items, passed): (usize, usize), detail: String) -> CheckSummary {
    CheckSummary {
        check: check.name(),
        items,
        passed,
        ok: items == passed,
        detail,
    }
}

#[derive(Debug, Clone)]
pub struct DiagnoseOutput {
    pub summaries: Vec<CheckSummary>,
    pub files: Vec<PathBuf>,
}

fn instance_seed(cfg: &ExperimentConfig, check: DiagnoseCheck, instance: usize) -> u64 {
    derive_seed(&[
        cfg.master_seed,
        DIAGNOSE_STREAM,
        check as u64,
        instance as u64,
    ])
}

fn instances(cfg: &ExperimentConfig, check: DiagnoseCheck) -> Result<Vec<ParamTensor>> {
    (0..cfg.diagnose.instances)
        .map(|k| {
            random_mixing_theta(
                cfg.n_dims,
                cfg.n_lags,
                cfg.diagnose.scale,
                &cfg.link,
                instance_seed(cfg, check, k),
            )
        })
        .collect()
}

fn fixed_theta(cfg: &ExperimentConfig) -> Result<ParamTensor> {
    match &cfg.diagnose.theta_file {
        Some(p) => ParamTensor::read_file(p),
        None => Ok(ParamTensor::square_zeros(cfg.n_dims, cfg.n_lags)),
    }
}

fn run_check(
    cfg: &ExperimentConfig,
    check: DiagnoseCheck,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<CheckSummary> {
    let link = &cfg.link;
    let d = &cfg.diagnose;
    let file = |suffix: &str| dir.join(format!("diagnose_{suffix}.csv"));
    match check {
        DiagnoseCheck::GfBound => {
            let thetas = instances(cfg, check)?;
            let rows: Vec<GfRow> = thetas
                .par_iter()
                .enumerate()
                .map(|(k, t)| gf_rows(t, link, k))
                .collect::<Result<Vec<_>>>()?
                .concat();
            let p = file("gf_bound");
            write_rows(&p, &rows, &[])?;
            files.push(p);
            Ok(summary(check, all(&rows, |r| r.holds), String::new()))
        }
        DiagnoseCheck::EtaBound => {
            let thetas = instances(cfg, check)?;
            let parts = thetas
                .par_iter()
                .enumerate()
                .map(|(k, t)| eta_rows(t, link, d.horizon, k))
                .collect::<Result<Vec<_>>>()?;
            let (eta, hinf): (Vec<Vec<EtaRow>>, Vec<HinfRow>) = parts.into_iter().unzip();
            let eta = eta.concat();
            let p = file("eta_bound");
            write_rows(&p, &eta, &[])?;
            files.push(p);
            let p = file("hinf_bound");
            write_rows(&p, &hinf, &[])?;
            files.push(p);
            let (a, b) = all(&eta, |r| r.holds);
            let (c, e) = all(&hinf, |r| r.holds);
            Ok(summary(check, (a + c, b + e), format!("hinf_rows={c}")))
        }
        DiagnoseCheck::KlDecomp => {
            let thetas = instances(cfg, check)?;
            let rows: Vec<KlRow> = thetas
                .par_iter()
                .enumerate()
                .map(|(k, t)| kl_rows(t, link, k))
                .collect::<Result<Vec<_>>>()?
                .concat();
            let p = file("kl_decomp");
            write_rows(&p, &rows, &[])?;
            files.push(p);
            Ok(summary(check, all(&rows, |r| r.agree), String::new()))
        }
        DiagnoseCheck::Psd => {
            let theta = fixed_theta(cfg)?;
            let seed = instance_seed(cfg, check, 0);
            let (rows, c) = psd_rows(&theta, link, d.path_length, d.segments, d.freq_points, seed)?;
            let p = file("psd");
            write_rows(&p, &rows, &[])?;
            files.push(p);
            Ok(summary(
                check,
                all(&rows, |r| r.min_eig >= -1e-10),
                format!("c_ell_sq_hat={c}"),
            ))
        }
        DiagnoseCheck::DecayTable => {
            let rows: Vec<DecayRow> = decay_scaling_report(d.decay, cfg.n_dims, &d.p_values, link)?;
            let p = file("decay_table");
            write_rows(&p, &rows, &["p", "inner_norm", "g_f", "G_f", "diverged"])?;
            files.push(p);
            let diverged = rows.iter().filter(|r| r.diverged).count();
            let finite = all(&rows, |r| r.inner_norm.is_finite());
            Ok(summary(
                check,
                finite,
                format!("family={} diverged={diverged}", d.decay.name()),
            ))
        }
        DiagnoseCheck::GradBound => {
            let theta = match &d.theta_file {
                Some(p) => ParamTensor::read_file(p)?,
                None => {
                    let s = cfg.s_values.first().copied().unwrap_or(0);
                    let seed = instance_seed(cfg, check, 0);
                    random_sparse_theta(
                        cfg.n_dims,
                        cfg.n_lags,
                        s,
                        cfg.magnitude_low,
                        cfg.magnitude_high,
                        seed,
                    )?
                }
            };
            let n = cfg.n_values.first().copied().unwrap_or(500);
            let report = grad_bound_trial(
                &theta,
                link,
                n,
                d.c1,
                cfg.replicates,
                instance_seed(cfg, check, 1),
            )?;
            let p = file("grad_bound");
            write_rows::<TrialRow>(&p, &report.rows, &[])?;
            files.push(p);
            let passed = report.rows.iter().filter(|r| !r.violated).count();
            Ok(CheckSummary {
                check: check.name(),
                items: report.rows.len(),
                passed,
                ok: report.passes(),
                detail: format!(
                    "violation_rate={} allowed_rate={}",
                    report.violation_rate(),
                    report.allowed_rate()
                ),
            })
        }
    }
}

/// Runs every configured check and writes `diagnose_summary.csv` plus one
/// CSV per check. With no checks the summary holds only its header.
pub fn run_diagnose(cfg: &ExperimentConfig) -> Result<DiagnoseOutput> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::Diagnose {
        return config_err("experiment", "expected `diagnose`");
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for &check in &cfg.diagnose.checks {
        summaries.push(run_check(cfg, check, &cfg.output_dir, &mut files)?);
    }
    let p = cfg.output_dir.join("diagnose_summary.csv");
    write_rows(&p, &summaries, &SUMMARY_HEADER)?;
    files.insert(0, p);
    Ok(DiagnoseOutput { summaries, files })
}
