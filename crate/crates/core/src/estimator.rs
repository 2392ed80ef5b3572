//! ℓ1-regularized maximum likelihood by accelerated proximal gradient.
//!
//! The objective separates over receiving coordinates `i`, so each row of
//! the stacked parameter keeps its own step size, momentum and restart
//! state while predictors for all rows are refreshed with one matrix product.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, MbpError, Result};
use crate::likelihood::Problem;
use crate::link::LinkSpec;
use crate::process::SamplePath;
use crate::tensor::{magnitude_order, NormKind, ParamTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Weight on `‖Θ‖_{1,1,1}` added to the normalized loss.
    pub lambda: f64,
    pub max_iters: usize,
    /// Relative objective change at which iteration stops.
    pub tol: f64,
    /// Largest proximal gradient mapping accepted alongside `tol`.
    pub stationarity_tol: f64,
    pub step_init: f64,
    pub backtrack_factor: f64,
    pub accelerate: bool,
    /// Wall-clock budget; the fit returns its current iterate when exceeded.
    pub time_limit: Option<Duration>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda: 0.0,
            max_iters: 5000,
            tol: 1e-8,
            stationarity_tol: 1e-6,
            step_init: 1.0,
            backtrack_factor: 0.5,
            accelerate: true,
            time_limit: None,
        }
    }
}

impl FitConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        FitConfig {
            lambda,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return invalid(format!(
                "lambda must be a finite non-negative number, got {}",
                self.lambda
            ));
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be positive");
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.stationarity_tol > 0.0) {
            return invalid(format!(
                "stationarity_tol must be positive, got {}",
                self.stationarity_tol
            ));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return invalid(format!(
                "step_init must be positive, got {}",
                self.step_init
            ));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return invalid(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: ParamTensor,
    /// Objective at the starting point followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest per-row step in use at exit.
    pub final_step: f64,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    /// `c2 (L_f/ε) √(log(N²p)/n)`.
    Theorem,
    /// `c2 √(log(N²p)/n)`.
    Simulation,
}

impl std::str::FromStr for LambdaMode {
    type Err = MbpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(LambdaMode::Theorem),
            "simulation" => Ok(LambdaMode::Simulation),
            other => invalid(format!("unknown lambda mode `{other}`")),
        }
    }
}

/// Default `c2` of the simulation policy.
pub const SIMULATION_C2: f64 = 100.0;

pub fn lambda_policy(
    n: usize,
    n_dims: usize,
    n_lags: usize,
    link: &LinkSpec,
    c2: f64,
    mode: LambdaMode,
) -> Result<f64> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    if !(c2 > 0.0) {
        return invalid(format!("c2 must be positive, got {c2}"));
    }
    let base = ((n_dims * n_dims * n_lags) as f64).ln() / n as f64;
    let scale = match mode {
        LambdaMode::Theorem => link.lipschitz() / link.eps(),
        LambdaMode::Simulation => 1.0,
    };
    Ok(c2 * scale * base.max(0.0).sqrt())
}

#[inline]
pub fn soft_threshold(x: f64, lam: f64) -> f64 {
    if x > lam {
        x - lam
    } else if x < -lam {
        x + lam
    } else {
        0.0
    }
}

/// Sup-norm violation of the first-order conditions of
/// `L(Θ) + λ‖Θ‖₁` given the loss gradient at `theta`.
pub fn kkt_residual(theta: &ParamTensor, grad: &ParamTensor, lambda: f64) -> Result<f64> {
    theta.check_same_shape(grad, "kkt residual")?;
    Ok(theta
        .values()
        .iter()
        .zip(grad.values())
        .map(|(&t, &g)| {
            if t > 0.0 {
                (g + lambda).abs()
            } else if t < 0.0 {
                (g - lambda).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max))
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const MIN_STEP: f64 = 1e-30;

/// Per-iteration step enlargement; the clamp makes the loss only piecewise
/// smooth, so a step shrunk near a kink is allowed to recover.
const STEP_GROWTH: f64 = 1.25;

/// Sup-norm of the proximal gradient mapping `(w − prox(w − s∇L(w)))/s`,
/// which vanishes exactly at stationary points.
fn gradient_mapping_norm(
    prob: &Problem,
    xt: &DMatrix<f64>,
    wx: &DMatrix<f64>,
    ux: &DMatrix<f64>,
    step: &[f64],
    lam: f64,
) -> f64 {
    let (_, r) = prob.losses_and_residuals(ux);
    let g = (xt * r) / prob.n() as f64;
    let mut worst = 0.0f64;
    for i in 0..wx.ncols() {
        let s = step[i];
        for k in 0..wx.nrows() {
            let w = wx[(k, i)];
            let moved = soft_threshold(w - s * g[(k, i)], s * lam);
            worst = worst.max(((w - moved) / s).abs());
        }
    }
    worst
}

fn prox_column(
    wy: &DMatrix<f64>,
    g: &DMatrix<f64>,
    wz: &mut DMatrix<f64>,
    i: usize,
    s: f64,
    lam: f64,
) {
    for k in 0..wz.nrows() {
        wz[(k, i)] = soft_threshold(wy[(k, i)] - s * g[(k, i)], s * lam);
    }
}

/// Solves `min_Θ L(Θ) + λ ‖Θ‖_{1,1,1}` from `theta_init` (zero when absent).
pub fn fit(
    path: &SamplePath,
    link: &LinkSpec,
    config: &FitConfig,
    theta_init: Option<&ParamTensor>,
) -> Result<FitResult> {
    config.validate()?;
    let init = match theta_init {
        Some(t) => {
            path.check_theta(t)?;
            t.clone()
        }
        None => ParamTensor::square_zeros(path.n_dims(), path.n_lags()),
    };
    let prob = Problem::new(path, link);
    fit_problem(&prob, config, &init)
}

pub(crate) fn fit_problem(
    prob: &Problem,
    config: &FitConfig,
    init: &ParamTensor,
) -> Result<FitResult> {
    let started = Instant::now();
    let nd = prob.n_dims;
    let p = init.n_lags();
    let n = prob.n();
    let lam = config.lambda;
    let x = &prob.x;
    let xt = x.transpose();

    // Parameters are held as Np × N: column i is the stacked row i.
    let mut wx: DMatrix<f64> = init.stack().transpose();
    let mut ux = x * &wx;
    let mut fx: Vec<f64> = (0..nd)
        .map(|i| prob.column_loss(i, ux.column(i).as_slice()) + lam * l1(wx.column(i).as_slice()))
        .collect();
    let mut wy = wx.clone();
    let mut uy = ux.clone();
    let mut wz = wx.clone();
    let mut uz = ux.clone();
    let mut ry = DMatrix::zeros(n, nd);
    let mut fy = vec![0.0; nd];
    let mut loss_z = vec![0.0; nd];
    let mut momentum = vec![1.0f64; nd];
    let mut step = vec![config.step_init; nd];

    let total = |f: &[f64]| f.iter().sum::<f64>();
    let mut trace = vec![total(&fx)];
    if !trace[0].is_finite() {
        return Err(MbpError::NumericalFailure(
            "objective is not finite at the starting point".into(),
        ));
    }

    let mut converged = false;
    let mut timed_out = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        if let Some(limit) = config.time_limit {
            if started.elapsed() > limit {
                timed_out = true;
                break;
            }
        }
        iterations += 1;

        for (i, f) in fy.iter_mut().enumerate().take(nd) {
            *f = prob.column_loss_residual(
                i,
                uy.column(i).as_slice(),
                ry.column_mut(i).as_mut_slice(),
            );
        }
        let mut g = &xt * &ry;
        g /= n as f64;

        for (i, st) in step.iter_mut().enumerate().take(nd) {
            *st = (*st * STEP_GROWTH).min(config.step_init);
            prox_column(&wy, &g, &mut wz, i, *st, lam);
        }
        uz.gemm(1.0, x, &wz, 0.0);

        // Backtrack rows whose candidate violates the quadratic upper model.
        let mut pending: Vec<usize> = (0..nd).collect();
        while !pending.is_empty() {
            let mut failed = Vec::new();
            for &i in &pending {
                loss_z[i] = prob.column_loss(i, uz.column(i).as_slice());
                let s = step[i];
                let d: Vec<f64> = wz
                    .column(i)
                    .iter()
                    .zip(wy.column(i).iter())
                    .map(|(a, b)| a - b)
                    .collect();
                let model = fy[i] + dot(g.column(i).as_slice(), &d) + dot(&d, &d) / (2.0 * s);
                if loss_z[i] > model + 1e-12 * fy[i].abs() {
                    step[i] *= config.backtrack_factor;
                    if step[i] < MIN_STEP {
                        return Err(MbpError::NumericalFailure(format!(
                            "line search stalled on row {i}"
                        )));
                    }
                    prox_column(&wy, &g, &mut wz, i, step[i], lam);
                    failed.push(i);
                }
            }
            if 4 * failed.len() >= nd {
                uz.gemm(1.0, x, &wz, 0.0);
            } else {
                for &i in &failed {
                    let uzi = x * wz.column(i);
                    uz.column_mut(i).copy_from(&uzi);
                }
            }
            pending = failed;
        }

        let mut restarted = false;
        for i in 0..nd {
            let fzi = loss_z[i] + lam * l1(wz.column(i).as_slice());
            if !fzi.is_finite() {
                return Err(MbpError::NumericalFailure(format!(
                    "objective is not finite on row {i}"
                )));
            }
            if fzi > fx[i] {
                // keep the previous iterate and drop momentum for this row
                if momentum[i] > 1.0 {
                    restarted = true;
                }
                momentum[i] = 1.0;
                wy.column_mut(i).copy_from(&wx.column(i));
                uy.column_mut(i).copy_from(&ux.column(i));
                continue;
            }
            if config.accelerate {
                let t_old = momentum[i];
                let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t_old * t_old).sqrt());
                let m = (t_old - 1.0) / t_new;
                for k in 0..wy.nrows() {
                    wy[(k, i)] = wz[(k, i)] + m * (wz[(k, i)] - wx[(k, i)]);
                }
                for t in 0..n {
                    uy[(t, i)] = uz[(t, i)] + m * (uz[(t, i)] - ux[(t, i)]);
                }
                momentum[i] = t_new;
            } else {
                wy.column_mut(i).copy_from(&wz.column(i));
                uy.column_mut(i).copy_from(&uz.column(i));
            }
            wx.column_mut(i).copy_from(&wz.column(i));
            ux.column_mut(i).copy_from(&uz.column(i));
            fx[i] = fzi;
        }

        let prev = *trace.last().unwrap();
        let cur = total(&fx);
        trace.push(cur);
        if !restarted
            && (prev - cur).abs() <= config.tol * prev.abs().max(f64::MIN_POSITIVE)
            && gradient_mapping_norm(prob, &xt, &wx, &ux, &step, lam) <= config.stationarity_tol
        {
            converged = true;
            break;
        }
    }

    let theta_hat = ParamTensor::unstack(&wx.transpose(), p)?;
    Ok(FitResult {
        theta_hat,
        objective_trace: trace,
        iterations,
        converged,
        final_step: step.iter().cloned().fold(f64::INFINITY, f64::min),
        timed_out,
    })
}

/// How to read a support off an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportRule {
    /// The `s` largest magnitudes, ties broken lexicographically.
    TopS(usize),
    /// Every index with magnitude at least `gamma`.
    Threshold(f64),
}

pub fn support_estimate(
    theta_hat: &ParamTensor,
    rule: SupportRule,
) -> Result<Vec<(usize, usize, usize)>> {
    match rule {
        SupportRule::TopS(s) => {
            if s > theta_hat.len() {
                return invalid(format!("support size {s} exceeds {}", theta_hat.len()));
            }
            let mut idx: Vec<usize> = magnitude_order(theta_hat).into_iter().take(s).collect();
            idx.sort_unstable();
            Ok(idx.into_iter().map(|f| theta_hat.unflatten(f)).collect())
        }
        SupportRule::Threshold(gamma) => {
            if !(gamma >= 0.0) {
                return invalid(format!("threshold must be non-negative, got {gamma}"));
            }
            Ok((0..theta_hat.len())
                .filter(|&f| theta_hat.values()[f].abs() >= gamma)
                .map(|f| theta_hat.unflatten(f))
                .collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub frob_error: f64,
    pub frob_error_sq: f64,
    pub support_fraction: f64,
    /// False when `s = 0`; the fraction is then reported as 1.
    pub support_defined: bool,
}

pub fn error_metrics(
    theta_hat: &ParamTensor,
    theta_star: &ParamTensor,
    s: usize,
) -> Result<ErrorMetrics> {
    let diff = theta_hat.sub(theta_star)?;
    let frob = diff.norm(NormKind::Frobenius);
    let (support_fraction, support_defined) = if s == 0 {
        (1.0, false)
    } else {
        let est = support_estimate(theta_hat, SupportRule::TopS(s))?;
        let hits = est
            .iter()
            .filter(|&&(i, j, l)| theta_star.get(i, j, l) != 0.0)
            .count();
        (hits as f64 / s as f64, true)
    };
    Ok(ErrorMetrics {
        frob_error: frob,
        frob_error_sq: frob * frob,
        support_fraction,
        support_defined,
    })
}
