//! Exact mixing coefficients `η_{kℓ}` by enumeration of the conditional
//! laws of future trajectories, and the bounds they are compared with.
//!
//! The conditioning event fixes `x^k` and the `p − 1` states before it.
//! Because the chain has order `p`, this is the whole relevant past; when
//! `k ≤ p − 1` part of it lies before time 1 and is maximized over like the
//! rest of the history.

use crate::error::{invalid, MbpError, Result};
use crate::link::LinkSpec;
use crate::markov::kernel::{build_kernel, check_square, dobrushin_tau1, KernelMatrix};
use crate::tensor::ParamTensor;

/// Largest `N·(n + p)` accepted by the trajectory enumerations.
pub const MAX_ENUM_BITS: usize = 20;

fn check_budget(theta: &ParamTensor, n: usize) -> Result<()> {
    check_square(theta)?;
    let bits = theta.n_rows() * (n + theta.n_lags());
    if bits > MAX_ENUM_BITS {
        return Err(MbpError::ResourceLimit(format!(
            "trajectory enumeration needs N·(n+p) ≤ {MAX_ENUM_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// Law of the `m` states after `steps` further transitions, starting from
/// block `a`. Outcome index packs step `j` into bits `j·N..(j+1)·N`.
fn future_law(k: &KernelMatrix, a: usize, steps: usize, m: usize) -> Vec<f64> {
    let nd = k.n_dims();
    let ns = k.n_states();
    let mut dist = vec![0.0; ns];
    dist[a] = 1.0;
    for _ in 0..steps {
        let mut next = vec![0.0; ns];
        for (c, &w) in dist.iter().enumerate() {
            if w > 0.0 {
                for (b, v) in k.row(c) {
                    next[b] += w * v;
                }
            }
        }
        dist = next;
    }
    let mut law = vec![0.0; 1 << (nd * m)];
    for (b, &w) in dist.iter().enumerate() {
        if w > 0.0 {
            accumulate(k, b, w, 0, 0, m, &mut law);
        }
    }
    law
}

fn accumulate(
    k: &KernelMatrix,
    block: usize,
    weight: f64,
    depth: usize,
    code: usize,
    m: usize,
    law: &mut [f64],
) {
    if depth == m {
        law[code] += weight;
        return;
    }
    let nd = k.n_dims();
    for s in 0..1usize << nd {
        let v = k.prob(block, s);
        accumulate(
            k,
            k.successor(block, s),
            weight * v,
            depth + 1,
            code | (s << (depth * nd)),
            m,
            law,
        );
    }
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn eta_with_kernel(k: &KernelMatrix, n: usize, kk: usize, l: usize) -> f64 {
    if kk == l {
        return 1.0;
    }
    let nd = k.n_dims();
    let steps = l - 1 - kk;
    let m = n - l + 1;
    let n_w = 1usize << nd;
    let n_hist = k.n_states() >> nd;
    let mut worst = 0.0f64;
    for y in 0..n_hist {
        let laws: Vec<Vec<f64>> = (0..n_w)
            .map(|w| future_law(k, (y << nd) | w, steps, m))
            .collect();
        for w in 0..n_w {
            for w2 in w + 1..n_w {
                worst = worst.max(total_variation(&laws[w], &laws[w2]));
            }
        }
    }
    worst.min(1.0)
}

fn check_indices(n: usize, k: usize, l: usize) -> Result<()> {
    if !(1 <= k && k <= l && l <= n) {
        return invalid(format!("need 1 ≤ k ≤ l ≤ n, got k={k}, l={l}, n={n}"));
    }
    Ok(())
}

/// `η_{kℓ}`: the largest total-variation distance between the laws of
/// `(x^ℓ, …, x^n)` under two values of `x^k` sharing the same past.
pub fn eta_mixing_exact(
    theta: &ParamTensor,
    link: &LinkSpec,
    n: usize,
    k: usize,
    l: usize,
) -> Result<f64> {
    check_budget(theta, n)?;
    check_indices(n, k, l)?;
    let kernel = build_kernel(theta, link)?;
    Ok(eta_with_kernel(&kernel, n, k, l))
}

/// All `η_{kℓ}` for `1 ≤ k ≤ ℓ ≤ n`; entry `[k-1][l-1]`, zero below the
/// diagonal.
pub fn eta_matrix(theta: &ParamTensor, link: &LinkSpec, n: usize) -> Result<Vec<Vec<f64>>> {
    check_budget(theta, n)?;
    if n == 0 {
        return invalid("horizon must be at least 1");
    }
    let kernel = build_kernel(theta, link)?;
    let mut h = vec![vec![0.0; n]; n];
    for k in 1..=n {
        for l in k..=n {
            h[k - 1][l - 1] = eta_with_kernel(&kernel, n, k, l);
        }
    }
    Ok(h)
}

/// Geometric bound `τ^{1 + ⌊(ℓ−k−1)/p⌋}`, equal to 1 on the diagonal.
pub fn eta_bound(tau: f64, p: usize, k: usize, l: usize) -> f64 {
    if l == k {
        return 1.0;
    }
    tau.powi(1 + ((l - k - 1) / p) as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaBoundRow {
    pub k: usize,
    pub l: usize,
    pub eta: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct EtaBoundCheck {
    pub tau1_p_step: f64,
    pub rows: Vec<EtaBoundRow>,
}

impl EtaBoundCheck {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Compares every `η_{kℓ}` with the geometric bound built from `τ₁(𝒦^p)`.
pub fn check_eta_bound(theta: &ParamTensor, link: &LinkSpec, n: usize) -> Result<EtaBoundCheck> {
    let h = eta_matrix(theta, link, n)?;
    let kernel = build_kernel(theta, link)?;
    let tau = dobrushin_tau1(&kernel.p_step()?)?;
    let p = theta.n_lags();
    let mut rows = Vec::new();
    for k in 1..=n {
        for l in k..=n {
            let eta = h[k - 1][l - 1];
            let bound = eta_bound(tau, p, k, l);
            rows.push(EtaBoundRow {
                k,
                l,
                eta,
                bound,
                holds: eta <= bound + 1e-10,
            });
        }
    }
    Ok(EtaBoundCheck {
        tau1_p_step: tau,
        rows,
    })
}

/// `F_p(τ) = 2 + 2p² / (1/τ − 1)²`, with `F_p(0) = 2`.
pub fn f_p_bound(tau: f64, p: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&tau) {
        return invalid(format!("tau must lie in [0, 1), got {tau}"));
    }
    if tau == 0.0 {
        return Ok(2.0);
    }
    let gap = 1.0 / tau - 1.0;
    let p = p as f64;
    Ok(2.0 + 2.0 * p * p / (gap * gap))
}

/// Exact `‖H‖_∞ = max_k Σ_{ℓ ≥ k} η_{kℓ}`.
pub fn h_inf_norm_exact(theta: &ParamTensor, link: &LinkSpec, n: usize) -> Result<f64> {
    let h = eta_matrix(theta, link, n)?;
    Ok(h.iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfCheck {
    pub h_inf_sq: f64,
    pub tau1_p_step: f64,
    pub f_p: f64,
    pub holds: bool,
}

/// Compares `‖H‖²_∞` with `F_p(τ₁(𝒦^p))`.
pub fn check_hinf_bound(theta: &ParamTensor, link: &LinkSpec, n: usize) -> Result<HinfCheck> {
    let h = h_inf_norm_exact(theta, link, n)?;
    let kernel = build_kernel(theta, link)?;
    let tau = dobrushin_tau1(&kernel.p_step()?)?;
    let f_p = f_p_bound(tau, theta.n_lags())?;
    Ok(HinfCheck {
        h_inf_sq: h * h,
        tau1_p_step: tau,
        f_p,
        holds: h * h <= f_p + 1e-10,
    })
}
