//! Exact transition kernels of the block chain `(x^t, …, x^{t-p+1})`.
//!
//! A block is encoded as an integer whose bit `u·N + i` holds `x_i^{t-u}`:
//! lag-major, coordinate-minor, with the newest state in the low bits.

use nalgebra::DMatrix;

use crate::error::{invalid, MbpError, Result};
use crate::link::LinkSpec;
use crate::tensor::{mixing_norm, ParamTensor};

/// Largest `N·p` accepted by [`build_kernel`].
pub const MAX_KERNEL_BITS: usize = 14;
/// Largest successor table `2^{Np} · 2^N` held in memory.
pub const MAX_KERNEL_ENTRIES: usize = 1 << 24;
/// Largest `N·p` for dense powers and Dobrushin coefficients, whose cost
/// grows like `8^{Np}`.
pub const MAX_DENSE_BITS: usize = 10;

/// One-step kernel stored by successor: row `a` lists the probabilities of
/// the `2^N` possible new states `s`, which lead to block
/// `((a << N) | s) mod 2^{Np}`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n_dims: usize,
    n_lags: usize,
    succ: Vec<f64>,
}

/// Probability of the new state `s` given predictors `u` (one per coordinate).
pub(crate) fn state_prob(link: &LinkSpec, u: &[f64], s: usize) -> f64 {
    u.iter()
        .enumerate()
        .map(|(i, &ui)| {
            let z = link.eval(ui);
            if (s >> i) & 1 == 1 {
                z
            } else {
                1.0 - z
            }
        })
        .product()
}

/// Predictors `⟨Θ_{i··}, X⟩` for the history encoded in `block`.
pub(crate) fn block_predictors(theta: &ParamTensor, block: usize, out: &mut [f64]) {
    let (nd, _, p) = theta.shape();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for l in 0..p {
            for j in 0..nd {
                if (block >> (l * nd + j)) & 1 == 1 {
                    acc += theta.get(i, j, l);
                }
            }
        }
        *o = acc;
    }
}

pub(crate) fn check_square(theta: &ParamTensor) -> Result<()> {
    if !theta.is_square() {
        return invalid(format!(
            "kernel needs a square tensor, got {:?}",
            theta.shape()
        ));
    }
    Ok(())
}

fn bits_limit(bits: usize, limit: usize, what: &str) -> Result<()> {
    if bits > limit {
        return Err(MbpError::ResourceLimit(format!(
            "{what} needs N·p ≤ {limit}, got {bits}"
        )));
    }
    Ok(())
}

pub fn build_kernel(theta: &ParamTensor, link: &LinkSpec) -> Result<KernelMatrix> {
    check_square(theta)?;
    let (nd, _, p) = theta.shape();
    bits_limit(nd * p, MAX_KERNEL_BITS, "kernel construction")?;
    let n_states = 1usize << (nd * p);
    let n_succ = 1usize << nd;
    if n_states.saturating_mul(n_succ) > MAX_KERNEL_ENTRIES {
        return Err(MbpError::ResourceLimit(format!(
            "successor table of {n_states}×{n_succ} entries is too large"
        )));
    }
    let mut succ = vec![0.0; n_states * n_succ];
    let mut u = vec![0.0; nd];
    for a in 0..n_states {
        block_predictors(theta, a, &mut u);
        for s in 0..n_succ {
            succ[a * n_succ + s] = state_prob(link, &u, s);
        }
    }
    Ok(KernelMatrix {
        n_dims: nd,
        n_lags: p,
        succ,
    })
}

impl KernelMatrix {
    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn n_lags(&self) -> usize {
        self.n_lags
    }

    /// Bits per block, `N·p`.
    pub fn state_bits(&self) -> usize {
        self.n_dims * self.n_lags
    }

    pub fn n_states(&self) -> usize {
        1 << self.state_bits()
    }

    /// Block reached from `a` when the new state is `s`.
    #[inline]
    pub fn successor(&self, a: usize, s: usize) -> usize {
        ((a << self.n_dims) | s) & (self.n_states() - 1)
    }

    /// Probability of moving from block `a` with new state `s`.
    #[inline]
    pub fn prob(&self, a: usize, s: usize) -> f64 {
        self.succ[(a << self.n_dims) + s]
    }

    /// Row `a` as `(successor, probability)` pairs.
    pub fn row(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..1usize << self.n_dims).map(move |s| (self.successor(a, s), self.prob(a, s)))
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        bits_limit(self.state_bits(), MAX_DENSE_BITS + 2, "dense kernel")?;
        let ns = self.n_states();
        let mut m = DMatrix::zeros(ns, ns);
        for a in 0..ns {
            for (b, v) in self.row(a) {
                m[(a, b)] += v;
            }
        }
        Ok(m)
    }

    /// Dense `r`-step kernel `𝒦^r` by repeated multiplication with the
    /// sparse one-step kernel.
    pub fn power(&self, r: usize) -> Result<DMatrix<f64>> {
        bits_limit(self.state_bits(), MAX_DENSE_BITS, "dense kernel power")?;
        let ns = self.n_states();
        if r == 0 {
            return Ok(DMatrix::identity(ns, ns));
        }
        let mut cur = self.to_dense()?;
        for _ in 1..r {
            let mut next = DMatrix::zeros(ns, ns);
            for c in 0..ns {
                for s in 0..1usize << self.n_dims {
                    let b = self.successor(c, s);
                    let v = self.prob(c, s);
                    // next[:, b] += cur[:, c] * v
                    let (src, mut dst) = (cur.column(c), next.column_mut(b));
                    dst.axpy(v, &src, 1.0);
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Dense `p`-step kernel over disjoint consecutive blocks.
    pub fn p_step(&self) -> Result<DMatrix<f64>> {
        self.power(self.n_lags)
    }
}

/// Dobrushin coefficient: the largest total-variation distance between two
/// rows of a row-stochastic matrix.
pub fn dobrushin_tau1(kernel: &DMatrix<f64>) -> Result<f64> {
    let (nr, nc) = kernel.shape();
    if nr == 0 || nr != nc {
        return invalid(format!(
            "kernel must be square and non-empty, got {nr}×{nc}"
        ));
    }
    if nr > 1 << MAX_DENSE_BITS {
        return Err(MbpError::ResourceLimit(format!(
            "Dobrushin coefficient limited to {} states, got {nr}",
            1 << MAX_DENSE_BITS
        )));
    }
    for r in 0..nr {
        let row = kernel.row(r);
        if row.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return invalid(format!("row {r} has a negative or non-finite entry"));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return invalid(format!("row {r} sums to {sum}, not 1"));
        }
    }
    // rows as contiguous slices
    let t = kernel.transpose();
    let mut worst = 0.0f64;
    for a in 0..nr {
        let ra = t.column(a);
        for b in a + 1..nr {
            let rb = t.column(b);
            let d: f64 = ra.iter().zip(rb.iter()).map(|(x, y)| (x - y).abs()).sum();
            worst = worst.max(0.5 * d);
        }
    }
    Ok(worst.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfBoundCheck {
    pub tau1_p_step: f64,
    pub gf: f64,
    pub holds: bool,
}

/// Compares `τ₁(𝒦^p)` with the mixing norm `g_f(Θ)`.
pub fn check_gf_bound(theta: &ParamTensor, link: &LinkSpec) -> Result<GfBoundCheck> {
    check_square(theta)?;
    bits_limit(
        theta.n_rows() * theta.n_lags(),
        MAX_DENSE_BITS,
        "p-step Dobrushin check",
    )?;
    let kernel = build_kernel(theta, link)?;
    let tau = dobrushin_tau1(&kernel.p_step()?)?;
    let gf = mixing_norm(theta, link);
    Ok(GfBoundCheck {
        tau1_p_step: tau,
        gf,
        holds: tau <= gf + 1e-10,
    })
}
