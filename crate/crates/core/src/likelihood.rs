//! Negative log-likelihood, its gradient, the quadratic minorant of the
//! Taylor remainder, and Monte-Carlo checks of the gradient bound, restricted
//! strong convexity and concentration of the quadratic form.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, MbpError, Result};
use crate::link::LinkSpec;
use crate::process::{simulate, DesignMatrix, SamplePath, DEFAULT_BURN_IN};
use crate::seed::derive_seed;
use crate::tensor::{
    concentration_constant, mixing_norm, sparse_approx, ConcentrationConstant, NormKind,
    ParamTensor,
};

/// Loss value and gradient at one parameter.
#[derive(Debug, Clone)]
pub struct LossEval {
    pub value: f64,
    pub grad: ParamTensor,
}

/// Design and targets of one sample path in matrix form. Parameters are
/// handled in stacked `N × Np` form so predictors and gradients are two
/// matrix products.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub n_dims: usize,
    pub x: DMatrix<f64>,
    /// `n × N`, entry `(t-1, i)` is `x_i^t`.
    pub y: DMatrix<f64>,
    pub link: LinkSpec,
}

impl Problem {
    pub fn new(path: &SamplePath, link: &LinkSpec) -> Problem {
        let x = DesignMatrix::from_path(path).data;
        let y = DMatrix::from_fn(path.n(), path.n_dims(), |r, i| {
            path.state(r as isize + 1)[i] as f64
        });
        Problem {
            n_dims: path.n_dims(),
            x,
            y,
            link: *link,
        }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// `n × N` matrix of linear predictors `X Wᵀ`.
    pub fn predictors(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        &self.x * w.transpose()
    }

    /// Normalized loss of output `i` given its predictor column.
    pub fn column_loss(&self, i: usize, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (ut, yt) in u.iter().zip(self.y.column(i).iter()) {
            let z = self.link.eval(*ut);
            acc -= if *yt > 0.5 { z.ln() } else { (1.0 - z).ln() };
        }
        acc / self.n() as f64
    }

    /// Normalized loss of output `i` and the residuals
    /// `((1-x)/(1-z) - x/z) f'(u)` written into `r`.
    pub fn column_loss_residual(&self, i: usize, u: &[f64], r: &mut [f64]) -> f64 {
        let mut acc = 0.0;
        for ((ut, yt), rt) in u.iter().zip(self.y.column(i).iter()).zip(r.iter_mut()) {
            let (z, dz) = self.link.eval_with_deriv(*ut);
            if *yt > 0.5 {
                acc -= z.ln();
                *rt = -dz / z;
            } else {
                acc -= (1.0 - z).ln();
                *rt = dz / (1.0 - z);
            }
        }
        acc / self.n() as f64
    }

    /// Per-output normalized losses.
    pub fn row_losses(&self, u: &DMatrix<f64>) -> Vec<f64> {
        (0..self.n_dims)
            .map(|i| self.column_loss(i, u.column(i).as_slice()))
            .collect()
    }

    /// Per-output losses plus the residual matrix.
    pub fn losses_and_residuals(&self, u: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let mut r = DMatrix::zeros(u.nrows(), u.ncols());
        let losses = (0..self.n_dims)
            .map(|i| {
                self.column_loss_residual(i, u.column(i).as_slice(), r.column_mut(i).as_mut_slice())
            })
            .collect();
        (losses, r)
    }

    /// Stacked gradient `(1/n) Rᵀ X`.
    pub fn gradient(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = r.transpose() * &self.x;
        g /= self.n() as f64;
        g
    }
}

fn check_shapes(theta: &ParamTensor, path: &SamplePath) -> Result<()> {
    path.check_theta(theta)
}

/// Normalized negative log-likelihood.
pub fn nll(theta: &ParamTensor, path: &SamplePath, link: &LinkSpec) -> Result<f64> {
    check_shapes(theta, path)?;
    let prob = Problem::new(path, link);
    let u = prob.predictors(&theta.stack());
    Ok(prob.row_losses(&u).iter().sum())
}

pub fn loss_eval(theta: &ParamTensor, path: &SamplePath, link: &LinkSpec) -> Result<LossEval> {
    check_shapes(theta, path)?;
    let prob = Problem::new(path, link);
    let u = prob.predictors(&theta.stack());
    let (losses, r) = prob.losses_and_residuals(&u);
    let grad = ParamTensor::unstack(&prob.gradient(&r), theta.n_lags())?;
    Ok(LossEval {
        value: losses.iter().sum(),
        grad,
    })
}

/// Gradient of [`nll`]. The clamped link has zero slope where it saturates,
/// so those samples contribute nothing.
pub fn grad_nll(theta: &ParamTensor, path: &SamplePath, link: &LinkSpec) -> Result<ParamTensor> {
    Ok(loss_eval(theta, path, link)?.grad)
}

/// `E(Δ; X) = (c_f/n) Σ_t Σ_k ⟨Δ_{k··}, X^{t-1}⟩²`, evaluated term by term
/// from the path.
pub fn quad_form(delta: &ParamTensor, path: &SamplePath, link: &LinkSpec) -> Result<f64> {
    check_shapes(delta, path)?;
    let (nd, _, p) = delta.shape();
    let mut total = 0.0;
    for t in 1..=path.n() {
        for k in 0..nd {
            let mut ip = 0.0;
            for j in 0..nd {
                for l in 0..p {
                    if path.lagged(t, j, l + 1) == 1 {
                        ip += delta.get(k, j, l);
                    }
                }
            }
            total += ip * ip;
        }
    }
    Ok(link.curvature() * total / path.n() as f64)
}

/// The same quadratic form through the design matrix:
/// `(c_f/n) ‖X S(Δ)ᵀ‖_F²`.
pub fn quad_form_stacked(delta: &ParamTensor, path: &SamplePath, link: &LinkSpec) -> Result<f64> {
    check_shapes(delta, path)?;
    let x = DesignMatrix::from_path(path).data;
    let prod = &x * delta.stack().transpose();
    Ok(link.curvature() * prod.norm_squared() / path.n() as f64)
}

/// `L(Θ* + Δ) − L(Θ*) − ⟨∇L(Θ*), Δ⟩`.
pub fn taylor_remainder(
    theta_star: &ParamTensor,
    delta: &ParamTensor,
    path: &SamplePath,
    link: &LinkSpec,
) -> Result<f64> {
    theta_star.check_same_shape(delta, "taylor remainder")?;
    let at_star = loss_eval(theta_star, path, link)?;
    let moved = nll(&theta_star.add(delta)?, path, link)?;
    Ok(moved - at_star.value - at_star.grad.inner(delta)?)
}

/// Hamming-Lipschitz constant of `X ↦ E(Δ; X)`: `2 c_f ‖Δ‖²_{2,1,1} / n`.
pub fn quad_form_lipschitz(delta: &ParamTensor, link: &LinkSpec, n: usize) -> f64 {
    2.0 * link.curvature() * delta.norm(NormKind::L211).powi(2) / n as f64
}

/// High-probability bound `(L_f/ε) √(c1 log(N²p) / n)` on the sup-norm of
/// the gradient at the truth.
pub fn grad_sup_bound(link: &LinkSpec, n_dims: usize, n_lags: usize, n: usize, c1: f64) -> f64 {
    let dim = (n_dims * n_dims * n_lags) as f64;
    link.lipschitz() / link.eps() * (c1 * dim.ln() / n as f64).sqrt()
}

/// One replicate of a Monte-Carlo inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRow {
    pub replicate: usize,
    pub statistic: f64,
    pub bound: f64,
    pub violated: bool,
}

/// Replicate rows plus the nominal failure probability they are tested
/// against.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub rows: Vec<TrialRow>,
    pub nominal_rate: f64,
}

impl TrialReport {
    pub fn violation_rate(&self) -> f64 {
        let v = self.rows.iter().filter(|r| r.violated).count();
        v as f64 / self.rows.len() as f64
    }

    /// Bernoulli standard error at the nominal rate.
    pub fn standard_error(&self) -> f64 {
        let q = self.nominal_rate.clamp(0.0, 1.0);
        (q * (1.0 - q) / self.rows.len() as f64).sqrt()
    }

    /// Largest violation rate consistent with the nominal one:
    /// nominal plus three standard errors.
    pub fn allowed_rate(&self) -> f64 {
        self.nominal_rate + 3.0 * self.standard_error()
    }

    pub fn passes(&self) -> bool {
        self.violation_rate() <= self.allowed_rate()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates `replicates` paths from `theta_star` and records whether the
/// gradient sup-norm at the truth exceeds [`grad_sup_bound`]. The nominal
/// rate is `(N²p)^{-(c1/2 - 1)}`.
pub fn grad_bound_trial(
    theta_star: &ParamTensor,
    link: &LinkSpec,
    n: usize,
    c1: f64,
    replicates: usize,
    seed: u64,
) -> Result<TrialReport> {
    if !(c1 > 2.0) {
        return invalid(format!("c1 must exceed 2, got {c1}"));
    }
    if replicates == 0 {
        return invalid("need at least one replicate");
    }
    let (nd, _, p) = theta_star.shape();
    let bound = grad_sup_bound(link, nd, p, n, c1);
    let rows = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let path = simulate(
                theta_star,
                link,
                n,
                DEFAULT_BURN_IN,
                derive_seed(&[seed, rep as u64]),
            )?;
            let stat = grad_nll(theta_star, &path, link)?.norm(NormKind::Max);
            Ok(TrialRow {
                replicate: rep,
                statistic: stat,
                bound,
                violated: stat > bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dim = (nd * nd * p) as f64;
    Ok(TrialReport {
        rows,
        nominal_rate: dim.powf(-(c1 / 2.0 - 1.0)).min(1.0),
    })
}

/// Random directions in the cone
/// `‖Δ_{S^c}‖₁ ≤ 3‖Δ_S‖₁ + 4‖Θ*_{S^c}‖₁` with `S` the best `s`-term support
/// of `theta_star`. Entries on `S` are standard normal; the off-support part
/// is a normal direction rescaled to a uniform fraction of the cone radius.
pub fn cone_directions(
    theta_star: &ParamTensor,
    s: usize,
    n_directions: usize,
    seed: u64,
) -> Result<Vec<ParamTensor>> {
    let report = sparse_approx(theta_star, s)?;
    let mut on_support = vec![false; theta_star.len()];
    for &(i, j, l) in &report.support {
        on_support[theta_star.flat_index(i, j, l)] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nr, nc, p) = theta_star.shape();
    (0..n_directions)
        .map(|_| {
            let mut vals: Vec<f64> = (0..theta_star.len())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let slack: f64 = rng.random();
            let on_l1: f64 = vals
                .iter()
                .zip(&on_support)
                .filter(|(_, s)| **s)
                .map(|(v, _)| v.abs())
                .sum();
            let off_l1: f64 = vals
                .iter()
                .zip(&on_support)
                .filter(|(_, s)| !**s)
                .map(|(v, _)| v.abs())
                .sum();
            let radius = 3.0 * on_l1 + 4.0 * report.sigma_s;
            let scale = if off_l1 > 0.0 {
                slack * radius / off_l1
            } else {
                0.0
            };
            for (v, s) in vals.iter_mut().zip(&on_support) {
                if !*s {
                    *v *= scale;
                }
            }
            ParamTensor::from_vec(nr, nc, p, vals)
        })
        .collect()
}

/// Empirical restricted curvature: the minimum of `E(Δ; X) / ‖Δ‖_F²` over
/// sampled cone directions.
pub fn rsc_probe(
    theta_star: &ParamTensor,
    link: &LinkSpec,
    path: &SamplePath,
    s: usize,
    n_directions: usize,
    seed: u64,
) -> Result<f64> {
    check_shapes(theta_star, path)?;
    if n_directions == 0 {
        return invalid("need at least one direction");
    }
    let prob = Problem::new(path, link);
    let c_f = link.curvature();
    let mut best = f64::INFINITY;
    for delta in cone_directions(theta_star, s, n_directions, seed)? {
        let f2 = delta.norm(NormKind::Frobenius).powi(2);
        if f2 == 0.0 {
            continue;
        }
        let q = c_f * prob.predictors(&delta.stack()).norm_squared() / prob.n() as f64;
        best = best.min(q / f2);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        invalid("the cone is {0} for this support budget; no direction to probe")
    }
}

/// Number of scalar terms used for the long-run mean of `E(Δ; X)`.
pub const REFERENCE_TERMS: usize = 1_000_000;

/// Long-run mean of `E(Δ; X)` from one stationary run with about
/// [`REFERENCE_TERMS`] terms `(t, k)`.
pub fn reference_quad_mean(
    theta_star: &ParamTensor,
    link: &LinkSpec,
    delta: &ParamTensor,
    seed: u64,
) -> Result<f64> {
    let steps = (REFERENCE_TERMS / theta_star.n_rows()).max(1);
    let path = simulate(theta_star, link, steps, DEFAULT_BURN_IN, seed)?;
    quad_form_stacked(delta, &path, link)
}

/// Tail-rate check of `|E(Δ;X) − 𝔼E(Δ;X)| > t ‖Δ‖²_{2,1,1}` against the
/// nominal `2 exp(−n t² / G_f)`.
pub fn concentration_trial(
    theta_star: &ParamTensor,
    link: &LinkSpec,
    delta: &ParamTensor,
    n: usize,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<TrialReport> {
    theta_star.check_same_shape(delta, "concentration trial")?;
    let gf_const = match concentration_constant(theta_star, link) {
        ConcentrationConstant::Finite(g) => g,
        ConcentrationConstant::Diverged => {
            return invalid(format!(
                "mixing norm {} is not below 1",
                mixing_norm(theta_star, link)
            ))
        }
    };
    if replicates == 0 {
        return invalid("need at least one replicate");
    }
    let mean = reference_quad_mean(theta_star, link, delta, derive_seed(&[seed, u64::MAX]))?;
    let bound = t * delta.norm(NormKind::L211).powi(2);
    let rows = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let path = simulate(
                theta_star,
                link,
                n,
                DEFAULT_BURN_IN,
                derive_seed(&[seed, rep as u64]),
            )?;
            let dev = (quad_form_stacked(delta, &path, link)? - mean).abs();
            Ok(TrialRow {
                replicate: rep,
                statistic: dev,
                bound,
                violated: dev > bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialReport {
        rows,
        nominal_rate: (2.0 * (-(n as f64) * t * t / gf_const).exp()).min(1.0),
    })
}

/// Deviation level `t` at which `2 exp(−n t²/G_f)` equals `level`.
pub fn concentration_level(g_f_const: f64, n: usize, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 2.0) {
        return Err(MbpError::InvalidArgument(format!(
            "tail level must lie in (0, 2), got {level}"
        )));
    }
    Ok((g_f_const * (2.0 / level).ln() / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::random_sparse_theta;
    use approx::assert_relative_eq;

    fn link() -> LinkSpec {
        LinkSpec::sigmoid(1.0, 0.05).unwrap()
    }

    // Straight double loop over (t, i), independent of the matrix path.
    fn naive_nll(theta: &ParamTensor, path: &SamplePath, link: &LinkSpec) -> f64 {
        let (nd, _, p) = theta.shape();
        let mut total = 0.0;
        for t in 1..=path.n() {
            for i in 0..nd {
                let mut u = 0.0;
                for j in 0..nd {
                    for l in 1..=p {
                        u += theta.get(i, j, l - 1) * path.lagged(t, j, l) as f64;
                    }
                }
                let z = link.eval(u);
                let x = path.state(t as isize)[i] as f64;
                total += x * z.ln() + (1.0 - x) * (1.0 - z).ln();
            }
        }
        -total / path.n() as f64
    }

    #[test]
    fn nll_at_zero_is_log_two() {
        let theta = random_sparse_theta(3, 2, 4, 0.3, 1.0, 1).unwrap();
        let path = simulate(&theta, &link(), 100, 10, 2).unwrap();
        let v = nll(&ParamTensor::square_zeros(3, 2), &path, &link()).unwrap();
        // N terms of log 2 per sample, averaged over t
        assert_relative_eq!(v, 3.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn single_term_hand_evaluation() {
        let path = SamplePath::from_rows(1, 1, &[vec![1], vec![1]], 0).unwrap();
        let zero = ParamTensor::square_zeros(1, 1);
        assert_relative_eq!(
            nll(&zero, &path, &link()).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        let g = grad_nll(&zero, &path, &link()).unwrap();
        assert_relative_eq!(g.get(0, 0, 0), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn nll_matches_double_loop() {
        for seed in 0..10 {
            let theta = random_sparse_theta(4, 3, 10, 0.3, 1.5, seed).unwrap();
            let path = simulate(&theta, &link(), 80, 20, seed + 100).unwrap();
            let probe = random_sparse_theta(4, 3, 20, 0.1, 2.0, seed + 7).unwrap();
            let a = nll(&probe, &path, &link()).unwrap();
            let b = naive_nll(&probe, &path, &link());
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_vanishes_on_silent_columns() {
        // coordinate 1 never fires, so its columns of the design are zero
        let rows: Vec<Vec<u8>> = (0..30).map(|t| vec![(t % 3 == 0) as u8, 0]).collect();
        let path = SamplePath::from_rows(2, 2, &rows, 0).unwrap();
        let g = grad_nll(&ParamTensor::square_zeros(2, 2), &path, &link()).unwrap();
        for i in 0..2 {
            for l in 0..2 {
                assert_eq!(g.get(i, 1, l), 0.0);
            }
        }
    }

    #[test]
    fn gradient_is_bounded_termwise() {
        let l = link();
        for seed in 0..10 {
            let theta = random_sparse_theta(3, 2, 8, 0.5, 3.0, seed).unwrap();
            let path = simulate(&theta, &l, 60, 10, seed).unwrap();
            let g = grad_nll(&theta, &path, &l).unwrap();
            assert!(g.norm(NormKind::Max) <= l.lipschitz() / l.eps() + 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let path = SamplePath::from_rows(2, 1, &[vec![0, 1], vec![1, 1]], 0).unwrap();
        let wrong = ParamTensor::square_zeros(2, 2);
        assert!(matches!(
            nll(&wrong, &path, &link()),
            Err(MbpError::ShapeMismatch(_))
        ));
        assert!(grad_nll(&wrong, &path, &link()).is_err());
        assert!(quad_form(&wrong, &path, &link()).is_err());
        assert!(taylor_remainder(&wrong, &wrong, &path, &link()).is_err());
    }

    #[test]
    fn quad_form_hand_cases() {
        let l = link();
        let path = SamplePath::from_rows(1, 1, &[vec![1], vec![1], vec![0]], 0).unwrap();
        assert_eq!(
            quad_form(&ParamTensor::square_zeros(1, 1), &path, &l).unwrap(),
            0.0
        );
        // history bits for t = 1, 2 are (1, 1): both inner products equal d
        let d = 0.7;
        let delta = ParamTensor::from_vec(1, 1, 1, vec![d]).unwrap();
        assert_relative_eq!(
            quad_form(&delta, &path, &l).unwrap(),
            l.curvature() * d * d,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            quad_form_stacked(&delta, &path, &l).unwrap(),
            l.curvature() * d * d,
            epsilon = 1e-15
        );
    }

    #[test]
    fn remainder_at_zero_perturbation() {
        let theta = random_sparse_theta(3, 2, 5, 0.3, 1.0, 3).unwrap();
        let path = simulate(&theta, &link(), 50, 10, 4).unwrap();
        let zero = ParamTensor::square_zeros(3, 2);
        assert!(
            taylor_remainder(&theta, &zero, &path, &link())
                .unwrap()
                .abs()
                < 1e-14
        );
    }

    #[test]
    fn lipschitz_constant_bounds_single_flips() {
        let l = link();
        let theta = random_sparse_theta(3, 2, 6, 0.3, 1.0, 5).unwrap();
        let path = simulate(&theta, &l, 40, 10, 6).unwrap();
        let delta = random_sparse_theta(3, 2, 9, 0.1, 1.0, 7).unwrap();
        let base = quad_form(&delta, &path, &l).unwrap();
        let lip = quad_form_lipschitz(&delta, &l, path.n());
        // flip every stored bit except the final state, which no predictor sees
        for r in 0..path.n_rows() - 1 {
            for i in 0..3 {
                let mut rows: Vec<Vec<u8>> =
                    (0..path.n_rows()).map(|k| path.row(k).to_vec()).collect();
                rows[r][i] ^= 1;
                let flipped = SamplePath::from_rows(3, 2, &rows, 0).unwrap();
                let v = quad_form(&delta, &flipped, &l).unwrap();
                assert!((v - base).abs() <= lip + 1e-12);
            }
        }
    }

    #[test]
    fn grad_bound_value() {
        let l = link();
        let b = grad_sup_bound(&l, 5, 2, 500, 4.0);
        assert_relative_eq!(b, 5.0 * (4.0 * 50f64.ln() / 500.0).sqrt(), epsilon = 1e-12);
        assert!((b - 0.884).abs() < 1e-3);
    }

    #[test]
    fn grad_trial_edge_cases() {
        let theta = ParamTensor::square_zeros(2, 1);
        assert!(grad_bound_trial(&theta, &link(), 50, 2.0, 5, 0).is_err());
        let one = grad_bound_trial(&theta, &link(), 50, 4.0, 1, 0).unwrap();
        let rate = one.violation_rate();
        assert!(rate == 0.0 || rate == 1.0);
    }

    #[test]
    fn rsc_probe_single_direction_on_full_support() {
        let l = link();
        let theta = random_sparse_theta(2, 2, 3, 0.3, 1.0, 8).unwrap();
        let path = simulate(&theta, &l, 200, 20, 9).unwrap();
        // s = N²p leaves no off-support entries
        let dirs = cone_directions(&theta, 8, 1, 10).unwrap();
        let expected =
            quad_form(&dirs[0], &path, &l).unwrap() / dirs[0].norm(NormKind::Frobenius).powi(2);
        let probe = rsc_probe(&theta, &l, &path, 8, 1, 10).unwrap();
        assert_relative_eq!(probe, expected, epsilon = 1e-12);
        assert!(probe >= 0.0);
    }

    #[test]
    fn cone_directions_respect_the_cone() {
        let theta = random_sparse_theta(3, 2, 4, 0.3, 1.0, 11).unwrap();
        let dirs = cone_directions(&theta, 2, 50, 12).unwrap();
        let rep = sparse_approx(&theta, 2).unwrap();
        for d in dirs {
            let on: f64 = rep
                .support
                .iter()
                .map(|&(i, j, l)| d.get(i, j, l).abs())
                .sum();
            let off = d.norm(NormKind::L111) - on;
            assert!(off <= 3.0 * on + 4.0 * rep.sigma_s + 1e-9);
        }
    }

    #[test]
    fn concentration_trial_rejects_non_mixing_truth() {
        let theta = ParamTensor::from_vec(1, 1, 1, vec![10.0]).unwrap();
        let delta = ParamTensor::from_vec(1, 1, 1, vec![1.0]).unwrap();
        assert!(concentration_trial(&theta, &link(), &delta, 100, 0.1, 10, 0).is_err());
    }
}
