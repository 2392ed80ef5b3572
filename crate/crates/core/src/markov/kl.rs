//! Bernoulli divergences and the chain-rule decomposition of the divergence
//! between two `p`-block conditional laws.

use crate::error::{invalid, MbpError, Result};
use crate::link::LinkSpec;
use crate::markov::kernel::{block_predictors, check_square, state_prob};
use crate::tensor::ParamTensor;

/// Largest `N·p` for the decomposition check.
pub const MAX_KL_BITS: usize = 10;

fn xlogy_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

/// `KL(Ber(p) ‖ Ber(q))` for `p ∈ [0, 1]` and `q ∈ (0, 1)`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p must lie in [0, 1], got {p}"));
    }
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("q must lie in (0, 1), got {q}"));
    }
    Ok((xlogy_ratio(p, q) + xlogy_ratio(1.0 - p, 1.0 - q)).max(0.0))
}

/// Quadratic upper bound `3 (p − q)² / (4 ε (1 − ε))`, valid when both
/// arguments lie in `[ε, 1 − ε]`.
pub fn kl_bernoulli_bound(p: f64, q: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return invalid(format!("eps must lie in (0, 1/2), got {eps}"));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(v >= eps - 1e-12 && v <= 1.0 - eps + 1e-12) {
            return invalid(format!("{name} = {v} lies outside [{eps}, {}]", 1.0 - eps));
        }
    }
    Ok(3.0 * (p - q).powi(2) / (4.0 * eps * (1.0 - eps)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlDecompCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub agree: bool,
}

/// Divergence between the laws of the next `p` states started from blocks
/// `z` and `y` (encoded as in the kernel module). `lhs` enumerates the joint
/// laws; `rhs` sums the expected per-step coordinate divergences along the
/// trajectory tree.
pub fn kl_decomp_check(
    theta: &ParamTensor,
    link: &LinkSpec,
    z: usize,
    y: usize,
) -> Result<KlDecompCheck> {
    check_square(theta)?;
    let (nd, _, p) = theta.shape();
    if nd * p > MAX_KL_BITS {
        return Err(MbpError::ResourceLimit(format!(
            "decomposition check needs N·p ≤ {MAX_KL_BITS}, got {}",
            nd * p
        )));
    }
    let n_states = 1usize << (nd * p);
    if z >= n_states || y >= n_states {
        return invalid(format!("block codes must be below {n_states}"));
    }

    // joint laws of the next p states from each start
    let joint = |start: usize| {
        let mut law = vec![0.0; n_states];
        enumerate(theta, link, start, 1.0, 0, 0, &mut law);
        law
    };
    let pz = joint(z);
    let py = joint(y);
    let mut lhs = 0.0;
    for (a, b) in pz.iter().zip(&py) {
        lhs += xlogy_ratio(*a, *b);
    }

    let rhs = tree_sum(theta, link, z, y, 1.0, 0)?;
    Ok(KlDecompCheck {
        lhs,
        rhs,
        agree: (lhs - rhs).abs() <= 1e-10,
    })
}

fn shift(block: usize, s: usize, nd: usize, mask: usize) -> usize {
    ((block << nd) | s) & mask
}

fn enumerate(
    theta: &ParamTensor,
    link: &LinkSpec,
    block: usize,
    w: f64,
    depth: usize,
    code: usize,
    law: &mut [f64],
) {
    let (nd, _, p) = theta.shape();
    if depth == p {
        law[code] += w;
        return;
    }
    let mask = (1usize << (nd * p)) - 1;
    let mut u = vec![0.0; nd];
    block_predictors(theta, block, &mut u);
    for s in 0..1usize << nd {
        let v = state_prob(link, &u, s);
        enumerate(
            theta,
            link,
            shift(block, s, nd, mask),
            w * v,
            depth + 1,
            (code << nd) | s,
            law,
        );
    }
}

fn tree_sum(
    theta: &ParamTensor,
    link: &LinkSpec,
    bz: usize,
    by: usize,
    w: f64,
    depth: usize,
) -> Result<f64> {
    let (nd, _, p) = theta.shape();
    if depth == p {
        return Ok(0.0);
    }
    let mask = (1usize << (nd * p)) - 1;
    let mut uz = vec![0.0; nd];
    let mut uy = vec![0.0; nd];
    block_predictors(theta, bz, &mut uz);
    block_predictors(theta, by, &mut uy);
    let mut step = 0.0;
    for i in 0..nd {
        step += kl_bernoulli(link.eval(uz[i]), link.eval(uy[i]))?;
    }
    let mut total = w * step;
    for s in 0..1usize << nd {
        let v = state_prob(link, &uz, s);
        total += tree_sum(
            theta,
            link,
            shift(bz, s, nd, mask),
            shift(by, s, nd, mask),
            w * v,
            depth + 1,
        )?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bernoulli_examples() {
        assert_eq!(kl_bernoulli(0.4, 0.4).unwrap(), 0.0);
        assert_eq!(kl_bernoulli_bound(0.4, 0.4, 0.05).unwrap(), 0.0);
        let kl = kl_bernoulli(0.3, 0.7).unwrap();
        assert_relative_eq!(kl, -(0.4 * (3f64 / 7.0).ln()), epsilon = 1e-15);
        assert!((kl - 0.3389).abs() < 1e-4);
        let b = kl_bernoulli_bound(0.3, 0.7, 0.3).unwrap();
        assert_relative_eq!(b, 3.0 * 0.16 / 0.84, epsilon = 1e-15);
        assert!(kl <= b);
        assert!(kl_bernoulli_bound(0.2, 0.5, 0.3).is_err());
        assert!(kl_bernoulli(0.5, 1.0).is_err());
    }

    #[test]
    fn bound_on_grid() {
        for a in 1..=19 {
            for b in 1..=19 {
                let (p, q) = (a as f64 * 0.05, b as f64 * 0.05);
                let kl = kl_bernoulli(p, q).unwrap();
                assert!(kl <= kl_bernoulli_bound(p, q, 0.05).unwrap() + 1e-15);
            }
        }
    }

    #[test]
    fn decomposition_trivial_cases() {
        let l = LinkSpec::default();
        let theta = ParamTensor::from_vec(1, 1, 2, vec![0.7, -0.4]).unwrap();
        let c = kl_decomp_check(&theta, &l, 2, 2).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.rhs, 0.0);
        let zero = ParamTensor::square_zeros(1, 2);
        let c = kl_decomp_check(&zero, &l, 0, 3).unwrap();
        assert!(c.lhs.abs() < 1e-15 && c.rhs.abs() < 1e-15);
    }

    #[test]
    fn decomposition_agrees() {
        let l = LinkSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, p) in [(1, 2), (2, 2), (2, 1), (1, 3)] {
            let theta =
                ParamTensor::from_fn(n, n, p, |_, _, _| rng.random_range(-2.0..2.0)).unwrap();
            for z in 0..1 << (n * p) {
                for y in 0..1 << (n * p) {
                    let c = kl_decomp_check(&theta, &l, z, y).unwrap();
                    assert!(c.agree, "{c:?}");
                    assert!(c.lhs >= 0.0);
                }
            }
        }
    }

    #[test]
    fn limits() {
        let l = LinkSpec::default();
        assert!(matches!(
            kl_decomp_check(&ParamTensor::square_zeros(1, 11), &l, 0, 0),
            Err(MbpError::ResourceLimit(_))
        ));
        assert!(kl_decomp_check(&ParamTensor::square_zeros(1, 2), &l, 4, 0).is_err());
    }
}
