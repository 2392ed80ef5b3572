//! Small summary statistics used by the sweep runners.

use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor `m − 1`); zero for a single value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`. Needs two distinct `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        intercept: my - slope * mx,
        slope,
        r_squared,
    })
}

/// Ranks starting at 1, ties share their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation: Pearson correlation of the (tie-averaged)
/// ranks. `None` when either side is constant or lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Whether `means` moves in `direction` along the grid, allowing at most one
/// adjacent pair against the trend, and only by at most the larger of the
/// two points' replicate standard deviations. With `strict`, a tie counts
/// as a pair against the trend.
pub fn monotone_up_to_noise(
    means: &[f64],
    stds: &[f64],
    direction: Direction,
    strict: bool,
) -> bool {
    assert_eq!(means.len(), stds.len());
    let mut violations = 0;
    for k in 0..means.len().saturating_sub(1) {
        let step = match direction {
            Direction::Increasing => means[k + 1] - means[k],
            Direction::Decreasing => means[k] - means[k + 1],
        };
        let against = if strict { step <= 0.0 } else { step < 0.0 };
        if against {
            violations += 1;
            if violations > 1 || -step > stds[k].max(stds[k + 1]) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_relative_eq!(std_dev(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(std_dev(&[4.0]), 0.0);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 2.0 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 0.5, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn spearman_examples() {
        assert_relative_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 100.0]).unwrap(),
            1.0
        );
        assert_relative_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        // textbook value: d² = (0,1,1,0) with n = 4 gives 1 − 6·2/60
        assert_relative_eq!(
            spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&[1.0, 2.0], &[3.0, 3.0]).is_none());
    }

    #[test]
    fn trend_tolerance() {
        let s = [0.1; 4];
        assert!(monotone_up_to_noise(
            &[4.0, 3.0, 2.0, 1.0],
            &s,
            Direction::Decreasing,
            true
        ));
        assert!(monotone_up_to_noise(
            &[4.0, 3.0, 3.05, 1.0],
            &s,
            Direction::Decreasing,
            true
        ));
        assert!(!monotone_up_to_noise(
            &[4.0, 3.0, 3.5, 1.0],
            &s,
            Direction::Decreasing,
            true
        ));
        assert!(!monotone_up_to_noise(
            &[4.0, 4.05, 4.1, 1.0],
            &s,
            Direction::Decreasing,
            true
        ));
        assert!(!monotone_up_to_noise(
            &[1.0, 1.0, 1.0],
            &[0.0; 3],
            Direction::Increasing,
            true
        ));
        assert!(monotone_up_to_noise(
            &[1.0, 1.0, 1.0],
            &[0.0; 3],
            Direction::Increasing,
            false
        ));
    }
}
