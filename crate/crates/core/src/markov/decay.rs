//! Lag-decay families for the interaction tensor and how the mixing norm
//! and concentration constant scale with the number of lags.

use serde::Serialize;

use crate::error::{invalid, MbpError, Result};
use crate::link::LinkSpec;
use crate::tensor::{concentration_constant_from, mixing_inner_norm, mixing_norm, ParamTensor};

/// Magnitude profile `|Θ_{ijℓ}|` as a function of the one-based lag `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFamily {
    Constant { c: f64 },
    Polynomial { c: f64, alpha: f64 },
    Exponential { c: f64, beta: f64 },
}

impl DecayFamily {
    pub fn magnitude(&self, lag: usize) -> f64 {
        let l = lag as f64;
        match *self {
            DecayFamily::Constant { c } => c,
            DecayFamily::Polynomial { c, alpha } => c * l.powf(-alpha),
            DecayFamily::Exponential { c, beta } => c * (-beta * l).exp(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DecayFamily::Constant { .. } => "constant",
            DecayFamily::Polynomial { .. } => "polynomial",
            DecayFamily::Exponential { .. } => "exponential",
        }
    }

    /// Parses `constant`, `polynomial` or `exponential` with the matching
    /// shape parameter (`alpha` or `beta`; ignored for the constant family).
    pub fn from_parts(name: &str, c: f64, shape: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return invalid(format!("decay scale must be non-negative, got {c}"));
        }
        match name {
            "constant" => Ok(DecayFamily::Constant { c }),
            "polynomial" => Ok(DecayFamily::Polynomial { c, alpha: shape }),
            "exponential" => Ok(DecayFamily::Exponential { c, beta: shape }),
            other => Err(MbpError::InvalidArgument(format!(
                "unknown decay family `{other}`"
            ))),
        }
    }

    /// Tensor with every fiber equal to the decay profile.
    pub fn tensor(&self, n_dims: usize, n_lags: usize) -> Result<ParamTensor> {
        ParamTensor::from_fn(n_dims, n_dims, n_lags, |_, _, l| self.magnitude(l + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub p: usize,
    pub inner_norm: f64,
    pub g_f: f64,
    /// Absent when the mixing norm is at least one.
    #[serde(rename = "G_f")]
    pub big_g_f: Option<f64>,
    pub diverged: bool,
}

pub fn decay_scaling_report(
    family: DecayFamily,
    n_dims: usize,
    p_values: &[usize],
    link: &LinkSpec,
) -> Result<Vec<DecayRow>> {
    if n_dims == 0 {
        return invalid("N must be positive");
    }
    if p_values.contains(&0) {
        return invalid("lag counts must be positive");
    }
    if p_values.windows(2).any(|w| w[0] > w[1]) {
        return invalid("lag counts must be sorted ascending");
    }
    p_values
        .iter()
        .map(|&p| {
            let theta = family.tensor(n_dims, p)?;
            let g_f = mixing_norm(&theta, link);
            let big = concentration_constant_from(g_f, link.curvature(), p);
            Ok(DecayRow {
                p,
                inner_norm: mixing_inner_norm(&theta),
                g_f,
                big_g_f: big.value(),
                diverged: big.is_diverged(),
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("need at least two paired points");
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return invalid("log-log fit needs positive values");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("x values must not all coincide");
    }
    Ok(sxy / sxx)
}
