//! Inverse link functions clamped to `[ε, 1 − ε]`.

use crate::error::{invalid, MbpError, Result};

/// Default clamp level when a config does not specify one.
pub const DEFAULT_EPS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// `u ↦ 1 / (1 + exp(−α u))`.
    Sigmoid,
}

impl std::str::FromStr for LinkKind {
    type Err = MbpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(LinkKind::Sigmoid),
            other => invalid(format!("unsupported link kind `{other}`")),
        }
    }
}

/// An inverse link with its clamp level and analytic constants.
///
/// Another family would need to provide its own Lipschitz constant `L_f`
/// and a lower bound `c_f` on the curvature of `−log f` and `−log(1 − f)`
/// over the clamp region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    kind: LinkKind,
    alpha: f64,
    eps: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        LinkSpec {
            kind: LinkKind::Sigmoid,
            alpha: 1.0,
            eps: DEFAULT_EPS,
        }
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LinkSpec {
    pub fn sigmoid(alpha: f64, eps: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("sigmoid gain must be positive, got {alpha}"));
        }
        if !(eps > 0.0 && eps < 0.5) {
            return invalid(format!("clamp level must lie in (0, 1/2), got {eps}"));
        }
        Ok(LinkSpec {
            kind: LinkKind::Sigmoid,
            alpha,
            eps,
        })
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Lipschitz constant `L_f = α/4`.
    pub fn lipschitz(&self) -> f64 {
        self.alpha / 4.0
    }

    /// Curvature lower bound `c_f = α² ε (1 − ε)`.
    pub fn curvature(&self) -> f64 {
        self.alpha * self.alpha * self.eps * (1.0 - self.eps)
    }

    /// Unclamped sigmoid value.
    #[inline]
    pub fn eval_raw(&self, u: f64) -> f64 {
        logistic(self.alpha * u)
    }

    /// Clamped probability in `[ε, 1 − ε]`.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.eval_raw(u).clamp(self.eps, 1.0 - self.eps)
    }

    /// Derivative of the smooth (unclamped) sigmoid.
    #[inline]
    pub fn eval_deriv(&self, u: f64) -> f64 {
        let f = self.eval_raw(u);
        self.alpha * f * (1.0 - f)
    }

    /// True when the clamp is active at `u`.
    #[inline]
    pub fn saturates(&self, u: f64) -> bool {
        let f = self.eval_raw(u);
        f < self.eps || f > 1.0 - self.eps
    }

    /// Clamped value together with its derivative (zero where the clamp is
    /// active).
    #[inline]
    pub(crate) fn eval_with_deriv(&self, u: f64) -> (f64, f64) {
        let f = self.eval_raw(u);
        if f < self.eps {
            (self.eps, 0.0)
        } else if f > 1.0 - self.eps {
            (1.0 - self.eps, 0.0)
        } else {
            (f, self.alpha * f * (1.0 - f))
        }
    }

    /// Largest `|u|` for which the clamp stays inactive: `log((1−ε)/ε)/α`.
    pub fn linear_range(&self) -> f64 {
        ((1.0 - self.eps) / self.eps).ln() / self.alpha
    }
}
