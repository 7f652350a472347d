//! Correlation profiles `m(t)` on `[0, 1]`.

use crate::error::{Error, Result};
use alloc::format;
use alloc::vec::Vec;
use libm::pow;

/// Which parametric family (if any) a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProfileKind {
    Constant,
    Linear,
    Power,
    Tabulated,
}

/// A positive function `m` on `[0, 1]` driving `rho_ni = 1 - m(i/n) / log n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CorrelationProfile {
    /// `m(t) = alpha`.
    Constant { alpha: f64 },
    /// `m(t) = alpha + beta t`.
    Linear { alpha: f64, beta: f64 },
    /// `m(t) = alpha + beta t^gamma`.
    Power { alpha: f64, beta: f64, gamma: f64 },
    /// Piecewise-linear interpolation of `(t, m(t))` knots.
    Tabulated { knots: Vec<(f64, f64)> },
}

fn invalid(reason: alloc::string::String) -> Error {
    Error::InvalidProfile { reason }
}

impl CorrelationProfile {
    pub fn constant(alpha: f64) -> Result<Self> {
        let p = CorrelationProfile::Constant { alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn linear(alpha: f64, beta: f64) -> Result<Self> {
        let p = CorrelationProfile::Linear { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn power(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = CorrelationProfile::Power { alpha, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        let p = CorrelationProfile::Tabulated { knots };
        p.validate()?;
        Ok(p)
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            CorrelationProfile::Constant { .. } => ProfileKind::Constant,
            CorrelationProfile::Linear { .. } => ProfileKind::Linear,
            CorrelationProfile::Power { .. } => ProfileKind::Power,
            CorrelationProfile::Tabulated { .. } => ProfileKind::Tabulated,
        }
    }

    /// Checks positivity on `[0, 1]` and knot ordering.
    ///
    /// The parametric families are monotone in `t`, so positivity at both
    /// endpoints is sufficient.
    pub fn validate(&self) -> Result<()> {
        match *self {
            CorrelationProfile::Constant { alpha } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(invalid(format!("m(t) = alpha requires alpha > 0, got alpha = {alpha}")));
                }
            }
            CorrelationProfile::Linear { alpha, beta } => {
                self.check_parametric(alpha, beta, 1.0)?;
            }
            CorrelationProfile::Power { alpha, beta, gamma } => {
                self.check_parametric(alpha, beta, gamma)?;
            }
            CorrelationProfile::Tabulated { ref knots } => {
                if knots.len() < 2 {
                    return Err(invalid(format!("a table needs at least two knots, got {}", knots.len())));
                }
                if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
                    return Err(invalid("table knots must start at t = 0 and end at t = 1".into()));
                }
                for (k, w) in knots.windows(2).enumerate() {
                    if !(w[1].0 > w[0].0) {
                        return Err(invalid(format!(
                            "table knots must be strictly increasing in t (knot {} at t = {} follows t = {})",
                            k + 1,
                            w[1].0,
                            w[0].0
                        )));
                    }
                }
                for (k, &(t, m)) in knots.iter().enumerate() {
                    if !(t.is_finite() && m.is_finite() && m > 0.0) {
                        return Err(invalid(format!("m must be positive at every knot; knot {k} has m({t}) = {m}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_parametric(&self, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(invalid("parameters must be finite".into()));
        }
        if !(alpha > 0.0) {
            return Err(invalid(format!("positivity requires alpha > 0, got alpha = {alpha}")));
        }
        if !(gamma > 0.0) {
            return Err(invalid(format!("the exponent gamma must be positive, got {gamma}")));
        }
        if !(alpha + beta > 0.0) {
            return Err(invalid(format!(
                "positivity requires m(1) = alpha + beta > 0, got {}",
                alpha + beta
            )));
        }
        Ok(())
    }

    /// `m(t)`; `t` is clamped to `[0, 1]`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match *self {
            CorrelationProfile::Constant { alpha } => alpha,
            CorrelationProfile::Linear { alpha, beta } => alpha + beta * t,
            CorrelationProfile::Power { alpha, beta, gamma } => alpha + beta * pow(t, gamma),
            CorrelationProfile::Tabulated { ref knots } => interpolate(knots, t),
        }
    }

    /// Monotone (nonincreasing or nondecreasing) on `[0, 1]`.
    pub fn is_monotone(&self) -> bool {
        match self {
            CorrelationProfile::Tabulated { knots } => {
                let up = knots.windows(2).all(|w| w[1].1 >= w[0].1);
                let down = knots.windows(2).all(|w| w[1].1 <= w[0].1);
                up || down
            }
            _ => true,
        }
    }

    /// Points where `m` may fail to be smooth, including both endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CorrelationProfile::Tabulated { knots } => knots.iter().map(|k| k.0).collect(),
            _ => alloc::vec![0.0, 1.0],
        }
    }

    /// `(alpha, beta, gamma)` of the parametric families.
    pub fn parameters(&self) -> Option<(f64, f64, f64)> {
        match *self {
            CorrelationProfile::Constant { alpha } => Some((alpha, 0.0, 1.0)),
            CorrelationProfile::Linear { alpha, beta } => Some((alpha, beta, 1.0)),
            CorrelationProfile::Power { alpha, beta, gamma } => Some((alpha, beta, gamma)),
            CorrelationProfile::Tabulated { .. } => None,
        }
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    // first knot with t_k >= t
    let k = knots.partition_point(|&(tk, _)| tk < t);
    if k == 0 {
        return knots[0].1;
    }
    if k >= knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (t0, m0) = knots[k - 1];
    let (t1, m1) = knots[k];
    m0 + (m1 - m0) * (t - t0) / (t1 - t0)
}
