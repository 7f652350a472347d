//! Limit distributions of normalized maxima and their second-order terms.
//!
//! With `u_n(x) = b_n + x / b_n` the joint law of the normalized maxima
//! converges to one of three limits depending on the size of `m`:
//! `Lambda(min(x, y))` when `m -> 0`, `Lambda(x) Lambda(y)` when `m -> inf`,
//! and the mixed law [`limit_cdf_h`] for a fixed continuous positive `m`.

use crate::error::{Error, Result};
use crate::normal::{self, norming_constant};
use crate::profile::CorrelationProfile;
use crate::quad::Adaptive;
use libm::{exp, log, sqrt};

/// Gumbel law `Lambda(x) = exp(-e^{-x})`.
#[inline]
pub fn gumbel_cdf(x: f64) -> f64 {
    exp(-exp(-x))
}

/// Hüsler-Reiss max-stable distribution `H_lambda(x, y)`.
///
/// `lambda = 0` gives the comonotone limit `Lambda(min(x, y))` and
/// `lambda = +inf` the independent limit `Lambda(x) Lambda(y)`.
pub fn hr_cdf(lambda: f64, x: f64, y: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::domain(alloc::format!("lambda must lie in [0, inf], got {lambda}")));
    }
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::domain("x and y must be finite"));
    }
    if lambda == 0.0 {
        return Ok(gumbel_cdf(x.min(y)));
    }
    if lambda == f64::INFINITY {
        return Ok(gumbel_cdf(x) * gumbel_cdf(y));
    }
    let d = (x - y) / (2.0 * lambda);
    Ok(exp(-normal::cdf(lambda + d) * exp(-y) - normal::cdf(lambda - d) * exp(-x)))
}

/// The two integrals `(int Phi(sqrt m + (x-y)/(2 sqrt m)), int Phi(sqrt m + (y-x)/(2 sqrt m)))`.
pub fn mixed_integrals(profile: &CorrelationProfile, x: f64, y: f64, quad: &Adaptive) -> Result<(f64, f64)> {
    profile.validate()?;
    let breaks = profile.breakpoints();
    let d = x - y;
    let first = quad
        .integrate_pieces(
            |t| {
                let r = sqrt(profile.eval(t));
                normal::cdf(r + d / (2.0 * r))
            },
            &breaks,
        )?
        .value;
    let second = quad
        .integrate_pieces(
            |t| {
                let r = sqrt(profile.eval(t));
                normal::cdf(r - d / (2.0 * r))
            },
            &breaks,
        )?
        .value;
    Ok((first, second))
}

fn limit_quadrature() -> Adaptive {
    Adaptive::new(15, 1e-12)
}

/// Mixed limit `H(x, y)` for a continuous positive profile.
pub fn limit_cdf_h(profile: &CorrelationProfile, x: f64, y: f64) -> Result<f64> {
    limit_cdf_h_with(profile, x, y, &limit_quadrature())
}

/// [`limit_cdf_h`] with an explicit quadrature rule.
pub fn limit_cdf_h_with(profile: &CorrelationProfile, x: f64, y: f64, quad: &Adaptive) -> Result<f64> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::domain("x and y must be finite"));
    }
    let (first, second) = mixed_integrals(profile, x, y, quad)?;
    Ok(exp(-exp(-y) * first - exp(-x) * second))
}

/// The hypothesis under which a correction term holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Regime {
    /// Monotone continuous `m`, rate `log log n / log n`.
    Mixed,
    /// `(log n)^4 max m(i/n) -> 0`, rate `1 / log n`.
    Dependent,
    /// `log log n / min m(i/n) -> 0`, rate `1 / log n`.
    Independent,
    /// Univariate maximum, rate `b_n^{-2}`.
    Univariate,
}

/// Leading finite-`n` error term: `value = rate_factor * coefficient`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrectionTerm {
    pub regime: Regime,
    pub value: f64,
    pub rate_factor: f64,
}

impl CorrectionTerm {
    /// The `n`-free limit constant.
    pub fn coefficient(&self) -> f64 {
        self.value / self.rate_factor
    }
}

fn check_n(n: u64, min: u64, why: &str) -> Result<()> {
    if n < min {
        Err(Error::domain(alloc::format!("n must be at least {min} ({why}), got {n}")))
    } else {
        Ok(())
    }
}

/// Rate factor of a regime at row length `n`.
pub fn rate_factor(regime: Regime, n: u64) -> Result<f64> {
    let log_n = log(n as f64);
    match regime {
        Regime::Mixed => {
            check_n(n, 16, "log log n must be positive")?;
            Ok(log(log_n) / log_n)
        }
        Regime::Dependent | Regime::Independent => {
            check_n(n, 3, "u_n needs b_n > 0")?;
            Ok(1.0 / log_n)
        }
        Regime::Univariate => {
            let b = norming_constant(n)?.b;
            Ok(1.0 / (b * b))
        }
    }
}

/// Second-order term for a monotone continuous profile:
/// `(log log n / log n) (1/2) int sqrt(m) phi(sqrt m + (y-x)/(2 sqrt m)) dt e^{-x} H(x, y)`.
pub fn correction_mixed(profile: &CorrelationProfile, x: f64, y: f64, n: u64) -> Result<CorrectionTerm> {
    profile.validate()?;
    if !profile.is_monotone() {
        return Err(Error::RegimeMismatch {
            reason: "the log log n / log n expansion requires a monotone profile".into(),
        });
    }
    let rate = rate_factor(Regime::Mixed, n)?;
    let quad = limit_quadrature();
    let d = y - x;
    let weight = quad
        .integrate_pieces(
            |t| {
                let r = sqrt(profile.eval(t));
                r * normal::pdf(r + d / (2.0 * r))
            },
            &profile.breakpoints(),
        )?
        .value;
    let h = limit_cdf_h_with(profile, x, y, &quad)?;
    Ok(CorrectionTerm { regime: Regime::Mixed, value: rate * 0.5 * weight * exp(-x) * h, rate_factor: rate })
}

/// `(x^2 + 2x) e^{-x}`, the polynomial-exponential factor shared by the
/// univariate-type corrections.
#[inline]
fn tail_factor(x: f64) -> f64 {
    (x * x + 2.0 * x) * exp(-x)
}

/// Second-order term towards `Lambda(min(x, y))`:
/// `(1 / log n) (1/4) (z^2 + 2z) e^{-z} Lambda(z)` with `z = min(x, y)`.
pub fn correction_dependent(x: f64, y: f64, n: u64) -> Result<CorrectionTerm> {
    let rate = rate_factor(Regime::Dependent, n)?;
    let z = x.min(y);
    Ok(CorrectionTerm { regime: Regime::Dependent, value: rate * 0.25 * tail_factor(z) * gumbel_cdf(z), rate_factor: rate })
}

/// Second-order term towards `Lambda(x) Lambda(y)`.
pub fn correction_independent(x: f64, y: f64, n: u64) -> Result<CorrectionTerm> {
    let rate = rate_factor(Regime::Independent, n)?;
    let value = rate * 0.25 * (tail_factor(x) + tail_factor(y)) * gumbel_cdf(x) * gumbel_cdf(y);
    Ok(CorrectionTerm { regime: Regime::Independent, value, rate_factor: rate })
}

/// Univariate term `(x^2 + 2x)/2 e^{-x} / b_n^2`.
pub fn correction_univariate(x: f64, n: u64) -> Result<CorrectionTerm> {
    let rate = rate_factor(Regime::Univariate, n)?;
    Ok(CorrectionTerm { regime: Regime::Univariate, value: rate * 0.5 * tail_factor(x), rate_factor: rate })
}

/// Exact `b_n^2 (e^{-x} - n (1 - Phi(u_n(x))))`; tends to `(x^2 + 2x)/2 e^{-x}`.
pub fn univariate_scaled_error(x: f64, n: u64) -> Result<f64> {
    let c = norming_constant(n)?;
    let tail = n as f64 * normal::sf(c.threshold(x));
    Ok(c.b * c.b * (exp(-x) - tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gumbel_values() {
        assert!((gumbel_cdf(0.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!(gumbel_cdf(20.0) > 1.0 - 1e-8);
        assert!((gumbel_cdf(-log(log(2.0))) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hr_branches() {
        assert!((hr_cdf(f64::INFINITY, 0.0, 0.0).unwrap() - exp(-2.0)).abs() < 1e-15);
        assert!((hr_cdf(0.0, 1.0, 0.0).unwrap() - gumbel_cdf(0.0)).abs() < 1e-15);
        assert!(hr_cdf(-0.1, 0.0, 0.0).is_err());
        assert!(hr_cdf(f64::NAN, 0.0, 0.0).is_err());
        let a = hr_cdf(0.7, 0.3, -1.2).unwrap();
        let b = hr_cdf(0.7, -1.2, 0.3).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn dependent_and_independent_zeros() {
        assert_eq!(correction_dependent(0.0, 3.0, 100).unwrap().value, 0.0);
        assert!(correction_dependent(5.0, -2.0, 100).unwrap().value.abs() < 1e-15);
        assert_eq!(correction_independent(0.0, 0.0, 100).unwrap().value, 0.0);
        assert!(correction_independent(0.0, -2.0, 100).unwrap().value.abs() < 1e-15);
        assert!(correction_univariate(0.0, 100).unwrap().value.abs() < 1e-15);
        assert!(correction_univariate(-2.0, 100).unwrap().value.abs() < 1e-15);
    }

    #[test]
    fn mixed_requires_n_16_and_monotone() {
        let p = CorrelationProfile::linear(1.0, 1.0).unwrap();
        assert!(correction_mixed(&p, 0.0, 0.0, 15).is_err());
        assert!(correction_mixed(&p, 0.0, 0.0, 16).is_ok());
        let bump = CorrelationProfile::tabulated(alloc::vec![(0.0, 1.0), (0.5, 2.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(correction_mixed(&bump, 0.0, 0.0, 100), Err(Error::RegimeMismatch { .. })));
    }

    #[test]
    fn rate_factors_in_unit_interval() {
        for &n in &[16_u64, 100, 10_000, 1 << 30] {
            for r in [Regime::Mixed, Regime::Dependent, Regime::Independent, Regime::Univariate] {
                let f = rate_factor(r, n).unwrap();
                assert!(f > 0.0 && f < 1.0, "{r:?} at n = {n}: {f}");
            }
        }
    }
}
