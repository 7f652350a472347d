//! Standard Gaussian primitives and the norming constant `b_n`.

use crate::error::{Error, Result};
use core::f64::consts::{PI, SQRT_2};
use libm::{erfc, exp, log, sqrt};
use crate::ziggurat::standard_normal;
use rand_core::RngCore;

/// `1 / sqrt(2 pi)`.
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn finite(x: f64, name: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(alloc::format!("{name} must be finite, got {x}")))
    }
}

/// `Phi(x)`, evaluated through `erfc` so both tails keep full relative accuracy.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    finite(x, "x")?;
    Ok(cdf(x))
}

/// `1 - Phi(x)` without cancellation.
pub fn std_normal_sf(x: f64) -> Result<f64> {
    finite(x, "x")?;
    Ok(sf(x))
}

pub fn std_normal_pdf(x: f64) -> Result<f64> {
    finite(x, "x")?;
    Ok(pdf(x))
}

#[inline]
pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

#[inline]
pub(crate) fn sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

#[inline]
pub(crate) fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * x * x)
}

/// Inverse of `Phi` on `(0, 1)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(alloc::format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    Ok(if p < 0.5 {
        -upper_quantile(p)
    } else {
        // 1 - p is exact for p >= 0.5
        upper_quantile(1.0 - p)
    })
}

/// Inverse of the upper tail: returns `x` with `1 - Phi(x) = q`.
pub fn std_normal_upper_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(alloc::format!(
            "tail probability must lie in (0, 1), got {q}"
        )));
    }
    Ok(upper_quantile(q))
}

fn upper_quantile(q: f64) -> f64 {
    let mut x = if q > 0.5 {
        -acklam(1.0 - q)
    } else {
        -acklam(q)
    };
    // Halley refinement against the tail function
    for _ in 0..3 {
        let density = pdf(x);
        if density == 0.0 {
            break;
        }
        let u = -(sf(x) - q) / density;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Acklam's rational approximation to the lower quantile, p in (0, 0.5].
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if p < 0.02425 {
        let q = sqrt(-2.0 * log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// The `1 - 1/n` quantile of the standard normal together with `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormingConstant {
    pub n: u64,
    pub b: f64,
}

impl NormingConstant {
    /// Normalized threshold `u_n(x) = b_n + x / b_n`.
    #[inline]
    pub fn threshold(&self, x: f64) -> f64 {
        self.b + x / self.b
    }

    pub fn log_n(&self) -> f64 {
        log(self.n as f64)
    }
}

fn check_n(n: u64) -> Result<()> {
    if n < 3 {
        Err(Error::domain(alloc::format!(
            "row length n must be at least 3, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Solves `1 - Phi(b) = 1/n` by bracketed Newton, started from the
/// two-term asymptotic expansion.
pub fn norming_constant(n: u64) -> Result<NormingConstant> {
    check_n(n)?;
    let log_target = -log(n as f64);
    // h(b) = log(1 - Phi(b)) + log n is strictly decreasing
    let h = |b: f64| log(sf(b)) - log_target;
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    let mut b = expansion(n).clamp(lo + 1e-3, hi - 1e-3);
    for _ in 0..200 {
        let value = h(b);
        if value > 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        // h'(b) = -phi(b) / (1 - Phi(b))
        let slope = -pdf(b) / sf(b);
        let mut next = b - value / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - b).abs() <= 1e-15 * b;
        b = next;
        if done || hi - lo <= 1e-15 * b {
            break;
        }
    }
    Ok(NormingConstant { n, b })
}

fn expansion(n: u64) -> f64 {
    let log_n = log(n as f64);
    let root = sqrt(2.0 * log_n);
    root - (log(log_n) + log(4.0 * PI)) / (2.0 * root)
}

/// `(2 log n)^{1/2} - (log log n + log 4 pi) / (2 (2 log n)^{1/2})`.
pub fn norming_constant_expansion(n: u64) -> Result<f64> {
    check_n(n)?;
    Ok(expansion(n))
}

/// Castro remainder scaled by `b_n^4`:
/// `(n phi(b_n) / b_n (1 - b_n^{-2}) - 1) b_n^4`, bounded in `n`.
pub fn castro_scaled_remainder(norming: &NormingConstant) -> f64 {
    let b = norming.b;
    let ratio = norming.n as f64 * pdf(b) / b * (1.0 - 1.0 / (b * b));
    (ratio - 1.0) * b * b * b * b
}

/// One draw of `(X, rho X + sqrt(1 - rho^2) Z)` with `X, Z` independent N(0, 1).
pub fn sample_bivariate_gauss<R: RngCore + ?Sized>(rho: f64, stream: &mut R) -> Result<(f64, f64)> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(alloc::format!(
            "correlation must satisfy |rho| < 1, got {rho}"
        )));
    }
    let scale = sqrt((1.0 - rho) * (1.0 + rho));
    Ok(mix_pair(rho, scale, stream))
}

#[inline(always)]
pub(crate) fn mix_pair<R: RngCore + ?Sized>(rho: f64, scale: f64, stream: &mut R) -> (f64, f64) {
    let x = standard_normal(stream);
    let z = standard_normal(stream);
    (x, rho * x + scale * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn cdf_symmetry_and_center() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        for &x in &[0.1, 0.7, 1.3, 2.9, 5.5, 8.0] {
            let s = std_normal_cdf(x).unwrap() + std_normal_cdf(-x).unwrap();
            assert!((s - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_pdf(f64::INFINITY).is_err());
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn pdf_values() {
        assert!((std_normal_pdf(0.0).unwrap() - 0.398_942_28).abs() < 1e-8);
        let e = libm::exp(-0.5) / libm::sqrt(2.0 * PI);
        assert!((std_normal_pdf(1.0).unwrap() - e).abs() < 1e-15);
        assert_eq!(std_normal_pdf(3.0).unwrap(), std_normal_pdf(-3.0).unwrap());
    }

    #[test]
    fn quantile_center_and_grid_roundtrip() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            let x = std_normal_quantile(p).unwrap();
            assert!((cdf(x) - p).abs() <= 1e-12, "p = {p}");
        }
    }

    #[test]
    fn upper_quantile_keeps_tail_accuracy() {
        for &q in &[1e-3, 1e-6, 1e-10, 1e-20, 1e-100] {
            let x = std_normal_upper_quantile(q).unwrap();
            assert!((sf(x) / q - 1.0).abs() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn norming_constant_domain() {
        assert!(norming_constant(2).is_err());
        assert!(norming_constant_expansion(0).is_err());
        assert!(norming_constant(3).unwrap().b > 0.0);
    }

    #[test]
    fn norming_constant_solves_tail_equation() {
        let mut previous = 0.0;
        for &n in &[3_u64, 4, 10, 100, 1000, 12_345, 1_000_000, 100_000_000, 1 << 40] {
            let c = norming_constant(n).unwrap();
            let rel = (sf(c.b) * n as f64 - 1.0).abs();
            assert!(rel <= 1e-12, "n = {n}: relative residual {rel}");
            assert!(c.b > previous);
            previous = c.b;
        }
    }

    #[test]
    fn sampler_rejects_boundary_correlation() {
        let mut rng = CounterRng::new(0, &[]);
        assert!(sample_bivariate_gauss(1.0, &mut rng).is_err());
        assert!(sample_bivariate_gauss(-1.0, &mut rng).is_err());
        assert!(sample_bivariate_gauss(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn sampler_is_deterministic_per_stream() {
        let a = sample_bivariate_gauss(0.3, &mut CounterRng::new(5, &[1])).unwrap();
        let b = sample_bivariate_gauss(0.3, &mut CounterRng::new(5, &[1])).unwrap();
        assert_eq!(a, b);
    }
}
