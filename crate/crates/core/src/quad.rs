//! Composite adaptive Gauss-Legendre quadrature on finite intervals.
//!
//! Each panel is integrated with an `order`-point Gauss-Legendre rule and
//! compared against the sum over its two halves; panels whose difference
//! exceeds their share of the tolerance are bisected. Nodes are never
//! placed on panel endpoints, so integrable endpoint singularities such as
//! `t^g log t` at `t = 0` are handled by refinement alone.

use crate::error::{Error, Result};
use alloc::vec::Vec;
use core::f64::consts::PI;
use libm::cos;

/// Absolute tolerance used by the limit laws and covariance integrals.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = alloc::vec![0.0; order];
        let mut weights = alloc::vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = cos(PI * (i as f64 + 0.75) / (n + 0.5));
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre(order, x);
                derivative = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(order, x);
            if dp != 0.0 {
                derivative = dp;
            }
            let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Fixed rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(order: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if order == 0 { 1.0 } else { p1 };
    let dp = order as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Adaptive integrator with a panel budget.
#[derive(Debug, Clone)]
pub struct Adaptive {
    rule: GaussLegendre,
    tolerance: f64,
    max_panels: usize,
    min_width: f64,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive::new(15, DEFAULT_TOLERANCE)
    }
}

impl Adaptive {
    pub fn new(order: usize, tolerance: f64) -> Self {
        Adaptive {
            rule: GaussLegendre::new(order),
            tolerance,
            max_panels: 20_000,
            min_width: 1e-300,
        }
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Integrates `f` over `[a, b]` to absolute tolerance.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Integral> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::domain("integration limits must be finite"));
        }
        if a == b {
            return Ok(Integral { value: 0.0, error_estimate: 0.0, panels: 0 });
        }
        let whole = b - a;
        let mut stack: Vec<(f64, f64, f64)> = alloc::vec![(a, b, self.rule.integrate(&mut f, a, b))];
        let mut value = 0.0;
        let mut compensation = 0.0;
        let mut error = 0.0;
        let mut panels = 0;
        while let Some((lo, hi, coarse)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.rule.integrate(&mut f, lo, mid);
            let right = self.rule.integrate(&mut f, mid, hi);
            let fine = left + right;
            let diff = (fine - coarse).abs();
            let share = self.tolerance * ((hi - lo) / whole).abs();
            let exhausted = panels + stack.len() >= self.max_panels || (hi - lo).abs() < self.min_width;
            if diff <= share || exhausted || !diff.is_finite() {
                // Kahan summation keeps many tiny panels from drifting
                let y = fine - compensation;
                let t = value + y;
                compensation = (t - value) - y;
                value = t;
                error += diff;
                panels += 1;
            } else {
                stack.push((mid, hi, right));
                stack.push((lo, mid, left));
            }
        }
        if !value.is_finite() {
            return Err(Error::Quadrature { achieved: f64::INFINITY, requested: self.tolerance });
        }
        if error > self.tolerance * 10.0 {
            return Err(Error::Quadrature { achieved: error, requested: self.tolerance });
        }
        Ok(Integral { value, error_estimate: error, panels })
    }

    /// Integrates across consecutive breakpoints, e.g. kinks of a
    /// piecewise-linear integrand.
    pub fn integrate_pieces<F: FnMut(f64) -> f64>(&self, mut f: F, breaks: &[f64]) -> Result<Integral> {
        let span = breaks.last().copied().unwrap_or(0.0) - breaks.first().copied().unwrap_or(0.0);
        let mut total = Integral { value: 0.0, error_estimate: 0.0, panels: 0 };
        for w in breaks.windows(2) {
            let share = if span > 0.0 { (w[1] - w[0]) / span } else { 1.0 };
            let piece = Adaptive { tolerance: self.tolerance * share, ..self.clone() };
            let part = piece.integrate(&mut f, w[0], w[1])?;
            total.value += part.value;
            total.error_estimate += part.error_estimate;
            total.panels += part.panels;
        }
        Ok(total)
    }
}

/// Integrates over `[0, 1]` with the default rule and tolerance.
pub fn integrate_unit<F: FnMut(f64) -> f64>(f: F) -> Result<f64> {
    Ok(Adaptive::default().integrate(f, 0.0, 1.0)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{exp, log, sqrt};

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(10);
        let w: f64 = rule.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
        // degree 19 is exact for 10 points
        let v = rule.integrate(|x| x.powi(18), -1.0, 1.0);
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn odd_order_has_center_node() {
        let rule = GaussLegendre::new(7);
        assert_eq!(rule.nodes()[3], 0.0);
        assert!((rule.nodes()[0] + rule.nodes()[6]).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_log_endpoint_singularity() {
        // int_0^1 t log t dt = -1/4
        let v = integrate_unit(|t| t * log(t)).unwrap();
        assert!((v + 0.25).abs() < 1e-10);
        // int_0^1 log(t)^2 dt = 2
        let v = integrate_unit(|t| log(t) * log(t)).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_density_integrates_to_one() {
        let a = Adaptive::default();
        let v = a
            .integrate(|x| exp(-0.5 * x * x) / sqrt(2.0 * PI), -12.0, 12.0)
            .unwrap()
            .value;
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pieces_sum_matches_whole() {
        let a = Adaptive::default();
        let kink = |t: f64| (t - 0.3).abs();
        let v = a.integrate_pieces(kink, &[0.0, 0.3, 1.0]).unwrap().value;
        assert!((v - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn degenerate_interval_is_zero() {
        let v = Adaptive::default().integrate(|x| x, 2.0, 2.0).unwrap();
        assert_eq!(v.value, 0.0);
    }
}
