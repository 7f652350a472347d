//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

pub fn phi_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper tail `1 - Phi(x)`: Taylor series around 0 for moderate `x`,
/// Mills-ratio continued fraction (modified Lentz) in the tails.
pub fn upper_tail(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - upper_tail(-x);
    }
    if x < 3.0 {
        // Phi(x) - 1/2 = phi(x) sum_k x^(2k+1) / (2k+1)!!
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        while term.abs() > 1e-18 * sum.abs() {
            k += 1.0;
            term *= x * x / (2.0 * k + 1.0);
            sum += term;
        }
        return 0.5 - phi_density(x) * sum;
    }
    // R(x) = 1 / (x + 1 / (x + 2 / (x + 3 / (x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    phi_density(x) / f
}

pub fn cdf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 - upper_tail(x)
    } else {
        upper_tail(-x)
    }
}

/// Solves `g(x) = target` for increasing `g` by bisection on `[lo, hi]`.
pub fn bisect(mut lo: f64, mut hi: f64, target: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `b` with `1 - Phi(b) = 1/n`, by bisection on the log tail.
pub fn norming_oracle(n: f64) -> f64 {
    bisect(0.0, 40.0, n.ln(), |b| -upper_tail(b).ln())
}

pub fn gumbel(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..panels {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
