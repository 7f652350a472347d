mod common;

use common::{cdf as oracle_cdf, norming_oracle, upper_tail};
use hrtri_core::normal::*;
use hrtri_core::rng::CounterRng;
use proptest::prelude::*;

#[test]
fn cdf_anchor_values() {
    assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
    assert!((std_normal_cdf(1.959_964_0).unwrap() - 0.975).abs() < 1e-6);
    let lower = std_normal_cdf(-8.0).unwrap();
    assert!((lower - 6.22e-16).abs() < 1e-17, "{lower:e}");
    assert!((lower - upper_tail(8.0)).abs() < 1e-28);
}

#[test]
fn cdf_matches_independent_oracle() {
    for k in -400..=400 {
        let x = k as f64 * 0.02;
        let ours = std_normal_cdf(x).unwrap();
        let reference = oracle_cdf(x);
        assert!((ours - reference).abs() <= 2e-15, "x = {x}: {ours} vs {reference}");
        // relative accuracy in the upper tail
        let sf = std_normal_sf(x).unwrap();
        let rel = (sf - upper_tail(x)).abs() / upper_tail(x);
        assert!(rel < 1e-12, "sf at {x}: relative error {rel:e}");
    }
}

#[test]
fn pdf_anchor_values() {
    assert!((std_normal_pdf(0.0).unwrap() - 0.398_942_28).abs() < 1e-8);
    assert!((std_normal_pdf(1.0).unwrap() - 0.241_970_72).abs() < 1e-8);
    assert_eq!(std_normal_pdf(3.0).unwrap(), std_normal_pdf(-3.0).unwrap());
}

#[test]
fn non_finite_inputs_are_domain_errors() {
    assert!(std_normal_cdf(f64::NAN).is_err());
    assert!(std_normal_sf(f64::INFINITY).is_err());
    assert!(std_normal_quantile(0.0).is_err());
    assert!(std_normal_quantile(1.0).is_err());
    assert!(norming_constant(2).is_err());
}

#[test]
fn quantile_anchor_values() {
    assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
    assert!((std_normal_quantile(0.975).unwrap() - 1.959_964_0).abs() < 1e-7);
    // against bisection on the oracle cdf
    for &p in &[1e-10, 1e-4, 0.01, 0.3, 0.7, 0.99] {
        let reference = common::bisect(-10.0, 10.0, p, oracle_cdf);
        assert!((std_normal_quantile(p).unwrap() - reference).abs() < 1e-9, "p = {p}");
    }
    // far upper tail, where 1 - p carries the information
    for &q in &[1e-9, 1e-30, 1e-200] {
        let reference = common::bisect(0.0, 40.0, -f64::ln(q), |x| -upper_tail(x).ln());
        assert!((std_normal_upper_quantile(q).unwrap() - reference).abs() < 1e-9, "q = {q}");
    }
}

#[test]
fn quantile_inverts_cdf_on_grid() {
    for k in 1..1000 {
        let p = k as f64 / 1000.0;
        let back = std_normal_cdf(std_normal_quantile(p).unwrap()).unwrap();
        assert!((back - p).abs() < 1e-12, "p = {p}");
    }
}

#[test]
fn norming_constant_anchor_values() {
    assert!((norming_constant(100).unwrap().b - 2.326_347_9).abs() < 1e-6);
    assert!((norming_constant(10).unwrap().b - 1.281_551_6).abs() < 1e-6);
    for &n in &[3u64, 50, 1_000, 123_457, 10_000_000, 1u64 << 40] {
        let b = norming_constant(n).unwrap().b;
        assert!((b - norming_oracle(n as f64)).abs() < 1e-10, "n = {n}");
    }
}

#[test]
fn norming_ratio_approaches_one_slowly() {
    // b_n^2 ~ 2 log n, but at n = 10^6 the ratio is still about 0.818
    let ratio = |n: u64| {
        let c = norming_constant(n).unwrap();
        c.b * c.b / (2.0 * c.log_n())
    };
    let r6 = ratio(1_000_000);
    let b = norming_oracle(1e6);
    assert!((r6 - b * b / (2.0 * 1e6_f64.ln())).abs() < 1e-10);
    assert!((r6 - 0.818).abs() < 1e-3, "{r6}");
    let seq: Vec<f64> = [1e3, 1e6, 1e9, 1e12, 1e15, 1e18].iter().map(|&n| ratio(n as u64)).collect();
    assert!(seq.windows(2).all(|w| w[1] > w[0]));
    assert!(seq.iter().all(|&r| r < 1.0));
}

#[test]
fn expansion_error_against_oracle() {
    let err = |n: u64| norming_constant_expansion(n).unwrap() - norming_oracle(n as f64);
    assert!(err(100).abs() < 0.05);
    let e8 = err(100_000_000);
    // the two-term expansion overshoots by just under 0.01 at n = 10^8
    assert!(e8 > 0.0 && e8 < 0.0095, "{e8}");
    let errs: Vec<f64> = [1e2, 1e4, 1e6, 1e8, 1e10].iter().map(|&n| err(n as u64)).collect();
    assert!(errs.windows(2).all(|w| w[1].abs() < w[0].abs()));
}

#[test]
fn castro_remainder_is_stable() {
    // the scaled remainder tends to -3 (next Mills-ratio term)
    let c: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&n| castro_scaled_remainder(&norming_constant(n).unwrap()))
        .collect();
    assert!(c.iter().all(|&v| v > -3.0 && v < -2.0), "{c:?}");
    let spread = c.iter().cloned().fold(f64::MIN, f64::max) - c.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.5, "{c:?}");
    assert!(c.windows(2).all(|w| w[1] < w[0]));
}

/// Kolmogorov statistic of a sample against Phi.
fn ks_statistic(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = oracle_cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampler_marginals_pass_ks() {
    let n = 100_000;
    let mut rng = CounterRng::new(2024, &[1]);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n).map(|_| sample_bivariate_gauss(0.6, &mut rng).unwrap()).unzip();
    // 1% critical value 1.6276 / sqrt(n)
    let critical = 1.6276 / (n as f64).sqrt();
    assert!(ks_statistic(xs) < critical);
    assert!(ks_statistic(ys) < critical);
}

fn sample_correlation(rho: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = CounterRng::new(seed, &[]);
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let (x, y) = sample_bivariate_gauss(rho, &mut rng).unwrap();
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let n = draws as f64;
    let cov = sxy / n - sx * sy / (n * n);
    cov / ((sxx / n - sx * sx / (n * n)) * (syy / n - sy * sy / (n * n))).sqrt()
}

#[test]
fn sampler_correlation() {
    assert!(sample_correlation(0.0, 1_000_000, 5).abs() < 0.005);
    assert!((sample_correlation(0.7, 1_000_000, 6) - 0.7).abs() < 0.003);
    assert!((sample_correlation(-0.95, 200_000, 7) + 0.95).abs() < 0.003);
}

#[test]
fn sampler_is_deterministic() {
    let a = sample_bivariate_gauss(0.3, &mut CounterRng::new(9, &[4, 2])).unwrap();
    let b = sample_bivariate_gauss(0.3, &mut CounterRng::new(9, &[4, 2])).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1.to_bits(), b.1.to_bits());
    assert!(sample_bivariate_gauss(1.0, &mut CounterRng::new(9, &[])).is_err());
}

proptest! {
    #[test]
    fn cdf_is_monotone(a in -38.0f64..38.0, d in 0.0f64..5.0) {
        prop_assert!(std_normal_cdf(a).unwrap() <= std_normal_cdf(a + d).unwrap());
    }

    #[test]
    fn cdf_symmetry(x in -30.0f64..30.0) {
        let s = std_normal_cdf(x).unwrap() + std_normal_cdf(-x).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norming_constant_solves_tail_equation(n in 3u64..1_000_000_000_000) {
        let c = norming_constant(n).unwrap();
        let rel = (std_normal_sf(c.b).unwrap() * n as f64 - 1.0).abs();
        prop_assert!(rel < 1e-12);
        prop_assert!(norming_constant(n + 1).unwrap().b > c.b);
    }

    #[test]
    fn upper_quantile_inverts_tail(log_q in -700.0f64..-0.7) {
        let q = log_q.exp();
        let x = std_normal_upper_quantile(q).unwrap();
        let rel = (std_normal_sf(x).unwrap() - q).abs() / q;
        prop_assert!(rel < 1e-12);
    }
}
