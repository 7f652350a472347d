mod common;

use common::{cdf as phi, phi_density, simpson};
use hrtri_core::limits::Regime;
use hrtri_core::normal::norming_constant;
use hrtri_core::sim::*;
use hrtri_core::{CorrelationProfile, Error};
use proptest::prelude::*;

/// `P(X <= a, Y <= b)` for a standard bivariate normal with correlation `rho`.
fn bivariate_cdf(rho: f64, a: f64, b: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    simpson(|x| phi_density(x) * phi((b - rho * x) / s), -12.0, a, 4_000)
}

#[test]
fn schedule_examples() {
    let flat = CorrelationProfile::tabulated(vec![(0.0, 8f64.ln()), (1.0, 8f64.ln())]).unwrap();
    assert!(rho_schedule(&flat, 8).unwrap().iter().all(|r| r.abs() < 1e-12));
    let rho = rho_schedule(&CorrelationProfile::constant(1.0).unwrap(), 100).unwrap();
    assert_eq!(rho.len(), 100);
    assert!(rho.iter().all(|r| (r - 0.78286).abs() < 1e-5));
}

#[test]
fn schedule_names_first_invalid_row() {
    // log 10 = 2.3026, so m(i/10) = 1 + i/2 exceeds 2 log n first at i = 8
    let steep = CorrelationProfile::linear(1.0, 5.0).unwrap();
    match rho_schedule(&steep, 10) {
        Err(Error::CorrelationOutOfRange { index, rho }) => {
            assert_eq!(index, 8);
            assert!(rho < -1.0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn maxima_are_reproducible() {
    let config = ArrayConfig::new(500, CorrelationProfile::linear(1.0, 1.0).unwrap(), 77).unwrap();
    let a = simulate_maxima(&config, 12).unwrap();
    let b = simulate_maxima(&config, 12).unwrap();
    assert_eq!((a.0.to_bits(), a.1.to_bits()), (b.0.to_bits(), b.1.to_bits()));
    assert_ne!(a, simulate_maxima(&config, 13).unwrap());
}

#[test]
fn split_counts_merge_to_the_full_run() {
    let config = ArrayConfig::new(300, CorrelationProfile::constant(2.0).unwrap(), 5).unwrap();
    let sampler = MaximaSampler::new(&config).unwrap();
    let grid = default_grid();
    let whole = count_replications(&sampler, &grid, 0..1_000);
    let parts = [0..137, 137..600, 600..1_000]
        .into_iter()
        .map(|r| count_replications(&sampler, &grid, r))
        .fold(JointCounts::zero(grid.len()), |acc, c| acc.merge(&c));
    assert_eq!(whole, parts);
}

#[test]
fn simulator_matches_exact_product_law() {
    // at small n the joint law of the maxima is a product of bivariate normal cdfs
    let n = 50u64;
    let profile = CorrelationProfile::linear(0.5, 2.0).unwrap();
    let config = ArrayConfig::new(n, profile.clone(), 31).unwrap();
    let grid = default_grid();
    let cdf = empirical_joint_cdf(&config, &grid, 40_000).unwrap();
    let rho = rho_schedule(&profile, n).unwrap();
    let b = common::norming_oracle(n as f64);
    for (k, &(x, y)) in grid.iter().enumerate() {
        let (ux, uy) = (b + x / b, b + y / b);
        let exact: f64 = rho.iter().map(|&r| bivariate_cdf(r, ux, uy)).product();
        let tol = 4.0 * (exact * (1.0 - exact) / 40_000.0).sqrt();
        assert!((cdf.estimates[k] - exact).abs() < tol, "({x}, {y}): {} vs {exact}", cdf.estimates[k]);
        let marginal = phi(ux).powi(n as i32);
        let mtol = 4.0 * (marginal * (1.0 - marginal) / 40_000.0).sqrt();
        assert!((cdf.marginals[k].0 - marginal).abs() < mtol);
    }
}

#[test]
fn empirical_cdf_is_two_increasing_and_below_marginals() {
    let config = ArrayConfig::new(400, CorrelationProfile::linear(1.0, 1.0).unwrap(), 8).unwrap();
    let xs = [-1.0, 0.0, 1.0, 2.0];
    let grid = default_grid();
    let cdf = empirical_joint_cdf(&config, &grid, 5_000).unwrap();
    let at = |i: usize, j: usize| cdf.estimates[i * 4 + j];
    for i in 0..4 {
        for j in 0..4 {
            let k = i * 4 + j;
            assert_eq!(grid[k], (xs[i], xs[j]));
            assert!(at(i, j) <= cdf.marginals[k].0.min(cdf.marginals[k].1));
            if i > 0 && j > 0 {
                assert!(at(i, j) - at(i - 1, j) - at(i, j - 1) + at(i - 1, j - 1) >= 0.0);
            }
        }
    }
}

#[test]
fn deep_upper_tail_point() {
    let config = ArrayConfig::new(1000, CorrelationProfile::linear(1.0, 1.0).unwrap(), 3).unwrap();
    let cdf = empirical_joint_cdf(&config, &[(10.0, 10.0)], 2_000).unwrap();
    assert!(cdf.estimates[0] >= 0.99);
}

#[test]
fn halving_replications_moves_estimates_by_stderr() {
    let config = ArrayConfig::new(2_000, CorrelationProfile::linear(1.0, 1.0).unwrap(), 19).unwrap();
    let grid = default_grid();
    let full = empirical_joint_cdf(&config, &grid, 20_000).unwrap();
    let half = empirical_joint_cdf(&config, &grid, 10_000).unwrap();
    let within = (0..grid.len())
        .filter(|&k| (full.estimates[k] - half.estimates[k]).abs() <= 6.0 * full.stderr[k].max(1e-12))
        .count();
    assert!(within as f64 >= 0.95 * grid.len() as f64);
}

#[test]
fn husler_reiss_condition_for_constant_profiles() {
    for &c in &[0.5, 1.0, 3.0] {
        for &n in &[100u64, 10_000, 1_000_000, 100_000_000] {
            let b = norming_constant(n).unwrap();
            let rho = rho_schedule(&CorrelationProfile::constant(c).unwrap(), n).unwrap()[0];
            let l = b.log_n();
            let lhs = (b.b * b.b * (1.0 - rho) - 2.0 * c).abs();
            assert!(lhs <= 4.0 * c * (b.b * b.b - 2.0 * l).abs() / (2.0 * l));
        }
    }
}

#[test]
fn dependent_correction_vanishes_at_origin() {
    let report = convergence_diagnostic(&ProfileSchedule::DependentAuto, &[(0.0, 0.0)], &[1_000, 2_000], 200, Regime::Dependent, 1)
        .unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.correction == 0.0));
}

#[test]
fn auto_schedules_respect_their_regimes() {
    let dep = ProfileSchedule::DependentAuto.profile_for(100_000).unwrap();
    // (log n)^4 m_n = 1 / log n -> 0
    let l = 100_000f64.ln();
    assert!((l.powi(4) * dep.eval(0.5) - 1.0 / l).abs() < 1e-15);
    let ind = ProfileSchedule::IndependentAuto.profile_for(10_000).unwrap();
    let rho = rho_schedule(&ind, 10_000).unwrap();
    assert!(rho.iter().all(|&r| r >= INDEPENDENT_RHO_FLOOR - 1e-12));
    // running the independent study at n = 10^4 raises no domain error
    let report = convergence_diagnostic(&ProfileSchedule::IndependentAuto, &default_grid(), &[10_000], 100, Regime::Independent, 2);
    assert!(report.is_ok());
}

#[test]
fn regime_mismatch_is_reported() {
    let fixed = ProfileSchedule::Fixed(CorrelationProfile::constant(1.0).unwrap());
    for regime in [Regime::Dependent, Regime::Independent] {
        let err = convergence_diagnostic(&fixed, &default_grid(), &[1_000], 100, regime, 0).unwrap_err();
        assert!(matches!(err, Error::RegimeMismatch { .. }));
    }
    let err = convergence_diagnostic(&ProfileSchedule::DependentAuto, &default_grid(), &[1_000], 100, Regime::Mixed, 0)
        .unwrap_err();
    assert!(matches!(err, Error::RegimeMismatch { .. }));
}

#[test]
fn estimator_input_validation() {
    let config = ArrayConfig::new(100, CorrelationProfile::constant(1.0).unwrap(), 0).unwrap();
    assert!(empirical_joint_cdf(&config, &default_grid(), 99).is_err());
    assert!(empirical_joint_cdf(&config, &[], 1000).is_err());
    assert!(empirical_joint_cdf(&config, &[(f64::NAN, 0.0)], 1000).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rows_depend_only_on_seed_replication_and_index(seed in any::<u64>(), rep in 0u64..1_000_000, i in 1usize..=200) {
        let config = ArrayConfig::new(200, CorrelationProfile::linear(1.0, 1.0).unwrap(), seed).unwrap();
        let a = MaximaSampler::new(&config).unwrap();
        let b = MaximaSampler::new(&config).unwrap();
        let (x1, y1) = a.row(rep, i);
        let (x2, y2) = b.row(rep, i);
        prop_assert_eq!(x1.to_bits(), x2.to_bits());
        prop_assert_eq!(y1.to_bits(), y2.to_bits());
    }

    #[test]
    fn sample_is_maximum_of_rows(seed in any::<u64>(), rep in 0u64..1000) {
        let config = ArrayConfig::new(64, CorrelationProfile::constant(1.5).unwrap(), seed).unwrap();
        let s = MaximaSampler::new(&config).unwrap();
        let (mx, my) = (1..=64).map(|i| s.row(rep, i)).fold((f64::MIN, f64::MIN), |a, r| (a.0.max(r.0), a.1.max(r.1)));
        let (m1, m2) = s.sample(rep);
        prop_assert_eq!(m1, mx);
        prop_assert_eq!(m2, my);
    }
}
