//! Simulation of triangular-array rows and Monte Carlo estimation of the
//! joint distribution of normalized maxima.
//!
//! Randomness is addressed, not consumed: row `i` of replication `r` draws
//! from block `i` of the counter stream at path `[r]` under the
//! configuration seed, so every `(replication, row)` pair owns a disjoint
//! substream.
//! Estimates are integer hit counts, so any partition of the replications
//! (across threads or processes) merges to identical results.

use crate::error::{Error, Result};
use crate::limits::{self, gumbel_cdf, Regime};
use crate::normal::{self, norming_constant, NormingConstant};
use crate::profile::CorrelationProfile;
use crate::rng::{derive_key, CounterRng};
use alloc::vec::Vec;
use libm::{log, pow, sqrt};

/// Evaluation point `(x, y)` on the normalized scale.
pub type GridPoint = (f64, f64);

/// `{-1, 0, 1, 2} x {-1, 0, 1, 2}`, row-major in `x`.
pub fn default_grid() -> Vec<GridPoint> {
    let axis = [-1.0, 0.0, 1.0, 2.0];
    axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y))).collect()
}

/// `rho_ni = 1 - m(i/n) / log n` for `i = 1..=n`.
pub fn rho_schedule(profile: &CorrelationProfile, n: u64) -> Result<Vec<f64>> {
    profile.validate()?;
    if n < 3 {
        return Err(Error::domain(alloc::format!("row length n must be at least 3, got {n}")));
    }
    let log_n = log(n as f64);
    let nf = n as f64;
    (1..=n)
        .map(|i| {
            let rho = 1.0 - profile.eval(i as f64 / nf) / log_n;
            if rho > -1.0 && rho < 1.0 {
                Ok(rho)
            } else {
                Err(Error::CorrelationOutOfRange { index: i as usize, rho })
            }
        })
        .collect()
}

/// One row of the array: length, profile and the master seed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArrayConfig {
    pub n: u64,
    pub profile: CorrelationProfile,
    pub master_seed: u64,
}

impl ArrayConfig {
    /// Validates that every `rho_ni` lies strictly inside `(-1, 1)`.
    pub fn new(n: u64, profile: CorrelationProfile, master_seed: u64) -> Result<Self> {
        rho_schedule(&profile, n)?;
        Ok(ArrayConfig { n, profile, master_seed })
    }
}

/// Precomputed row correlations for repeated sampling of one configuration.
#[derive(Debug, Clone)]
pub struct MaximaSampler {
    rho: Vec<f64>,
    scale: Vec<f64>,
    seed: u64,
    norming: NormingConstant,
}

impl MaximaSampler {
    pub fn new(config: &ArrayConfig) -> Result<Self> {
        let rho = rho_schedule(&config.profile, config.n)?;
        let scale = rho.iter().map(|&r| sqrt((1.0 - r) * (1.0 + r))).collect();
        Ok(MaximaSampler { rho, scale, seed: config.master_seed, norming: norming_constant(config.n)? })
    }

    pub fn norming(&self) -> &NormingConstant {
        &self.norming
    }

    pub fn n(&self) -> usize {
        self.rho.len()
    }

    /// Row `i` (1-based) of replication `replication`.
    pub fn row(&self, replication: u64, i: usize) -> (f64, f64) {
        let rep_key = derive_key(self.seed, &[replication]);
        let mut rng = CounterRng::block(rep_key, i as u64);
        normal::mix_pair(self.rho[i - 1], self.scale[i - 1], &mut rng)
    }

    /// Componentwise maxima `(M_n1, M_n2)` of replication `replication`.
    pub fn sample(&self, replication: u64) -> (f64, f64) {
        let rep_key = derive_key(self.seed, &[replication]);
        let mut m1 = f64::NEG_INFINITY;
        let mut m2 = f64::NEG_INFINITY;
        for (i, (&rho, &scale)) in self.rho.iter().zip(&self.scale).enumerate() {
            let mut rng = CounterRng::block(rep_key, i as u64 + 1);
            let (x, y) = normal::mix_pair(rho, scale, &mut rng);
            if x > m1 {
                m1 = x;
            }
            if y > m2 {
                m2 = y;
            }
        }
        (m1, m2)
    }
}

/// `(M_n1, M_n2)` for one replication; a pure function of `(config, replication_index)`.
pub fn simulate_maxima(config: &ArrayConfig, replication_index: u64) -> Result<(f64, f64)> {
    Ok(MaximaSampler::new(config)?.sample(replication_index))
}

/// Hit counts of `{M_n1 <= u_x, M_n2 <= u_y}` per grid point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCounts {
    pub hits: Vec<u64>,
    /// Marginal hit counts `{M_n1 <= u_x}` and `{M_n2 <= u_y}`.
    pub marginal_hits: Vec<(u64, u64)>,
    pub replications: u64,
}

impl JointCounts {
    pub fn zero(points: usize) -> Self {
        JointCounts { hits: alloc::vec![0; points], marginal_hits: alloc::vec![(0, 0); points], replications: 0 }
    }

    pub fn merge(mut self, other: &JointCounts) -> Self {
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        for (a, b) in self.marginal_hits.iter_mut().zip(&other.marginal_hits) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self.replications += other.replications;
        self
    }

    #[inline]
    fn record(&mut self, thresholds: &[(f64, f64)], m1: f64, m2: f64) {
        for (k, &(ux, uy)) in thresholds.iter().enumerate() {
            let a = m1 <= ux;
            let b = m2 <= uy;
            self.hits[k] += (a && b) as u64;
            self.marginal_hits[k].0 += a as u64;
            self.marginal_hits[k].1 += b as u64;
        }
    }
}

/// Thresholds `(u_n(x), u_n(y))` for each grid point.
pub fn thresholds(norming: &NormingConstant, grid: &[GridPoint]) -> Vec<(f64, f64)> {
    grid.iter().map(|&(x, y)| (norming.threshold(x), norming.threshold(y))).collect()
}

/// Counts hits over replications `range.start..range.end`.
pub fn count_replications(sampler: &MaximaSampler, grid: &[GridPoint], range: core::ops::Range<u64>) -> JointCounts {
    let th = thresholds(sampler.norming(), grid);
    let mut counts = JointCounts::zero(grid.len());
    counts.replications = range.end.saturating_sub(range.start);
    for rep in range {
        let (m1, m2) = sampler.sample(rep);
        counts.record(&th, m1, m2);
    }
    counts
}

/// Monte Carlo estimate of `P(M_n1 <= u_n(x), M_n2 <= u_n(y))` on a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalJointCdf {
    pub grid: Vec<GridPoint>,
    pub u_values: Vec<(f64, f64)>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Marginal estimates `(P(M_n1 <= u_x), P(M_n2 <= u_y))`.
    pub marginals: Vec<(f64, f64)>,
    pub replications: u64,
}

impl EmpiricalJointCdf {
    pub fn from_counts(norming: &NormingConstant, grid: &[GridPoint], counts: &JointCounts) -> Self {
        let r = counts.replications as f64;
        let estimates: Vec<f64> = counts.hits.iter().map(|&h| h as f64 / r).collect();
        let stderr = estimates.iter().map(|&p| sqrt(p * (1.0 - p) / r)).collect();
        let marginals = counts.marginal_hits.iter().map(|&(a, b)| (a as f64 / r, b as f64 / r)).collect();
        EmpiricalJointCdf {
            grid: grid.to_vec(),
            u_values: thresholds(norming, grid),
            estimates,
            stderr,
            marginals,
            replications: counts.replications,
        }
    }
}

/// Validates a grid and replication count for the joint-cdf estimators.
pub fn check_estimation_inputs(grid: &[GridPoint], replications: u64) -> Result<()> {
    if replications < 100 {
        return Err(Error::domain(alloc::format!("at least 100 replications are required, got {replications}")));
    }
    if grid.is_empty() {
        return Err(Error::domain("the evaluation grid is empty"));
    }
    if grid.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::domain("grid points must be finite"));
    }
    Ok(())
}

/// Sequential estimator over replications `0..replications`.
pub fn empirical_joint_cdf(config: &ArrayConfig, grid: &[GridPoint], replications: u64) -> Result<EmpiricalJointCdf> {
    check_estimation_inputs(grid, replications)?;
    let sampler = MaximaSampler::new(config)?;
    let counts = count_replications(&sampler, grid, 0..replications);
    Ok(EmpiricalJointCdf::from_counts(sampler.norming(), grid, &counts))
}

/// Smallest correlation the independent-regime schedule may produce.
pub const INDEPENDENT_RHO_FLOOR: f64 = -0.5;

/// How the profile used at row length `n` is chosen.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProfileSchedule {
    /// The same profile at every `n`.
    Fixed(CorrelationProfile),
    /// `m_n = (log n)^{-5}`, so that `(log n)^4 max m -> 0`.
    DependentAuto,
    /// `m_n = (log log n)^3`, capped so that `rho_n >= INDEPENDENT_RHO_FLOOR`.
    IndependentAuto,
}

impl ProfileSchedule {
    pub fn profile_for(&self, n: u64) -> Result<CorrelationProfile> {
        let log_n = log(n as f64);
        match self {
            ProfileSchedule::Fixed(p) => Ok(p.clone()),
            ProfileSchedule::DependentAuto => CorrelationProfile::constant(pow(log_n, -5.0)),
            ProfileSchedule::IndependentAuto => {
                if n < 16 {
                    return Err(Error::domain("the independent schedule needs n >= 16"));
                }
                let cap = (1.0 - INDEPENDENT_RHO_FLOOR) * log_n;
                CorrelationProfile::constant(pow(log(log_n), 3.0).min(cap))
            }
        }
    }

    fn check_regime(&self, regime: Regime) -> Result<()> {
        let ok = match (self, regime) {
            (ProfileSchedule::Fixed(p), Regime::Mixed) => {
                if !p.is_monotone() {
                    return Err(Error::RegimeMismatch {
                        reason: "the mixed-regime expansion requires a monotone profile".into(),
                    });
                }
                true
            }
            (ProfileSchedule::DependentAuto, Regime::Dependent) => true,
            (ProfileSchedule::IndependentAuto, Regime::Independent) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RegimeMismatch {
                reason: alloc::format!("profile schedule {self:?} does not satisfy the {regime:?} regime"),
            })
        }
    }
}

/// First-order limit of the joint probability under a regime.
pub fn first_order_limit(regime: Regime, profile: &CorrelationProfile, x: f64, y: f64) -> Result<f64> {
    match regime {
        Regime::Mixed => limits::limit_cdf_h(profile, x, y),
        Regime::Dependent => Ok(gumbel_cdf(x.min(y))),
        Regime::Independent => Ok(gumbel_cdf(x) * gumbel_cdf(y)),
        Regime::Univariate => Err(Error::domain("the univariate regime has no joint limit")),
    }
}

/// Second-order term of the joint probability under a regime.
pub fn correction(regime: Regime, profile: &CorrelationProfile, x: f64, y: f64, n: u64) -> Result<limits::CorrectionTerm> {
    match regime {
        Regime::Mixed => limits::correction_mixed(profile, x, y, n),
        Regime::Dependent => limits::correction_dependent(x, y, n),
        Regime::Independent => limits::correction_independent(x, y, n),
        Regime::Univariate => Err(Error::domain("the univariate regime has no joint correction")),
    }
}

/// One line of a convergence report.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticRow {
    pub n: u64,
    pub x: f64,
    pub y: f64,
    pub empirical: f64,
    pub limit: f64,
    pub correction: f64,
    pub raw_error: f64,
    pub scaled_error: f64,
    pub corrected_error: f64,
    pub stderr: f64,
}

/// Raw, rate-scaled and corrected errors of the Monte Carlo probabilities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub regime: Regime,
    pub rows: Vec<DiagnosticRow>,
}

impl ConvergenceReport {
    pub fn rows_for(&self, n: u64) -> impl Iterator<Item = &DiagnosticRow> {
        self.rows.iter().filter(move |r| r.n == n)
    }

    pub fn mean_abs_raw(&self, n: u64) -> f64 {
        mean(self.rows_for(n).map(|r| r.raw_error.abs()))
    }

    pub fn mean_abs_corrected(&self, n: u64) -> f64 {
        mean(self.rows_for(n).map(|r| r.corrected_error.abs()))
    }

    pub fn mean_abs_scaled(&self, n: u64) -> f64 {
        mean(self.rows_for(n).map(|r| r.scaled_error.abs()))
    }

    pub fn max_abs_raw(&self, n: u64) -> f64 {
        self.rows_for(n).map(|r| r.raw_error.abs()).fold(0.0, f64::max)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Seed of the configuration simulated at row length `n`.
pub fn seed_for_n(master_seed: u64, n: u64) -> u64 {
    derive_key(master_seed, &[0x6e, n])
}

/// Convergence study with a caller-supplied estimator (for example a
/// parallel one). `estimate` receives the configuration, grid and `R`.
pub fn convergence_diagnostic_with<E>(
    schedule: &ProfileSchedule,
    grid: &[GridPoint],
    ns: &[u64],
    replications: u64,
    regime: Regime,
    master_seed: u64,
    mut estimate: E,
) -> Result<ConvergenceReport>
where
    E: FnMut(&ArrayConfig, &[GridPoint], u64) -> Result<EmpiricalJointCdf>,
{
    schedule.check_regime(regime)?;
    check_estimation_inputs(grid, replications)?;
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("row lengths must be a nonempty increasing list"));
    }
    let mut rows = Vec::with_capacity(ns.len() * grid.len());
    for &n in ns {
        let profile = schedule.profile_for(n)?;
        let config = ArrayConfig::new(n, profile.clone(), seed_for_n(master_seed, n))?;
        let cdf = estimate(&config, grid, replications)?;
        for (k, &(x, y)) in grid.iter().enumerate() {
            let limit = first_order_limit(regime, &profile, x, y)?;
            let term = correction(regime, &profile, x, y, n)?;
            let empirical = cdf.estimates[k];
            let raw = empirical - limit;
            rows.push(DiagnosticRow {
                n,
                x,
                y,
                empirical,
                limit,
                correction: term.value,
                raw_error: raw,
                scaled_error: raw / term.rate_factor,
                corrected_error: raw - term.value,
                stderr: cdf.stderr[k],
            });
        }
    }
    Ok(ConvergenceReport { regime, rows })
}

/// Sequential convergence study.
pub fn convergence_diagnostic(
    schedule: &ProfileSchedule,
    grid: &[GridPoint],
    ns: &[u64],
    replications: u64,
    regime: Regime,
    master_seed: u64,
) -> Result<ConvergenceReport> {
    convergence_diagnostic_with(schedule, grid, ns, replications, regime, master_seed, empirical_joint_cdf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn schedule_hits_zero_correlation() {
        let l8 = log(8.0);
        let p = CorrelationProfile::tabulated(vec![(0.0, l8), (1.0, l8)]).unwrap();
        for rho in rho_schedule(&p, 8).unwrap() {
            assert!(rho.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_schedule_value() {
        let p = CorrelationProfile::constant(1.0).unwrap();
        for rho in rho_schedule(&p, 100).unwrap() {
            assert!((rho - 0.78286).abs() < 1e-5);
        }
    }

    #[test]
    fn decreasing_profile_gives_increasing_rho() {
        let p = CorrelationProfile::linear(2.0, -1.0).unwrap();
        let rho = rho_schedule(&p, 50).unwrap();
        assert!(rho.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn schedule_error_names_index() {
        // m(i/n) / log n reaches 2 at the end of the row
        let p = CorrelationProfile::linear(1.0, 10.0).unwrap();
        match rho_schedule(&p, 10) {
            Err(Error::CorrelationOutOfRange { index, .. }) => assert!(index > 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn maxima_are_deterministic_and_dominate_rows() {
        let config = ArrayConfig::new(40, CorrelationProfile::linear(1.0, 1.0).unwrap(), 7).unwrap();
        let sampler = MaximaSampler::new(&config).unwrap();
        let a = simulate_maxima(&config, 3).unwrap();
        assert_eq!(a, simulate_maxima(&config, 3).unwrap());
        assert_ne!(a, simulate_maxima(&config, 4).unwrap());
        let mut seen = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 1..=40 {
            let (x, y) = sampler.row(3, i);
            assert!(a.0 >= x && a.1 >= y);
            seen = (seen.0.max(x), seen.1.max(y));
        }
        assert_eq!(seen, a);
    }

    #[test]
    fn estimator_rejects_small_r() {
        let config = ArrayConfig::new(10, CorrelationProfile::constant(1.0).unwrap(), 1).unwrap();
        assert!(empirical_joint_cdf(&config, &default_grid(), 99).is_err());
        assert!(empirical_joint_cdf(&config, &[(f64::NAN, 0.0)], 100).is_err());
    }

    #[test]
    fn partitioned_counts_merge_exactly() {
        let config = ArrayConfig::new(30, CorrelationProfile::linear(1.0, 1.0).unwrap(), 11).unwrap();
        let sampler = MaximaSampler::new(&config).unwrap();
        let grid = default_grid();
        let whole = count_replications(&sampler, &grid, 0..300);
        let a = count_replications(&sampler, &grid, 0..117);
        let b = count_replications(&sampler, &grid, 117..300);
        assert_eq!(a.merge(&b), whole);
    }

    #[test]
    fn regime_mismatch_is_rejected() {
        let bump = CorrelationProfile::tabulated(vec![(0.0, 1.0), (0.5, 2.0), (1.0, 1.0)]).unwrap();
        let grid = [(0.0, 0.0)];
        let err = convergence_diagnostic(&ProfileSchedule::Fixed(bump), &grid, &[100], 100, Regime::Mixed, 1);
        assert!(matches!(err, Err(Error::RegimeMismatch { .. })));
        let err = convergence_diagnostic(&ProfileSchedule::DependentAuto, &grid, &[100], 100, Regime::Mixed, 1);
        assert!(matches!(err, Err(Error::RegimeMismatch { .. })));
    }

    #[test]
    fn dependent_correction_column_vanishes_at_origin() {
        let report =
            convergence_diagnostic(&ProfileSchedule::DependentAuto, &[(0.0, 0.0)], &[200], 100, Regime::Dependent, 3)
                .unwrap();
        assert!(report.rows.iter().all(|r| r.correction == 0.0));
    }
}
