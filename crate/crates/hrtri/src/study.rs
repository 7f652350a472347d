//! Replicated estimation studies: the simulation tables, interval coverage
//! and the Monte Carlo score covariance.

use crate::error::{CliError, Result};
use crate::parallel::Runner;
use hrtri_core::inference::{mle_fit, score, simulate_dataset, test_constant_m, wald_report, Family, FitOptions, FitWarning, Theta};
use hrtri_core::CorrelationProfile;
use serde::Serialize;

/// One simulation-table configuration.
#[derive(Debug, Clone, Serialize)]
pub struct TableSpec {
    pub table: u8,
    pub family: Family,
    pub truth: Theta,
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
}

impl TableSpec {
    /// Defaults of tables 1-3 (`m = 1`, `m = 1 + s`, `m = 1 + s^1`).
    pub fn standard(table: u8, n: Option<u64>, reps: u64, seed: u64) -> Result<Self> {
        let (family, default_n) = match table {
            1 => (Family::Constant, 1000),
            2 => (Family::Linear, 3000),
            3 => (Family::Power, 10_000),
            t => return Err(CliError::Usage(format!("table must be 1, 2 or 3, got {t}"))),
        };
        let truth = match family {
            Family::Constant => Theta::new(1.0, 0.0, 1.0),
            _ => Theta::new(1.0, 1.0, 1.0),
        };
        if reps == 0 {
            return Err(CliError::Usage("reps must be at least 1".into()));
        }
        Ok(TableSpec { table, family, truth, n: n.unwrap_or(default_n), reps, seed })
    }

    pub fn profile(&self) -> Result<CorrelationProfile> {
        let t = self.truth;
        Ok(match self.family {
            Family::Constant => CorrelationProfile::constant(t.alpha)?,
            Family::Linear => CorrelationProfile::linear(t.alpha, t.beta)?,
            Family::Power => CorrelationProfile::power(t.alpha, t.beta, t.gamma)?,
        })
    }

    fn estimated(&self) -> Vec<usize> {
        match self.family {
            Family::Constant => vec![0],
            Family::Linear => vec![0, 1],
            Family::Power => vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub name: &'static str,
    pub truth: f64,
    pub mean: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableResult {
    pub spec: TableSpec,
    pub params: Vec<ParamSummary>,
    /// Replications whose fit succeeded and converged.
    pub used: u64,
    /// `(replication, reason)` for every excluded replication.
    pub excluded: Vec<(u64, String)>,
    /// Replications flagged as not identifying `gamma`.
    pub gamma_not_identified: u64,
}

const NAMES: [&str; 3] = ["alpha", "beta", "gamma"];

pub fn run_table(runner: &Runner, spec: &TableSpec) -> Result<TableResult> {
    let profile = spec.profile()?;
    let fits = runner.map_indexed(spec.reps, |rep| {
        let data = simulate_dataset(&profile, spec.n, spec.seed, rep)?;
        mle_fit(&data, spec.family, &FitOptions::default())
    });
    let mut sums = [0.0; 3];
    let mut squares = [0.0; 3];
    let mut used = 0u64;
    let mut excluded = Vec::new();
    let mut gamma_flags = 0;
    for (rep, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok(f) if f.converged => {
                used += 1;
                let v = f.theta.as_array();
                let truth = spec.truth.as_array();
                for j in 0..3 {
                    sums[j] += v[j];
                    squares[j] += (v[j] - truth[j]) * (v[j] - truth[j]);
                }
                if f.warnings.iter().any(|w| matches!(w, FitWarning::GammaNotIdentified { .. })) {
                    gamma_flags += 1;
                }
            }
            Ok(f) => excluded.push((rep as u64, format!("did not converge after {} iterations", f.iterations))),
            Err(e) => excluded.push((rep as u64, e.to_string())),
        }
    }
    if used == 0 {
        return Err(CliError::Core(hrtri_core::Error::Estimation { reason: "no replication produced a fit".into() }));
    }
    let truth = spec.truth.as_array();
    let params = spec
        .estimated()
        .into_iter()
        .map(|j| ParamSummary { name: NAMES[j], truth: truth[j], mean: sums[j] / used as f64, mse: squares[j] / used as f64 })
        .collect();
    Ok(TableResult { spec: spec.clone(), params, used, excluded, gamma_not_identified: gamma_flags })
}

/// Coverage of Wald intervals and rejection rate of the constancy test for
/// linear-profile data.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageResult {
    pub alpha: f64,
    pub beta: f64,
    pub n: u64,
    pub reps: u64,
    pub level: f64,
    pub coverage_alpha: f64,
    pub coverage_beta: f64,
    /// Share of replications where the test of `beta = 0` rejects at `test_level`.
    pub rejection_rate: f64,
    pub test_level: f64,
    pub used: u64,
}

pub fn coverage_study(runner: &Runner, alpha: f64, beta: f64, n: u64, reps: u64, seed: u64, level: f64) -> Result<CoverageResult> {
    let profile = CorrelationProfile::linear(alpha, beta)?;
    let truth = Theta::new(alpha, beta, 1.0);
    let test_level = 0.05;
    let outcomes = runner.map_indexed(reps, |rep| -> hrtri_core::Result<(bool, bool, bool)> {
        let data = simulate_dataset(&profile, n, seed, rep)?;
        let test = test_constant_m(&data)?;
        let w = wald_report(&test.fit, level, Some(&truth))?;
        let covers = |k: usize| w.intervals[k].lower <= w.intervals[k].null.unwrap() && w.intervals[k].null.unwrap() <= w.intervals[k].upper;
        Ok((covers(0), covers(1), test.rejects_at(test_level)))
    });
    let ok: Vec<(bool, bool, bool)> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    if ok.is_empty() {
        return Err(CliError::Core(hrtri_core::Error::Estimation { reason: "no replication produced a fit".into() }));
    }
    let share = |f: fn(&(bool, bool, bool)) -> bool| ok.iter().filter(|o| f(o)).count() as f64 / ok.len() as f64;
    Ok(CoverageResult {
        alpha,
        beta,
        n,
        reps,
        level,
        coverage_alpha: share(|o| o.0),
        coverage_beta: share(|o| o.1),
        rejection_rate: share(|o| o.2),
        test_level,
        used: ok.len() as u64,
    })
}

/// Empirical covariance of `(l1, l2, l3) / sqrt(n)` at the true parameter.
pub fn score_covariance(runner: &Runner, theta: Theta, n: u64, reps: u64, seed: u64) -> Result<[[f64; 3]; 3]> {
    if reps < 2 {
        return Err(CliError::Usage("at least 2 replications are required".into()));
    }
    let profile = theta.profile()?;
    let scale = (n as f64).sqrt();
    let draws = runner.map_indexed(reps, |rep| -> hrtri_core::Result<[f64; 3]> {
        let data = simulate_dataset(&profile, n, seed, rep)?;
        let s = score(&theta, &data, Family::Power)?.as_array();
        Ok([s[0] / scale, s[1] / scale, s[2] / scale])
    });
    let draws: Vec<[f64; 3]> = draws.into_iter().collect::<hrtri_core::Result<_>>()?;
    let k = draws.len() as f64;
    let mut mean = [0.0; 3];
    for d in &draws {
        for j in 0..3 {
            mean[j] += d[j] / k;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for d in &draws {
        for a in 0..3 {
            for b in 0..3 {
                cov[a][b] += (d[a] - mean[a]) * (d[b] - mean[b]) / (k - 1.0);
            }
        }
    }
    Ok(cov)
}
