//! Pass/fail checks of convergence reports against the verification
//! thresholds.

use hrtri_core::sim::ConvergenceReport;
use serde::Serialize;
use std::fmt;

/// Default thresholds of the verification suite.
pub mod defaults {
    /// Largest admissible `|empirical - H|` over the grid.
    pub const MIXED_TOLERANCE: f64 = 0.04;
    /// Largest admissible mean corrected error relative to the raw error.
    pub const CORRECTION_RATIO: f64 = 0.7;
    /// Smallest share of significant points where the correction helps.
    pub const IMPROVEMENT_FRACTION: f64 = 0.7;
    /// A correction counts as significant above this many standard errors.
    pub const STDERR_MULTIPLE: f64 = 3.0;
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), value, threshold, relation: "<=", passed: value <= threshold, detail: detail.into() }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), value, threshold, relation: ">=", passed: value >= threshold, detail: detail.into() }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64, detail: impl Into<String>) -> Self {
        let detail = format!("range [{lo}, {hi}]; {}", detail.into());
        CheckOutcome { name: name.into(), value, threshold: hi, relation: "in", passed: (lo..=hi).contains(&value), detail }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        if self.relation == "in" {
            write!(f, "[{tag}] {}: {:.6} ({})", self.name, self.value, self.detail)
        } else {
            write!(f, "[{tag}] {}: {:.6} {} {} ({})", self.name, self.value, self.relation, self.threshold, self.detail)
        }
    }
}

/// `max |empirical - H|` at row length `n`.
pub fn mixed_limit(report: &ConvergenceReport, n: u64, tolerance: f64) -> CheckOutcome {
    let worst = report
        .rows_for(n)
        .max_by(|a, b| a.raw_error.abs().total_cmp(&b.raw_error.abs()))
        .map(|r| format!("worst at ({}, {}), 3 stderr = {:.4}", r.x, r.y, 3.0 * r.stderr))
        .unwrap_or_default();
    CheckOutcome::at_most(format!("max |empirical - H| at n = {n}"), report.max_abs_raw(n), tolerance, worst)
}

/// `mean |corrected| / mean |raw|` at row length `n`.
pub fn correction_ratio(report: &ConvergenceReport, n: u64, ratio: f64) -> CheckOutcome {
    let raw = report.mean_abs_raw(n);
    let corrected = report.mean_abs_corrected(n);
    CheckOutcome::at_most(
        format!("mean |corrected| / mean |raw| at n = {n}"),
        corrected / raw,
        ratio,
        format!("mean |raw| = {raw:.5}, mean |corrected| = {corrected:.5}"),
    )
}

/// Share of grid points with `|correction| > k stderr` where the corrected
/// error is smaller than the raw one.
pub fn improvement_fraction(report: &ConvergenceReport, n: u64, fraction: f64, stderr_multiple: f64) -> CheckOutcome {
    let significant: Vec<_> = report.rows_for(n).filter(|r| r.correction.abs() > stderr_multiple * r.stderr).collect();
    let improved = significant.iter().filter(|r| r.corrected_error.abs() < r.raw_error.abs()).count();
    let share = if significant.is_empty() { 0.0 } else { improved as f64 / significant.len() as f64 };
    CheckOutcome::at_least(
        format!("{:?} correction improves at n = {n}", report.regime),
        share,
        fraction,
        format!("{improved} of {} significant points", significant.len()),
    )
}
