//! Paired series, log-returns, prefix correlations and the constant-profile
//! analysis of real data.

use crate::error::{Error, Result};
use crate::inference::{constant_m_mle, ConstantFit};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use libm::{log, sqrt};

/// Whether a series holds price levels or returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SeriesKind {
    Prices,
    Returns,
}

/// Two aligned real-valued series.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairedSeries {
    labels: [String; 2],
    x: Vec<f64>,
    y: Vec<f64>,
    kind: SeriesKind,
    /// Optional row labels (typically dates), carried through untouched.
    dates: Option<Vec<String>>,
}

impl PairedSeries {
    pub fn new(labels: [String; 2], x: Vec<f64>, y: Vec<f64>, kind: SeriesKind) -> Result<Self> {
        Self::with_dates(labels, x, y, kind, None)
    }

    pub fn with_dates(
        labels: [String; 2],
        x: Vec<f64>,
        y: Vec<f64>,
        kind: SeriesKind,
        dates: Option<Vec<String>>,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Data { reason: format!("series lengths differ ({} vs {})", x.len(), y.len()) });
        }
        if x.len() < 3 {
            return Err(Error::Data { reason: format!("at least 3 observations are required, got {}", x.len()) });
        }
        if let Some(d) = &dates {
            if d.len() != x.len() {
                return Err(Error::Data { reason: format!("{} dates for {} observations", d.len(), x.len()) });
            }
        }
        for (i, (&a, &b)) in x.iter().zip(&y).enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Data { reason: format!("observation {} is not finite", i + 1) });
            }
            if kind == SeriesKind::Prices && !(a > 0.0 && b > 0.0) {
                return Err(Error::Domain { what: format!("price at index {} is not strictly positive", i + 1) });
            }
        }
        Ok(PairedSeries { labels, x, y, kind, dates })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn labels(&self) -> &[String; 2] {
        &self.labels
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn dates(&self) -> Option<&[String]> {
        self.dates.as_deref()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }
}

/// `r_t = log(p_t / p_{t-1})` for both components.
pub fn log_returns(series: &PairedSeries) -> Result<PairedSeries> {
    if series.kind != SeriesKind::Prices {
        return Err(Error::domain("log-returns need a price series"));
    }
    if series.len() < 4 {
        return Err(Error::Data { reason: "at least 4 prices are needed for 3 returns".into() });
    }
    let diff = |p: &[f64]| p.windows(2).map(|w| log(w[1] / w[0])).collect::<Vec<_>>();
    let dates = series.dates.as_ref().map(|d| d[1..].to_vec());
    PairedSeries::with_dates(series.labels.clone(), diff(&series.x), diff(&series.y), SeriesKind::Returns, dates)
}

/// Pearson correlation of the first `i` pairs for `i = 3..=n`, maintained
/// with Welford updates. Prefixes with zero variance yield `None`.
pub fn prefix_correlations(series: &PairedSeries) -> Vec<(usize, Option<f64>)> {
    let mut out = Vec::with_capacity(series.len().saturating_sub(2));
    let (mut mx, mut my, mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, (x, y)) in series.pairs().enumerate() {
        let i = (k + 1) as f64;
        let dx = x - mx;
        let dy = y - my;
        mx += dx / i;
        my += dy / i;
        cxx += dx * (x - mx);
        cyy += dy * (y - my);
        cxy += dx * (y - my);
        if k >= 2 {
            out.push((k + 1, pearson(cxx, cyy, cxy)));
        }
    }
    out
}

fn pearson(cxx: f64, cyy: f64, cxy: f64) -> Option<f64> {
    let scale = cxx.abs().max(cyy.abs());
    if !(cxx > 1e-14 * scale && cyy > 1e-14 * scale && scale > 0.0) {
        return None;
    }
    Some((cxy / sqrt(cxx * cyy)).clamp(-1.0, 1.0))
}

/// Pearson correlation computed directly from two slices.
pub fn sample_correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (x[i] - mx, y[i] - my);
        cxx += a * a;
        cyy += b * b;
        cxy += a * b;
    }
    pearson(cxx, cyy, cxy)
}

/// Centers and scales to zero mean and unit variance (divisor `n`).
pub fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Data { reason: "cannot standardize an empty series".into() });
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::Data { reason: "cannot standardize a series with zero variance".into() });
    }
    let sd = sqrt(var);
    Ok(v.iter().map(|a| (a - mean) / sd).collect())
}

/// Constant-profile analysis of a return series.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnalysisReport {
    pub n: usize,
    pub labels: [String; 2],
    pub prefix_corr: Vec<(usize, Option<f64>)>,
    pub rho_hat: f64,
    pub m_hat: f64,
    /// Both components were standardized with full-sample mean and variance.
    pub standardized: bool,
}

/// Standardizes both components and fits the constant profile.
pub fn analyze_constant_m(series: &PairedSeries) -> Result<AnalysisReport> {
    if series.kind != SeriesKind::Returns {
        return Err(Error::domain("the analysis expects a return series; convert prices first"));
    }
    let n = series.len();
    if n < 30 {
        return Err(Error::Data { reason: format!("at least 30 returns are required, got {n}") });
    }
    let x = standardize(&series.x)?;
    let y = standardize(&series.y)?;
    let data: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    let ConstantFit { rho_hat, m_hat } = constant_m_mle(&data, n as u64)?;
    Ok(AnalysisReport {
        n,
        labels: series.labels.clone(),
        prefix_corr: prefix_correlations(series),
        rho_hat,
        m_hat,
        standardized: true,
    })
}
