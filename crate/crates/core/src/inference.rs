//! Likelihood inference for the profile `m(s) = alpha + beta s^gamma`.
//!
//! Observation `i` of a sample of size `n` is a standardized pair with
//! correlation `rho_i = 1 - m(i/n) / log n`. The score components are
//!
//! ```text
//! l1 = sum w_i,  l2 = sum w_i (i/n)^gamma,  l3 = sum w_i (i/n)^gamma log(i/n)
//! w_i = [rho (1 - rho^2) + (1 + rho^2) X Y - rho (X^2 + Y^2)] / (log n (1 - rho^2)^2)
//! ```
//!
//! so the log-likelihood gradient is `-(l1, l2, beta l3)`. Asymptotic
//! covariances follow from `Delta_hat sqrt(n) (theta_hat - theta) -> N(0, Sigma)`.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::normal::{self, std_normal_quantile};
use crate::profile::CorrelationProfile;
use crate::quad::Adaptive;
use crate::rng::{derive_key, CounterRng};
use crate::sim::rho_schedule;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;
use core::f64::consts::PI;
use libm::{erfc, exp, log, log1p, sqrt};

/// Smallest admissible `alpha`.
pub const ALPHA_FLOOR: f64 = 1e-6;
/// Score-norm tolerance for converged fits.
pub const SCORE_TOLERANCE: f64 = 1e-8;
/// Coarse `gamma` grid used to warm-start power-family fits.
pub const GAMMA_GRID: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];
const GAMMA_BOUNDS: (f64, f64) = (1e-3, 50.0);
/// `|beta_hat| / se` below which `gamma` is treated as not identified.
pub const IDENTIFICATION_Z: f64 = 2.0;
const PARAM_NAMES: [&str; 3] = ["alpha", "beta", "gamma"];

/// Parameters `(alpha, beta, gamma)` of `m(s) = alpha + beta s^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Theta {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Theta {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Theta { alpha, beta, gamma }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Theta { alpha: v[0], beta: v[1], gamma: v[2] }
    }

    pub fn profile(&self) -> Result<CorrelationProfile> {
        CorrelationProfile::power(self.alpha, self.beta, self.gamma)
    }

    fn check_positive(&self) -> Result<()> {
        self.profile().map(|_| ()).map_err(|e| match e {
            Error::InvalidProfile { reason } => Error::domain(format!("profile must be positive on [0, 1]: {reason}")),
            other => other,
        })
    }
}

/// Parametric sub-family being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    /// `m = alpha` (`beta = 0`, `gamma = 1` fixed).
    Constant,
    /// `m = alpha + beta s` (`gamma = 1` fixed).
    Linear,
    /// `m = alpha + beta s^gamma`.
    Power,
}

impl Family {
    fn default_free(self) -> [bool; 3] {
        match self {
            Family::Constant => [true, false, false],
            Family::Linear => [true, true, false],
            Family::Power => [true, true, true],
        }
    }
}

/// Values of the three score components.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreValue {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl ScoreValue {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }
}

/// Per-observation quantities reused across likelihood evaluations.
struct Sample {
    xy: Vec<f64>,
    sq: Vec<f64>,
    log_t: Vec<f64>,
    log_n: f64,
}

struct Evaluation {
    log_likelihood: f64,
    score: [f64; 3],
}

impl Sample {
    fn new(data: &[(f64, f64)]) -> Result<Self> {
        let n = data.len();
        if n < 3 {
            return Err(Error::domain(format!("at least 3 observations are required, got {n}")));
        }
        if let Some(i) = data.iter().position(|&(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(Error::domain(format!("observation {} is not finite", i + 1)));
        }
        let nf = n as f64;
        Ok(Sample {
            xy: data.iter().map(|&(x, y)| x * y).collect(),
            sq: data.iter().map(|&(x, y)| x * x + y * y).collect(),
            log_t: (1..=n).map(|i| log(i as f64 / nf)).collect(),
            log_n: log(nf),
        })
    }

    fn n(&self) -> usize {
        self.xy.len()
    }

    /// Log-likelihood and score at `theta`; `None` when some `rho_i` leaves `(-1, 1)`.
    fn evaluate(&self, theta: &Theta) -> Option<Evaluation> {
        let l = self.log_n;
        let mut ll = 0.0;
        let mut s = [0.0; 3];
        for i in 0..self.n() {
            let lt = self.log_t[i];
            let tg = exp(theta.gamma * lt);
            let rho = 1.0 - (theta.alpha + theta.beta * tg) / l;
            if !(rho > -1.0 && rho < 1.0) {
                return None;
            }
            let one_m = (1.0 - rho) * (1.0 + rho);
            let (xy, sq) = (self.xy[i], self.sq[i]);
            ll += -0.5 * log(one_m) - sq / (2.0 * one_m) + rho * xy / one_m;
            let w = (rho * one_m + (1.0 + rho * rho) * xy - rho * sq) / (l * one_m * one_m);
            s[0] += w;
            s[1] += w * tg;
            s[2] += w * tg * lt;
        }
        ll -= self.n() as f64 * log(2.0 * PI);
        Some(Evaluation { log_likelihood: ll, score: s })
    }
}

/// Score components `(l1, l2, l3)` at `theta`.
///
/// All three are returned; for the constant and linear families only the
/// leading one or two are meaningful.
pub fn score(theta: &Theta, data: &[(f64, f64)], _family: Family) -> Result<ScoreValue> {
    let sample = Sample::new(data)?;
    check_rho(theta, &sample)?;
    let e = sample.evaluate(theta).expect("checked above");
    Ok(ScoreValue { l1: e.score[0], l2: e.score[1], l3: e.score[2] })
}

/// Bivariate Gaussian log-likelihood at `theta`.
pub fn log_likelihood(theta: &Theta, data: &[(f64, f64)]) -> Result<f64> {
    let sample = Sample::new(data)?;
    check_rho(theta, &sample)?;
    Ok(sample.evaluate(theta).expect("checked above").log_likelihood)
}

fn check_rho(theta: &Theta, sample: &Sample) -> Result<()> {
    for i in 1..=sample.n() {
        let m = theta.alpha + theta.beta * exp(theta.gamma * sample.log_t[i - 1]);
        let rho = 1.0 - m / sample.log_n;
        if !(rho > -1.0 && rho < 1.0) || !rho.is_finite() {
            return Err(Error::CorrelationOutOfRange { index: i, rho });
        }
    }
    Ok(())
}

/// Closed-form fit under a constant profile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstantFit {
    pub rho_hat: f64,
    pub m_hat: f64,
}

/// Solves `rho (1 - rho^2) + (1 + rho^2) S_xy - rho (S_xx + S_yy) = 0` and
/// sets `m_hat = (1 - rho_hat) log n`. With several roots the one of
/// largest likelihood is returned.
pub fn constant_m_mle(data: &[(f64, f64)], n: u64) -> Result<ConstantFit> {
    if n < 3 {
        return Err(Error::domain(format!("n must be at least 3, got {n}")));
    }
    if data.is_empty() || data.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::domain("data must be nonempty and finite"));
    }
    let k = data.len() as f64;
    let sxx = data.iter().map(|p| p.0 * p.0).sum::<f64>() / k;
    let syy = data.iter().map(|p| p.1 * p.1).sum::<f64>() / k;
    let sxy = data.iter().map(|p| p.0 * p.1).sum::<f64>() / k;
    let rho_hat = constant_rho_from_moments(sxx, syy, sxy)?;
    Ok(ConstantFit { rho_hat, m_hat: (1.0 - rho_hat) * log(n as f64) })
}

/// Root of the constant-correlation score from second-moment averages.
pub fn constant_rho_from_moments(sxx: f64, syy: f64, sxy: f64) -> Result<f64> {
    let f = |r: f64| r * (1.0 - r * r) + (1.0 + r * r) * sxy - r * (sxx + syy);
    let profile_ll = |r: f64| {
        let d = (1.0 - r) * (1.0 + r);
        -0.5 * log(d) - (sxx + syy - 2.0 * r * sxy) / (2.0 * d)
    };
    const CELLS: usize = 4096;
    let mut best: Option<(f64, f64)> = None;
    let grid = |j: usize| -1.0 + 2.0 * j as f64 / CELLS as f64;
    let mut lo = grid(0);
    let mut f_lo = f(lo);
    for j in 1..=CELLS {
        let hi = grid(j);
        let f_hi = f(hi);
        let interior = |r: f64| r > -1.0 && r < 1.0;
        let root = if f_lo == 0.0 && interior(lo) {
            Some(lo)
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 || b - a <= f64::EPSILON * 2.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            Some(0.5 * (a + b))
        } else {
            None
        };
        if let Some(r) = root.filter(|&r| interior(r)) {
            let ll = profile_ll(r);
            if best.is_none_or(|(_, b)| ll > b) {
                best = Some((r, ll));
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    best.map(|(r, _)| r).ok_or_else(|| Error::Estimation {
        reason: format!("the constant-correlation score has no root in (-1, 1) (S_xx = {sxx}, S_yy = {syy}, S_xy = {sxy})"),
    })
}

/// Warnings attached to a fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum FitWarning {
    /// `beta_hat` is indistinguishable from zero, so `gamma` is not identified.
    /// When this is detected at the warm start, `gamma` is held at the best
    /// grid value and reported as fixed.
    GammaNotIdentified { beta_z: f64 },
    /// The information matrix could not be inverted.
    SingularInformation { direction: String },
    /// The iteration cap was reached before the score vanished.
    IterationLimit { iterations: usize },
    /// No ascent step could be found from the last iterate.
    Stalled,
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub init: Option<Theta>,
    /// Holds `gamma` fixed (power family only).
    pub fixed_gamma: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { init: None, fixed_gamma: None, tolerance: SCORE_TOLERANCE, max_iterations: 100 }
    }
}

/// Result of a maximum likelihood fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamEstimate {
    pub theta: Theta,
    pub family: Family,
    /// `true` for parameters held fixed during the fit.
    pub fixed: [bool; 3],
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Euclidean norm of the free score components at `theta`.
    pub score_norm: f64,
    pub log_likelihood: f64,
    /// Asymptotic covariance of the free parameters in order
    /// `(alpha, beta, gamma)`; `None` when the information is singular.
    pub avar: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<FitWarning>,
}

impl ParamEstimate {
    /// Indices into `(alpha, beta, gamma)` that were estimated.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..3).filter(|&j| !self.fixed[j]).collect()
    }
}

fn feasible(theta: &Theta) -> bool {
    theta.alpha >= ALPHA_FLOOR
        && theta.alpha + theta.beta >= ALPHA_FLOOR
        && theta.gamma >= GAMMA_BOUNDS.0
        && theta.gamma <= GAMMA_BOUNDS.1
        && theta.alpha.is_finite()
        && theta.beta.is_finite()
}

fn with_free(base: &Theta, free: &[usize], values: &[f64]) -> Theta {
    let mut v = base.as_array();
    for (k, &j) in free.iter().enumerate() {
        v[j] = values[k];
    }
    Theta::from_array(v)
}

/// The log-likelihood gradient restricted to `free`.
fn gradient(e: &Evaluation, theta: &Theta, free: &[usize]) -> Vec<f64> {
    let full = [-e.score[0], -e.score[1], -theta.beta * e.score[2]];
    free.iter().map(|&j| full[j]).collect()
}

fn score_norm(e: &Evaluation, free: &[usize]) -> f64 {
    sqrt(free.iter().map(|&j| e.score[j] * e.score[j]).sum())
}

struct Solution {
    theta: Theta,
    eval: Evaluation,
    iterations: usize,
    converged: bool,
    stalled: bool,
}

/// Damped Newton ascent on the log-likelihood over the `free` coordinates,
/// with a finite-difference Hessian and step halving that keeps `m > 0`.
fn newton(sample: &Sample, start: Theta, free: &[usize], opts: &FitOptions) -> Result<Solution> {
    let mut theta = start;
    let mut eval = match sample.evaluate(&theta) {
        Some(e) if feasible(&theta) => e,
        _ => return Err(Error::Estimation { reason: format!("infeasible starting point {theta:?}") }),
    };
    let k = free.len();
    let mut iterations = 0;
    loop {
        let norm = score_norm(&eval, free);
        if norm <= opts.tolerance {
            return Ok(Solution { theta, eval, iterations, converged: true, stalled: false });
        }
        if iterations >= opts.max_iterations {
            return Ok(Solution { theta, eval, iterations, converged: false, stalled: false });
        }
        iterations += 1;
        let g = gradient(&eval, &theta, free);
        let hessian = fd_hessian(sample, &theta, free)?;
        // direction solves (-H + mu I) d = g
        let mut neg: Matrix = hessian.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let diag_scale = (0..k).map(|i| neg[i][i].abs()).fold(0.0_f64, f64::max).max(1e-12);
        let mut mu = 0.0;
        let direction = loop {
            if let Some(d) = linalg::cholesky_solve(&neg, &g) {
                break d;
            }
            let step = if mu == 0.0 { 1e-8 * diag_scale } else { 9.0 * mu };
            for (i, row) in neg.iter_mut().enumerate() {
                row[i] += step;
            }
            mu += step;
            if mu > 1e12 * diag_scale {
                return Err(Error::Estimation { reason: "no positive definite Newton system".into() });
            }
        };
        let current: Vec<f64> = free.iter().map(|&j| theta.as_array()[j]).collect();
        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..60 {
            let candidate: Vec<f64> = current.iter().zip(&direction).map(|(c, d)| c + step * d).collect();
            let trial = with_free(&theta, free, &candidate);
            if feasible(&trial) {
                if let Some(e) = sample.evaluate(&trial) {
                    let slack = 1e-11 * (1.0 + eval.log_likelihood.abs());
                    let better_ll = e.log_likelihood >= eval.log_likelihood - slack;
                    let better_score = step == 1.0 && score_norm(&e, free) < norm;
                    if better_ll || better_score {
                        accepted = Some((trial, e));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((t, e)) => {
                theta = t;
                eval = e;
            }
            None => return Ok(Solution { theta, eval, iterations, converged: false, stalled: true }),
        }
    }
}

fn fd_hessian(sample: &Sample, theta: &Theta, free: &[usize]) -> Result<Matrix> {
    let k = free.len();
    let mut h = linalg::zeros(k);
    for (c, &j) in free.iter().enumerate() {
        let v = theta.as_array();
        let step = 1e-5 * v[j].abs().max(1e-2);
        let shifted = |delta: f64| {
            let mut w = v;
            w[j] += delta;
            let t = Theta::from_array(w);
            if feasible(&t) {
                sample.evaluate(&t).map(|e| gradient(&e, &t, free))
            } else {
                None
            }
        };
        let column = match (shifted(step), shifted(-step)) {
            (Some(p), Some(m)) => p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * step)).collect::<Vec<_>>(),
            (Some(p), None) => {
                let base = gradient(&sample.evaluate(theta).expect("feasible"), theta, free);
                p.iter().zip(&base).map(|(a, b)| (a - b) / step).collect()
            }
            (None, Some(m)) => {
                let base = gradient(&sample.evaluate(theta).expect("feasible"), theta, free);
                base.iter().zip(&m).map(|(a, b)| (a - b) / step).collect()
            }
            (None, None) => return Err(Error::Estimation { reason: "Hessian step left the feasible set".into() }),
        };
        for r in 0..k {
            h[r][c] = column[r];
        }
    }
    for r in 0..k {
        for c in 0..r {
            let s = 0.5 * (h[r][c] + h[c][r]);
            h[r][c] = s;
            h[c][r] = s;
        }
    }
    Ok(h)
}

/// Maximum likelihood fit of a parametric sub-family.
///
/// Power-family fits without `init` are warm-started from the best of a
/// coarse `gamma` grid, each point fitted in `(alpha, beta)` from the
/// closed-form constant fit.
pub fn mle_fit(data: &[(f64, f64)], family: Family, opts: &FitOptions) -> Result<ParamEstimate> {
    if data.len() < 30 {
        return Err(Error::domain(format!("at least 30 observations are required, got {}", data.len())));
    }
    let sample = Sample::new(data)?;
    let n = data.len();
    let mut fixed = family.default_free().map(|f| !f);
    let mut base_gamma = 1.0;
    if let Some(g) = opts.fixed_gamma {
        if family != Family::Power {
            return Err(Error::domain("fixed_gamma applies to the power family only"));
        }
        if !(g > 0.0) {
            return Err(Error::domain(format!("gamma must be positive, got {g}")));
        }
        fixed[2] = true;
        base_gamma = g;
    }
    let mut free: Vec<usize> = (0..3).filter(|&j| !fixed[j]).collect();
    let mut gamma_warning = None;
    let constant = constant_m_mle(data, n as u64)?;

    let solution = if family == Family::Constant {
        let theta = Theta::new(constant.m_hat, 0.0, 1.0);
        if theta.alpha < ALPHA_FLOOR {
            return Err(Error::ConstraintViolation { reason: format!("fitted alpha = {} is at the positivity floor", theta.alpha) });
        }
        // polish the closed-form root on the full likelihood
        newton(&sample, theta, &free, opts)?
    } else if let Some(init) = opts.init {
        let start = Theta::new(init.alpha, init.beta, if fixed[2] { base_gamma } else { init.gamma });
        newton(&sample, start, &free, opts)?
    } else if !fixed[2] {
        let mut best: Option<Solution> = None;
        for &g in &GAMMA_GRID {
            let start = Theta::new(constant.m_hat.max(10.0 * ALPHA_FLOOR), 0.0, g);
            let s = newton(&sample, start, &[0, 1], opts)?;
            if best.as_ref().is_none_or(|b| s.eval.log_likelihood > b.eval.log_likelihood) {
                best = Some(s);
            }
        }
        let warm = best.expect("grid is nonempty");
        let beta_z = beta_z_score(&warm.theta, n);
        if !(beta_z.abs() >= IDENTIFICATION_Z) {
            // the likelihood is flat in gamma; keep the grid value instead of
            // letting the solver drift to a bound
            fixed[2] = true;
            free.pop();
            gamma_warning = Some(FitWarning::GammaNotIdentified { beta_z });
            warm
        } else {
            let mut s = newton(&sample, warm.theta, &free, opts)?;
            s.iterations += warm.iterations;
            s
        }
    } else {
        let start = Theta::new(constant.m_hat.max(10.0 * ALPHA_FLOOR), 0.0, base_gamma);
        newton(&sample, start, &free, opts)?
    };

    let theta = solution.theta;
    let m_min = theta.alpha.min(theta.alpha + theta.beta);
    if m_min <= 1.0001 * ALPHA_FLOOR {
        return Err(Error::ConstraintViolation {
            reason: format!("fitted profile touches zero on [0, 1] (min m = {m_min:e})"),
        });
    }
    let mut warnings = Vec::new();
    if !solution.converged {
        if solution.stalled {
            warnings.push(FitWarning::Stalled);
        } else {
            warnings.push(FitWarning::IterationLimit { iterations: solution.iterations });
        }
    }
    let avar = match asymptotic_covariance(&theta, &free, n) {
        Ok(a) => Some(a),
        Err(Error::SingularInformation { direction }) => {
            warnings.push(FitWarning::SingularInformation { direction });
            None
        }
        Err(e) => return Err(e),
    };
    if let Some(w) = gamma_warning {
        warnings.push(w);
    } else if family == Family::Power && !fixed[2] {
        let beta_z = beta_z_score(&theta, n);
        if !(beta_z.abs() >= IDENTIFICATION_Z) {
            warnings.push(FitWarning::GammaNotIdentified { beta_z });
        }
    }
    Ok(ParamEstimate {
        theta,
        family,
        fixed,
        n,
        converged: solution.converged,
        iterations: solution.iterations,
        score_norm: score_norm(&solution.eval, &free),
        log_likelihood: solution.eval.log_likelihood,
        avar,
        warnings,
    })
}

/// `beta / se(beta)` from the `(alpha, beta)` information at `theta`;
/// zero when the information is unavailable.
fn beta_z_score(theta: &Theta, n: usize) -> f64 {
    match asymptotic_covariance(theta, &[0, 1], n) {
        Ok(cov) if cov[1][1] > 0.0 => theta.beta / sqrt(cov[1][1]),
        _ => 0.0,
    }
}

/// Adaptive rule shared by the covariance integrals.
fn covariance_quadrature() -> Adaptive {
    Adaptive::new(15, 1e-12)
}

/// `Sigma` with entries `int w_j w_k / (2 m^2)`, `w = (1, t^g, t^g log t)`.
pub fn sigma_matrix(theta: &Theta) -> Result<[[f64; 3]; 3]> {
    sigma_matrix_with(theta, &covariance_quadrature())
}

pub fn sigma_matrix_with(theta: &Theta, quad: &Adaptive) -> Result<[[f64; 3]; 3]> {
    theta.check_positive()?;
    let mut s = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in j..3 {
            let v = quad
                .integrate(
                    |t| {
                        let tg = libm::pow(t, theta.gamma);
                        let w = [1.0, tg, tg * log(t)];
                        let m = theta.alpha + theta.beta * tg;
                        w[j] * w[k] / (2.0 * m * m)
                    },
                    0.0,
                    1.0,
                )?
                .value;
            s[j][k] = v;
            s[k][j] = v;
        }
    }
    Ok(s)
}

/// `Delta_hat`: the limit Jacobian of the score, whose third column
/// carries the `beta` factor of `dm / d gamma`.
pub fn delta_hat_matrix(theta: &Theta) -> Result<[[f64; 3]; 3]> {
    delta_hat_matrix_with(theta, &covariance_quadrature())
}

pub fn delta_hat_matrix_with(theta: &Theta, quad: &Adaptive) -> Result<[[f64; 3]; 3]> {
    theta.check_positive()?;
    let mut d = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            d[j][k] = quad
                .integrate(
                    |t| {
                        let tg = libm::pow(t, theta.gamma);
                        let lt = log(t);
                        let row = [1.0, tg, tg * lt];
                        let col = [1.0, tg, theta.beta * tg * lt];
                        let m = theta.alpha + theta.beta * tg;
                        row[j] * col[k] / (2.0 * m * m)
                    },
                    0.0,
                    1.0,
                )?
                .value;
        }
    }
    Ok(d)
}

/// Both matrices of the asymptotic normality statement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CovMatrices {
    pub sigma: [[f64; 3]; 3],
    pub delta_hat: [[f64; 3]; 3],
}

pub fn cov_matrices(theta: &Theta) -> Result<CovMatrices> {
    Ok(CovMatrices { sigma: sigma_matrix(theta)?, delta_hat: delta_hat_matrix(theta)? })
}

/// `Delta_hat^{-1} Sigma Delta_hat^{-T} / n` restricted to `free`.
pub fn asymptotic_covariance(theta: &Theta, free: &[usize], n: usize) -> Result<Vec<Vec<f64>>> {
    if free.is_empty() || n == 0 {
        return Err(Error::domain("need at least one free parameter and n > 0"));
    }
    let sigma = sigma_matrix(theta)?;
    let delta = if free.contains(&2) { delta_hat_matrix(theta)? } else { sigma };
    let pick = |m: &[[f64; 3]; 3]| -> Matrix { free.iter().map(|&r| free.iter().map(|&c| m[r][c]).collect()).collect() };
    let (s, d) = (pick(&sigma), pick(&delta));
    let inv = linalg::inverse(&d, 1e-10).map_err(|col| {
        let j = free[col];
        let direction = if j == 2 || (free.contains(&2) && theta.beta.abs() < 1e-8) {
            String::from("gamma (beta is near 0, so gamma is not identified)")
        } else {
            format!("{}", PARAM_NAMES[j])
        };
        Error::SingularInformation { direction }
    })?;
    let mut avar = linalg::matmul(&linalg::matmul(&inv, &s), &linalg::transpose(&inv));
    let nf = n as f64;
    for v in avar.iter_mut().flatten() {
        *v /= nf;
    }
    // symmetrize away rounding
    for r in 0..free.len() {
        for c in 0..r {
            let v = 0.5 * (avar[r][c] + avar[c][r]);
            avar[r][c] = v;
            avar[c][r] = v;
        }
    }
    Ok(avar)
}

/// Wald interval and test of one parameter.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamInterval {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub null: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaldReport {
    pub level: f64,
    pub multiplier: f64,
    pub intervals: Vec<ParamInterval>,
}

/// Two-sided normal p-value of a z statistic.
pub fn two_sided_p_value(z: f64) -> f64 {
    erfc(z.abs() / core::f64::consts::SQRT_2)
}

/// Intervals `theta_j +- z_{(1+level)/2} sqrt(avar_jj)` for the free
/// parameters, with z statistics against `null` when given.
pub fn wald_report(estimate: &ParamEstimate, level: f64, null: Option<&Theta>) -> Result<WaldReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if !estimate.converged {
        return Err(Error::Estimation { reason: "the fit did not converge".into() });
    }
    let avar = estimate.avar.as_ref().ok_or_else(|| Error::SingularInformation {
        direction: estimate
            .warnings
            .iter()
            .find_map(|w| match w {
                FitWarning::SingularInformation { direction } => Some(direction.clone()),
                _ => None,
            })
            .unwrap_or_else(|| "unknown".into()),
    })?;
    let multiplier = std_normal_quantile(0.5 * (1.0 + level))?;
    let values = estimate.theta.as_array();
    let nulls = null.map(|t| t.as_array());
    let intervals = estimate
        .free_indices()
        .into_iter()
        .enumerate()
        .map(|(k, j)| {
            let var = avar[k][k];
            if var < -1e-12 * (1.0 + values[j].abs()) {
                return Err(Error::Estimation { reason: format!("negative variance for {}", PARAM_NAMES[j]) });
            }
            let se = sqrt(var.max(0.0));
            let null_j = nulls.map(|v| v[j]);
            let z = null_j.map(|h| (values[j] - h) / se);
            Ok(ParamInterval {
                name: PARAM_NAMES[j].into(),
                estimate: values[j],
                std_error: se,
                lower: values[j] - multiplier * se,
                upper: values[j] + multiplier * se,
                null: null_j,
                z,
                p_value: z.map(two_sided_p_value),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WaldReport { level, multiplier, intervals })
}

/// Test of the constant-correlation condition `beta = 0` in `m = alpha + beta s`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstancyTest {
    pub fit: ParamEstimate,
    pub beta_hat: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
}

impl ConstancyTest {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

pub fn test_constant_m(data: &[(f64, f64)]) -> Result<ConstancyTest> {
    let fit = mle_fit(data, Family::Linear, &FitOptions::default())?;
    let avar = fit.avar.as_ref().ok_or_else(|| Error::SingularInformation { direction: "beta".into() })?;
    let se = sqrt(avar[1][1].max(0.0));
    let beta_hat = fit.theta.beta;
    let z = beta_hat / se;
    Ok(ConstancyTest { beta_hat, std_error: se, z, p_value: two_sided_p_value(z), fit })
}

/// Closed-form `Sigma` of the linear family `m = alpha + beta s`.
pub fn linear_family_covariance(alpha: f64, beta: f64) -> Result<[[f64; 2]; 2]> {
    if !(alpha > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    if !(alpha + beta > 0.0) {
        return Err(Error::domain(format!("m(1) = alpha + beta must be positive, got {}", alpha + beta)));
    }
    let b = beta / alpha;
    let a2 = alpha * alpha;
    let s11 = 1.0 / (2.0 * alpha * (alpha + beta));
    let (s12, s22) = if b.abs() < 1e-2 {
        // int_0^1 t^j / (1 + b t)^2 dt = sum_k (-1)^k (k + 1) b^k / (k + j + 1)
        let mut s12 = 0.0;
        let mut s22 = 0.0;
        let mut bk = 1.0;
        for k in 0..24 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let kf = k as f64;
            s12 += sign * (kf + 1.0) * bk / (kf + 2.0);
            s22 += sign * (kf + 1.0) * bk / (kf + 3.0);
            bk *= b;
        }
        (s12 / (2.0 * a2), s22 / (2.0 * a2))
    } else {
        let l = log1p(b);
        let s12 = -1.0 / (2.0 * beta * (alpha + beta)) + l / (2.0 * beta * beta);
        let s22 = (1.0 + alpha / (alpha + beta) - 2.0 * alpha / beta * l) / (2.0 * beta * beta);
        (s12, s22)
    };
    Ok([[s11, s12], [s12, s22]])
}

/// Draws `n` standardized pairs with `rho_i = 1 - m(i/n) / log n`; dataset
/// `replication` of `seed` is reproducible and independent of the others.
pub fn simulate_dataset(profile: &CorrelationProfile, n: u64, seed: u64, replication: u64) -> Result<Vec<(f64, f64)>> {
    let rho = rho_schedule(profile, n)?;
    let key = derive_key(seed, &[replication]);
    Ok(rho
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut rng = CounterRng::block(key, i as u64 + 1);
            normal::mix_pair(r, sqrt((1.0 - r) * (1.0 + r)), &mut rng)
        })
        .collect())
}
