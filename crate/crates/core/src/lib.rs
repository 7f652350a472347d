//! Limit theory for componentwise maxima of independent, non-identically
//! distributed bivariate Gaussian triangular arrays.
//!
//! Row `n` of the array holds `n` independent pairs `(X_ni, Y_ni)` with
//! standard normal margins and correlation `rho_ni = 1 - m(i/n) / log n`
//! for a positive profile `m` on `[0, 1]`. This crate provides:
//!
//! * [`normal`]: Gaussian primitives and the norming constant `b_n`.
//! * [`limits`]: the Gumbel, Hüsler-Reiss and mixed limit laws plus their
//!   second-order correction terms.
//! * [`sim`]: reproducible simulation of array rows and Monte Carlo
//!   estimation of the joint distribution of normalized maxima.
//! * [`inference`]: score equations, maximum likelihood fitting of
//!   `m(s) = alpha + beta * s^gamma`, asymptotic covariances and tests.
//! * [`data`]: paired series, log-returns and prefix correlations.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel drivers live in the `hrtri` crate.
#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod inference;
pub mod limits;
mod linalg;
pub mod normal;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod ziggurat;

pub use error::{Error, Result};
pub use profile::CorrelationProfile;
