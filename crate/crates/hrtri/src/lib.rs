//! File formats, parallel drivers and the `hrtri` command line for
//! Husler-Reiss limits of bivariate Gaussian triangular arrays.
//!
//! The numerical work lives in [`hrtri_core`]; this crate adds CSV and JSON
//! IO, a thread pool whose results do not depend on its size, and the
//! replicated studies behind the verification suite.

pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod study;

pub use error::{CliError, Result};
