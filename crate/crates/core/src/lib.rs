//! Coverage probability of a LiFi attocell network whose LEDs, placed on a
//! square lattice, are independently thinned to data sources.
//!
//! The analytic path ([`coverage`]) evaluates the interference moment sums
//! in closed form ([`lattice_sums`]) and averages a Gaussian coverage
//! integrand over the attocell. [`montecarlo`] samples thinnings directly
//! and serves as the reference. [`sweep`] drives both from a configuration
//! file and writes CSV curves.

pub mod config;
pub mod coverage;
pub mod error;
pub mod lattice_sums;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
