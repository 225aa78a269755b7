//! Simulation and experiment harness for surrogate-to-target ridgeless regression.
//!
//! Closed-form risks come from `w2s-core`; this crate adds Gaussian sampling,
//! the min-norm fit, Monte Carlo estimates, dense reference formulas, and the
//! `w2s-lab` command line.

pub mod basis;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod montecarlo;
pub mod output;
pub mod reference;
pub mod verify;

pub use error::{LabError, Result};
