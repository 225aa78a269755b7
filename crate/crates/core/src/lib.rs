//! Closed-form risk oracles for surrogate-to-target ridgeless regression.
//!
//! Everything here works in spectral coordinates: a covariance is represented
//! by its eigenvalues, and vectors (ground truth, surrogate parameters) are
//! expressed in the eigenbasis. No `p x p` matrix is ever formed, so the
//! fixed-point statistics can be evaluated for very large `p`.
//!
//! The crate is `no_std` and only needs `alloc`. Simulation, dense reference
//! formulas, and the command-line harness live in the `w2s-lab` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod design;
mod error;
pub mod instance;
pub mod numeric;
pub mod seed;
pub mod spectrum;
pub mod theory;

pub use design::{
    apply_mask, benign_region_check, benign_window, brute_force_mask, cutoff_indices, gain_profile, optimal_mask,
    optimal_mask_from_stats, optimal_surrogate, optimal_surrogate_from_profile, scaling_exponent, ChunkBest,
    GainProfile, MaskSearch, Support, SurrogateKind, SurrogateParam,
};
pub use error::{Error, Result};
pub use instance::ProblemInstance;
pub use spectrum::{
    omega_asymptotic, omega_lower_bound, power_law_signal, power_law_spectrum, solve_tau, solve_tau_with,
    tau_asymptotic, tau_bounds_nonasymptotic, PowerLawParams, SpectralStats, Spectrum, TauInterval, TauSolver,
};
pub use theory::{
    covariance_shift_map, empirical_excess_risk, gamma_fixed_point_residual, gamma_t_sq, omniscient_risk,
    one_stage_risk, one_stage_risk_from_stats, two_stage_risk, two_stage_terms, GammaValue, McMeta, RiskReport,
    RiskSource, TwoStageTerms,
};
