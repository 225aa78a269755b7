//! Closed-form risk estimates in spectral coordinates.
//!
//! With `zeta_i = tau / (l_i + tau)`, `omega = (1/n) sum (1 - zeta_i)^2` and
//! `kappa = p / n`, the min-norm interpolator trained on labels generated by
//! `beta_s` has excess risk against `beta_star`
//!
//! ```text
//! bias     = sum l_i ((1 - zeta_i) beta_s_i - beta_star_i)^2
//! variance = omega (sigma^2 + sum l_i zeta_i^2 beta_s_i^2) / (1 - omega)
//! ```

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};
use crate::instance::ProblemInstance;
use crate::numeric::compensated_sum;
use crate::spectrum::{check_same_dim, solve_tau, SpectralStats, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskSource {
    Theory,
    MonteCarlo,
}

/// Trial count and standard error of a simulated risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMeta {
    pub trials: usize,
    /// `None` when a single trial makes the spread undefined.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
    pub source: RiskSource,
    pub meta: Option<McMeta>,
}

impl RiskReport {
    pub fn theory(bias: f64, variance: f64) -> Self {
        RiskReport { bias, variance, total: bias + variance, source: RiskSource::Theory, meta: None }
    }

    pub fn monte_carlo(bias: f64, variance: f64, total: f64, meta: McMeta) -> Self {
        RiskReport { bias, variance, total, source: RiskSource::MonteCarlo, meta: Some(meta) }
    }

    pub fn std_error(&self) -> Option<f64> {
        self.meta.and_then(|m| m.std_error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValue {
    pub gamma_sq: f64,
}

fn one_minus_omega(stats: &SpectralStats) -> Result<f64> {
    let d = 1.0 - stats.omega;
    if d > 0.0 && stats.omega >= 0.0 {
        Ok(d)
    } else {
        Err(Error::InternalInconsistency(format!(
            "omega = {} outside [0, 1); stats do not come from a valid fixed point",
            stats.omega
        )))
    }
}

fn check_stats(stats: &SpectralStats, spec: &Spectrum) -> Result<()> {
    check_len(spec.dim(), stats.dim())
}

fn check_noise(sigma_sq: f64) -> Result<()> {
    if sigma_sq.is_finite() && sigma_sq >= 0.0 {
        Ok(())
    } else {
        Err(invalid("sigma_sq", "noise variance must be finite and non-negative"))
    }
}

/// `sum l_i zeta_i^2 v_i^2`
fn shrunk_energy(stats: &SpectralStats, spec: &Spectrum, v: &[f64]) -> f64 {
    let lam = spec.eigenvalues();
    compensated_sum((0..lam.len()).rev().map(|i| {
        let z = stats.zeta[i] * v[i];
        lam[i] * z * z
    }))
}

/// `gamma^2 = kappa (sigma^2 + sum l zeta^2 beta_s^2) / (1 - omega)`.
pub fn gamma_t_sq(
    stats: &SpectralStats,
    spec: &Spectrum,
    beta_s: &[f64],
    sigma_sq: f64,
    p: usize,
) -> Result<GammaValue> {
    check_stats(stats, spec)?;
    check_len(spec.dim(), p)?;
    check_same_dim(spec, beta_s)?;
    check_noise(sigma_sq)?;
    let d = one_minus_omega(stats)?;
    let gamma_sq = stats.kappa() * (sigma_sq + shrunk_energy(stats, spec, beta_s)) / d;
    Ok(GammaValue { gamma_sq })
}

/// Residual of the implicit equation `g = kappa (sigma^2 + B + g n omega / p)`
/// that defines `gamma^2`.
pub fn gamma_fixed_point_residual(
    stats: &SpectralStats,
    spec: &Spectrum,
    beta_s: &[f64],
    sigma_sq: f64,
    gamma_sq: f64,
) -> Result<f64> {
    check_stats(stats, spec)?;
    check_same_dim(spec, beta_s)?;
    let p = spec.dim() as f64;
    let inner = sigma_sq + shrunk_energy(stats, spec, beta_s) + gamma_sq * stats.n as f64 * stats.omega / p;
    Ok(gamma_sq - stats.kappa() * inner)
}

/// Risk of the target model trained on `beta_s`-generated labels, given precomputed stats.
pub fn one_stage_risk_from_stats(
    stats: &SpectralStats,
    spec: &Spectrum,
    beta_star: &[f64],
    beta_s: &[f64],
    sigma_sq: f64,
) -> Result<RiskReport> {
    check_stats(stats, spec)?;
    check_same_dim(spec, beta_star)?;
    check_same_dim(spec, beta_s)?;
    check_noise(sigma_sq)?;
    let d = one_minus_omega(stats)?;
    let lam = spec.eigenvalues();
    let bias = compensated_sum((0..lam.len()).rev().map(|i| {
        let e = stats.retained[i] * beta_s[i] - beta_star[i];
        lam[i] * e * e
    }));
    let variance = stats.omega * (sigma_sq + shrunk_energy(stats, spec, beta_s)) / d;
    Ok(RiskReport::theory(bias, variance))
}

pub fn one_stage_risk(
    spec: &Spectrum,
    beta_star: &[f64],
    beta_s: &[f64],
    n: usize,
    sigma_sq: f64,
) -> Result<RiskReport> {
    check_same_dim(spec, beta_star)?;
    check_same_dim(spec, beta_s)?;
    let stats = solve_tau(spec, n)?;
    one_stage_risk_from_stats(&stats, spec, beta_star, beta_s, sigma_sq)
}

/// `(sigma^2 omega + B) / (1 - omega)` with `B = sum l zeta^2 beta_bar^2`.
///
/// Shares the one-stage code path with `beta_s = beta_star`, so the two agree exactly.
pub fn omniscient_risk(spec: &Spectrum, beta_bar: &[f64], sigma_sq: f64, n: usize) -> Result<RiskReport> {
    one_stage_risk(spec, beta_bar, beta_bar, n, sigma_sq)
}

/// Intermediate quantities of the two-stage risk.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageTerms {
    pub stats_s: SpectralStats,
    pub stats_t: SpectralStats,
    pub gamma_s_sq: f64,
    pub expected_gamma_t_sq: f64,
    /// Bias: `sum l_t (1 - (1 - zeta_t)(1 - zeta_s))^2 beta^2`.
    pub term1: f64,
    /// Target-stage variance: `E[gamma_t^2] n omega_t / p`.
    pub term2: f64,
    /// Surrogate noise carried through the target fit.
    pub term3: f64,
}

fn stage_stats(spec: &Spectrum, count: usize, stage: &str) -> Result<SpectralStats> {
    let p = spec.dim();
    if count >= p {
        return Err(Error::HypothesisViolated(format!(
            "{stage} stage requires fewer samples than features ({count} >= {p})"
        )));
    }
    solve_tau(spec, count)
}

/// Full breakdown of [`two_stage_risk`].
pub fn two_stage_terms(inst: &ProblemInstance) -> Result<TwoStageTerms> {
    let spec_t = inst.spectrum_t();
    let spec_s = inst.spectrum_s();
    let stats_s = stage_stats(spec_s, inst.m(), "surrogate")?;
    let stats_t = stage_stats(spec_t, inst.n(), "target")?;
    let d_s = one_minus_omega(&stats_s)?;
    let d_t = one_minus_omega(&stats_t)?;
    let beta = inst.beta_star();
    let lt = spec_t.eigenvalues();
    let ls = spec_s.eigenvalues();
    let p = lt.len() as f64;
    let idx = || (0..lt.len()).rev();

    let gamma_s_sq = stats_s.kappa() * (inst.sigma_s_sq() + shrunk_energy(&stats_s, spec_s, beta)) / d_s;

    let (zt, rt) = (&stats_t.zeta, &stats_t.retained);
    let (zs, rs) = (&stats_s.zeta, &stats_s.retained);
    let term1 = compensated_sum(idx().map(|i| {
        let e = (zt[i] + rt[i] * zs[i]) * beta[i];
        lt[i] * e * e
    }));
    let signal = compensated_sum(idx().map(|i| {
        let e = zt[i] * rs[i] * beta[i];
        lt[i] * e * e
    }));
    let noise_t = compensated_sum(idx().map(|i| {
        let e = zt[i] * rs[i];
        lt[i] * e * e / ls[i]
    }));
    let noise_r = compensated_sum(idx().map(|i| {
        let e = rt[i] * rs[i];
        lt[i] * e * e / ls[i]
    }));

    let inner = inst.sigma_t_sq() + signal + gamma_s_sq / p * noise_t;
    let expected_gamma_t_sq = stats_t.kappa() * inner / d_t;
    let term2 = expected_gamma_t_sq * stats_t.n as f64 * stats_t.omega / p;
    let term3 = gamma_s_sq / p * noise_r;
    Ok(TwoStageTerms { stats_s, stats_t, gamma_s_sq, expected_gamma_t_sq, term1, term2, term3 })
}

/// Risk of the target model trained on labels from a surrogate fitted on `m` samples.
pub fn two_stage_risk(inst: &ProblemInstance) -> Result<RiskReport> {
    let t = two_stage_terms(inst)?;
    Ok(RiskReport::theory(t.term1, t.term2 + t.term3))
}

/// `sqrt(l_s / l_t) beta_star`: the surrogate parameter whose model-shift
/// instance corresponds to the covariance-shift pair `(spec_s, spec_t)`.
pub fn covariance_shift_map(beta_star: &[f64], spec_s: &Spectrum, spec_t: &Spectrum) -> Result<Vec<f64>> {
    check_len(spec_t.dim(), spec_s.dim())?;
    check_same_dim(spec_t, beta_star)?;
    Ok(beta_star
        .iter()
        .zip(spec_s.eigenvalues().iter().zip(spec_t.eigenvalues()))
        .map(|(b, (s, t))| libm::sqrt(s / t) * b)
        .collect())
}

/// `sum_j l_j (beta_hat_j - beta_star_j)^2`.
pub fn empirical_excess_risk(beta_hat: &[f64], beta_star: &[f64], spec: &Spectrum) -> Result<f64> {
    check_same_dim(spec, beta_hat)?;
    check_same_dim(spec, beta_star)?;
    let lam = spec.eigenvalues();
    Ok(compensated_sum((0..lam.len()).rev().map(|i| {
        let e = beta_hat[i] - beta_star[i];
        lam[i] * e * e
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::power_law_spectrum;
    use alloc::vec;

    fn close(a: f64, b: f64, rtol: f64) -> bool {
        libm::fabs(a - b) <= rtol * libm::fmax(libm::fmax(libm::fabs(a), libm::fabs(b)), 1e-300)
    }

    fn two_point() -> (Spectrum, SpectralStats) {
        let s = Spectrum::new(vec![1.0, 0.25]).unwrap();
        let st = solve_tau(&s, 1).unwrap();
        (s, st)
    }

    #[test]
    fn gamma_examples() {
        let (s, st) = two_point();
        assert_eq!(gamma_t_sq(&st, &s, &[0.0, 0.0], 0.0, 2).unwrap().gamma_sq, 0.0);
        let g = gamma_t_sq(&st, &s, &[1.0, 1.0], 0.0, 2).unwrap().gamma_sq;
        assert!(close(g, 1.0, 1e-12));
        let r = gamma_fixed_point_residual(&st, &s, &[1.0, 1.0], 0.0, g).unwrap();
        assert!(r.abs() < 1e-10);
        assert!(gamma_t_sq(&st, &s, &[1.0, 1.0], 0.0, 3).is_err());
    }

    #[test]
    fn gamma_rejects_invalid_omega() {
        let (s, mut st) = two_point();
        st.omega = 1.0;
        assert!(matches!(gamma_t_sq(&st, &s, &[1.0, 1.0], 0.0, 2), Err(Error::InternalInconsistency(_))));
    }

    #[test]
    fn one_stage_examples() {
        let s = Spectrum::new(vec![1.0, 0.25]).unwrap();
        let r = one_stage_risk(&s, &[1.0, 1.0], &[1.0, 1.0], 1, 0.0).unwrap();
        assert!(close(r.total, 0.5, 1e-12));
        assert_eq!(r.source, RiskSource::Theory);
        assert!(r.meta.is_none());
        assert!(matches!(one_stage_risk(&s, &[1.0, 1.0], &[1.0, 1.0], 2, 0.0), Err(Error::NoSolution { .. })));
        assert!(one_stage_risk(&s, &[1.0], &[1.0, 1.0], 1, 0.0).is_err());
    }

    #[test]
    fn omniscient_examples() {
        let s = Spectrum::new(vec![1.0, 0.25]).unwrap();
        assert_eq!(omniscient_risk(&s, &[0.0, 0.0], 0.0, 1).unwrap().total, 0.0);
        assert!(close(omniscient_risk(&s, &[1.0, 1.0], 0.0, 1).unwrap().total, 0.5, 1e-12));
        let iso = Spectrum::isotropic(4, 1.0).unwrap();
        assert!(close(omniscient_risk(&iso, &[0.0; 4], 1.0, 2).unwrap().total, 1.0, 1e-12));
    }

    #[test]
    fn omniscient_closed_form() {
        let s = power_law_spectrum(80, 2.0).unwrap();
        let b: Vec<f64> = (1..=80).map(|i| 1.0 / i as f64).collect();
        let st = solve_tau(&s, 30).unwrap();
        let big_b = shrunk_energy(&st, &s, &b);
        let want = (0.3 * st.omega + big_b) / (1.0 - st.omega);
        assert!(close(omniscient_risk(&s, &b, 0.3, 30).unwrap().total, want, 1e-12));
    }

    #[test]
    fn two_stage_zero_case() {
        let s = power_law_spectrum(10, 2.0).unwrap();
        let inst = ProblemInstance::shared(s, vec![0.0; 10], 0.0, 0.0, 4, 4).unwrap();
        assert_eq!(two_stage_risk(&inst).unwrap().total, 0.0);
    }

    #[test]
    fn two_stage_hypotheses() {
        let s = power_law_spectrum(10, 2.0).unwrap();
        let inst = ProblemInstance::shared(s.clone(), vec![1.0; 10], 0.0, 0.0, 4, 10).unwrap();
        assert!(matches!(two_stage_risk(&inst), Err(Error::HypothesisViolated(_))));
        let inst = ProblemInstance::shared(s, vec![1.0; 10], 0.0, 0.0, 12, 4).unwrap();
        assert!(matches!(two_stage_risk(&inst), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn two_stage_approaches_one_stage_as_m_fills() {
        let p = 2000;
        let s = power_law_spectrum(p, 1.5).unwrap();
        let b = vec![1.0; p];
        let inst = ProblemInstance::shared(s.clone(), b.clone(), 0.05, 0.0, 200, p - 1).unwrap();
        let two = two_stage_risk(&inst).unwrap().total;
        let one = one_stage_risk(&s, &b, &b, 200, 0.05).unwrap().total;
        assert!(close(two, one, 1e-2), "{two} vs {one}");
    }

    #[test]
    fn covariance_shift_examples() {
        let t = power_law_spectrum(3, 2.0).unwrap();
        let b = [1.0, -2.0, 0.5];
        assert_eq!(covariance_shift_map(&b, &t, &t).unwrap(), b.to_vec());
        let s = t.scaled(4.0).unwrap();
        assert_eq!(covariance_shift_map(&b, &s, &t).unwrap(), vec![2.0, -4.0, 1.0]);
    }

    #[test]
    fn excess_risk_examples() {
        let s = Spectrum::new(vec![1.0, 0.25]).unwrap();
        assert_eq!(empirical_excess_risk(&[1.0, 2.0], &[1.0, 2.0], &s).unwrap(), 0.0);
        assert_eq!(empirical_excess_risk(&[1.0, 2.0], &[0.0, 0.0], &s).unwrap(), 2.0);
        assert!(empirical_excess_risk(&[1.0], &[0.0, 0.0], &s).is_err());
    }
}
