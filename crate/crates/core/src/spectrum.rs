//! Covariance spectra, the effective-regularization fixed point, and its
//! power-law approximations.
//!
//! The central object is `tau`, the unique positive root of
//!
//! ```text
//! sum_i l_i / (l_i + tau) = n,        1 <= n < p
//! ```
//!
//! From it follow the per-coordinate shrinkage factors `zeta_i = tau / (l_i + tau)`
//! and the variance-inflation statistic `omega = (1/n) sum_i (1 - zeta_i)^2`.
//!
//! All sums run over the spectrum tail first (smallest eigenvalue first) with
//! compensated accumulation, so results are reproducible bit-for-bit and do
//! not degrade when the tail eigenvalues approach the denormal range.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{check_len, invalid, Error, Result};
use crate::numeric::compensated_sum;

/// Eigenvalues of a covariance, positive and sorted non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(invalid("eigenvalues", "spectrum must have at least one entry"));
        }
        for (i, &l) in eigenvalues.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(invalid("eigenvalues", format!("entry {i} = {l} is not a positive finite number")));
            }
        }
        if let Some(i) = eigenvalues.windows(2).position(|w| w[1] > w[0]) {
            return Err(invalid(
                "eigenvalues",
                format!("entries must be non-increasing (entry {} > entry {i})", i + 1),
            ));
        }
        Ok(Spectrum { eigenvalues })
    }

    /// `p` copies of `value`.
    pub fn isotropic(p: usize, value: f64) -> Result<Self> {
        Spectrum::new(alloc::vec![value; p])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Feature dimension `p`.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_isotropic(&self) -> bool {
        self.eigenvalues[0] == self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// The same spectrum multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("c", "scale must be positive and finite"));
        }
        Spectrum::new(self.eigenvalues.iter().map(|l| l * c).collect())
    }

    /// `sum_i l_i / (l_i + tau)`, accumulated tail first.
    pub fn effective_dof(&self, tau: f64) -> f64 {
        compensated_sum(self.eigenvalues.iter().rev().map(|&l| l / (l + tau)))
    }
}

/// Power-law exponents: eigenvalues `i^-alpha` and signal energy `l_i b_i^2 = i^-beta_exp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawParams {
    pub alpha: f64,
    pub beta_exp: Option<f64>,
}

impl PowerLawParams {
    pub fn new(alpha: f64, beta_exp: Option<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if let Some(b) = beta_exp {
            if !(b.is_finite() && b > 1.0) {
                return Err(invalid("beta_exp", format!("must be > 1, got {b}")));
            }
        }
        Ok(PowerLawParams { alpha, beta_exp })
    }

    pub fn spectrum(&self, p: usize) -> Result<Spectrum> {
        power_law_spectrum(p, self.alpha)
    }

    pub fn signal(&self, p: usize) -> Result<Vec<f64>> {
        let b = self.beta_exp.ok_or_else(|| invalid("beta_exp", "signal exponent not set"))?;
        power_law_signal(p, self.alpha, b)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must be > 1, got {alpha}")))
    }
}

/// `l_i = i^-alpha` for `i = 1..=p`.
pub fn power_law_spectrum(p: usize, alpha: f64) -> Result<Spectrum> {
    check_alpha(alpha)?;
    if p < 1 {
        return Err(invalid("p", "must be at least 1"));
    }
    Spectrum::new((1..=p).map(|i| libm::pow(i as f64, -alpha)).collect())
}

/// Ground truth in spectral coordinates with `l_i b_i^2 = i^-beta_exp`, entries non-negative.
pub fn power_law_signal(p: usize, alpha: f64, beta_exp: f64) -> Result<Vec<f64>> {
    PowerLawParams::new(alpha, Some(beta_exp))?;
    if p < 1 {
        return Err(invalid("p", "must be at least 1"));
    }
    Ok((1..=p).map(|i| libm::sqrt(libm::pow(i as f64, alpha - beta_exp))).collect())
}

/// Fixed-point statistics for a spectrum at sample size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralStats {
    pub tau: f64,
    /// `tau / (l_i + tau)`, non-decreasing along the spectrum.
    pub zeta: Vec<f64>,
    /// `l_i / (l_i + tau) = 1 - zeta_i`, evaluated without cancellation.
    pub retained: Vec<f64>,
    pub omega: f64,
    pub n: usize,
}

impl SpectralStats {
    /// Builds the statistics at an arbitrary `tau` (no fixed-point check).
    pub fn at_tau(spec: &Spectrum, n: usize, tau: f64) -> Self {
        let lam = spec.eigenvalues();
        let zeta: Vec<f64> = lam.iter().map(|&l| tau / (l + tau)).collect();
        let retained: Vec<f64> = lam.iter().map(|&l| l / (l + tau)).collect();
        let omega = compensated_sum(retained.iter().rev().map(|r| r * r)) / n as f64;
        SpectralStats { tau, zeta, retained, omega, n }
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    /// Aspect ratio `kappa = p / n`.
    pub fn kappa(&self) -> f64 {
        self.dim() as f64 / self.n as f64
    }

    /// `sum (1 - zeta)^2 / sum (1 - zeta)`; equals `omega` at the fixed point.
    pub fn omega_ratio(&self) -> f64 {
        let num = compensated_sum(self.retained.iter().rev().map(|r| r * r));
        let den = compensated_sum(self.retained.iter().rev().copied());
        num / den
    }

    /// `sum_i (1 - zeta_i) - n`.
    pub fn residual(&self) -> f64 {
        compensated_sum(self.retained.iter().rev().copied()) - self.n as f64
    }
}

/// Tolerances for the `tau` bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSolver {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
}

impl Default for TauSolver {
    fn default() -> Self {
        TauSolver { rtol: 1e-12, atol: 1e-12, max_iter: 200 }
    }
}

impl TauSolver {
    /// Residual bound `atol + rtol * n`.
    pub fn tolerance(&self, n: usize) -> f64 {
        self.atol + self.rtol * n as f64
    }

    pub fn solve(&self, spec: &Spectrum, n: usize) -> Result<SpectralStats> {
        let p = spec.dim();
        if n < 1 {
            return Err(invalid("n", "sample count must be at least 1"));
        }
        if n >= p {
            return Err(Error::NoSolution { n, p });
        }
        let lam = spec.eigenvalues();
        let target = n as f64;
        let tol = self.tolerance(n);

        // f is continuous and strictly decreasing from p (tau -> 0) to 0.
        let mut lo = libm::fmax(lam[p - 1] * f64::EPSILON, f64::MIN_POSITIVE);
        let mut hi = lam[0] * p as f64 / target;
        let f_lo = spec.effective_dof(lo) - target;
        let f_hi = spec.effective_dof(hi) - target;
        if !(f_lo >= 0.0 && f_hi <= 0.0) {
            return Err(Error::InternalInconsistency(format!(
                "bracket [{lo:e}, {hi:e}] does not enclose the root (f = {f_lo:e}, {f_hi:e})"
            )));
        }
        // Bisect until the bracket is exhausted in floating point; the residual
        // test alone would leave tau loose by |f'(tau)|^-1 times the tolerance.
        let mut best = if f_lo.abs() <= f_hi.abs() { (lo, f_lo.abs()) } else { (hi, f_hi.abs()) };
        let mut iterations = 0;
        while iterations < self.max_iter {
            // The bracket spans many decades, so split it geometrically.
            let mid = libm::sqrt(lo) * libm::sqrt(hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            iterations += 1;
            let r = spec.effective_dof(mid) - target;
            if r.abs() < best.1 {
                best = (mid, r.abs());
            }
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best.1 <= tol {
            Ok(SpectralStats::at_tau(spec, n, best.0))
        } else {
            Err(Error::NonConvergence { iterations, residual: best.1 })
        }
    }
}

/// Solves the fixed point with the default tolerances (`rtol = atol = 1e-12`, 200 iterations).
pub fn solve_tau(spec: &Spectrum, n: usize) -> Result<SpectralStats> {
    TauSolver::default().solve(spec, n)
}

pub fn solve_tau_with(spec: &Spectrum, n: usize, solver: &TauSolver) -> Result<SpectralStats> {
    solver.solve(spec, n)
}

/// `(pi / (alpha sin(pi/alpha)))^alpha`
fn tau_constant(alpha: f64) -> f64 {
    libm::pow(PI / (alpha * libm::sin(PI / alpha)), alpha)
}

/// Large-`p` approximation `tau ~ c n^-alpha`, `c = (pi / (alpha sin(pi/alpha)))^alpha`.
pub fn tau_asymptotic(alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 1 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(tau_constant(alpha) * libm::pow(n as f64, -alpha))
}

/// Large-`p`, large-`n` limit of `omega` for `l_i = i^-alpha`.
pub fn omega_asymptotic(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((alpha - 1.0) / alpha)
}

/// Closed interval for `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauInterval {
    pub lower: f64,
    pub upper: f64,
}

impl TauInterval {
    pub fn contains(&self, tau: f64) -> bool {
        self.lower <= tau && tau <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `(3 + 2^-alpha) / (4 + 2^-(alpha-2))`
fn k_upper(alpha: f64) -> f64 {
    (3.0 + libm::pow(2.0, -alpha)) / (4.0 + libm::pow(2.0, -(alpha - 2.0)))
}

/// `n + 1 + (p + 1) / (alpha - 1)`
fn shifted_count(alpha: f64, p: usize, n: usize) -> f64 {
    n as f64 + 1.0 + (p as f64 + 1.0) / (alpha - 1.0)
}

/// Finite-`p` bracket for `tau` on `l_i = i^-alpha`, valid when `n < p k`.
///
/// Inverts `c n^alpha <= 1/tau <= c (n + 1 + (p+1)/(alpha-1))^alpha` with
/// `c = (alpha sin(pi/alpha) / pi)^alpha`.
pub fn tau_bounds_nonasymptotic(alpha: f64, p: usize, n: usize) -> Result<TauInterval> {
    check_alpha(alpha)?;
    if n < 1 || p < 1 {
        return Err(invalid("n", "n and p must be at least 1"));
    }
    let k = k_upper(alpha);
    if n as f64 >= p as f64 * k {
        return Err(Error::HypothesisViolated(format!(
            "requires n < p k = {:.4} (k = {k:.6}), got n = {n}",
            p as f64 * k
        )));
    }
    let c = 1.0 / tau_constant(alpha);
    let inv_lower = c * libm::pow(n as f64, alpha);
    let inv_upper = c * libm::pow(shifted_count(alpha, p, n), alpha);
    Ok(TauInterval { lower: 1.0 / inv_upper, upper: 1.0 / inv_lower })
}

/// Finite-`(p, n)` lower bound on `omega` for `l_i = i^-alpha`.
///
/// Valid when `p k1 + alpha^2/(alpha-1)^2 < n < p k2` with `k1 = alpha/(alpha-1)^2`
/// and `k2` as in [`tau_bounds_nonasymptotic`].
pub fn omega_lower_bound(alpha: f64, p: usize, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 1 || p < 1 {
        return Err(invalid("n", "n and p must be at least 1"));
    }
    let am1 = alpha - 1.0;
    let k1 = alpha / (am1 * am1);
    let lower_edge = p as f64 * k1 + alpha * alpha / (am1 * am1);
    let upper_edge = p as f64 * k_upper(alpha);
    let nf = n as f64;
    if !(lower_edge < nf && nf < upper_edge) {
        return Err(Error::HypothesisViolated(format!("requires {lower_edge:.4} < n < {upper_edge:.4}, got n = {n}")));
    }
    let ratio = shifted_count(alpha, p, n) / (p as f64 + 1.0);
    Ok(am1 / alpha - libm::pow(ratio, 2.0 * alpha - 1.0) / alpha - 1.0 / nf)
}

/// Unchecked variant used by the benign-region window.
pub(crate) fn k_upper_coefficient(alpha: f64) -> f64 {
    k_upper(alpha)
}

pub(crate) fn check_same_dim(spec: &Spectrum, v: &[f64]) -> Result<()> {
    check_len(spec.dim(), v.len())
}
