use alloc::vec::Vec;

use crate::error::{check_len, invalid, Result};
use crate::spectrum::Spectrum;

/// A surrogate-to-target problem in the shared eigenbasis of both covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    spectrum_t: Spectrum,
    spectrum_s: Spectrum,
    beta_star: Vec<f64>,
    sigma_t_sq: f64,
    sigma_s_sq: f64,
    n: usize,
    m: usize,
}

fn check_noise(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, "noise variance must be finite and non-negative"))
    }
}

impl ProblemInstance {
    pub fn new(
        spectrum_t: Spectrum,
        spectrum_s: Spectrum,
        beta_star: Vec<f64>,
        sigma_t_sq: f64,
        sigma_s_sq: f64,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        check_len(spectrum_t.dim(), spectrum_s.dim())?;
        check_len(spectrum_t.dim(), beta_star.len())?;
        if beta_star.iter().any(|b| !b.is_finite()) {
            return Err(invalid("beta_star", "entries must be finite"));
        }
        check_noise("sigma_t_sq", sigma_t_sq)?;
        check_noise("sigma_s_sq", sigma_s_sq)?;
        if n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if m < 1 {
            return Err(invalid("m", "must be at least 1"));
        }
        Ok(ProblemInstance { spectrum_t, spectrum_s, beta_star, sigma_t_sq, sigma_s_sq, n, m })
    }

    /// Surrogate and target share one covariance.
    pub fn shared(
        spectrum: Spectrum,
        beta_star: Vec<f64>,
        sigma_t_sq: f64,
        sigma_s_sq: f64,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        ProblemInstance::new(spectrum.clone(), spectrum, beta_star, sigma_t_sq, sigma_s_sq, n, m)
    }

    pub fn spectrum_t(&self) -> &Spectrum {
        &self.spectrum_t
    }

    pub fn spectrum_s(&self) -> &Spectrum {
        &self.spectrum_s
    }

    pub fn beta_star(&self) -> &[f64] {
        &self.beta_star
    }

    pub fn sigma_t_sq(&self) -> f64 {
        self.sigma_t_sq
    }

    pub fn sigma_s_sq(&self) -> f64 {
        self.sigma_s_sq
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.spectrum_t.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn validation() {
        let s = Spectrum::new(vec![1.0, 0.5]).unwrap();
        let t = Spectrum::new(vec![1.0, 0.5, 0.2]).unwrap();
        assert!(ProblemInstance::shared(s.clone(), vec![1.0, 1.0], 0.0, 0.0, 1, 1).is_ok());
        assert!(ProblemInstance::new(t, s.clone(), vec![1.0, 1.0], 0.0, 0.0, 1, 1).is_err());
        assert!(ProblemInstance::shared(s.clone(), vec![1.0], 0.0, 0.0, 1, 1).is_err());
        assert!(ProblemInstance::shared(s.clone(), vec![1.0, 1.0], -1.0, 0.0, 1, 1).is_err());
        assert!(ProblemInstance::shared(s.clone(), vec![1.0, 1.0], 0.0, 0.0, 0, 1).is_err());
        assert!(ProblemInstance::shared(s, vec![1.0, 1.0], 0.0, 0.0, 1, 0).is_err());
    }
}
