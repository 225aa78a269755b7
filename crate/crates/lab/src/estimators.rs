//! Gaussian sampling in spectral coordinates and the min-norm / least-squares fit.

use nalgebra::{DMatrix, DVector, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use w2s_core::seed::derive_seed;
use w2s_core::{ProblemInstance, Spectrum};

use crate::error::{LabError, Result};

/// Stage indices fed to [`derive_seed`].
pub const STAGE_SURROGATE: u64 = 1;
pub const STAGE_TARGET: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `count x p`, one sample per row.
    pub design: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub seed: u64,
}

/// `count` rows with independent coordinates `x_j ~ N(0, l_j)`.
pub fn sample_inputs(spec: &Spectrum, count: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let sd: Vec<f64> = spec.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let p = sd.len();
    let mut data = Vec::with_capacity(count * p);
    for _ in 0..count {
        for s in &sd {
            let g: f64 = StandardNormal.sample(rng);
            data.push(s * g);
        }
    }
    DMatrix::from_row_slice(count, p, &data)
}

fn sample_noise(count: usize, sigma_sq: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let sd = sigma_sq.sqrt();
    DVector::from_iterator(
        count,
        (0..count).map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            sd * g
        }),
    )
}

fn check_noise(sigma_sq: f64) -> Result<()> {
    if sigma_sq.is_finite() && sigma_sq >= 0.0 {
        Ok(())
    } else {
        Err(LabError::Config(format!("noise variance must be non-negative, got {sigma_sq}")))
    }
}

/// Draws inputs, then noise, from one stream seeded by `seed`.
pub fn sample_dataset(spec: &Spectrum, beta: &[f64], sigma_sq: f64, count: usize, seed: u64) -> Result<Dataset> {
    if beta.len() != spec.dim() {
        return Err(w2s_core::Error::DimensionMismatch { expected: spec.dim(), found: beta.len() }.into());
    }
    check_noise(sigma_sq)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = sample_inputs(spec, count, &mut rng);
    let noise = sample_noise(count, sigma_sq, &mut rng);
    let labels = &design * DVector::from_column_slice(beta) + noise;
    Ok(Dataset { design, labels, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    MinNormInterpolator,
    OrdinaryLeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    pub beta_hat: Vec<f64>,
    pub regime: Regime,
    pub rank: usize,
    /// Singular values dropped below the cutoff; nonzero means the design was
    /// numerically rank deficient.
    pub discarded: usize,
}

/// SVD of a design, reusable across label vectors.
pub struct Factorization {
    svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rows: usize,
    cols: usize,
    cutoff: f64,
    rank: usize,
}

impl Factorization {
    pub fn new(design: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = design.shape();
        if rows == 0 || cols == 0 {
            return Err(LabError::Config("design matrix is empty".into()));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Numerical("design matrix has non-finite entries".into()));
        }
        let svd = SVD::try_new(design.clone(), true, true, f64::EPSILON, 0)
            .ok_or_else(|| LabError::Numerical("SVD did not converge".into()))?;
        let smax = svd.singular_values.max();
        let cutoff = smax * rows.max(cols) as f64 * f64::EPSILON;
        let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
        Ok(Factorization { svd, rows, cols, cutoff, rank })
    }

    pub fn regime(&self) -> Regime {
        if self.rows < self.cols {
            Regime::MinNormInterpolator
        } else {
            Regime::OrdinaryLeastSquares
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Pseudo-inverse applied to `labels`.
    pub fn solve(&self, labels: &DVector<f64>) -> Result<EstimatorOutput> {
        if labels.len() != self.rows {
            return Err(w2s_core::Error::DimensionMismatch { expected: self.rows, found: labels.len() }.into());
        }
        let x = self.svd.solve(labels, self.cutoff).map_err(|e| LabError::Numerical(e.to_string()))?;
        Ok(EstimatorOutput {
            beta_hat: x.as_slice().to_vec(),
            regime: self.regime(),
            rank: self.rank,
            discarded: self.rows.min(self.cols) - self.rank,
        })
    }
}

/// Minimum-norm interpolator when `rows < cols`, least squares otherwise.
pub fn fit(design: &DMatrix<f64>, labels: &DVector<f64>) -> Result<EstimatorOutput> {
    Factorization::new(design)?.solve(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TwoStageOptions {
    /// Label the target data with `x^T beta_s` alone, without fresh noise.
    pub noiseless_distillation: bool,
}

/// Stage 2 only: fit the target model on `n` fresh inputs labelled by a fixed `beta_s`.
pub fn target_fit(
    spec_t: &Spectrum,
    beta_s: &[f64],
    sigma_t_sq: f64,
    n: usize,
    seed: u64,
    opts: TwoStageOptions,
) -> Result<Vec<f64>> {
    let sigma = if opts.noiseless_distillation { 0.0 } else { sigma_t_sq };
    let data = sample_dataset(spec_t, beta_s, sigma, n, seed)?;
    Ok(fit(&data.design, &data.labels)?.beta_hat)
}

/// Both stages; returns `(beta_s, beta_s2t)`.
pub fn two_stage_fit(inst: &ProblemInstance, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    two_stage_fit_with(inst, seed, TwoStageOptions::default())
}

pub fn two_stage_fit_with(inst: &ProblemInstance, seed: u64, opts: TwoStageOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let s1 = derive_seed(seed, STAGE_SURROGATE, 0);
    let s2 = derive_seed(seed, STAGE_TARGET, 0);
    let surrogate = sample_dataset(inst.spectrum_s(), inst.beta_star(), inst.sigma_s_sq(), inst.m(), s1)?;
    let beta_s = fit(&surrogate.design, &surrogate.labels)?.beta_hat;
    let beta_s2t = target_fit(inst.spectrum_t(), &beta_s, inst.sigma_t_sq(), inst.n(), s2, opts)?;
    Ok((beta_s, beta_s2t))
}
