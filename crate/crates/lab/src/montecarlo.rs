//! Seeded, parallel Monte Carlo estimates of the excess risk.
//!
//! Trials fan out over the rayon pool with per-trial seeds from
//! [`derive_seed`]; results are collected in trial order and reduced
//! sequentially, so outputs do not depend on the number of threads.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use w2s_core::seed::derive_seed;
use w2s_core::{empirical_excess_risk, McMeta, ProblemInstance, RiskReport, Spectrum};

use crate::error::{LabError, Result};
use crate::estimators::{sample_inputs, two_stage_fit_with, Factorization, TwoStageOptions};

/// Stage index reserved for per-trial seeds.
pub const STAGE_TRIAL: u64 = 0;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSummary {
    pub mean: f64,
    /// `sd / sqrt(trials)`; `None` for a single trial.
    pub std_error: Option<f64>,
    pub trials: usize,
}

impl McSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let t = samples.len();
        let mean = samples.iter().sum::<f64>() / t as f64;
        let std_error = (t > 1).then(|| {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (t - 1) as f64).sqrt() / (t as f64).sqrt()
        });
        McSummary { mean, std_error, trials: t }
    }

    /// Number of standard errors between the mean and `value`.
    pub fn z_score(&self, value: f64) -> Option<f64> {
        self.std_error.map(|se| (self.mean - value) / se)
    }

    pub fn within(&self, value: f64, k: f64) -> bool {
        match self.std_error {
            Some(se) => (self.mean - value).abs() <= k * se,
            None => false,
        }
    }
}

/// Per-trial `f(trial, seed)` in parallel, collected in trial order.
pub fn run_trials<T, F>(parent: u64, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    if trials == 0 {
        return Err(LabError::Config("trials must be at least 1".into()));
    }
    (0..trials).into_par_iter().map(|t| f(t, derive_seed(parent, STAGE_TRIAL, t as u64))).collect()
}

/// Risk report from fitted estimates: total is the mean excess risk, variance
/// is the spread of the estimates around their mean, and bias is the rest.
pub fn report_from_estimates(
    spec: &Spectrum,
    beta_star: &[f64],
    estimates: &[Vec<f64>],
) -> Result<(RiskReport, Vec<f64>)> {
    let t = estimates.len();
    let risks = estimates
        .iter()
        .map(|b| empirical_excess_risk(b, beta_star, spec))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let summary = McSummary::from_samples(&risks);
    let p = spec.dim();
    let mut mean = vec![0.0; p];
    for b in estimates {
        for (m, x) in mean.iter_mut().zip(b) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t as f64);
    let variance = if t > 1 {
        let spread: f64 = estimates.iter().map(|b| empirical_excess_risk(b, &mean, spec).unwrap_or(0.0)).sum();
        spread / (t - 1) as f64
    } else {
        0.0
    };
    let bias = (summary.mean - variance).max(0.0);
    let meta = McMeta { trials: t, std_error: summary.std_error };
    Ok((RiskReport::monte_carlo(bias, variance, summary.mean, meta), risks))
}

/// Simulated stage-2 fits for several surrogates sharing inputs and noise.
#[derive(Debug, Clone)]
pub struct OneStageMc {
    pub reports: Vec<RiskReport>,
    /// `risks[k][t]`: excess risk of surrogate `k` in trial `t`.
    pub risks: Vec<Vec<f64>>,
}

/// Target fits on labels `x^T beta_s + z` for each surrogate in `surrogates`.
/// Every surrogate sees the same design and noise in a given trial.
pub fn one_stage_mc(
    spec: &Spectrum,
    beta_star: &[f64],
    surrogates: &[Vec<f64>],
    n: usize,
    sigma_sq: f64,
    trials: usize,
    seed: u64,
) -> Result<OneStageMc> {
    for s in surrogates {
        if s.len() != spec.dim() {
            return Err(w2s_core::Error::DimensionMismatch { expected: spec.dim(), found: s.len() }.into());
        }
    }
    let sd = sigma_sq.sqrt();
    let per_trial = run_trials(seed, trials, |_, trial_seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let x = sample_inputs(spec, n, &mut rng);
        let noise: DVector<f64> = DVector::from_iterator(
            n,
            (0..n).map(|_| {
                let g: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                sd * g
            }),
        );
        let fact = Factorization::new(&x)?;
        surrogates
            .iter()
            .map(|bs| {
                let y = &x * DVector::from_column_slice(bs) + &noise;
                Ok(fact.solve(&y)?.beta_hat)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut reports = Vec::with_capacity(surrogates.len());
    let mut risks = Vec::with_capacity(surrogates.len());
    for k in 0..surrogates.len() {
        let est: Vec<Vec<f64>> = per_trial.iter().map(|v| v[k].clone()).collect();
        let (r, samples) = report_from_estimates(spec, beta_star, &est)?;
        reports.push(r);
        risks.push(samples);
    }
    Ok(OneStageMc { reports, risks })
}

/// Full surrogate-then-target pipeline.
pub fn two_stage_mc(inst: &ProblemInstance, trials: usize, seed: u64, opts: TwoStageOptions) -> Result<RiskReport> {
    let est = run_trials(seed, trials, |_, s| Ok(two_stage_fit_with(inst, s, opts)?.1))?;
    Ok(report_from_estimates(inst.spectrum_t(), inst.beta_star(), &est)?.0)
}

/// Min-norm fit on inputs from `spec_train` with labels `x^T beta_star + z`,
/// scored on `spec_test`.
pub fn covariance_shift_mc(
    beta_star: &[f64],
    spec_train: &Spectrum,
    spec_test: &Spectrum,
    n: usize,
    sigma_sq: f64,
    trials: usize,
    seed: u64,
) -> Result<RiskReport> {
    let est = run_trials(seed, trials, |_, s| {
        let d = crate::estimators::sample_dataset(spec_train, beta_star, sigma_sq, n, s)?;
        Ok(crate::estimators::fit(&d.design, &d.labels)?.beta_hat)
    })?;
    Ok(report_from_estimates(spec_test, beta_star, &est)?.0)
}

/// Summary of `a[t] - b[t]`.
pub fn paired_difference(a: &[f64], b: &[f64]) -> McSummary {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    McSummary::from_samples(&d)
}
