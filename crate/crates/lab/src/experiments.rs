//! Figure-data sweeps. Each returns a [`Table`] plus the structured values
//! behind it.

use w2s_core::seed::derive_seed;
use w2s_core::{
    apply_mask, cutoff_indices, omniscient_risk, one_stage_risk_from_stats, optimal_mask_from_stats,
    optimal_surrogate_from_profile, power_law_signal, power_law_spectrum, scaling_exponent, solve_tau, two_stage_risk,
    GainProfile, ProblemInstance, RiskReport, SurrogateKind,
};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::estimators::TwoStageOptions;
use crate::montecarlo::{one_stage_mc, two_stage_mc};
use crate::output::{Cell, Table};

/// Stage index for per-grid-point Monte Carlo seeds.
const STAGE_GRID: u64 = 3;

pub fn grid_seed(parent: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(parent, STAGE_GRID, a), STAGE_GRID, b)
}

#[derive(Debug, Clone)]
pub struct RiskPoint {
    pub n: usize,
    pub kind: SurrogateKind,
    pub support_size: Option<usize>,
    pub theory: RiskReport,
    pub mc: RiskReport,
    /// Excess risk per trial, in trial order.
    pub risks: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RiskVsN {
    pub table: Table,
    pub points: Vec<RiskPoint>,
}

impl RiskVsN {
    pub fn point(&self, n: usize, kind: SurrogateKind) -> Option<&RiskPoint> {
        self.points.iter().find(|p| p.n == n && p.kind == kind)
    }
}

const RISK_COLUMNS: [&str; 18] = [
    "experiment",
    "p",
    "alpha",
    "beta_exp",
    "sigma_t_sq",
    "n",
    "kind",
    "source",
    "support_size",
    "theory_total",
    "theory_bias",
    "theory_variance",
    "mc_mean",
    "mc_se",
    "mc_bias",
    "mc_variance",
    "trials",
    "seed",
];

/// Theory and Monte Carlo risk of the target model for each surrogate kind
/// over the `n` grid, with `l_i = i^-alpha` and `l_i b_i^2 = i^-beta_exp`.
pub fn run_risk_vs_n(cfg: &ExperimentConfig) -> Result<RiskVsN> {
    let alpha = cfg.alpha();
    let spec = power_law_spectrum(cfg.p, alpha)?;
    let beta = power_law_signal(cfg.p, alpha, cfg.beta_exp)?;
    let mut table = Table::new(&RISK_COLUMNS);
    let mut points = Vec::new();
    for &n in &cfg.n {
        let stats = solve_tau(&spec, n)?;
        let profile = GainProfile::from_stats(stats.clone())?;
        let mut surrogates = Vec::new();
        let mut sizes = Vec::new();
        for &kind in &cfg.kinds {
            let (values, size) = match kind {
                SurrogateKind::GroundTruth => (beta.clone(), None),
                SurrogateKind::Optimal => (optimal_surrogate_from_profile(&profile, &beta).into_values(), None),
                SurrogateKind::Masked => {
                    let mask = optimal_mask_from_stats(&stats);
                    let size = mask.len();
                    (apply_mask(&beta, &mask)?, Some(size))
                }
                SurrogateKind::Arbitrary => {
                    return Err(LabError::Config("kinds: arbitrary surrogates are not swept".into()))
                }
            };
            surrogates.push(values);
            sizes.push(size);
        }
        let seed = grid_seed(cfg.seed, n as u64, 0);
        let mc = one_stage_mc(&spec, &beta, &surrogates, n, cfg.sigma_t_sq, cfg.trials, seed)?;
        for (k, &kind) in cfg.kinds.iter().enumerate() {
            let theory = one_stage_risk_from_stats(&stats, &spec, &beta, &surrogates[k], cfg.sigma_t_sq)?;
            let report = mc.reports[k];
            let common = |source: &str| -> Vec<Cell> {
                vec![
                    cfg.experiment.name().into(),
                    cfg.p.into(),
                    alpha.into(),
                    cfg.beta_exp.into(),
                    cfg.sigma_t_sq.into(),
                    n.into(),
                    kind.name().into(),
                    source.into(),
                    sizes[k].map_or(Cell::Null, Cell::from),
                    theory.total.into(),
                    theory.bias.into(),
                    theory.variance.into(),
                ]
            };
            let mut row = common("theory");
            row.extend([Cell::Null, Cell::Null, Cell::Null, Cell::Null, Cell::Null, Cell::Null]);
            table.push(row);
            let mut row = common("monte-carlo");
            row.extend([
                report.total.into(),
                report.std_error().into(),
                report.bias.into(),
                report.variance.into(),
                cfg.trials.into(),
                seed.into(),
            ]);
            table.push(row);
            points.push(RiskPoint { n, kind, support_size: sizes[k], theory, mc: report, risks: mc.risks[k].clone() });
        }
    }
    Ok(RiskVsN { table, points })
}

#[derive(Debug, Clone)]
pub struct GainProfileRun {
    pub table: Table,
    pub profile: GainProfile,
    /// Sign changes of `gain - 1` along the index.
    pub sign_changes: usize,
    pub amplified: usize,
    pub mask_count: usize,
    /// `(n C1, n C2)`.
    pub predicted: (f64, f64),
}

/// Per-index weights of the ground truth, the optimal surrogate, and the optimal mask.
pub fn run_gain_profile(cfg: &ExperimentConfig) -> Result<Vec<GainProfileRun>> {
    let alpha = cfg.alpha();
    let spec = power_law_spectrum(cfg.p, alpha)?;
    let beta = power_law_signal(cfg.p, alpha, cfg.beta_exp)?;
    let mut runs = Vec::new();
    for &n in &cfg.n {
        let stats = solve_tau(&spec, n)?;
        let profile = GainProfile::from_stats(stats.clone())?;
        let opt = optimal_surrogate_from_profile(&profile, &beta);
        let mask = optimal_mask_from_stats(&stats);
        let mut table = Table::new(&[
            "n",
            "i",
            "lambda",
            "zeta",
            "beta_star",
            "beta_opt",
            "gain",
            "amplified",
            "masked",
            "threshold_amplify",
            "threshold_mask",
        ]);
        for (i, &b) in beta.iter().enumerate() {
            table.push(vec![
                n.into(),
                (i + 1).into(),
                spec.eigenvalues()[i].into(),
                stats.zeta[i].into(),
                b.into(),
                opt.values()[i].into(),
                profile.gains[i].into(),
                (profile.gains[i] > 1.0).into(),
                mask.contains(i).into(),
                profile.threshold_amplify.into(),
                profile.threshold_mask.into(),
            ]);
        }
        let sign_changes = profile.gains.windows(2).filter(|w| (w[0] > 1.0) != (w[1] > 1.0)).count();
        runs.push(GainProfileRun {
            table,
            sign_changes,
            amplified: profile.amplified_count(),
            mask_count: mask.len(),
            predicted: cutoff_indices(alpha, n)?,
            profile,
        });
    }
    Ok(runs)
}

#[derive(Debug, Clone)]
pub struct TwoStagePoint {
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub theory: RiskReport,
    pub mc: RiskReport,
}

#[derive(Debug, Clone)]
pub struct TwoStageGrid {
    pub table: Table,
    pub points: Vec<TwoStagePoint>,
    /// Grid points dropped because a stage is not overparametrized.
    pub warnings: Vec<String>,
}

/// `(n, m)` pairs: zipped `m = n` when no surrogate grid is given, else the product.
pub fn sample_pairs(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    match &cfg.m {
        None => cfg.n.iter().map(|&n| (n, n)).collect(),
        Some(ms) => cfg.n.iter().flat_map(|&n| ms.iter().map(move |&m| (n, m))).collect(),
    }
}

/// Two-stage theory against simulation of the full surrogate-then-target pipeline.
pub fn run_two_stage_grid(cfg: &ExperimentConfig) -> Result<TwoStageGrid> {
    let mut table = Table::new(&[
        "experiment",
        "p",
        "alpha",
        "beta_exp",
        "sigma_t_sq",
        "sigma_s_sq",
        "n",
        "m",
        "theory_total",
        "theory_bias",
        "theory_variance",
        "mc_mean",
        "mc_se",
        "mc_bias",
        "mc_variance",
        "trials",
        "seed",
    ]);
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (ai, &alpha) in cfg.alpha.iter().enumerate() {
        let spec = power_law_spectrum(cfg.p, alpha)?;
        let beta = power_law_signal(cfg.p, alpha, cfg.beta_exp)?;
        for (n, m) in sample_pairs(cfg) {
            if n >= cfg.p || m >= cfg.p {
                warnings.push(format!(
                    "skipping alpha = {alpha}, n = {n}, m = {m}: both stages need fewer than p = {} samples",
                    cfg.p
                ));
                continue;
            }
            let inst = ProblemInstance::shared(spec.clone(), beta.clone(), cfg.sigma_t_sq, cfg.sigma_s_sq, n, m)?;
            let theory = two_stage_risk(&inst)?;
            let seed = grid_seed(derive_seed(cfg.seed, STAGE_GRID, ai as u64), n as u64, m as u64);
            let mc = two_stage_mc(&inst, cfg.trials, seed, TwoStageOptions::default())?;
            table.push(vec![
                cfg.experiment.name().into(),
                cfg.p.into(),
                alpha.into(),
                cfg.beta_exp.into(),
                cfg.sigma_t_sq.into(),
                cfg.sigma_s_sq.into(),
                n.into(),
                m.into(),
                theory.total.into(),
                theory.bias.into(),
                theory.variance.into(),
                mc.total.into(),
                mc.std_error().into(),
                mc.bias.into(),
                mc.variance.into(),
                cfg.trials.into(),
                seed.into(),
            ]);
            points.push(TwoStagePoint { alpha, n, m, theory, mc });
        }
    }
    Ok(TwoStageGrid { table, points, warnings })
}

#[derive(Debug, Clone, Copy)]
pub struct MaskCountPoint {
    pub alpha: f64,
    pub n: usize,
    pub mask_count: usize,
    pub amplified: usize,
    pub predicted_mask: f64,
    pub predicted_amplified: f64,
}

impl MaskCountPoint {
    /// Allowed gap between the count and its prediction, `0.05 n + 5`.
    pub fn slack(&self) -> f64 {
        0.05 * self.n as f64 + 5.0
    }

    pub fn within(&self) -> bool {
        (self.mask_count as f64 - self.predicted_mask).abs() <= self.slack()
    }
}

/// Optimal-mask size against the `n C2` prediction.
pub fn run_mask_count(cfg: &ExperimentConfig) -> Result<(Table, Vec<MaskCountPoint>)> {
    let mut table = Table::new(&[
        "p",
        "alpha",
        "n",
        "mask_count",
        "predicted_mask",
        "amplified_count",
        "predicted_amplified",
        "slack",
        "within",
    ]);
    let mut points = Vec::new();
    for &alpha in &cfg.alpha {
        let spec = power_law_spectrum(cfg.p, alpha)?;
        for &n in &cfg.n {
            let stats = solve_tau(&spec, n)?;
            let mask = optimal_mask_from_stats(&stats);
            let profile = GainProfile::from_stats(stats)?;
            let (c1n, c2n) = cutoff_indices(alpha, n)?;
            let pt = MaskCountPoint {
                alpha,
                n,
                mask_count: mask.len(),
                amplified: profile.amplified_count(),
                predicted_mask: c2n,
                predicted_amplified: c1n,
            };
            table.push(vec![
                cfg.p.into(),
                alpha.into(),
                n.into(),
                pt.mask_count.into(),
                c2n.into(),
                pt.amplified.into(),
                c1n.into(),
                pt.slack().into(),
                pt.within().into(),
            ]);
            points.push(pt);
        }
    }
    Ok((table, points))
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct ScalingSlopes {
    pub table: Table,
    pub slope_target: Option<f64>,
    pub slope_optimal: Option<f64>,
    /// `-scaling_exponent(alpha, beta_exp)`.
    pub predicted: f64,
}

/// Log-log slopes of the theoretical risk in `n` for the standard target model
/// and the optimal surrogate.
pub fn run_scaling_slope(cfg: &ExperimentConfig) -> Result<ScalingSlopes> {
    let alpha = cfg.alpha();
    let predicted = -scaling_exponent(alpha, cfg.beta_exp)?;
    let spec = power_law_spectrum(cfg.p, alpha)?;
    let beta = power_law_signal(cfg.p, alpha, cfg.beta_exp)?;
    let mut table = Table::new(&["row_type", "series", "n", "total", "slope", "predicted"]);
    let mut slope_target = None;
    let mut slope_optimal = None;
    for &kind in &cfg.kinds {
        let mut logs = (Vec::new(), Vec::new());
        for &n in &cfg.n {
            let stats = solve_tau(&spec, n)?;
            let total = match kind {
                SurrogateKind::GroundTruth => omniscient_risk(&spec, &beta, cfg.sigma_t_sq, n)?.total,
                _ => {
                    let profile = GainProfile::from_stats(stats.clone())?;
                    let opt = optimal_surrogate_from_profile(&profile, &beta);
                    one_stage_risk_from_stats(&stats, &spec, &beta, opt.values(), cfg.sigma_t_sq)?.total
                }
            };
            table.push(vec!["point".into(), kind.name().into(), n.into(), total.into(), Cell::Null, Cell::Null]);
            logs.0.push((n as f64).ln());
            logs.1.push(total.ln());
        }
        let slope = ls_slope(&logs.0, &logs.1);
        table.push(vec!["slope".into(), kind.name().into(), Cell::Null, Cell::Null, slope.into(), predicted.into()]);
        match kind {
            SurrogateKind::GroundTruth => slope_target = Some(slope),
            _ => slope_optimal = Some(slope),
        }
    }
    Ok(ScalingSlopes { table, slope_target, slope_optimal, predicted })
}
