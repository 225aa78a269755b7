//! Command-line front end.

use std::path::PathBuf;

use clap::Parser;

use crate::config::{Experiment, ExperimentConfig, RawConfig};
use crate::error::{LabError, Result};
use crate::experiments::{run_gain_profile, run_mask_count, run_risk_vs_n, run_scaling_slope, run_two_stage_grid};
use crate::output::{emit, header, write_new, Table};
use crate::verify::{run_verify, VerifySettings};

/// Surrogate-to-target ridgeless regression laboratory.
///
/// Noise flags take variances. List flags accept `10,20,30` or `10..90:10`.
#[derive(Debug, Parser)]
#[command(name = "w2s-lab", version)]
pub struct Cli {
    /// gain-profile, risk-vs-n, two-stage-grid, mask-count, scaling-slope, or verify
    pub experiment: String,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long = "beta-exp")]
    pub beta_exp: Option<String>,
    /// Target label-noise variance.
    #[arg(long = "sigma-t")]
    pub sigma_t: Option<String>,
    /// Surrogate label-noise variance.
    #[arg(long = "sigma-s")]
    pub sigma_s: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Surrogate kinds: ground-truth, optimal, masked.
    #[arg(long)]
    pub kinds: Option<String>,
    /// Also write a JSON mirror next to the CSV.
    #[arg(long)]
    pub json: bool,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub threads: Option<String>,
    /// Perturb tau in the fixed-point check (verify only).
    #[arg(long = "inject-fault")]
    pub inject_fault: bool,
}

pub fn raw_config(cli: &Cli) -> Result<RawConfig> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    let flags = [
        ("p", &cli.p),
        ("n", &cli.n),
        ("m", &cli.m),
        ("alpha", &cli.alpha),
        ("beta_exp", &cli.beta_exp),
        ("sigma_t", &cli.sigma_t),
        ("sigma_s", &cli.sigma_s),
        ("trials", &cli.trials),
        ("seed", &cli.seed),
        ("out", &cli.out),
        ("kinds", &cli.kinds),
        ("threads", &cli.threads),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, v.clone())?;
        }
    }
    for (k, on) in [("json", cli.json), ("force", cli.force), ("inject_fault", cli.inject_fault)] {
        if on {
            raw.set(k, "true")?;
        }
    }
    Ok(raw)
}

fn concat(tables: Vec<Table>) -> Option<Table> {
    let mut it = tables.into_iter();
    let mut first = it.next()?;
    for t in it {
        first.rows.extend(t.rows);
    }
    Some(first)
}

/// Runs one experiment; the returned value is the process exit status.
pub fn run(cli: &Cli) -> Result<u8> {
    let experiment: Experiment = cli.experiment.parse()?;
    let cfg = ExperimentConfig::resolve(experiment, &raw_config(cli)?)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| LabError::Config(format!("threads: {e}")))?;
    pool.install(|| dispatch(&cfg))
}

fn dispatch(cfg: &ExperimentConfig) -> Result<u8> {
    let mut extra = Vec::new();
    let table = match cfg.experiment {
        Experiment::GainProfile => {
            let runs = run_gain_profile(cfg)?;
            for r in &runs {
                let n = r.profile.stats.n;
                extra.push((format!("n{n}.sign_changes"), r.sign_changes.to_string()));
                extra.push((format!("n{n}.amplified_count"), r.amplified.to_string()));
                extra.push((format!("n{n}.predicted_amplified"), format!("{:?}", r.predicted.0)));
                extra.push((format!("n{n}.mask_count"), r.mask_count.to_string()));
                extra.push((format!("n{n}.predicted_mask"), format!("{:?}", r.predicted.1)));
            }
            concat(runs.into_iter().map(|r| r.table).collect()).expect("n grid is non-empty")
        }
        Experiment::RiskVsN => run_risk_vs_n(cfg)?.table,
        Experiment::TwoStageGrid => {
            let grid = run_two_stage_grid(cfg)?;
            for w in &grid.warnings {
                eprintln!("w2s-lab: warning: {w}");
            }
            grid.table
        }
        Experiment::MaskCount => run_mask_count(cfg)?.0,
        Experiment::ScalingSlope => run_scaling_slope(cfg)?.table,
        Experiment::Verify => return verify(cfg),
    };
    emit(cfg, &header(cfg, &extra), &table)?;
    Ok(0)
}

fn verify(cfg: &ExperimentConfig) -> Result<u8> {
    let report = run_verify(&VerifySettings { seed: cfg.seed, trials: cfg.trials, inject_fault: cfg.inject_fault })?;
    for p in &report.properties {
        println!(
            "{} {:<38} worst={:.3e} threshold={:.3e} cases={}",
            if p.passed { "PASS" } else { "FAIL" },
            p.name,
            p.worst,
            p.threshold,
            p.cases
        );
    }
    if let Some(path) = &cfg.out {
        let meta: serde_json::Map<String, serde_json::Value> =
            header(cfg, &[]).into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
        let doc = serde_json::json!({ "metadata": meta, "report": report });
        write_new(path, &(serde_json::to_string_pretty(&doc)? + "\n"), cfg.force)?;
    }
    if report.passed {
        Ok(0)
    } else {
        Err(LabError::Verification(report.failures().join(", ")))
    }
}
