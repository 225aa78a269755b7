//! Experiment configuration: a flat `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use w2s_core::SurrogateKind;

use crate::error::{LabError, Result};

pub const DEFAULT_SIGMA_SQ: f64 = 0.05;
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    GainProfile,
    RiskVsN,
    TwoStageGrid,
    MaskCount,
    ScalingSlope,
    Verify,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::GainProfile,
        Experiment::RiskVsN,
        Experiment::TwoStageGrid,
        Experiment::MaskCount,
        Experiment::ScalingSlope,
        Experiment::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GainProfile => "gain-profile",
            Experiment::RiskVsN => "risk-vs-n",
            Experiment::TwoStageGrid => "two-stage-grid",
            Experiment::MaskCount => "mask-count",
            Experiment::ScalingSlope => "scaling-slope",
            Experiment::Verify => "verify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| LabError::Config(format!("unknown experiment '{s}'")))
    }
}

/// Keys accepted in config files, in echo order.
pub const KEYS: [&str; 15] = [
    "p",
    "n",
    "m",
    "alpha",
    "beta_exp",
    "sigma_t",
    "sigma_s",
    "trials",
    "seed",
    "out",
    "kinds",
    "json",
    "force",
    "threads",
    "inject_fault",
];

/// Unparsed settings: config file first, flags layered on top.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

fn canonical_key(k: &str) -> Result<String> {
    let k = k.trim().replace('-', "_");
    if KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(LabError::Config(format!("unknown config key '{k}'")))
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = canonical_key(k)?;
            if out.values.contains_key(&key) {
                return Err(LabError::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            out.values.insert(key, v.trim().to_string());
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))?;
        RawConfig::parse(&text)
    }

    /// Overrides `key`; later calls win.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.values.insert(canonical_key(key)?, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub p: usize,
    pub n: Vec<usize>,
    /// `None` pairs each surrogate sample count with the target one (`m = n`).
    pub m: Option<Vec<usize>>,
    pub alpha: Vec<f64>,
    pub beta_exp: f64,
    pub sigma_t_sq: f64,
    pub sigma_s_sq: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub kinds: Vec<SurrogateKind>,
    pub json: bool,
    pub force: bool,
    pub threads: Option<usize>,
    pub inject_fault: bool,
    /// `(key, value, defaulted)` for every key, values verbatim when supplied.
    pub echo: Vec<(String, String, bool)>,
}

fn field_err(key: &str, value: &str, why: impl fmt::Display) -> LabError {
    LabError::Config(format!("{key}: cannot use '{value}': {why}"))
}

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| field_err(key, v, e))
}

/// Comma-separated values; an item `a..b:s` expands to `a, a+s, ..., <= b`.
pub fn parse_usize_list(key: &str, v: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((range, step)) = item.split_once(':') {
            let (a, b) = range.split_once("..").ok_or_else(|| field_err(key, v, "range must be a..b:step"))?;
            let (a, b, s): (usize, usize, usize) =
                (parse_scalar(key, a)?, parse_scalar(key, b)?, parse_scalar(key, step)?);
            if s == 0 || a > b {
                return Err(field_err(key, v, "range needs a <= b and a positive step"));
            }
            out.extend((a..=b).step_by(s));
        } else {
            out.push(parse_scalar(key, item)?);
        }
    }
    if out.is_empty() {
        return Err(field_err(key, v, "list is empty"));
    }
    Ok(out)
}

pub fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let out = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar::<f64>(key, s))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(field_err(key, v, "list is empty"));
    }
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(field_err(key, v, "expected true or false")),
    }
}

pub fn parse_kind(key: &str, v: &str) -> Result<SurrogateKind> {
    match v.trim() {
        "ground-truth" | "target" => Ok(SurrogateKind::GroundTruth),
        "optimal" => Ok(SurrogateKind::Optimal),
        "masked" => Ok(SurrogateKind::Masked),
        other => Err(field_err(key, other, "kinds are ground-truth, optimal, masked")),
    }
}

struct Defaults {
    p: usize,
    n: &'static str,
    alpha: &'static str,
    beta_exp: f64,
    sigma_t_sq: f64,
    kinds: &'static str,
}

fn defaults(e: Experiment) -> Defaults {
    let base = Defaults {
        p: 500,
        n: "100,200,300",
        alpha: "2",
        beta_exp: 1.5,
        sigma_t_sq: DEFAULT_SIGMA_SQ,
        kinds: "ground-truth,optimal,masked",
    };
    match e {
        Experiment::GainProfile => Defaults { n: "200", ..base },
        Experiment::RiskVsN => base,
        Experiment::TwoStageGrid => Defaults { p: 100, n: "10..90:10", alpha: "1.5,2", ..base },
        Experiment::MaskCount => Defaults { n: "10..100:10", alpha: "1.5,3,4.5", ..base },
        // noise adds an n-independent floor, so the slope fit is noiseless by default
        Experiment::ScalingSlope => {
            Defaults { p: 8000, n: "50,100,200,400,800", sigma_t_sq: 0.0, kinds: "ground-truth,optimal", ..base }
        }
        Experiment::Verify => Defaults { p: 60, n: "20", ..base },
    }
}

impl ExperimentConfig {
    pub fn resolve(experiment: Experiment, raw: &RawConfig) -> Result<Self> {
        let d = defaults(experiment);
        let mut echo = Vec::new();
        let mut take = |key: &str, default: String| -> String {
            match raw.get(key) {
                Some(v) => {
                    echo.push((key.to_string(), v.to_string(), false));
                    v.to_string()
                }
                None => {
                    echo.push((key.to_string(), default.clone(), true));
                    default
                }
            }
        };
        let p_raw = take("p", d.p.to_string());
        let n_raw = take("n", d.n.to_string());
        let m_raw = take("m", String::new());
        let alpha_raw = take("alpha", d.alpha.to_string());
        let beta_raw = take("beta_exp", d.beta_exp.to_string());
        let st_raw = take("sigma_t", d.sigma_t_sq.to_string());
        let ss_raw = take("sigma_s", DEFAULT_SIGMA_SQ.to_string());
        let trials_raw = take("trials", DEFAULT_TRIALS.to_string());
        let seed_raw = take("seed", DEFAULT_SEED.to_string());
        let out_raw = take("out", String::new());
        let kinds_raw = take("kinds", d.kinds.to_string());
        let json_raw = take("json", "false".into());
        let force_raw = take("force", "false".into());
        let threads_raw = take("threads", String::new());
        let fault_raw = take("inject_fault", "false".into());

        let cfg = ExperimentConfig {
            experiment,
            p: parse_scalar("p", &p_raw)?,
            n: parse_usize_list("n", &n_raw)?,
            m: if m_raw.trim().is_empty() { None } else { Some(parse_usize_list("m", &m_raw)?) },
            alpha: parse_f64_list("alpha", &alpha_raw)?,
            beta_exp: parse_scalar("beta_exp", &beta_raw)?,
            sigma_t_sq: parse_scalar("sigma_t", &st_raw)?,
            sigma_s_sq: parse_scalar("sigma_s", &ss_raw)?,
            trials: parse_scalar("trials", &trials_raw)?,
            seed: parse_scalar("seed", &seed_raw)?,
            out: (!out_raw.trim().is_empty()).then(|| PathBuf::from(out_raw.trim())),
            kinds: kinds_raw
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_kind("kinds", s))
                .collect::<Result<Vec<_>>>()?,
            json: parse_bool("json", &json_raw)?,
            force: parse_bool("force", &force_raw)?,
            threads: if threads_raw.trim().is_empty() { None } else { Some(parse_scalar("threads", &threads_raw)?) },
            inject_fault: parse_bool("inject_fault", &fault_raw)?,
            echo,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let err = |m: String| Err(LabError::Config(m));
        if self.p < 2 {
            return err(format!("p: must be at least 2, got {}", self.p));
        }
        if self.trials < 1 {
            return err("trials: must be at least 1".into());
        }
        for &a in &self.alpha {
            if !(a.is_finite() && a > 1.0) {
                return err(format!("alpha: must be > 1, got {a}"));
            }
        }
        if !(self.beta_exp.is_finite() && self.beta_exp > 1.0) {
            return err(format!("beta_exp: must be > 1, got {}", self.beta_exp));
        }
        for (k, v) in [("sigma_t", self.sigma_t_sq), ("sigma_s", self.sigma_s_sq)] {
            if !(v.is_finite() && v >= 0.0) {
                return err(format!("{k}: noise variance must be >= 0, got {v}"));
            }
        }
        if self.kinds.is_empty() {
            return err("kinds: list is empty".into());
        }
        if self.threads == Some(0) {
            return err("threads: must be at least 1".into());
        }
        if self.n.contains(&0) || self.m.as_ref().is_some_and(|m| m.contains(&0)) {
            return err("n, m: sample counts must be at least 1".into());
        }
        if self.json && self.out.is_none() {
            return err("json: the JSON mirror needs an output path (out)".into());
        }
        match self.experiment {
            Experiment::GainProfile | Experiment::RiskVsN | Experiment::MaskCount | Experiment::ScalingSlope => {
                if let Some(&n) = self.n.iter().find(|&&n| n >= self.p) {
                    return err(format!("n: every n must be below p = {}, got {n}", self.p));
                }
            }
            _ => {}
        }
        if matches!(self.experiment, Experiment::GainProfile | Experiment::RiskVsN | Experiment::ScalingSlope)
            && self.alpha.len() != 1
        {
            return err(format!("alpha: {} takes a single value", self.experiment));
        }
        if self.experiment == Experiment::RiskVsN && self.kinds.is_empty() {
            return err("kinds: at least one surrogate kind is required".into());
        }
        if self.experiment == Experiment::ScalingSlope {
            if self.n.len() < 3 {
                return err("n: the slope fit needs at least 3 grid points".into());
            }
            let max = *self.n.iter().max().unwrap_or(&0);
            if self.p < 10 * max {
                return err(format!("p: must be at least 10 * max(n) = {}", 10 * max));
            }
            if self.kinds.contains(&SurrogateKind::Masked) {
                return err("kinds: scaling-slope supports ground-truth and optimal".into());
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha[0]
    }
}
