//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use w2s_core::seed::derive_seed;
use w2s_core::{
    brute_force_mask, covariance_shift_map, omega_lower_bound, one_stage_risk, optimal_mask_from_stats,
    optimal_surrogate, power_law_signal, power_law_spectrum, solve_tau, tau_bounds_nonasymptotic, Spectrum,
    SurrogateKind,
};
use w2s_lab::config::{Experiment, ExperimentConfig, RawConfig, DEFAULT_SEED};
use w2s_lab::error::Result;
use w2s_lab::experiments::{run_mask_count, run_risk_vs_n, run_scaling_slope, run_two_stage_grid, RiskVsN};
use w2s_lab::montecarlo::{covariance_shift_mc, one_stage_mc, paired_difference};
use w2s_lab::verify::{run_verify, VerifySettings};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn config(experiment: Experiment, pairs: &[(&str, &str)]) -> Result<ExperimentConfig> {
    let mut raw = RawConfig::default();
    for (k, v) in pairs {
        raw.set(k, *v)?;
    }
    ExperimentConfig::resolve(experiment, &raw)
}

type Criterion = fn() -> Result<Outcome>;

fn risk_sweep() -> Result<RiskVsN> {
    let cfg = config(
        Experiment::RiskVsN,
        &[
            ("p", "500"),
            ("alpha", "2"),
            ("beta_exp", "1.5"),
            ("sigma_t", "0.05"),
            ("n", "100,200,300"),
            ("trials", "200"),
            ("kinds", "ground-truth,optimal,masked"),
        ],
    )?;
    run_risk_vs_n(&cfg)
}

fn c1(sweep: &RiskVsN) -> Result<Outcome> {
    let mut worst_rel = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut ok = true;
    for pt in &sweep.points {
        let theory = pt.theory.total;
        let mc = pt.mc.total;
        let se = pt.mc.std_error().unwrap_or(f64::NAN);
        let rel = (mc - theory).abs() / theory;
        let z = (mc - theory).abs() / se;
        worst_rel = worst_rel.max(rel);
        worst_z = worst_z.max(z);
        ok &= rel <= 0.05 && z <= 3.0;
    }
    ok &= sweep.points.len() == 9;
    Ok(outcome(
        ok,
        format!("max rel err {worst_rel:.4} (<= 0.05), max |z| {worst_z:.2} (<= 3), {} points", sweep.points.len()),
    ))
}

fn c2(sweep: &RiskVsN) -> Result<Outcome> {
    let mut ok = true;
    let mut notes = Vec::new();
    for &n in &[100, 200, 300] {
        let get = |k| sweep.point(n, k).expect("point present");
        let (gt, opt, mask) =
            (get(SurrogateKind::GroundTruth), get(SurrogateKind::Optimal), get(SurrogateKind::Masked));
        ok &= opt.theory.total < mask.theory.total && mask.theory.total < gt.theory.total;
        ok &= opt.mc.total < mask.mc.total && mask.mc.total < gt.mc.total;
        if n == 200 {
            for (name, lo, hi) in [("mask-opt", opt, mask), ("gt-mask", mask, gt)] {
                let d = paired_difference(&hi.risks, &lo.risks);
                let se = d.std_error.unwrap_or(f64::NAN);
                let theory_gap = hi.theory.total - lo.theory.total;
                ok &= d.mean > 3.0 * se && theory_gap > 3.0 * se;
                notes.push(format!("{name} gap mc {:.4} theory {:.4} / se {:.2e}", d.mean, theory_gap, se));
            }
        }
    }
    Ok(outcome(ok, format!("optimal < mask < ground-truth at n = 100,200,300; n=200: {}", notes.join("; "))))
}

fn c3() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(DEFAULT_SEED, 3, 0));
    let p = 20;
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut ok = true;
    for inst in 0..20 {
        let n = [5, 10, 15][inst % 3];
        let mut eig: Vec<f64> = (0..p).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let spec = Spectrum::new(eig)?;
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let sigma = rng.random_range(0.0..1.0);
        let opt = optimal_surrogate(&spec, &beta, n)?.into_values();
        let risk = one_stage_risk(&spec, &beta, &opt, n, sigma)?.total;
        let mut grad_max = 0.0f64;
        for j in 0..p {
            let mut up = opt.clone();
            let mut dn = opt.clone();
            up[j] += h;
            dn[j] -= h;
            let g = (one_stage_risk(&spec, &beta, &up, n, sigma)?.total
                - one_stage_risk(&spec, &beta, &dn, n, sigma)?.total)
                / (2.0 * h);
            grad_max = grad_max.max(g.abs());
        }
        let ratio = grad_max / (1e-6 * (1.0 + risk));
        worst = worst.max(ratio);
        ok &= ratio <= 1.0;
    }
    Ok(outcome(ok, format!("worst |grad|_inf / (1e-6 (1+risk)) = {worst:.3e} over 20 instances")))
}

fn c4() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(DEFAULT_SEED, 4, 0));
    let p = 12;
    let mut mismatches = 0;
    for inst in 0..50 {
        let n = rng.random_range(3..=9);
        let sigma = if inst % 2 == 0 { 0.0 } else { 1.0 };
        let mut eig: Vec<f64> = (0..p).map(|_| 10f64.powf(rng.random_range(-3.0..1.0))).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let spec = Spectrum::new(eig)?;
        let beta: Vec<f64> = (0..p)
            .map(|_| {
                let mag = rng.random_range(0.1..2.0);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let brute = brute_force_mask(&spec, &beta, n, sigma)?;
        let rule = optimal_mask_from_stats(&solve_tau(&spec, n)?);
        if brute != rule {
            mismatches += 1;
        }
    }
    Ok(outcome(
        mismatches == 0,
        format!("{mismatches} of 50 exhaustive 4096-mask searches differ from the threshold rule"),
    ))
}

fn c5() -> Result<Outcome> {
    let cfg = config(
        Experiment::TwoStageGrid,
        &[
            ("p", "100"),
            ("alpha", "1.5,2"),
            ("beta_exp", "1.5"),
            ("n", "10..80:10"),
            ("sigma_t", "0.05"),
            ("sigma_s", "0.05"),
            ("trials", "400"),
        ],
    )?;
    let grid = run_two_stage_grid(&cfg)?;
    let mut ok = grid.points.len() == 16 && grid.warnings.is_empty();
    let mut worst_rel = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut worst_at = (0.0, 0);
    for pt in &grid.points {
        let se = pt.mc.std_error().unwrap_or(f64::NAN);
        let rel = (pt.mc.total - pt.theory.total).abs() / pt.theory.total;
        let z = (pt.mc.total - pt.theory.total).abs() / se;
        if z > worst_z {
            worst_at = (pt.alpha, pt.n);
        }
        worst_rel = worst_rel.max(rel);
        worst_z = worst_z.max(z);
        ok &= rel <= 0.10 && z <= 3.0;
    }
    Ok(outcome(
        ok,
        format!(
            "max rel err {worst_rel:.4} (<= 0.10), max |z| {worst_z:.2} (<= 3, at alpha {} n=m {}), {} points",
            worst_at.0,
            worst_at.1,
            grid.points.len()
        ),
    ))
}

fn c6() -> Result<Outcome> {
    let spec = power_law_spectrum(100_000, 2.0)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for &n in &[50usize, 100, 200] {
        let st = solve_tau(&spec, n)?;
        let tau_pred = (std::f64::consts::PI / 2.0).powi(2) / (n * n) as f64;
        let tau_rel = (st.tau - tau_pred).abs() / st.tau;
        let om_err = (st.omega - 0.5).abs();
        let tol = 10.0 / n as f64;
        ok &= tau_rel <= tol && om_err <= tol;
        notes.push(format!("n={n}: tau rel {tau_rel:.2e}, |omega-1/2| {om_err:.2e} (<= {tol:.2})"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(DEFAULT_SEED, 6, 0));
    let (mut tau_checked, mut omega_checked) = (0, 0);
    for _ in 0..30 {
        let alpha = rng.random_range(1.2..8.0);
        let p = rng.random_range(50..3000);
        let n = rng.random_range(1..p);
        let bounds = tau_bounds_nonasymptotic(alpha, p, n);
        let lower = omega_lower_bound(alpha, p, n);
        if bounds.is_err() && lower.is_err() {
            continue;
        }
        let st = solve_tau(&power_law_spectrum(p, alpha)?, n)?;
        if let Ok(iv) = bounds {
            tau_checked += 1;
            ok &= iv.contains(st.tau);
        }
        if let Ok(lb) = lower {
            omega_checked += 1;
            ok &= lb <= st.omega;
        }
    }
    ok &= tau_checked > 0 && omega_checked > 0;
    notes.push(format!("random grid: tau interval checked {tau_checked}, omega bound checked {omega_checked} of 30"));
    Ok(outcome(ok, notes.join("; ")))
}

fn c7() -> Result<Outcome> {
    let cfg = config(Experiment::MaskCount, &[("p", "500"), ("alpha", "1.5,3,4.5"), ("n", "10..100:1")])?;
    let (_, points) = run_mask_count(&cfg)?;
    let worst = points
        .iter()
        .map(|pt| (pt.mask_count as f64 - pt.predicted_mask).abs() - pt.slack())
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = points.iter().all(|pt| pt.within());
    Ok(outcome(ok, format!("worst |count - n C2| - (0.05 n + 5) = {worst:.3} over {} points", points.len())))
}

fn c8() -> Result<Outcome> {
    let grid = "50,100,200,400,800";
    let kinds = "ground-truth,optimal";
    let a = run_scaling_slope(&config(
        Experiment::ScalingSlope,
        &[("p", "8000"), ("alpha", "2"), ("beta_exp", "1.5"), ("sigma_t", "0"), ("n", grid), ("kinds", kinds)],
    )?)?;
    let b = run_scaling_slope(&config(
        Experiment::ScalingSlope,
        &[("p", "8000"), ("alpha", "1.2"), ("beta_exp", "4"), ("sigma_t", "0"), ("n", grid), ("kinds", kinds)],
    )?)?;
    let (ta, oa) = (a.slope_target.unwrap_or(f64::NAN), a.slope_optimal.unwrap_or(f64::NAN));
    let (tb, ob) = (b.slope_target.unwrap_or(f64::NAN), b.slope_optimal.unwrap_or(f64::NAN));
    let ok = (ta + 0.5).abs() <= 0.1
        && (oa + 0.5).abs() <= 0.1
        && (ta - oa).abs() <= 0.05
        && (tb + 2.4).abs() <= 0.15
        && (ob + 2.4).abs() <= 0.15;
    Ok(outcome(
        ok,
        format!("alpha 2 beta 1.5: target {ta:.4}, optimal {oa:.4} (-0.5); alpha 1.2 beta 4: target {tb:.4}, optimal {ob:.4} (-2.4)"),
    ))
}

fn c9() -> Result<Outcome> {
    let p = 200;
    let n = 80;
    let sigma = 0.05;
    let spec_s = power_law_spectrum(p, 1.5)?;
    let spec_t = power_law_spectrum(p, 2.5)?;
    let beta = power_law_signal(p, 2.5, 1.5)?;
    let seed = derive_seed(DEFAULT_SEED, 9, 0);
    let mapped = covariance_shift_map(&beta, &spec_s, &spec_t)?;
    let model = one_stage_mc(&spec_t, &beta, &[mapped], n, sigma, 300, seed)?.reports[0];
    let shift = covariance_shift_mc(&beta, &spec_s, &spec_t, n, sigma, 300, seed)?;
    let se = (model.std_error().unwrap_or(f64::NAN).powi(2) + shift.std_error().unwrap_or(f64::NAN).powi(2)).sqrt();
    let z = (model.total - shift.total).abs() / se;
    Ok(outcome(
        z <= 3.0,
        format!("model-shift mc {:.4}, covariance-shift mc {:.4}, |z| {z:.1} (<= 3)", model.total, shift.total),
    ))
}

fn c10() -> Result<Outcome> {
    let clean = run_verify(&VerifySettings { seed: DEFAULT_SEED, trials: 200, inject_fault: false })?;
    let faulty = run_verify(&VerifySettings { seed: DEFAULT_SEED, trials: 200, inject_fault: true })?;
    let caught = faulty.get("fixed-point-residual").is_some_and(|p| !p.passed);
    let ok = clean.passed && !faulty.passed && caught;
    Ok(outcome(
        ok,
        format!(
            "{} of {} properties pass; injected fault fails: {}",
            clean.properties.iter().filter(|p| p.passed).count(),
            clean.properties.len(),
            faulty.failures().join(", ")
        ),
    ))
}

fn report(id: usize, name: &str, start: Instant, res: Result<Outcome>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(o) => {
            println!("{} criterion {id:>2} {name}: {} [{secs:.1}s]", if o.passed { "PASS" } else { "FAIL" }, o.detail);
            o.passed
        }
        Err(e) => {
            println!("FAIL criterion {id:>2} {name}: error: {e} [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut all = true;

    let t = Instant::now();
    let sweep = risk_sweep();
    match &sweep {
        Ok(s) => {
            all &= report(1, "one-stage theory vs simulation", t, c1(s));
            all &= report(2, "risk ordering", t, c2(s));
        }
        Err(e) => {
            println!("FAIL criterion  1 one-stage theory vs simulation: error: {e}");
            println!("FAIL criterion  2 risk ordering: error: {e}");
            all = false;
        }
    }
    let rest: [(usize, &str, Criterion); 8] = [
        (3, "optimal surrogate stationarity", c3),
        (4, "mask oracle equivalence", c4),
        (5, "two-stage theory vs simulation", c5),
        (6, "tau and omega asymptotics and bounds", c6),
        (7, "cutoff count", c7),
        (8, "scaling-law exponents", c8),
        (9, "covariance-shift equivalence", c9),
        (10, "property suite and negative control", c10),
    ];
    for (id, name, f) in rest {
        let t = Instant::now();
        all &= report(id, name, t, f());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
