//! Desk-scale property suite behind the `verify` experiment.
//!
//! Every property reports its worst observed value against a threshold;
//! `margin = threshold - worst`, so a property passes when the margin is
//! non-negative.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use w2s_core::seed::derive_seed;
use w2s_core::*;

use crate::error::{LabError, Result};
use crate::estimators::{fit, sample_dataset, Factorization};
use crate::montecarlo::{one_stage_mc, McSummary};
use crate::reference::{one_stage_risk_dense, two_stage_risk_dense};

/// Relative perturbation applied to `tau` by the fault injection.
pub const FAULT_TAU_SHIFT: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub threshold: f64,
    pub margin: f64,
    pub cases: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub fault_injected: bool,
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<&'static str> {
        self.properties.iter().filter(|p| !p.passed).map(|p| p.name).collect()
    }

    pub fn get(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifySettings {
    pub seed: u64,
    /// Trials for the Monte Carlo agreement check.
    pub trials: usize,
    pub inject_fault: bool,
}

/// Tracks the largest value of a "must stay below threshold" quantity.
struct Check {
    name: &'static str,
    threshold: f64,
    worst: f64,
    cases: usize,
}

impl Check {
    fn new(name: &'static str, threshold: f64) -> Self {
        Check { name, threshold, worst: f64::NEG_INFINITY, cases: 0 }
    }

    fn observe(&mut self, v: f64) {
        self.cases += 1;
        // NaN must fail the property
        self.worst = if v.is_nan() { f64::INFINITY } else { self.worst.max(v) };
    }

    /// Records a boolean outcome as 0 (held) or 1 (violated) against a threshold of 0.
    fn holds(&mut self, ok: bool) {
        self.observe(if ok { 0.0 } else { 1.0 });
    }

    fn finish(self) -> PropertyResult {
        let margin = self.threshold - self.worst;
        PropertyResult {
            name: self.name,
            passed: self.cases > 0 && margin >= 0.0,
            worst: self.worst,
            threshold: self.threshold,
            margin,
            cases: self.cases,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn random_spectrum(rng: &mut ChaCha8Rng, p: usize) -> Spectrum {
    let mut v: Vec<f64> = (0..p).map(|_| 10f64.powf(rng.random_range(-3.0..1.0))).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Spectrum::new(v).expect("positive sorted values")
}

fn random_vec(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| StandardNormal.sample(rng)).collect()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

fn rotate(u: &DMatrix<f64>, spec: &Spectrum) -> DMatrix<f64> {
    u * DMatrix::from_diagonal(&DVector::from_column_slice(spec.eigenvalues())) * u.transpose()
}

/// Random `(spectrum, n)` pairs with `n < p`.
fn instances(seed: u64, count: usize, max_p: usize) -> Vec<(Spectrum, usize, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = rng.random_range(3..=max_p);
            let s = random_spectrum(&mut rng, p);
            let n = rng.random_range(1..p);
            let b = random_vec(&mut rng, p);
            (s, n, b)
        })
        .collect()
}

fn residual_ratio(spec: &Spectrum, n: usize, tau: f64) -> f64 {
    (spec.effective_dof(tau) - n as f64).abs() / TauSolver::default().tolerance(n)
}

pub fn run_verify(settings: &VerifySettings) -> Result<VerifyReport> {
    let seed = settings.seed;
    let sub = |k: u64| derive_seed(seed, 100, k);
    let cases = instances(sub(0), 40, 60);
    let mut out = Vec::new();

    let mut c = Check::new("fixed-point-residual", 1.0);
    for (s, n, _) in &cases {
        let st = solve_tau(s, *n)?;
        let tau = if settings.inject_fault { st.tau * (1.0 + FAULT_TAU_SHIFT) } else { st.tau };
        c.observe(residual_ratio(s, *n, tau));
    }
    out.push(c.finish());

    let mut c = Check::new("negative-control-detects-tau-shift", 0.0);
    for (s, n, _) in &cases {
        let st = solve_tau(s, *n)?;
        c.holds(residual_ratio(s, *n, st.tau * (1.0 + FAULT_TAU_SHIFT)) > 1.0);
    }
    out.push(c.finish());

    let mut c = Check::new("zeta-ordering", 0.0);
    for (s, n, _) in &cases {
        let st = solve_tau(s, *n)?;
        c.holds(st.zeta.windows(2).all(|w| w[0] <= w[1]));
    }
    out.push(c.finish());

    let mut c = Check::new("omega-ratio-identity", 1e-10);
    for (s, n, _) in &cases {
        let st = solve_tau(s, *n)?;
        c.observe(rel(st.omega, st.omega_ratio()));
    }
    out.push(c.finish());

    let mut c = Check::new("tau-scaling-covariance", 1e-9);
    for (k, (s, n, _)) in cases.iter().enumerate() {
        let scale = 0.01 * (k as f64 + 1.0);
        let a = solve_tau(s, *n)?;
        let b = solve_tau(&s.scaled(scale)?, *n)?;
        c.observe(rel(b.tau, scale * a.tau).max(rel(a.omega, b.omega)));
    }
    out.push(c.finish());

    let mut c = Check::new("tau-bit-reproducibility", 0.0);
    for (s, n, _) in &cases {
        c.holds(solve_tau(s, *n)?.tau.to_bits() == solve_tau(s, *n)?.tau.to_bits());
    }
    out.push(c.finish());

    let mut c = Check::new("nonasymptotic-bounds-sandwich", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(sub(1));
    for _ in 0..30 {
        let alpha: f64 = rng.random_range(1.5..8.0);
        let p: usize = rng.random_range(100..4000);
        let k = (3.0 + 2f64.powf(-alpha)) / (4.0 + 2f64.powf(2.0 - alpha));
        let n = rng.random_range(1..((p as f64 * k) as usize).max(2));
        let st = solve_tau(&power_law_spectrum(p, alpha)?, n)?;
        let mut ok = tau_bounds_nonasymptotic(alpha, p, n).map(|iv| iv.contains(st.tau)).unwrap_or(false);
        if let Ok(lb) = omega_lower_bound(alpha, p, n) {
            ok &= lb <= st.omega;
        }
        c.holds(ok);
    }
    out.push(c.finish());

    let mut interp = Check::new("min-norm-interpolation", 1e-8);
    let mut minimal = Check::new("min-norm-minimality", 1e-12);
    let mut normal = Check::new("least-squares-normal-equations", 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(sub(2));
    for t in 0..12 {
        let p = rng.random_range(10..80);
        let s = random_spectrum(&mut rng, p);
        let b = random_vec(&mut rng, p);
        let n = rng.random_range(2..p);
        let d = sample_dataset(&s, &b, 0.1, n, sub(10 + t))?;
        let f = fit(&d.design, &d.labels)?;
        let bh = DVector::from_column_slice(&f.beta_hat);
        interp.observe((&d.design * &bh - &d.labels).norm() / d.labels.norm());
        // null-space perturbation of the design
        let w = DVector::from_vec(random_vec(&mut rng, p));
        let fw = Factorization::new(&d.design)?.solve(&(&d.design * &w))?;
        let v = &w - DVector::from_column_slice(&fw.beta_hat);
        minimal.observe((bh.norm() - (&bh + &v).norm()) / bh.norm());

        let big = p + rng.random_range(1..40);
        let d = sample_dataset(&s, &b, 0.1, big, sub(40 + t))?;
        let f = fit(&d.design, &d.labels)?;
        let r = &d.design * DVector::from_column_slice(&f.beta_hat) - &d.labels;
        normal.observe((d.design.transpose() * r).norm() / (d.design.norm() * d.labels.norm()));
    }
    out.extend([interp.finish(), minimal.finish(), normal.finish()]);

    let mut one = Check::new("one-stage-diagonal-vs-matrix", 1e-10);
    let mut two = Check::new("two-stage-diagonal-vs-matrix", 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(sub(3));
    for _ in 0..10 {
        let p = rng.random_range(4..=50);
        let st_spec = random_spectrum(&mut rng, p);
        let ss_spec = random_spectrum(&mut rng, p);
        let u = random_orthogonal(&mut rng, p);
        let beta = random_vec(&mut rng, p);
        let beta_s = random_vec(&mut rng, p);
        let (n, m) = (rng.random_range(1..p), rng.random_range(1..p));
        let sig_t = rng.random_range(0.0..1.0);
        let sig_s = rng.random_range(0.0..1.0);
        let to_bar = |v: &[f64]| (u.transpose() * DVector::from_column_slice(v)).as_slice().to_vec();
        let (bb, bsb) = (to_bar(&beta), to_bar(&beta_s));
        let cov_t = rotate(&u, &st_spec);
        let cov_s = rotate(&u, &ss_spec);

        let diag = one_stage_risk(&st_spec, &bb, &bsb, n, sig_t)?;
        let tau_t = solve_tau(&st_spec, n)?.tau;
        let dense = one_stage_risk_dense(&cov_t, tau_t, n, &beta, &beta_s, sig_t);
        one.observe(rel(diag.total, dense.total).max(rel(diag.bias, dense.bias)));

        let inst = ProblemInstance::new(st_spec.clone(), ss_spec.clone(), bb, sig_t, sig_s, n, m)?;
        let diag = two_stage_risk(&inst)?;
        let tau_s = solve_tau(&ss_spec, m)?.tau;
        let dense = two_stage_risk_dense(&cov_s, &cov_t, tau_s, tau_t, m, n, &beta, sig_s, sig_t);
        two.observe(rel(diag.total, dense.total).max(rel(diag.bias, dense.bias)));
    }
    out.extend([one.finish(), two.finish()]);

    let mut omni = Check::new("omniscient-consistency", 1e-12);
    let mut gamma = Check::new("gamma-self-consistency", 1e-10);
    let mut gain = Check::new("gain-threshold-sign", 0.0);
    let mut noise = Check::new("risk-monotone-in-noise", 0.0);
    for (s, n, b) in &cases {
        let st = solve_tau(s, *n)?;
        let big_b: f64 = s.eigenvalues().iter().zip(&st.zeta).zip(b).map(|((l, z), x)| l * z * z * x * x).sum();
        let closed = (0.3 * st.omega + big_b) / (1.0 - st.omega);
        let o = omniscient_risk(s, b, 0.3, *n)?.total;
        omni.observe(rel(o, closed).max(rel(o, one_stage_risk(s, b, b, *n, 0.3)?.total)));

        let g = gamma_t_sq(&st, s, b, 0.3, s.dim())?.gamma_sq;
        gamma.observe(gamma_fixed_point_residual(&st, s, b, 0.3, g)?.abs() / g.max(1.0));

        let prof = GainProfile::from_stats(st.clone())?;
        gain.holds(prof.gains.iter().zip(&st.retained).all(|(&gv, &r)| {
            let m = r - st.omega;
            m.abs() <= 1e-9 || (gv > 1.0) == (m > 0.0)
        }));

        let r0 = one_stage_risk(s, b, b, *n, 0.1)?.total;
        let r1 = one_stage_risk(s, b, b, *n, 0.2)?.total;
        noise.holds(r1 > r0);
    }
    out.extend([omni.finish(), gamma.finish(), gain.finish(), noise.finish()]);

    let mut iso = Check::new("isotropy-degeneracy", 0.0);
    let mut optimal = Check::new("optimal-surrogate-beats-random", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(sub(4));
    for (s, n, b) in cases.iter().take(8) {
        let opt = optimal_surrogate(s, b, *n)?;
        let r_opt = one_stage_risk(s, b, opt.values(), *n, 0.2)?.total;
        let mut ok = r_opt <= one_stage_risk(s, b, b, *n, 0.2)?.total * (1.0 + 1e-12);
        for _ in 0..1000 {
            let cand: Vec<f64> = opt.values().iter().map(|x| x + 0.5 * rng.random_range(-1.0..1.0)).collect();
            ok &= r_opt <= one_stage_risk(s, b, &cand, *n, 0.2)?.total * (1.0 + 1e-12);
        }
        optimal.holds(ok);

        let flat = Spectrum::isotropic(s.dim(), 0.7)?;
        let r_gt = one_stage_risk(&flat, b, b, *n, 0.2)?.total;
        let mut ok = true;
        for _ in 0..50 {
            let cand: Vec<f64> = b.iter().map(|x| x + 0.1 * rng.random_range(-1.0..1.0)).collect();
            ok &= r_gt < one_stage_risk(&flat, b, &cand, *n, 0.2)?.total;
        }
        iso.holds(ok);
    }
    out.extend([iso.finish(), optimal.finish()]);

    let mut chain = Check::new("risk-ordering-chain", 0.0);
    let mut sparsity = Check::new("mask-sparsity-monotone-in-n", 0.0);
    for alpha in [1.5, 2.0, 3.0] {
        let p = 300;
        let s = power_law_spectrum(p, alpha)?;
        let b = power_law_signal(p, alpha, 1.5)?;
        let mut prev = 0;
        for n in (10..p).step_by(20) {
            let opt = optimal_surrogate(&s, &b, n)?;
            let mask = optimal_mask(&s, n)?;
            let r_opt = one_stage_risk(&s, &b, opt.values(), n, 0.05)?.total;
            let r_mask = one_stage_risk(&s, &b, &apply_mask(&b, &mask)?, n, 0.05)?.total;
            let r_gt = omniscient_risk(&s, &b, 0.05, n)?.total;
            chain.holds(r_opt <= r_mask * (1.0 + 1e-12) && r_mask <= r_gt * (1.0 + 1e-12) && r_opt < r_gt);
            sparsity.holds(mask.len() >= prev);
            prev = mask.len();
        }
    }
    out.extend([chain.finish(), sparsity.finish()]);

    let mut brute = Check::new("mask-threshold-vs-brute-force", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(sub(5));
    for k in 0..10 {
        let s = if k % 2 == 0 { power_law_spectrum(10, 1.2 + k as f64 * 0.3)? } else { random_spectrum(&mut rng, 10) };
        let b: Vec<f64> = (0..10).map(|_| rng.random_range(0.1..2.0)).collect();
        let n = rng.random_range(1..10);
        for sigma in [0.0, 1.0] {
            brute.holds(brute_force_mask(&s, &b, n, sigma)? == optimal_mask(&s, n)?);
        }
    }
    out.push(brute.finish());

    let mut det = Check::new("determinism-under-parallelism", 0.0);
    let s = power_law_spectrum(80, 2.0)?;
    let b = power_law_signal(80, 2.0, 1.5)?;
    let run = |threads: usize| -> Result<Vec<u64>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| LabError::Numerical(e.to_string()))?;
        let mc = pool.install(|| one_stage_mc(&s, &b, std::slice::from_ref(&b), 30, 0.05, 24, sub(6)))?;
        Ok(mc.risks[0].iter().map(|r| r.to_bits()).collect())
    };
    det.holds(run(1)? == run(4)?);
    out.push(det.finish());

    let mut agree = Check::new("monte-carlo-one-stage-within-3se", 3.0);
    let s = power_law_spectrum(200, 2.0)?;
    let b = power_law_signal(200, 2.0, 1.5)?;
    let n = 80;
    let opt = optimal_surrogate(&s, &b, n)?.into_values();
    let mc = one_stage_mc(&s, &b, &[b.clone(), opt.clone()], n, 0.05, settings.trials, sub(7))?;
    for (k, bs) in [&b, &opt].into_iter().enumerate() {
        let th = one_stage_risk(&s, &b, bs, n, 0.05)?.total;
        let sm = McSummary::from_samples(&mc.risks[k]);
        agree.observe(sm.z_score(th).map_or(f64::INFINITY, f64::abs));
    }
    out.push(agree.finish());

    let passed = out.iter().all(|p| p.passed);
    Ok(VerifyReport { passed, fault_injected: settings.inject_fault, properties: out })
}
