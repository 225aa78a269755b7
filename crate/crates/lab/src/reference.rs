//! Dense-matrix risk formulas, kept only to cross-check the diagonal ones.
//!
//! Each quantity is built literally from resolvents `(S + tau I)^-1` and
//! matrix square roots, so the two code paths share nothing but `tau`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use w2s_core::RiskReport;

/// `f(S)` for symmetric positive definite `S`.
pub fn spd_function(s: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(s.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn resolvent(s: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let p = s.nrows();
    (s + DMatrix::identity(p, p) * tau).try_inverse().expect("shifted covariance is invertible")
}

fn quad(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (v.transpose() * m * v)[0]
}

/// Stage quantities: `theta = (S + tau I)^-1 S` and `omega = tr(theta^2) / count`.
struct Stage {
    theta: DMatrix<f64>,
    omega: f64,
    kappa: f64,
}

impl Stage {
    fn new(s: &DMatrix<f64>, tau: f64, count: usize) -> Self {
        let theta = resolvent(s, tau) * s;
        let p = s.nrows();
        let omega = (&theta * &theta).trace() / count as f64;
        Stage { theta, omega, kappa: p as f64 / count as f64 }
    }
}

/// The one-stage risk estimate written as its four quadratic and trace terms,
/// with `gamma^2` obtained by solving its defining linear equation.
pub fn one_stage_risk_dense(
    sigma: &DMatrix<f64>,
    tau: f64,
    n: usize,
    beta_star: &[f64],
    beta_s: &[f64],
    sigma_sq: f64,
) -> RiskReport {
    let p = sigma.nrows();
    let st = Stage::new(sigma, tau, n);
    let id = DMatrix::<f64>::identity(p, p);
    let bs = DVector::from_column_slice(beta_s);
    let b = DVector::from_column_slice(beta_star);
    let d = &bs - &b;
    let th = &st.theta;
    let resid = &id - th;
    // E_g[theta_2^T S theta_2] with theta_2 = (S + tau I)^-1 S^{1/2} g / sqrt(p)
    let half = spd_function(sigma, f64::sqrt);
    let r = resolvent(sigma, tau);
    let e_theta2 = (half.transpose() * r.transpose() * sigma * &r * &half).trace() / p as f64;
    // gamma^2 = kappa (sigma^2 + gamma^2 e_theta2 + beta_s^T (I - theta)^T S (I - theta) beta_s)
    let self_bias = quad(&bs, &(resid.transpose() * sigma * &resid));
    let gamma_sq = st.kappa * (sigma_sq + self_bias) / (1.0 - st.kappa * e_theta2);

    let t1 = quad(&d, &(th.transpose() * sigma * th));
    let t2 = gamma_sq * e_theta2;
    let t3 = quad(&b, &(resid.transpose() * sigma * &resid));
    let t4 = -2.0 * (b.transpose() * resid.transpose() * sigma * th * &d)[0];
    RiskReport::theory(t1 + t3 + t4, t2)
}

/// Expected `gamma_t^2(beta_s)` when `beta_s = mu + L g / sqrt(p)`, `g ~ N(0, I)`.
fn expected_gamma_t_sq(
    sigma_t: &DMatrix<f64>,
    st: &Stage,
    sigma_t_sq: f64,
    mu: &DVector<f64>,
    l: &DMatrix<f64>,
) -> f64 {
    let p = sigma_t.nrows();
    let id = DMatrix::<f64>::identity(p, p);
    let resid = &id - &st.theta;
    let q = resid.transpose() * sigma_t * &resid;
    let e_quad = quad(mu, &q) + (l.transpose() * &q * l).trace() / p as f64;
    st.kappa * (sigma_t_sq + e_quad) / (1.0 - st.omega)
}

/// Two-stage risk estimate from its matrix definition: the surrogate is the
/// random variable `theta_s [beta + S_s^{-1/2} gamma_s g / sqrt(p)]`.
#[allow(clippy::too_many_arguments)]
pub fn two_stage_risk_dense(
    sigma_s: &DMatrix<f64>,
    sigma_t: &DMatrix<f64>,
    tau_s: f64,
    tau_t: f64,
    m: usize,
    n: usize,
    beta_star: &[f64],
    sigma_s_sq: f64,
    sigma_t_sq: f64,
) -> RiskReport {
    let p = sigma_t.nrows();
    let pf = p as f64;
    let id = DMatrix::<f64>::identity(p, p);
    let b = DVector::from_column_slice(beta_star);
    let ss = Stage::new(sigma_s, tau_s, m);
    let stt = Stage::new(sigma_t, tau_t, n);
    let s_half = spd_function(sigma_s, f64::sqrt);
    let s_inv_half = spd_function(sigma_s, |x| 1.0 / x.sqrt());
    let t_half = spd_function(sigma_t, f64::sqrt);

    // gamma_s^2 = kappa_s (sigma_s^2 + E || S_s^{1/2} (X - beta) ||^2), linear in gamma_s^2
    let mean_err = &s_half * (&ss.theta - &id) * &b;
    let spread = &s_half * &ss.theta * &s_inv_half;
    let spread_tr = (spread.transpose() * &spread).trace() / pf;
    let gamma_s_sq = ss.kappa * (sigma_s_sq + mean_err.norm_squared()) / (1.0 - ss.kappa * spread_tr);

    let mu = &ss.theta * &b;
    let l = &ss.theta * &s_inv_half * gamma_s_sq.sqrt();
    let e_gamma_t = expected_gamma_t_sq(sigma_t, &stt, sigma_t_sq, &mu, &l);

    let bias_vec = &t_half * (&id - &stt.theta * &ss.theta) * &b;
    let term1 = bias_vec.norm_squared();
    let rt = resolvent(sigma_t, tau_t);
    let term2 = e_gamma_t / pf * (sigma_t * sigma_t * &rt * &rt).trace();
    let rs = resolvent(sigma_s, tau_s);
    let chain = &s_half * &rs * sigma_t * &rt * sigma_t * &rt * sigma_t * &rs * &s_half;
    let term3 = gamma_s_sq / pf * chain.trace();
    RiskReport::theory(term1, term2 + term3)
}
