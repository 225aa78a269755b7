//! Optimal surrogates, masks, and the power-law cutoff and scaling predictions.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;
use core::ops::Range;

use crate::error::{invalid, Error, Result};
use crate::spectrum::{check_same_dim, k_upper_coefficient, solve_tau, SpectralStats, Spectrum};
use crate::theory::one_stage_risk_from_stats;

/// Relative slack under which `zeta_i^2` and `1 - omega` count as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// Largest dimension accepted by [`brute_force_mask`].
pub const MAX_BRUTE_FORCE_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurrogateKind {
    Arbitrary,
    GroundTruth,
    Optimal,
    Masked,
}

impl SurrogateKind {
    pub fn name(self) -> &'static str {
        match self {
            SurrogateKind::Arbitrary => "arbitrary",
            SurrogateKind::GroundTruth => "ground-truth",
            SurrogateKind::Optimal => "optimal",
            SurrogateKind::Masked => "masked",
        }
    }
}

/// A set of 0-based coordinate indices, kept sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Support {
    indices: Vec<usize>,
}

impl Support {
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Support { indices }
    }

    pub fn full(p: usize) -> Self {
        Support { indices: (0..p).collect() }
    }

    pub fn empty() -> Self {
        Support::default()
    }

    /// Support encoded by the low `p` bits of `bits`.
    pub fn from_bits(bits: u64, p: usize) -> Self {
        Support { indices: (0..p).filter(|&i| bits >> i & 1 == 1).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Smaller support first, then lexicographic on the sorted indices.
    pub fn tie_break_cmp(&self, other: &Support) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.indices.cmp(&other.indices))
    }
}

/// A candidate surrogate `beta_s` in spectral coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParam {
    values: Vec<f64>,
    kind: SurrogateKind,
    support: Option<Support>,
}

impl SurrogateParam {
    pub fn arbitrary(values: Vec<f64>) -> Self {
        SurrogateParam { values, kind: SurrogateKind::Arbitrary, support: None }
    }

    pub fn ground_truth(beta_star: &[f64]) -> Self {
        SurrogateParam { values: beta_star.to_vec(), kind: SurrogateKind::GroundTruth, support: None }
    }

    pub fn masked(beta_star: &[f64], support: Support) -> Result<Self> {
        let values = apply_mask(beta_star, &support)?;
        Ok(SurrogateParam { values, kind: SurrogateKind::Masked, support: Some(support) })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SurrogateKind {
        self.kind
    }

    pub fn support(&self) -> Option<&Support> {
        self.support.as_ref()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Zeroes every entry of `beta` outside `support`.
pub fn apply_mask(beta: &[f64], support: &Support) -> Result<Vec<f64>> {
    if let Some(&last) = support.indices().last() {
        if last >= beta.len() {
            return Err(Error::OutOfRange { index: last, len: beta.len() });
        }
    }
    let mut out = alloc::vec![0.0; beta.len()];
    for &i in support.indices() {
        out[i] = beta[i];
    }
    Ok(out)
}

/// Per-coordinate ratio `beta_s* / beta_star` of the optimal surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct GainProfile {
    pub gains: Vec<f64>,
    /// `1 - omega`: coordinate `i` is amplified when `1 - zeta_i > omega`.
    pub threshold_amplify: f64,
    /// `sqrt(1 - omega)`: coordinate `i` survives the optimal mask when `zeta_i` is below it.
    pub threshold_mask: f64,
    pub stats: SpectralStats,
}

impl GainProfile {
    pub fn from_stats(stats: SpectralStats) -> Result<Self> {
        let omega = stats.omega;
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::InternalInconsistency(format!("omega = {omega} outside (0, 1)")));
        }
        let ratio = omega / (1.0 - omega);
        let gains = stats.zeta.iter().zip(&stats.retained).map(|(&z, &r)| r / (r * r + z * z * ratio)).collect();
        Ok(GainProfile { gains, threshold_amplify: 1.0 - omega, threshold_mask: libm::sqrt(1.0 - omega), stats })
    }

    /// Number of leading coordinates with gain above one.
    pub fn amplified_count(&self) -> usize {
        self.gains.iter().filter(|&&g| g > 1.0).count()
    }
}

pub fn gain_profile(spec: &Spectrum, n: usize) -> Result<GainProfile> {
    GainProfile::from_stats(solve_tau(spec, n)?)
}

/// Minimizer of the one-stage risk over `beta_s`, entrywise `beta_star_i * gain_i`.
pub fn optimal_surrogate(spec: &Spectrum, beta_star: &[f64], n: usize) -> Result<SurrogateParam> {
    check_same_dim(spec, beta_star)?;
    let profile = gain_profile(spec, n)?;
    Ok(optimal_surrogate_from_profile(&profile, beta_star))
}

pub fn optimal_surrogate_from_profile(profile: &GainProfile, beta_star: &[f64]) -> SurrogateParam {
    let values = beta_star.iter().zip(&profile.gains).map(|(b, g)| b * g).collect();
    SurrogateParam { values, kind: SurrogateKind::Optimal, support: None }
}

/// `{i : zeta_i^2 < 1 - omega}`; ties within [`TIE_RTOL`] are excluded.
pub fn optimal_mask_from_stats(stats: &SpectralStats) -> Support {
    let keep = 1.0 - stats.omega;
    let indices =
        stats.zeta.iter().enumerate().filter(|(_, &z)| keep - z * z > TIE_RTOL * keep).map(|(i, _)| i).collect();
    Support { indices }
}

pub fn optimal_mask(spec: &Spectrum, n: usize) -> Result<Support> {
    Ok(optimal_mask_from_stats(&solve_tau(spec, n)?))
}

/// Best mask found in one chunk of an exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkBest {
    pub risk: f64,
    pub support: Support,
}

/// Exhaustive search over masks of `beta_star`, split into independently
/// scannable chunks of the `2^p` bit patterns.
///
/// Chunks are combined in two passes: [`MaskSearch::min_risk`] finds the
/// smallest risk of a chunk and [`MaskSearch::best_near`] picks, among masks
/// within [`TIE_RTOL`] of the global minimum, the smallest support and then
/// the lexicographically first one. The result does not depend on how the
/// range is chunked.
#[derive(Debug, Clone)]
pub struct MaskSearch<'a> {
    spec: &'a Spectrum,
    beta_star: &'a [f64],
    sigma_sq: f64,
    stats: SpectralStats,
}

impl<'a> MaskSearch<'a> {
    pub fn new(spec: &'a Spectrum, beta_star: &'a [f64], n: usize, sigma_sq: f64) -> Result<Self> {
        check_same_dim(spec, beta_star)?;
        let p = spec.dim();
        if p > MAX_BRUTE_FORCE_DIM {
            return Err(Error::TooLarge { p, max: MAX_BRUTE_FORCE_DIM });
        }
        let stats = solve_tau(spec, n)?;
        Ok(MaskSearch { spec, beta_star, sigma_sq, stats })
    }

    /// Number of candidate masks, `2^p`.
    pub fn count(&self) -> u64 {
        1u64 << self.spec.dim()
    }

    fn risk_into(&self, bits: u64, buf: &mut [f64]) -> Result<f64> {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if bits >> i & 1 == 1 { self.beta_star[i] } else { 0.0 };
        }
        Ok(one_stage_risk_from_stats(&self.stats, self.spec, self.beta_star, buf, self.sigma_sq)?.total)
    }

    /// One-stage risk of the mask encoded by `bits`.
    pub fn risk(&self, bits: u64) -> Result<f64> {
        let mut buf = alloc::vec![0.0; self.spec.dim()];
        self.risk_into(bits, &mut buf)
    }

    pub fn min_risk(&self, range: Range<u64>) -> Result<f64> {
        let mut buf = alloc::vec![0.0; self.spec.dim()];
        let mut best = f64::INFINITY;
        for bits in range {
            let r = self.risk_into(bits, &mut buf)?;
            if r < best {
                best = r;
            }
        }
        Ok(best)
    }

    pub fn tolerance(min_risk: f64) -> f64 {
        TIE_RTOL * libm::fabs(min_risk)
    }

    /// Preferred mask in `range` with risk within tolerance of `global_min`.
    pub fn best_near(&self, range: Range<u64>, global_min: f64) -> Result<Option<ChunkBest>> {
        let cutoff = global_min + Self::tolerance(global_min);
        let p = self.spec.dim();
        let mut buf = alloc::vec![0.0; p];
        let mut best: Option<ChunkBest> = None;
        for bits in range {
            let r = self.risk_into(bits, &mut buf)?;
            if r > cutoff {
                continue;
            }
            let cand = Support::from_bits(bits, p);
            let better = match &best {
                None => true,
                Some(b) => cand.tie_break_cmp(&b.support) == Ordering::Less,
            };
            if better {
                best = Some(ChunkBest { risk: r, support: cand });
            }
        }
        Ok(best)
    }

    /// Reduces per-chunk winners in any order.
    pub fn merge(chunks: impl IntoIterator<Item = Option<ChunkBest>>) -> Option<ChunkBest> {
        chunks.into_iter().flatten().min_by(|a, b| a.support.tie_break_cmp(&b.support))
    }
}

/// Exhaustive argmin of the one-stage risk over all `2^p` masks of `beta_star`.
pub fn brute_force_mask(spec: &Spectrum, beta_star: &[f64], n: usize, sigma_sq: f64) -> Result<Support> {
    let search = MaskSearch::new(spec, beta_star, n, sigma_sq)?;
    let all = 0..search.count();
    let min = search.min_risk(all.clone())?;
    let best = search
        .best_near(all, min)?
        .ok_or_else(|| Error::InternalInconsistency(format!("no mask reached the minimum {min}")))?;
    Ok(best.support)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must be > 1, got {alpha}")))
    }
}

/// `(n C1, n C2)`: predicted end of the amplified set and of the optimal mask
/// for `l_i = i^-alpha`.
pub fn cutoff_indices(alpha: f64, n: usize) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let s = alpha * libm::sin(PI / alpha) / PI;
    let c1 = s / libm::pow(alpha - 1.0, 1.0 / alpha);
    let c2 = s / libm::pow(libm::sqrt(alpha) - 1.0, 1.0 / alpha);
    Ok((n as f64 * c1, n as f64 * c2))
}

/// Exponent `g` in `risk ~ n^-g` for `l_i = i^-alpha`, `l_i b_i^2 = i^-beta_exp`.
pub fn scaling_exponent(alpha: f64, beta_exp: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(beta_exp.is_finite() && beta_exp > 1.0) {
        return Err(invalid("beta_exp", format!("must be > 1, got {beta_exp}")));
    }
    let edge = 2.0 * alpha + 1.0;
    if libm::fabs(beta_exp - edge) <= TIE_RTOL * edge {
        return Err(invalid("beta_exp", format!("boundary case beta_exp = 2 alpha + 1 = {edge}")));
    }
    Ok(if beta_exp < edge { beta_exp - 1.0 } else { 2.0 * alpha })
}

/// Open interval of `n` on which masking provably beats the standard target
/// model for `l_i = i^-alpha`, or `None` when `alpha <= 4`.
pub fn benign_window(alpha: f64, p: usize) -> Option<(f64, f64)> {
    if !(alpha.is_finite() && alpha > 4.0) {
        return None;
    }
    let pf = p as f64;
    let am1 = alpha - 1.0;
    let lower = libm::fmax(2.0 * alpha, pf * alpha / (am1 * am1) + alpha * alpha / (am1 * am1));
    let a = (pf + 1.0) * (alpha - 2.0) / alpha;
    let b = pf * k_upper_coefficient(alpha);
    let c = pf * PI * libm::pow(libm::sqrt(2.0 * alpha / 5.0) - 1.0, 1.0 / alpha) / (alpha * libm::sin(PI / alpha))
        - (pf + 1.0) / am1;
    let upper = libm::fmin(a, libm::fmin(b, c)) - 1.0;
    Some((lower, upper))
}

pub fn benign_region_check(alpha: f64, p: usize, n: usize) -> bool {
    match benign_window(alpha, p) {
        Some((lo, hi)) => lo < n as f64 && (n as f64) < hi,
        None => false,
    }
}
