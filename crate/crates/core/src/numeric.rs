//! Small floating-point helpers shared by the spectral routines.

/// Neumaier-compensated sum. Callers feed terms smallest-first where they can.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if libm::fabs(sum) >= libm::fabs(x) {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Relative difference `|a - b| / max(|a|, |b|, tiny)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = libm::fmax(libm::fmax(libm::fabs(a), libm::fabs(b)), f64::MIN_POSITIVE);
    libm::fabs(a - b) / scale
}
