//! Five classical early-warning indicators of critical slowing down.

use super::{mean, FeatureError};

pub const EWSI5_NAMES: [&str; 5] = ["SD", "CV", "AR1", "Skewness", "Kurtosis"];

/// `[SD, CV, AR1, Skewness, Kurtosis]`.
///
/// * SD uses the `N − 1` denominator.
/// * CV is `SD / mean · 100` (percent).
/// * AR1 is the product-moment correlation of the pairs `(x_i, x_{i−1})`,
///   `i = 2..N`, each side centred and scaled by its own mean and standard
///   deviation over the `N − 1` pairs. When one side of the pairs is
///   constant the correlation is undefined and 0 is reported.
/// * Skewness is `Σ(x − x̄)³ / (N · SD³)` with the `N − 1` SD above.
/// * Kurtosis is `m4 / m2²` with `1/N` central moments (non-excess, a
///   Gaussian gives 3).
pub fn compute_ewsi5(x: &[f64]) -> Result<[f64; 5], FeatureError> {
    let n = x.len();
    if n < 3 {
        return Err(FeatureError::TooShort { needed: 3, actual: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite);
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(FeatureError::Constant);
    }
    let nf = n as f64;
    let m = mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(FeatureError::Constant);
    }
    if m == 0.0 {
        return Err(FeatureError::Degenerate("coefficient of variation undefined for zero mean".into()));
    }
    let cv = sd / m * 100.0;
    let skew = m3 / (nf * sd.powi(3));
    let kurt = (m4 / nf) / (m2 / nf).powi(2);
    let ar1 = lag1_correlation(x);
    Ok([sd, cv, ar1, skew, kurt])
}

fn lag1_correlation(x: &[f64]) -> f64 {
    let lead = &x[1..];
    let lagged = &x[..x.len() - 1];
    let (ml, mg) = (mean(lead), mean(lagged));
    let mut num = 0.0;
    let mut vl = 0.0;
    let mut vg = 0.0;
    for (&a, &b) in lead.iter().zip(lagged) {
        num += (a - ml) * (b - mg);
        vl += (a - ml) * (a - ml);
        vg += (b - mg) * (b - mg);
    }
    if vl == 0.0 || vg == 0.0 {
        return 0.0;
    }
    num / (vl * vg).sqrt()
}
