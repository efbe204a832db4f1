//! Kolmogorov–Smirnov distance between a sample and a model law.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::ReturnLaw;
use crate::numerics::{cumulant_range, CosExpansion};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Asymptotic p-value of `D` at sample size `n`, with the Stephens
/// small-sample correction.
pub fn kolmogorov_p_value(n: usize, d: f64) -> f64 {
    if n == 0 || !d.is_finite() {
        return f64::NAN;
    }
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut q = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lam * lam).exp();
        q += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * q).clamp(0.0, 1.0)
}

/// KS statistic of `sample` against an arbitrary cdf.
pub fn ks_with_cdf<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsResult> {
    if sample.is_empty() || sample.iter().any(|x| !x.is_finite()) {
        return Err(invalid("sample must be non-empty and finite"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult { statistic: d, p_value: kolmogorov_p_value(xs.len(), d), n: xs.len() })
}

/// KS statistic against a law known through its characteristic function.
pub fn ks_distance<L: ReturnLaw + ?Sized>(sample: &[f64], law: &L) -> Result<KsResult> {
    if sample.len() < 30 {
        return Err(invalid("KS distance needs at least 30 observations"));
    }
    let (a, b) = cumulant_range(law.cumulants()?, 14.0);
    let lo = sample.iter().cloned().fold(a, f64::min);
    let hi = sample.iter().cloned().fold(b, f64::max);
    let pad = 0.05 * (hi - lo);
    let e = CosExpansion::build(|u| law.cf(u.into()), lo - pad, hi + pad, 1e-12, 1 << 14)?;
    ks_with_cdf(sample, |x| e.cdf(x))
}
