//! Black–Scholes prices and their inversion.

use super::carr_madan::OptionKind;
use crate::error::{invalid, Error, Result};
use crate::numerics::{norm_cdf, norm_pdf};

pub fn bs_price(kind: OptionKind, spot: f64, strike: f64, maturity: f64, r: f64, d: f64, vol: f64) -> f64 {
    let sd = vol * maturity.sqrt();
    let fwd_disc = spot * (-d * maturity).exp();
    let k_disc = strike * (-r * maturity).exp();
    if sd <= 0.0 {
        return match kind {
            OptionKind::Call => (fwd_disc - k_disc).max(0.0),
            OptionKind::Put => (k_disc - fwd_disc).max(0.0),
        };
    }
    let d1 = ((fwd_disc / k_disc).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    match kind {
        OptionKind::Call => fwd_disc * norm_cdf(d1) - k_disc * norm_cdf(d2),
        OptionKind::Put => k_disc * norm_cdf(-d2) - fwd_disc * norm_cdf(-d1),
    }
}

pub fn bs_vega(spot: f64, strike: f64, maturity: f64, r: f64, d: f64, vol: f64) -> f64 {
    let sd = vol * maturity.sqrt();
    let fwd_disc = spot * (-d * maturity).exp();
    let k_disc = strike * (-r * maturity).exp();
    let d1 = ((fwd_disc / k_disc).ln() + 0.5 * sd * sd) / sd;
    fwd_disc * norm_pdf(d1) * maturity.sqrt()
}

/// Volatility reproducing `price`; errors when the price sits on or outside
/// the no-arbitrage bounds.
pub fn implied_vol(price: f64, kind: OptionKind, spot: f64, strike: f64, maturity: f64, r: f64, d: f64) -> Result<f64> {
    if !(spot > 0.0) || !(strike > 0.0) || !(maturity > 0.0) || !price.is_finite() {
        return Err(invalid("implied vol needs positive spot, strike, maturity and a finite price"));
    }
    let fwd_disc = spot * (-d * maturity).exp();
    let k_disc = strike * (-r * maturity).exp();
    let (lower, upper) = match kind {
        OptionKind::Call => ((fwd_disc - k_disc).max(0.0), fwd_disc),
        OptionKind::Put => ((k_disc - fwd_disc).max(0.0), k_disc),
    };
    let slack = 1e-14 * upper;
    if !(price > lower + slack) || !(price < upper - slack) {
        return Err(Error::Domain(format!(
            "price {price:.6e} outside the no-arbitrage band ({lower:.6e}, {upper:.6e}) for strike {strike}, maturity {maturity}"
        )));
    }
    let f = |v: f64| bs_price(kind, spot, strike, maturity, r, d, v) - price;
    let mut lo = 1e-8;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Domain(format!("no volatility below 1000 reproduces price {price:.6e}")));
        }
    }
    if f(lo) > 0.0 {
        return Err(Error::Domain(format!("price {price:.6e} is below the 1e-8 volatility price")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 * mid {
            break;
        }
    }
    // Newton polish in log price for deep out-of-the-money quotes.
    let mut v = 0.5 * (lo + hi);
    for _ in 0..20 {
        let p = bs_price(kind, spot, strike, maturity, r, d, v);
        let vega = bs_vega(spot, strike, maturity, r, d, v);
        if vega <= 0.0 || p <= 0.0 {
            break;
        }
        let step = (p.ln() - price.ln()) * p / vega;
        let next = (v - step).clamp(lo.min(v) * 0.5, hi.max(v) * 2.0);
        let done = (next - v).abs() <= 1e-15 * v;
        v = next;
        if done {
            break;
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_black_scholes_value() {
        // S=100, K=100, T=1, r=5%, vol=20%: 10.450583572185565
        let c = bs_price(OptionKind::Call, 100.0, 100.0, 1.0, 0.05, 0.0, 0.2);
        assert!((c - 10.450_583_572_185_565).abs() < 1e-11);
    }

    #[test]
    fn inversion_recovers_vol() {
        for &(k, t, v) in &[(80.0, 0.1, 0.15), (100.0, 1.0, 0.3), (125.0, 2.0, 0.5), (60.0, 0.25, 0.9)] {
            for kind in [OptionKind::Call, OptionKind::Put] {
                let p = bs_price(kind, 100.0, k, t, 0.02, 0.01, v);
                let iv = implied_vol(p, kind, 100.0, k, t, 0.02, 0.01).unwrap();
                let back = bs_price(kind, 100.0, k, t, 0.02, 0.01, iv);
                assert!(((back - p) / p).abs() < 1e-10, "{k} {t} {v} {kind:?}");
            }
        }
    }

    #[test]
    fn intrinsic_price_rejected() {
        let intrinsic = 100.0 - 90.0 * (-0.01f64).exp();
        assert!(implied_vol(intrinsic, OptionKind::Call, 100.0, 90.0, 1.0, 0.01, 0.0).is_err());
        assert!(implied_vol(100.0, OptionKind::Call, 100.0, 90.0, 1.0, 0.01, 0.0).is_err());
    }
}
