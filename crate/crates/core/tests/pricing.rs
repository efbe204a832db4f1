mod common;

use tsgh::esscher::{risk_neutral_drift, Rates};
use tsgh::models::{simulate_portfolio, GaussianLaw, ModelParams};
use tsgh::pricing::{
    bs_price, call_fft_normalized, call_strip_normalized, carr_madan_normalized, implied_vol, model_smile, price_vanilla,
    AssetSmile, MarketData, OptionKind, PricingConfig, SmileQuote,
};
use tsgh::subordinators::{CtsParams, SubordinatorLaw};

use common::{corr, mean, model, se};

fn gbm(r: f64, d: f64, vol: f64, t: f64) -> GaussianLaw {
    GaussianLaw::new((r - d - 0.5 * vol * vol) * t, vol * t.sqrt()).unwrap()
}

/// One-asset risk-neutral model in yearly units.
fn risk_neutral(theta: f64, sigma: f64, sub: SubordinatorLaw, r: f64) -> ModelParams {
    let rates = Rates::flat(r, 1);
    let mu = risk_neutral_drift(&[theta], &[sigma], &sub, &rates).unwrap();
    model(&mu, &[theta], &[sigma], &corr(1, |_, _| 0.0), sub)
}

#[test]
fn black_scholes_limit() {
    let cfg = PricingConfig::default();
    let (s, r, d, vol, t) = (100.0, 0.02, 0.01, 0.3, 0.25);
    let law = gbm(r, d, vol, t);
    for i in 0..15 {
        let k = 75.0 + 3.5 * i as f64;
        for kind in [OptionKind::Call, OptionKind::Put] {
            let p = price_vanilla(&law, s, k, t, r, d, kind, &cfg).unwrap();
            assert!((p - bs_price(kind, s, k, t, r, d, vol)).abs() <= 1e-8, "{k} {kind:?}");
        }
    }
    // K → 0: the call is the discounted forward
    let c = price_vanilla(&law, s, 1e-6, t, r, d, OptionKind::Call, &cfg).unwrap();
    assert!((c - s * (-d * t).exp()).abs() < 1e-5);
}

#[test]
fn nig_margin_against_simulation() {
    let sub = SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.5, 2.0).unwrap());
    let (r, t) = (0.03, 0.5);
    let q = risk_neutral(-0.15, 0.25, sub, r);
    let law = q.marginal(0).at_horizon(t);
    let cfg = PricingConfig::default();
    let y = simulate_portfolio(&q, &[1.0], t, 10_000_000, 77).unwrap();
    let disc = (-r * t).exp();
    for m in [0.85, 1.0, 1.15] {
        let c = carr_madan_normalized(&law, m, disc, cfg.alpha, &cfg).unwrap();
        let pay: Vec<f64> = y.iter().map(|v| disc * (v.exp() - m).max(0.0)).collect();
        assert!((mean(&pay) - c).abs() <= 3.0 * se(&pay), "m = {m}: {} vs {c} (se {})", mean(&pay), se(&pay));
    }
}

#[test]
fn implied_vol_round_trips() {
    let p = bs_price(OptionKind::Call, 100.0, 105.0, 0.5, 0.01, 0.0, 0.2);
    assert!((implied_vol(p, OptionKind::Call, 100.0, 105.0, 0.5, 0.01, 0.0).unwrap() - 0.2).abs() < 1e-8);
    // deep out of the money
    let p = bs_price(OptionKind::Call, 100.0, 260.0, 0.25, 0.01, 0.0, 0.45);
    assert!(p < 1e-3);
    assert!((implied_vol(p, OptionKind::Call, 100.0, 260.0, 0.25, 0.01, 0.0).unwrap() - 0.45).abs() < 1e-6);
    let intrinsic = 100.0 - 80.0 * (-0.01f64 * 0.5).exp();
    assert!(implied_vol(intrinsic, OptionKind::Call, 100.0, 80.0, 0.5, 0.01, 0.0).is_err());
}

#[test]
fn gaussian_smile_is_flat() {
    let cfg = PricingConfig::default();
    let (r, d, vol, t) = (0.01, 0.0, 0.22, 0.5);
    let law = gbm(r, d, vol, t);
    for i in 0..9 {
        let m = 0.8 + 0.05 * i as f64;
        let kind = if m < 1.0 { OptionKind::Put } else { OptionKind::Call };
        let p = price_vanilla(&law, 1.0, m, t, r, d, kind, &cfg).unwrap();
        assert!((implied_vol(p, kind, 1.0, m, t, r, d).unwrap() - vol).abs() < 1e-6);
    }
}

fn market(n_assets: usize, maturities: &[f64], ms: &[f64]) -> MarketData {
    let quotes: Vec<SmileQuote> = maturities
        .iter()
        .flat_map(|&t| ms.iter().map(move |&m| SmileQuote { maturity: t, moneyness: m, implied_vol: 0.2 }))
        .collect();
    let assets = (0..n_assets).map(|_| AssetSmile { spot: 100.0, dividend: 0.0, quotes: quotes.clone() }).collect();
    MarketData::new(0.01, assets, 252.0, (0.8, 1.2)).unwrap()
}

#[test]
fn negative_skew_slopes_down() {
    let p = common::daily(1, common::cts(0.8, 0.5));
    let mkt = market(1, &[1.0 / 12.0, 0.25], &[0.9, 1.0, 1.1]);
    let q = tsgh::esscher::esscher_forward(&p, &mkt.rates()).unwrap().params;
    let iv = model_smile(&q, &mkt, 0, &PricingConfig::default()).unwrap();
    assert_eq!(iv.len(), mkt.assets[0].quotes.len());
    for t in 0..2 {
        assert!(iv[3 * t] > iv[3 * t + 2], "{iv:?}");
    }
}

#[test]
fn parity_monotonicity_convexity() {
    let sub = SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.7, 1.5).unwrap());
    let q = risk_neutral(-0.2, 0.2, sub, 0.02);
    let (t, r) = (0.75, 0.02);
    let law = q.marginal(0).at_horizon(t);
    let cfg = PricingConfig::default();
    let disc = (-r * t).exp();
    let ms: Vec<f64> = (0..41).map(|i| 0.6 + 0.02 * i as f64).collect();
    let calls = call_strip_normalized(&law, &ms, disc, &cfg).unwrap();
    for (i, &m) in ms.iter().enumerate() {
        let c = carr_madan_normalized(&law, m, disc, 0.75, &cfg).unwrap();
        let p = carr_madan_normalized(&law, m, disc, -1.75, &cfg).unwrap();
        assert!((c - p - (1.0 - m * disc)).abs() <= 1e-10, "parity at {m}");
        assert!((c - calls[i]).abs() <= 1e-10);
    }
    assert!(calls.windows(2).all(|w| w[1] < w[0]));
    assert!(calls.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-12));
}

#[test]
fn fft_matches_direct_on_quote_grid() {
    let cfg = PricingConfig::default();
    for sub in [common::cts(0.8, 0.5), common::gig(-1.5, 1.0)] {
        let q = risk_neutral(-0.1, 0.25, sub, 0.01);
        for t in [1.0 / 12.0, 2.0 / 12.0, 0.25] {
            let law = q.marginal(0).at_horizon(t);
            let disc = (-0.01 * t).exp();
            let ms = [0.8, 0.9, 1.0, 1.1, 1.2];
            let fft = call_fft_normalized(&law, &ms, disc, 1 << 16, 0.02, &cfg).unwrap();
            for (i, &m) in ms.iter().enumerate() {
                let direct = carr_madan_normalized(&law, m, disc, cfg.alpha, &cfg).unwrap();
                assert!((fft[i] - direct).abs() <= 1e-7, "t {t} m {m}: {} vs {direct}", fft[i]);
            }
        }
    }
}
