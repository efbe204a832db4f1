mod common;

use nalgebra::DMatrix;
use tsgh::io::{
    business_days, load_prices, load_quotes, load_rates, synth_generate, write_prices, write_quotes, write_rates, PricePanel,
    Provenance, RateSeries, SynthWorld,
};
use tsgh::pricing::{AssetSmile, MarketData, SmileQuote};

use common::{daily, gig};

fn template(n: usize) -> MarketData {
    let quotes: Vec<SmileQuote> = [1.0 / 12.0, 2.0 / 12.0, 0.25]
        .iter()
        .flat_map(|&t| [0.8, 0.9, 1.0, 1.1, 1.2].map(|m| SmileQuote { maturity: t, moneyness: m, implied_vol: 0.2 }))
        .collect();
    let assets = (0..n).map(|j| AssetSmile { spot: 50.0 + j as f64, dividend: 0.0, quotes: quotes.clone() }).collect();
    MarketData::new(0.01, assets, 252.0, (0.8, 1.2)).unwrap()
}

fn world(n: usize, days: usize, noise: f64, seed: u64) -> SynthWorld {
    let tickers: Vec<String> = (0..n).map(|j| format!("X{j:02}")).collect();
    let dates = business_days(chrono::NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), days);
    let qd = [dates[days / 2], dates[days - 1]];
    synth_generate(&daily(n, gig(-1.5, 1.0)), &template(n), &tickers, &dates, &qd, noise, seed).unwrap()
}

#[test]
fn fifty_tickers_round_trip() {
    let n = 50;
    let p = common::model(&vec![2e-4; n], &vec![-1e-3; n], &vec![0.015; n], &common::corr(n, |_, _| 0.3), gig(-1.0, 2.0));
    let x = tsgh::models::simulate_increments(&p, 1.0, 99, 6).unwrap();
    let mut prices = DMatrix::from_element(100, n, 20.0);
    for i in 1..100 {
        for j in 0..n {
            prices[(i, j)] = prices[(i - 1, j)] * x[(i - 1, j)].exp();
        }
    }
    let dates = business_days(chrono::NaiveDate::from_ymd_opt(2022, 1, 3).unwrap(), 100);
    let panel = PricePanel::new(dates.clone(), (0..n).map(|j| format!("TK{j}")).collect(), prices).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let prov = Provenance { config_sha256: "ab".repeat(32), seed: 5, version: "0".into() };
    let path = dir.path().join("prices.csv");
    write_prices(&path, &panel, Some(&prov)).unwrap();
    assert!(std::fs::read_to_string(&path).unwrap().starts_with(&prov.header()));
    assert_eq!(load_prices(&path).unwrap(), panel);
    assert_eq!(panel.log_returns().nrows(), 99);

    let rates = RateSeries { dates: vec![dates[0], dates[50]], rates: vec![0.0125, 0.015] };
    write_rates(&dir.path().join("rates.csv"), &rates, None).unwrap();
    assert_eq!(load_rates(&dir.path().join("rates.csv")).unwrap(), rates);

    let w = world(3, 60, 0.01, 2);
    write_quotes(&dir.path().join("quotes.csv"), &w.quotes, Some(&prov)).unwrap();
    assert_eq!(load_quotes(&dir.path().join("quotes.csv")).unwrap(), w.quotes);
}

#[test]
fn synthetic_world_is_seeded() {
    let (a, b, c) = (world(2, 80, 0.01, 9), world(2, 80, 0.01, 9), world(2, 80, 0.01, 10));
    assert_eq!(a.panel, b.panel);
    assert_eq!(a.quotes, b.quotes);
    assert_ne!(a.panel.prices, c.panel.prices);
    assert_ne!(a.quotes, c.quotes);
    assert_eq!(a.quotes.rows.len(), 2 * 2 * 15);
}

#[test]
fn quote_noise_has_the_requested_size() {
    let (clean, noisy) = (world(5, 40, 0.0, 4), world(5, 40, 0.01, 4));
    assert_eq!(clean.panel, noisy.panel);
    let errs: Vec<f64> = clean
        .quotes
        .rows
        .iter()
        .zip(&noisy.quotes.rows)
        .map(|(a, b)| (b.implied_vol - a.implied_vol).abs() / a.implied_vol)
        .collect();
    let arpe = common::mean(&errs);
    // E|Z| · 1% for Gaussian Z
    assert!((arpe - 0.01 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.003, "{arpe}");
}
