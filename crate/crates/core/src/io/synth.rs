use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{PricePanel, QuoteFile, QuoteRow};
use crate::error::{invalid, Result};
use crate::esscher::esscher_forward;
use crate::models::{simulate_increments, ModelParams};
use crate::pricing::{model_smile, MarketData, PricingConfig};

/// Stream reserved for quote noise; price paths use the low streams.
const NOISE_STREAM: u64 = 1 << 40;

#[derive(Clone, Debug)]
pub struct SynthWorld {
    pub panel: PricePanel,
    pub quotes: QuoteFile,
    /// Risk-neutral law that generated the quotes.
    pub q: ModelParams,
}

/// `count` consecutive weekdays starting at `start` (moved forward to a
/// weekday if needed).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Prices simulated from the historical law `p` starting at the spots in
/// `mkt`, and implied vols on the nodes of `mkt` from the forward Esscher
/// image of `p`, perturbed by iid relative Gaussian noise of size `noise`.
pub fn synth_generate(
    p: &ModelParams,
    mkt: &MarketData,
    tickers: &[String],
    dates: &[NaiveDate],
    quote_dates: &[NaiveDate],
    noise: f64,
    seed: u64,
) -> Result<SynthWorld> {
    let n = p.dim();
    if mkt.dim() != n || tickers.len() != n {
        return Err(invalid("model, market and tickers differ in dimension"));
    }
    if dates.is_empty() || !(noise >= 0.0) {
        return Err(invalid("need at least one date and nonnegative noise"));
    }
    if let Some(d) = quote_dates.iter().find(|d| dates.binary_search(d).is_err()) {
        return Err(invalid(format!("quote date {d} is not a panel date")));
    }
    let t = dates.len();
    let incr = if t > 1 { simulate_increments(p, 1.0, t - 1, seed)? } else { DMatrix::zeros(0, n) };
    let mut prices = DMatrix::zeros(t, n);
    for j in 0..n {
        prices[(0, j)] = mkt.assets[j].spot;
        for i in 1..t {
            prices[(i, j)] = prices[(i - 1, j)] * incr[(i - 1, j)].exp();
        }
    }
    let panel = PricePanel::new(dates.to_vec(), tickers.to_vec(), prices)?;

    let q = esscher_forward(p, &mkt.rates())?.params;
    let cfg = PricingConfig::default();
    let smiles: Vec<Vec<f64>> = (0..n).map(|j| model_smile(&q, mkt, j, &cfg)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let mut rows = Vec::new();
    for &d in quote_dates {
        for j in 0..n {
            for (k, quote) in mkt.assets[j].quotes.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                let iv = if noise > 0.0 { smiles[j][k] * (1.0 + noise * z).max(0.05) } else { smiles[j][k] };
                rows.push(QuoteRow {
                    date: d,
                    ticker: tickers[j].clone(),
                    maturity_years: quote.maturity,
                    moneyness: quote.moneyness,
                    implied_vol: iv,
                });
            }
        }
    }
    Ok(SynthWorld { panel, quotes: QuoteFile { rows }, q })
}
