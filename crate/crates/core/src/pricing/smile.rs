//! Implied-volatility smiles from a risk-neutral model.

use serde::{Deserialize, Serialize};

use super::carr_madan::{call_strip_normalized, OptionKind, PricingConfig};
use super::implied_vol::implied_vol;
use crate::error::{invalid, Result};
use crate::esscher::Rates;
use crate::models::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmileQuote {
    /// Years.
    pub maturity: f64,
    /// Strike over spot.
    pub moneyness: f64,
    pub implied_vol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetSmile {
    pub spot: f64,
    /// Continuous dividend yield per year.
    pub dividend: f64,
    pub quotes: Vec<SmileQuote>,
}

/// Option market on one date.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketData {
    /// Continuously compounded rate per year.
    pub rate: f64,
    pub assets: Vec<AssetSmile>,
    /// Model time units (observation steps) per year.
    pub steps_per_year: f64,
    pub band: (f64, f64),
}

impl MarketData {
    pub fn new(rate: f64, assets: Vec<AssetSmile>, steps_per_year: f64, band: (f64, f64)) -> Result<Self> {
        if !rate.is_finite() || !(steps_per_year > 0.0) {
            return Err(invalid("rate must be finite and steps per year positive"));
        }
        if !(band.0 > 0.0 && band.0 < band.1) {
            return Err(invalid(format!("bad moneyness band {band:?}")));
        }
        for (j, a) in assets.iter().enumerate() {
            if !(a.spot > 0.0) || !a.dividend.is_finite() {
                return Err(invalid(format!("asset {j}: spot must be positive and dividend finite")));
            }
            for q in &a.quotes {
                if !(q.maturity > 0.0) || !(q.implied_vol > 0.0) {
                    return Err(invalid(format!("asset {j}: maturities and vols must be positive")));
                }
                if q.moneyness < band.0 || q.moneyness > band.1 {
                    return Err(invalid(format!("asset {j}: moneyness {} outside band {band:?}", q.moneyness)));
                }
            }
        }
        Ok(MarketData { rate, assets, steps_per_year, band })
    }

    pub fn dim(&self) -> usize {
        self.assets.len()
    }

    /// Rates per model time unit.
    pub fn rates(&self) -> Rates {
        Rates {
            r: self.rate / self.steps_per_year,
            d: self.assets.iter().map(|a| a.dividend / self.steps_per_year).collect(),
        }
    }
}

/// Model implied vols for asset `j`, in quote order. Out-of-the-money
/// options are inverted: puts below the spot, calls at and above.
pub fn model_smile(q: &ModelParams, mkt: &MarketData, j: usize, cfg: &PricingConfig) -> Result<Vec<f64>> {
    if j >= q.dim() || j >= mkt.dim() {
        return Err(invalid(format!("asset index {j} out of range")));
    }
    let asset = &mkt.assets[j];
    let mut out = vec![f64::NAN; asset.quotes.len()];
    let mut maturities: Vec<f64> = asset.quotes.iter().map(|x| x.maturity).collect();
    maturities.sort_by(f64::total_cmp);
    maturities.dedup();
    for &t in &maturities {
        let idx: Vec<usize> = (0..asset.quotes.len()).filter(|&i| asset.quotes[i].maturity == t).collect();
        let ms: Vec<f64> = idx.iter().map(|&i| asset.quotes[i].moneyness).collect();
        let law = q.marginal(j).at_horizon(t * mkt.steps_per_year);
        let disc = (-mkt.rate * t).exp();
        let calls = call_strip_normalized(&law, &ms, disc, cfg)?;
        for ((&i, &m), c) in idx.iter().zip(&ms).zip(calls) {
            let (price, kind) = if m >= 1.0 {
                (c, OptionKind::Call)
            } else {
                (c - (-asset.dividend * t).exp() + m * disc, OptionKind::Put)
            };
            out[i] = implied_vol(price, kind, 1.0, m, t, mkt.rate, asset.dividend)?;
        }
    }
    Ok(out)
}

/// Average relative pricing error of implied vols for each asset.
pub fn arpe(q: &ModelParams, mkt: &MarketData, cfg: &PricingConfig) -> Result<Vec<f64>> {
    if q.dim() != mkt.dim() {
        return Err(invalid("model and market dimensions differ"));
    }
    (0..q.dim())
        .map(|j| {
            let quotes = &mkt.assets[j].quotes;
            if quotes.is_empty() {
                return Ok(0.0);
            }
            let iv = model_smile(q, mkt, j, cfg)?;
            Ok(iv.iter().zip(quotes).map(|(m, x)| (m - x.implied_vol).abs() / x.implied_vol).sum::<f64>() / quotes.len() as f64)
        })
        .collect()
}
