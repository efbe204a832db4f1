use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::backtest::BacktestConfig;
use crate::calibration::{CalibConfig, EmConfig};
use crate::error::{invalid, Error, Result};
use crate::models::{Family, Measure, ModelParams};
use crate::risk::{TailLevel, TailMethod};
use crate::subordinators::SubordinatorLaw;

/// One run of the command line driver. Every section except `seed` is
/// optional; each verb checks for the sections it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub estimate: Option<EstimateConfig>,
    #[serde(default)]
    pub calibrate: Option<CalibConfig>,
    #[serde(default)]
    pub price: Option<PriceConfig>,
    #[serde(default)]
    pub risk: Option<RiskConfig>,
    #[serde(default)]
    pub backtest: Option<BacktestConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Relative paths are resolved against the config file's directory.
    pub prices: PathBuf,
    #[serde(default)]
    pub quotes: Option<PathBuf>,
    #[serde(default)]
    pub rates: Option<PathBuf>,
    /// Annual rate used when no rates file is given.
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "default_steps")]
    pub steps_per_year: f64,
    #[serde(default = "default_band")]
    pub band: (f64, f64),
    /// Annual dividend yields by ticker; missing tickers pay none.
    #[serde(default)]
    pub dividends: BTreeMap<String, f64>,
}

fn default_steps() -> f64 {
    252.0
}

fn default_band() -> (f64, f64) {
    (0.8, 1.2)
}

impl DataConfig {
    pub fn dividends_for(&self, tickers: &[String]) -> Vec<f64> {
        tickers.iter().map(|t| self.dividends.get(t).copied().unwrap_or(0.0)).collect()
    }
}

/// When the synthetic quote surface is observed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuoteSchedule {
    /// Only the final date.
    Last,
    /// The weekly rebalancing grid.
    Weekly,
}

/// Historical law and market layout for the synthetic generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub tickers: Vec<String>,
    pub start: chrono::NaiveDate,
    /// Number of price observations.
    pub days: usize,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Rows of the correlation matrix of the Gaussian part.
    pub correlation: Vec<Vec<f64>>,
    pub subordinator: SubordinatorLaw,
    #[serde(default = "default_spot")]
    pub spot: f64,
    /// Annual risk-free rate written to the rates file.
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "default_steps")]
    pub steps_per_year: f64,
    pub maturities: Vec<f64>,
    pub moneyness: Vec<f64>,
    #[serde(default = "default_schedule")]
    pub quote_dates: QuoteSchedule,
    /// Relative standard deviation of the quote noise.
    #[serde(default)]
    pub noise: f64,
}

fn default_spot() -> f64 {
    100.0
}

fn default_schedule() -> QuoteSchedule {
    QuoteSchedule::Last
}

impl SimulateConfig {
    pub fn params(&self) -> Result<ModelParams> {
        let n = self.tickers.len();
        if self.correlation.len() != n || self.correlation.iter().any(|r| r.len() != n) {
            return Err(invalid(format!("correlation must be {n} x {n}")));
        }
        let corr = DMatrix::from_fn(n, n, |i, j| self.correlation[i][j]);
        ModelParams::from_correlation(self.mu.clone(), self.theta.clone(), self.sigma.clone(), &corr, self.subordinator, Measure::P)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub model: Family,
    /// Trailing returns used; all of them when absent.
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub em: EmConfig,
}

/// Vanilla prices of a risk-neutral law stored as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    pub params: PathBuf,
    #[serde(default = "default_spot")]
    pub spot: f64,
    pub rate: f64,
    #[serde(default)]
    pub dividends: Vec<f64>,
    #[serde(default = "default_steps")]
    pub steps_per_year: f64,
    pub maturities: Vec<f64>,
    pub moneyness: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    pub model: Family,
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub delta: TailLevel,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
    #[serde(default)]
    pub method: TailMethod,
    #[serde(default)]
    pub em: EmConfig,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_upper() -> f64 {
    1.0
}

impl RunConfig {
    /// Rewrites relative data paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            fix(&mut d.prices);
            for p in [&mut d.quotes, &mut d.rates].into_iter().flatten() {
                fix(p);
            }
        }
        if let Some(p) = &mut self.price {
            fix(&mut p.params);
        }
    }

    pub fn data(&self) -> Result<&DataConfig> {
        self.data.as_ref().ok_or_else(|| invalid("config has no [data] section"))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Reads and parses `path`, resolving data paths against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}
