//! Rolling-window allocation backtests on a weekly rebalancing grid.

mod engine;
mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::{frequency_sweep, run_backtest, weekly_grid, BacktestLedger, MarketInputs, RebalanceRecord, SweepRow, ValuePoint};
pub use metrics::{annualized_return, max_drawdown, metrics, period_returns, sharpe, total_return, turnover, Metrics};

use crate::calibration::{CalibConfig, EmConfig};
use crate::error::{invalid, Error, Result};
use crate::models::Family;
use crate::risk::{TailLevel, TailMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ew,
    Mv,
    Ma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimation {
    Historical,
    Double,
}

/// Rebalancing period in weeks, or never after the first allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FrequencyRepr", into = "String")]
pub enum Frequency {
    Weeks(u32),
    BuyAndHold,
}

/// Frequencies compared by [`frequency_sweep`].
pub const SWEEP_GRID: [Frequency; 8] = [
    Frequency::Weeks(1),
    Frequency::Weeks(4),
    Frequency::Weeks(13),
    Frequency::Weeks(26),
    Frequency::Weeks(52),
    Frequency::Weeks(104),
    Frequency::Weeks(208),
    Frequency::BuyAndHold,
];

macro_rules! label_enum {
    ($t:ty, $($v:path => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($s => Ok($v),)+
                    _ => Err(invalid(format!("unknown {} {s:?}", stringify!($t).to_lowercase()))),
                }
            }
        }
    };
}

label_enum!(Strategy, Strategy::Ew => "ew", Strategy::Mv => "mv", Strategy::Ma => "ma");
label_enum!(Estimation, Estimation::Historical => "historical", Estimation::Double => "double");

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Weeks(k) => write!(f, "{k}"),
            Frequency::BuyAndHold => f.write_str("bh"),
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("bh") {
            return Ok(Frequency::BuyAndHold);
        }
        match s.parse::<u32>() {
            Ok(k) if k > 0 => Ok(Frequency::Weeks(k)),
            _ => Err(invalid(format!("frequency {s:?} must be a positive number of weeks or \"bh\""))),
        }
    }
}

/// Accepts `4` as well as `"4"` and `"bh"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum FrequencyRepr {
    Weeks(u32),
    Text(String),
}

impl TryFrom<FrequencyRepr> for Frequency {
    type Error = Error;
    fn try_from(r: FrequencyRepr) -> Result<Self> {
        match r {
            FrequencyRepr::Weeks(k) => k.to_string().parse(),
            FrequencyRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Frequency> for String {
    fn from(f: Frequency) -> String {
        f.to_string()
    }
}

impl Frequency {
    /// Whether the `k`-th grid week (from 0) is a rebalance week.
    pub fn rebalances_at(self, k: usize) -> bool {
        match self {
            Frequency::Weeks(w) => k.is_multiple_of(w as usize),
            Frequency::BuyAndHold => k == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestConfig {
    pub strategy: Strategy,
    pub model: Family,
    #[serde(default = "default_estimation")]
    pub estimation: Estimation,
    /// Returns in each estimation window.
    pub window: usize,
    pub rebalance_every: Frequency,
    #[serde(default)]
    pub delta: TailLevel,
    #[serde(default)]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
    /// AVaR horizon in observation steps.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub tail_method: TailMethod,
    /// Annual risk-free rate used in the Sharpe ratio.
    #[serde(default)]
    pub risk_free: f64,
    /// Weekday (0 = Monday) from which each week's grid date is taken.
    #[serde(default = "default_anchor")]
    pub anchor_weekday: u32,
    #[serde(default)]
    pub start: Option<chrono::NaiveDate>,
    #[serde(default)]
    pub em: EmConfig,
    #[serde(default)]
    pub calibration: Option<CalibConfig>,
}

fn default_estimation() -> Estimation {
    Estimation::Historical
}

fn default_upper() -> f64 {
    0.1
}

fn default_horizon() -> f64 {
    1.0
}

fn default_anchor() -> u32 {
    2
}

impl BacktestConfig {
    pub fn new(strategy: Strategy, model: Family, window: usize, rebalance_every: Frequency) -> Self {
        BacktestConfig {
            strategy,
            model,
            estimation: Estimation::Historical,
            window,
            rebalance_every,
            delta: TailLevel::default(),
            lower: 0.0,
            upper: default_upper(),
            horizon: 1.0,
            tail_method: TailMethod::Auto,
            risk_free: 0.0,
            anchor_weekday: default_anchor(),
            start: None,
            em: EmConfig::default(),
            calibration: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.window < 2 * n.max(1) {
            return Err(invalid(format!("window {} shorter than twice the {n} assets", self.window)));
        }
        if self.anchor_weekday > 6 || !(self.horizon > 0.0) || !self.risk_free.is_finite() {
            return Err(invalid("anchor weekday must be 0..=6 and horizon positive"));
        }
        let nf = n as f64;
        if self.lower * nf > 1.0 + 1e-12 || self.upper * nf < 1.0 - 1e-12 || self.lower > self.upper {
            return Err(Error::Infeasible(format!("bounds [{}, {}] admit no portfolio of {n} assets", self.lower, self.upper)));
        }
        if self.estimation == Estimation::Double {
            if self.model == Family::Gaussian {
                return Err(Error::Unsupported("double estimation needs the mgh or mnts model".into()));
            }
            if self.calibration.as_ref().is_some_and(|c| c.family != self.model) {
                return Err(invalid("calibration family differs from the backtest model"));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}-{}-{}-{}", self.strategy, self.model, self.estimation, self.rebalance_every)
    }
}
