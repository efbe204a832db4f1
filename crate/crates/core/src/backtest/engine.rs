use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, turnover, Metrics};
use super::{BacktestConfig, Estimation, Frequency, Strategy, SWEEP_GRID};
use crate::calibration::{calibrate_day, em_estimate, gaussian_estimate, CalibConfig, CalibOutcome};
use crate::error::{invalid, Error, Result};
use crate::io::{format_date, market_for_date, PricePanel, QuoteFile, RateSeries};
use crate::models::{Family, FittedModel};
use crate::pricing::PricingConfig;
use crate::risk::{concentration, equal_weights, optimize_ma, optimize_mv};

/// Option quotes and rates needed for double estimation.
#[derive(Clone, Debug)]
pub struct MarketInputs {
    pub quotes: QuoteFile,
    pub rates: RateSeries,
    /// Annual dividend yield per ticker.
    pub dividends: Vec<f64>,
    pub steps_per_year: f64,
    pub band: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuePoint {
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RebalanceRecord {
    pub date: NaiveDate,
    pub weights: Vec<f64>,
    /// `Σ|w - w_drifted|`; absent for the initial allocation.
    pub turnover: Option<f64>,
    pub concentration: f64,
    /// Model AVaR of the new weights for the minimum-AVaR strategy.
    pub predicted_avar: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestLedger {
    pub label: String,
    pub tickers: Vec<String>,
    /// Value on every observation from the first allocation, base 100.
    pub daily: Vec<ValuePoint>,
    /// Value on the weekly grid; metrics use this path.
    pub weekly: Vec<ValuePoint>,
    pub rebalances: Vec<RebalanceRecord>,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub frequency: Frequency,
    pub metrics: Metrics,
}

/// Index of one observation per ISO week: the first whose weekday is at or
/// after `anchor` (0 = Monday). Depends only on dates up to the one chosen.
pub fn weekly_grid(dates: &[NaiveDate], anchor: u32) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last_week = None;
    for (i, d) in dates.iter().enumerate() {
        let wk = d.iso_week();
        let key = (wk.year(), wk.week());
        if d.weekday().num_days_from_monday() >= anchor && last_week != Some(key) {
            out.push(i);
            last_week = Some(key);
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Target {
    weights: Vec<f64>,
    predicted_avar: Option<f64>,
    converged: bool,
}

fn at(date: NaiveDate, e: Error) -> Error {
    Error::AtDate { date: format_date(date), source: Box::new(e) }
}

fn allocate(model: &FittedModel, cfg: &BacktestConfig) -> Result<Target> {
    match cfg.strategy {
        Strategy::Ew => Ok(Target { weights: equal_weights(model.dim())?.w, predicted_avar: None, converged: true }),
        Strategy::Mv => Ok(Target { weights: optimize_mv(&model.covariance()?, cfg.lower, cfg.upper)?.w, predicted_avar: None, converged: true }),
        Strategy::Ma => {
            let r = optimize_ma(model, cfg.delta, cfg.lower, cfg.upper, cfg.horizon, cfg.tail_method)?;
            Ok(Target { weights: r.weights.w, predicted_avar: Some(r.risk.avar), converged: r.converged })
        }
    }
}

fn historical_model(window: &DMatrix<f64>, cfg: &BacktestConfig) -> Result<FittedModel> {
    match cfg.model {
        Family::Gaussian => Ok(FittedModel::Gaussian(gaussian_estimate(window)?)),
        f => Ok(em_estimate(window, f, &cfg.em)?.model),
    }
}

fn window_at(returns: &DMatrix<f64>, k: usize, len: usize) -> DMatrix<f64> {
    returns.rows(k - len, len).into_owned()
}

/// Target weights at panel indices `idx`, each using returns up to and
/// including its own date.
fn compute_targets(
    panel: &PricePanel,
    idx: &[usize],
    cfg: &BacktestConfig,
    market: Option<&MarketInputs>,
) -> Result<Vec<Target>> {
    let n = panel.tickers.len();
    let returns = panel.log_returns();
    if cfg.strategy == Strategy::Ew {
        let w = equal_weights(n)?.w;
        return Ok(idx.iter().map(|_| Target { weights: w.clone(), predicted_avar: None, converged: true }).collect());
    }
    match cfg.estimation {
        Estimation::Historical => {
            let results: Mutex<Vec<Option<Result<Target>>>> = Mutex::new((0..idx.len()).map(|_| None).collect());
            let next = AtomicUsize::new(0);
            let workers = std::thread::available_parallelism().map_or(1, |x| x.get()).min(idx.len()).max(1);
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= idx.len() {
                            break;
                        }
                        let k = idx[i];
                        let r = historical_model(&window_at(&returns, k, cfg.window), cfg)
                            .and_then(|m| allocate(&m, cfg))
                            .map_err(|e| at(panel.dates[k], e));
                        results.lock().expect("no worker panics while holding the lock")[i] = Some(r);
                    });
                }
            });
            results.into_inner().expect("workers finished").into_iter().map(|r| r.expect("every index visited")).collect()
        }
        Estimation::Double => {
            let m = market.ok_or_else(|| invalid("double estimation needs option quotes and rates"))?;
            if m.dividends.len() != n {
                return Err(invalid("one dividend yield per ticker is required"));
            }
            let calib = match &cfg.calibration {
                Some(c) => c.clone(),
                None => CalibConfig::new(cfg.model, cfg.window)?,
            };
            let pricing = PricingConfig::default();
            let mut prev: Option<CalibOutcome> = None;
            let mut out = Vec::with_capacity(idx.len());
            for &k in idx {
                let date = panel.dates[k];
                let step = || -> Result<(CalibOutcome, Target)> {
                    let spots: Vec<f64> = (0..n).map(|j| panel.prices[(k, j)]).collect();
                    let mkt = market_for_date(&m.quotes, date, &panel.tickers, &spots, m.rates.rate_on(date)?, &m.dividends, m.steps_per_year, m.band)?;
                    if mkt.assets.iter().any(|a| a.quotes.is_empty()) {
                        return Err(Error::Data("missing option quotes".into()));
                    }
                    let o = calibrate_day(prev.as_ref(), &mkt, &window_at(&returns, k, cfg.window), &calib, &pricing)?;
                    let t = allocate(&FittedModel::Mixture(o.theta_ph.clone()), cfg)?;
                    Ok((o, t))
                };
                let (o, t) = step().map_err(|e| at(date, e))?;
                prev = Some(o);
                out.push(t);
            }
            Ok(out)
        }
    }
}

/// Evaluation weeks: grid dates with a full estimation window behind them.
fn evaluation_grid(panel: &PricePanel, cfg: &BacktestConfig) -> Result<Vec<usize>> {
    let grid: Vec<usize> = weekly_grid(&panel.dates, cfg.anchor_weekday)
        .into_iter()
        .filter(|&k| k >= cfg.window && cfg.start.is_none_or(|s| panel.dates[k] >= s))
        .collect();
    if grid.is_empty() {
        return Err(Error::Data("no weekly grid date has a full estimation window".into()));
    }
    Ok(grid)
}

fn simulate(panel: &PricePanel, grid: &[usize], freq: Frequency, targets: &[(usize, Target)], cfg: &BacktestConfig) -> Result<BacktestLedger> {
    let n = panel.tickers.len();
    let start = grid[0];
    let rebalance_at: Vec<usize> = grid.iter().enumerate().filter(|(k, _)| freq.rebalances_at(*k)).map(|(_, &i)| i).collect();
    let target_for = |i: usize| -> &Target { &targets.iter().find(|(k, _)| *k == i).expect("target computed for every rebalance").1 };
    let mut value = 100.0;
    let first = target_for(start);
    let mut w = first.weights.clone();
    let mut daily = vec![ValuePoint { date: panel.dates[start], value }];
    let mut weekly = vec![ValuePoint { date: panel.dates[start], value }];
    let mut rebalances = vec![RebalanceRecord {
        date: panel.dates[start],
        weights: w.clone(),
        turnover: None,
        concentration: concentration(&w),
        predicted_avar: first.predicted_avar,
        converged: first.converged,
    }];
    let mut next_grid = 1;
    let mut next_reb = 1;
    for t in start + 1..panel.len() {
        let gross: Vec<f64> = (0..n).map(|j| panel.prices[(t, j)] / panel.prices[(t - 1, j)]).collect();
        let growth: f64 = w.iter().zip(&gross).map(|(a, g)| a * g).sum();
        value *= growth;
        for (a, g) in w.iter_mut().zip(&gross) {
            *a = *a * g / growth;
        }
        daily.push(ValuePoint { date: panel.dates[t], value });
        if next_grid < grid.len() && grid[next_grid] == t {
            weekly.push(ValuePoint { date: panel.dates[t], value });
            next_grid += 1;
        }
        if next_reb < rebalance_at.len() && rebalance_at[next_reb] == t {
            let tg = target_for(t);
            let pt = turnover(&w, &tg.weights);
            w = tg.weights.clone();
            rebalances.push(RebalanceRecord {
                date: panel.dates[t],
                weights: w.clone(),
                turnover: Some(pt),
                concentration: concentration(&w),
                predicted_avar: tg.predicted_avar,
                converged: tg.converged,
            });
            next_reb += 1;
        }
    }
    let cc: Vec<f64> = rebalances.iter().map(|r| r.concentration).collect();
    let pt: Vec<f64> = rebalances.iter().filter_map(|r| r.turnover).collect();
    let values: Vec<f64> = weekly.iter().map(|p| p.value).collect();
    let label = BacktestConfig { rebalance_every: freq, ..cfg.clone() }.label();
    Ok(BacktestLedger { label, tickers: panel.tickers.clone(), daily, weekly, rebalances, metrics: metrics(&values, &cc, &pt, cfg.risk_free) })
}

/// Runs one strategy. Weights set at a grid date use only returns up to and
/// including that date; between rebalances they drift with prices.
pub fn run_backtest(panel: &PricePanel, market: Option<&MarketInputs>, cfg: &BacktestConfig) -> Result<BacktestLedger> {
    cfg.validate(panel.tickers.len())?;
    let grid = evaluation_grid(panel, cfg)?;
    let idx: Vec<usize> = grid.iter().enumerate().filter(|(k, _)| cfg.rebalance_every.rebalances_at(*k)).map(|(_, &i)| i).collect();
    let targets = compute_targets(panel, &idx, cfg, market)?;
    let pairs: Vec<(usize, Target)> = idx.into_iter().zip(targets).collect();
    simulate(panel, &grid, cfg.rebalance_every, &pairs, cfg)
}

/// One ledger per frequency in [`SWEEP_GRID`]; weights are estimated once
/// per grid week and shared.
pub fn frequency_sweep(panel: &PricePanel, market: Option<&MarketInputs>, cfg: &BacktestConfig) -> Result<Vec<(SweepRow, BacktestLedger)>> {
    cfg.validate(panel.tickers.len())?;
    let grid = evaluation_grid(panel, cfg)?;
    let targets = compute_targets(panel, &grid, cfg, market)?;
    let pairs: Vec<(usize, Target)> = grid.iter().cloned().zip(targets).collect();
    SWEEP_GRID
        .iter()
        .map(|&f| {
            let l = simulate(panel, &grid, f, &pairs, cfg)?;
            Ok((SweepRow { frequency: f, metrics: l.metrics }, l))
        })
        .collect()
}
