mod common;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tsgh::backtest::{frequency_sweep, run_backtest, BacktestConfig, Frequency, Strategy};
use tsgh::io::{business_days, PricePanel};
use tsgh::models::Family;

fn panel_from(x: &DMatrix<f64>) -> PricePanel {
    let (t, n) = (x.nrows() + 1, x.ncols());
    let mut prices = DMatrix::from_element(t, n, 100.0);
    for i in 1..t {
        for j in 0..n {
            prices[(i, j)] = prices[(i - 1, j)] * x[(i - 1, j)].exp();
        }
    }
    let dates = business_days(chrono::NaiveDate::from_ymd_opt(2018, 1, 1).unwrap(), t);
    PricePanel::new(dates, (0..n).map(|j| format!("T{j}")).collect(), prices).unwrap()
}

fn gaussian_panel(n: usize, days: usize, seed: u64) -> PricePanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(days - 1, n, |_, j| Normal::new(3e-4, 0.008 + 0.003 * j as f64).unwrap().sample(&mut rng));
    panel_from(&x)
}

fn cfg(strategy: Strategy, model: Family, freq: u32) -> BacktestConfig {
    let mut c = BacktestConfig::new(strategy, model, 120, Frequency::Weeks(freq));
    c.upper = 1.0;
    c
}

#[test]
fn later_prices_do_not_change_earlier_decisions() {
    let panel = gaussian_panel(3, 500, 1);
    let c = cfg(Strategy::Mv, Family::Gaussian, 1);
    let full = run_backtest(&panel, None, &c).unwrap();
    let cut = 380;
    let mut altered = panel.clone();
    for i in cut + 1..altered.len() {
        for j in 0..3 {
            altered.prices[(i, j)] *= 1.0 + 0.05 * ((i * 7 + j) % 5) as f64;
        }
    }
    let other = run_backtest(&altered, None, &c).unwrap();
    let end = panel.dates[cut];
    let before = |l: &tsgh::backtest::BacktestLedger| {
        (
            l.daily.iter().filter(|p| p.date <= end).cloned().collect::<Vec<_>>(),
            l.rebalances.iter().filter(|r| r.date <= end).cloned().collect::<Vec<_>>(),
        )
    };
    assert_eq!(before(&full), before(&other));
}

#[test]
fn constant_prices_give_a_flat_path() {
    let panel = panel_from(&DMatrix::zeros(399, 4));
    let l = run_backtest(&panel, None, &cfg(Strategy::Ew, Family::Gaussian, 1)).unwrap();
    assert!(l.daily.iter().all(|p| p.value == 100.0));
    assert!(l.rebalances.iter().skip(1).all(|r| r.turnover == Some(0.0)));
    assert_eq!(l.metrics.total_return, 0.0);
    assert_eq!(l.metrics.mean_turnover, 0.0);
    for (row, _) in frequency_sweep(&panel, None, &cfg(Strategy::Ew, Family::Gaussian, 1)).unwrap() {
        assert_eq!(row.metrics.total_return, 0.0);
        assert_eq!(row.metrics.max_drawdown, 0.0);
    }
}

#[test]
fn one_asset_strategies_coincide() {
    let panel = gaussian_panel(1, 400, 2);
    let paths: Vec<Vec<f64>> = [(Strategy::Ew, Family::Gaussian), (Strategy::Mv, Family::Gaussian), (Strategy::Ma, Family::Gaussian)]
        .iter()
        .map(|&(s, m)| run_backtest(&panel, None, &cfg(s, m, 1)).unwrap().daily.iter().map(|p| p.value).collect())
        .collect();
    assert_eq!(paths[0], paths[1]);
    assert_eq!(paths[0], paths[2]);
}

#[test]
fn buy_and_hold_follows_the_prices() {
    let panel = gaussian_panel(3, 400, 3);
    let mut c = cfg(Strategy::Ew, Family::Gaussian, 1);
    c.rebalance_every = Frequency::BuyAndHold;
    let l = run_backtest(&panel, None, &c).unwrap();
    let s = panel.dates.iter().position(|d| *d == l.daily[0].date).unwrap();
    for (k, p) in l.daily.iter().enumerate() {
        let expect = 100.0 * (0..3).map(|j| panel.prices[(s + k, j)] / panel.prices[(s, j)]).sum::<f64>() / 3.0;
        assert!((p.value - expect).abs() < 1e-9 * expect);
    }
    assert_eq!(l.rebalances.len(), 1);
}

#[test]
fn realized_tail_matches_prediction() {
    let panel = gaussian_panel(3, 2600, 4);
    let mut c = cfg(Strategy::Ma, Family::Gaussian, 1);
    c.window = 250;
    let l = run_backtest(&panel, None, &c).unwrap();
    let predicted = common::mean(&l.rebalances.iter().map(|r| r.predicted_avar.unwrap()).collect::<Vec<_>>());
    let mut losses: Vec<f64> = l.daily.windows(2).map(|w| -(w[1].value / w[0].value).ln()).collect();
    losses.sort_by(|a, b| b.total_cmp(a));
    let k = (0.05 * losses.len() as f64).round() as usize;
    let realized = common::mean(&losses[..k]);
    assert!((realized / predicted - 1.0).abs() < 0.2, "realized {realized} predicted {predicted}");
}

#[test]
fn concentration_within_bounds() {
    let panel = gaussian_panel(4, 500, 5);
    let l = run_backtest(&panel, None, &cfg(Strategy::Mv, Family::Gaussian, 2)).unwrap();
    assert!(l.rebalances.iter().all(|r| (1.0 - 1e-12..=4.0 + 1e-9).contains(&r.concentration)));
    assert!((1.0..=4.0 + 1e-9).contains(&l.metrics.mean_concentration));
}
