use serde::{Deserialize, Serialize};

/// Summary statistics of a backtest on its weekly value path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total_return: f64,
    pub annualized_return: f64,
    /// Mean weekly excess return over its standard deviation, not annualized.
    pub sharpe: f64,
    pub max_drawdown: f64,
    pub mean_concentration: f64,
    pub mean_turnover: f64,
    pub weeks: usize,
}

pub fn total_return(values: &[f64]) -> f64 {
    match (values.first(), values.last()) {
        (Some(a), Some(b)) => b / a - 1.0,
        _ => 0.0,
    }
}

/// `(1 + TR)^{52/weeks} - 1`.
pub fn annualized_return(total: f64, weeks: usize) -> f64 {
    if weeks == 0 {
        return 0.0;
    }
    (1.0 + total).powf(52.0 / weeks as f64) - 1.0
}

/// Largest peak-to-trough decline relative to the peak.
pub fn max_drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut dd = 0.0f64;
    for &v in values {
        peak = peak.max(v);
        if peak > 0.0 {
            dd = dd.max((peak - v) / peak);
        }
    }
    dd
}

/// `Σ |w_after - w_before|`.
pub fn turnover(before: &[f64], after: &[f64]) -> f64 {
    before.iter().zip(after).map(|(a, b)| (b - a).abs()).sum()
}

/// Mean excess period return over the sample standard deviation of the
/// period returns; zero when the returns do not vary.
pub fn sharpe(returns: &[f64], risk_free_per_period: f64) -> f64 {
    let n = returns.len();
    if n < 2 {
        return 0.0;
    }
    let m = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return 0.0;
    }
    (m - risk_free_per_period) / var.sqrt()
}

pub fn period_returns(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn metrics(weekly_values: &[f64], concentrations: &[f64], turnovers: &[f64], risk_free_annual: f64) -> Metrics {
    let weeks = weekly_values.len().saturating_sub(1);
    let tr = total_return(weekly_values);
    Metrics {
        total_return: tr,
        annualized_return: annualized_return(tr, weeks),
        sharpe: sharpe(&period_returns(weekly_values), risk_free_annual / 52.0),
        max_drawdown: max_drawdown(weekly_values),
        mean_concentration: mean(concentrations),
        mean_turnover: mean(turnovers),
        weeks,
    }
}
