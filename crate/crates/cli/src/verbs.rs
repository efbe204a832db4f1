use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tsgh::backtest::{frequency_sweep, run_backtest, weekly_grid, BacktestLedger, Estimation, MarketInputs, Metrics};
use tsgh::calibration::{aic_bic, calibrate_day, em_estimate, parameter_count, CalibOutcome};
use tsgh::io::{
    business_days, format_date, load_prices, load_quotes, load_rates, market_for_date, synth_generate, write_prices, write_quotes,
    write_rates, DataConfig, PricePanel, Provenance, QuoteSchedule, RateSeries,
};
use tsgh::models::{Family, FittedModel, Measure, ModelParams};
use tsgh::pricing::{model_smile, price_vanilla, AssetSmile, MarketData, OptionKind, PricingConfig, SmileQuote};
use tsgh::risk::{concentration, equal_weights, optimize_ma, optimize_mv, portfolio_law, tail_risk_with};

use crate::context::{substream, Context};
use crate::error::{CliError, CliResult};
use crate::report::report;
use crate::tables::{fitted_entries, mixture_entries, num, opt, Table};
use crate::{Args, Verb};

pub fn run(args: &Args) -> CliResult<()> {
    if args.verb != Verb::Report && args.config.is_none() {
        return Err(CliError::Usage("--config is required".into()));
    }
    let ctx = Context::new(args)?;
    match args.verb {
        Verb::Simulate => simulate(&ctx),
        Verb::Estimate => estimate(&ctx),
        Verb::Calibrate => calibrate(&ctx),
        Verb::Price => price(&ctx),
        Verb::Risk => risk(&ctx),
        Verb::Backtest => backtest(&ctx),
        Verb::Sweep => sweep(&ctx),
        Verb::Report => report(&ctx, args.input.as_deref().unwrap_or(&args.out)),
    }
}

fn provenance_json(p: &Provenance) -> serde_json::Value {
    json!({ "config_sha256": p.config_sha256, "seed": p.seed, "version": p.version })
}

fn write_json(path: &Path, provenance: &Provenance, key: &str, value: impl Serialize) -> CliResult<()> {
    let mut doc = json!({ "provenance": provenance_json(provenance) });
    doc[key] = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn at_date(d: NaiveDate, e: tsgh::Error) -> CliError {
    CliError::Core(tsgh::Error::AtDate { date: format_date(d), source: Box::new(e) })
}

/// Panel cut at the end of `--dates`, if given.
fn load_panel(ctx: &Context, data: &DataConfig) -> CliResult<PricePanel> {
    let panel = load_prices(&data.prices)?;
    let panel = match ctx.dates.end() {
        Some(end) => panel.truncate_to(end),
        None => panel,
    };
    if panel.len() < 2 {
        return Err(CliError::NoInput("fewer than two price dates selected".into()));
    }
    Ok(panel)
}

fn rate_series(data: &DataConfig, panel: &PricePanel) -> CliResult<RateSeries> {
    Ok(match &data.rates {
        Some(p) => load_rates(p)?,
        None => RateSeries { dates: vec![panel.dates[0]], rates: vec![data.rate] },
    })
}

fn trailing(x: &nalgebra::DMatrix<f64>, window: Option<usize>) -> CliResult<nalgebra::DMatrix<f64>> {
    let t = x.nrows();
    let w = window.unwrap_or(t);
    if w > t {
        return Err(CliError::NoInput(format!("window {w} exceeds the {t} available returns")));
    }
    Ok(x.rows(t - w, w).into_owned())
}

fn free_parameters(family: Family, n: usize) -> usize {
    match family {
        Family::Gaussian => n + n * (n + 1) / 2,
        _ => parameter_count(n),
    }
}

fn simulate(ctx: &Context) -> CliResult<()> {
    let s = ctx.section(&ctx.cfg.simulate, "simulate")?;
    let p = s.params()?;
    if s.days < 2 || s.maturities.is_empty() || s.moneyness.is_empty() {
        return Err(CliError::Usage("simulate needs at least two days and one quote node".into()));
    }
    let dates = business_days(s.start, s.days);
    let nodes: Vec<SmileQuote> = s
        .maturities
        .iter()
        .flat_map(|&t| s.moneyness.iter().map(move |&m| SmileQuote { maturity: t, moneyness: m, implied_vol: 0.2 }))
        .collect();
    let lo = s.moneyness.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.moneyness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let assets = (0..p.dim()).map(|_| AssetSmile { spot: s.spot, dividend: 0.0, quotes: nodes.clone() }).collect();
    let mkt = MarketData::new(s.rate, assets, s.steps_per_year, (lo, hi))?;
    let quote_dates: Vec<NaiveDate> = match s.quote_dates {
        QuoteSchedule::Last => vec![dates[dates.len() - 1]],
        QuoteSchedule::Weekly => weekly_grid(&dates, 2).into_iter().map(|i| dates[i]).collect(),
    };
    let world = synth_generate(&p, &mkt, &s.tickers, &dates, &quote_dates, s.noise, substream(ctx.cfg.seed, "simulate"))?;
    let prov = &ctx.provenance;
    write_prices(&ctx.path("prices.csv"), &world.panel, Some(prov))?;
    write_quotes(&ctx.path("quotes.csv"), &world.quotes, Some(prov))?;
    write_rates(&ctx.path("rates.csv"), &RateSeries { dates: vec![dates[0]], rates: vec![s.rate] }, Some(prov))?;
    write_json(&ctx.path("params_p.json"), prov, "params", &p)?;
    write_json(&ctx.path("params_q.json"), prov, "params", &world.q)?;
    Ok(())
}

fn estimate(ctx: &Context) -> CliResult<()> {
    let e = ctx.section(&ctx.cfg.estimate, "estimate")?;
    let data = ctx.cfg.data()?;
    let panel = load_panel(ctx, data)?;
    let x = trailing(&panel.log_returns(), e.window)?;
    let as_of = panel.dates[panel.len() - 1];
    let r = em_estimate(&x, e.model, &e.em).map_err(|err| at_date(as_of, err))?;
    let (aic, bic) = aic_bic(r.log_likelihood, free_parameters(e.model, panel.tickers.len()), x.nrows());
    let prov = &ctx.provenance;
    write_json(
        &ctx.path("estimate.json"),
        prov,
        "estimate",
        json!({
            "date": format_date(as_of),
            "family": e.model,
            "observations": x.nrows(),
            "log_likelihood": r.log_likelihood,
            "aic": aic,
            "bic": bic,
            "iterations": r.iterations,
            "converged": r.converged,
            "model": r.model,
        }),
    )?;
    let mut fit = Table::new(&["date", "family", "observations", "log_likelihood", "aic", "bic", "iterations", "converged"])?;
    fit.row(&[
        format_date(as_of),
        e.model.to_string(),
        x.nrows().to_string(),
        num(r.log_likelihood),
        num(aic),
        num(bic),
        r.iterations.to_string(),
        r.converged.to_string(),
    ])?;
    fit.write(&ctx.path("estimate_fit.csv"), prov)?;
    let mut params = Table::new(&["parameter", "value"])?;
    for (k, v) in fitted_entries(&r.model, &panel.tickers) {
        params.row(&[k, num(v)])?;
    }
    params.write(&ctx.path("estimate_params.csv"), prov)
}

#[derive(Serialize, Deserialize)]
struct CheckpointLine {
    date: NaiveDate,
    outcome: CalibOutcome,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct CheckpointHead {
    config_sha256: String,
    seed: u64,
    version: String,
}

/// Completed dates from an earlier run with the same settings. A torn
/// final line is dropped and the file rewritten without it.
fn load_checkpoint(path: &Path, prov: &Provenance) -> CliResult<BTreeMap<NaiveDate, CalibOutcome>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let lines: Vec<String> = BufReader::new(std::fs::File::open(path)?).lines().collect::<Result<_, _>>()?;
    let head = CheckpointHead { config_sha256: prov.config_sha256.clone(), seed: prov.seed, version: prov.version.clone() };
    match lines.first() {
        None => return Ok(done),
        Some(l) => {
            let got: CheckpointHead = serde_json::from_str(l).map_err(|e| CliError::Checkpoint(format!("{}: bad header: {e}", path.display())))?;
            if got != head {
                return Err(CliError::Checkpoint(format!("{} was written with different settings; remove it or pick another --out", path.display())));
            }
        }
    }
    let mut valid = 1;
    for (i, l) in lines.iter().enumerate().skip(1) {
        match serde_json::from_str::<CheckpointLine>(l) {
            Ok(c) => {
                done.insert(c.date, c.outcome);
                valid = i + 1;
            }
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => return Err(CliError::Checkpoint(format!("{} line {}: {e}", path.display(), i + 1))),
        }
    }
    if valid < lines.len() {
        let mut text = lines[..valid].join("\n");
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(done)
}

fn calibrate(ctx: &Context) -> CliResult<()> {
    let cc = ctx.section(&ctx.cfg.calibrate, "calibrate")?;
    let data = ctx.cfg.data()?;
    let panel = load_prices(&data.prices)?;
    let quotes = load_quotes(data.quotes.as_ref().ok_or_else(|| CliError::Usage("calibrate needs data.quotes".into()))?)?;
    quotes.validate(data.band)?;
    let rates = rate_series(data, &panel)?;
    let divs = data.dividends_for(&panel.tickers);
    let dates: Vec<(NaiveDate, usize)> = quotes
        .dates()
        .into_iter()
        .filter(|d| ctx.dates.accepts(*d))
        .filter_map(|d| panel.dates.binary_search(&d).ok().map(|k| (d, k)))
        .filter(|&(_, k)| k >= cc.window)
        .collect();
    if dates.is_empty() {
        return Err(CliError::NoInput("no selected quote date has a full estimation window".into()));
    }
    let prov = &ctx.provenance;
    let ckpt = ctx.path("calib_outcomes.jsonl");
    let mut done = load_checkpoint(&ckpt, prov)?;
    let mut file = OpenOptions::new().create(true).append(true).open(&ckpt)?;
    if file.metadata()?.len() == 0 {
        let head = CheckpointHead { config_sha256: prov.config_sha256.clone(), seed: prov.seed, version: prov.version.clone() };
        writeln!(file, "{}", serde_json::to_string(&head)?)?;
    }
    let pricing = PricingConfig::default();
    let mut results: Vec<(NaiveDate, CalibOutcome)> = Vec::with_capacity(dates.len());
    for (i, &(d, k)) in dates.iter().enumerate() {
        let outcome = match done.remove(&d) {
            Some(o) => o,
            None => {
                let ret = panel.truncate_to(d).log_returns();
                let spots: Vec<f64> = (0..panel.tickers.len()).map(|j| panel.prices[(k, j)]).collect();
                let rate = rates.rate_on(d)?;
                let mkt = market_for_date(&quotes, d, &panel.tickers, &spots, rate, &divs, data.steps_per_year, data.band)
                    .map_err(|e| at_date(d, e))?;
                let prev = results.last().map(|(_, o)| o);
                let o = calibrate_day(prev, &mkt, &ret, cc, &pricing).map_err(|e| at_date(d, e))?;
                writeln!(file, "{}", serde_json::to_string(&CheckpointLine { date: d, outcome: o.clone() })?)?;
                file.flush()?;
                o
            }
        };
        ctx.heartbeat(
            "calibrate",
            i + 1,
            dates.len(),
            json!({ "date": format_date(d), "objective": outcome.objective, "evaluations": outcome.diagnostics.evaluations }),
        );
        results.push((d, outcome));
    }
    calibration_tables(ctx, &panel.tickers, &results)
}

fn calibration_tables(ctx: &Context, tickers: &[String], results: &[(NaiveDate, CalibOutcome)]) -> CliResult<()> {
    let mut fit = Table::new(&[
        "date",
        "objective",
        "start_objective",
        "log_likelihood",
        "aic",
        "bic",
        "em_log_likelihood",
        "inverse_residual",
        "evaluations",
        "converged",
    ])?;
    let mut arpe = Table::new(&["date", "ticker", "arpe"])?;
    let mut ks = Table::new(&["date", "ticker", "statistic", "p_value", "n"])?;
    let mut params = Table::new(&["date", "measure", "parameter", "value"])?;
    for (d, o) in results {
        let ds = format_date(*d);
        let g = &o.diagnostics;
        fit.row(&[
            ds.clone(),
            num(o.objective),
            num(g.start_objective),
            num(g.log_likelihood),
            num(g.aic),
            num(g.bic),
            num(g.em_log_likelihood),
            num(g.inverse_residual),
            g.evaluations.to_string(),
            g.converged.to_string(),
        ])?;
        for (t, a) in tickers.iter().zip(&o.arpe) {
            arpe.row(&[ds.clone(), t.clone(), num(*a)])?;
        }
        for (t, k) in tickers.iter().zip(&o.ks) {
            ks.row(&[ds.clone(), t.clone(), num(k.statistic), num(k.p_value), k.n.to_string()])?;
        }
        for (label, p) in [("q", &o.theta_q), ("ph", &o.theta_ph), ("em", &o.em)] {
            for (k, v) in mixture_entries(p, tickers) {
                params.row(&[ds.clone(), label.to_string(), k, num(v)])?;
            }
        }
    }
    let prov = &ctx.provenance;
    fit.write(&ctx.path("calib_fit.csv"), prov)?;
    arpe.write(&ctx.path("calib_arpe.csv"), prov)?;
    ks.write(&ctx.path("calib_ks.csv"), prov)?;
    params.write(&ctx.path("calib_params.csv"), prov)
}

/// Risk-neutral parameters from a bare record or a `{"params": ...}` file.
fn load_q(path: &Path) -> CliResult<ModelParams> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let v = v.get("params").cloned().unwrap_or(v);
    let p: ModelParams = serde_json::from_value(v)?;
    if p.measure() != Measure::Q {
        return Err(CliError::Usage(format!("{} holds historical parameters; pricing needs a risk-neutral law", path.display())));
    }
    Ok(p)
}

fn price(ctx: &Context) -> CliResult<()> {
    let pc = ctx.section(&ctx.cfg.price, "price")?;
    let q = load_q(&pc.params)?;
    let n = q.dim();
    let divs = if pc.dividends.is_empty() { vec![0.0; n] } else { pc.dividends.clone() };
    if divs.len() != n || pc.maturities.is_empty() || pc.moneyness.is_empty() {
        return Err(CliError::Usage("price needs one dividend per asset and at least one node".into()));
    }
    let nodes: Vec<SmileQuote> = pc
        .maturities
        .iter()
        .flat_map(|&t| pc.moneyness.iter().map(move |&m| SmileQuote { maturity: t, moneyness: m, implied_vol: 0.2 }))
        .collect();
    let lo = pc.moneyness.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pc.moneyness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let assets = divs.iter().map(|&d| AssetSmile { spot: pc.spot, dividend: d, quotes: nodes.clone() }).collect();
    let mkt = MarketData::new(pc.rate, assets, pc.steps_per_year, (lo, hi))?;
    let cfg = PricingConfig::default();
    let mut table = Table::new(&["asset", "maturity_years", "moneyness", "strike", "call", "put", "implied_vol"])?;
    for j in 0..n {
        let vols = model_smile(&q, &mkt, j, &cfg)?;
        for (node, iv) in nodes.iter().zip(vols) {
            let law = q.marginal(j).at_horizon(node.maturity * pc.steps_per_year);
            let strike = node.moneyness * pc.spot;
            let call = price_vanilla(&law, pc.spot, strike, node.maturity, pc.rate, divs[j], OptionKind::Call, &cfg)?;
            let put = price_vanilla(&law, pc.spot, strike, node.maturity, pc.rate, divs[j], OptionKind::Put, &cfg)?;
            table.row(&[j.to_string(), num(node.maturity), num(node.moneyness), num(strike), num(call), num(put), num(iv)])?;
        }
    }
    table.write(&ctx.path("price.csv"), &ctx.provenance)
}

fn risk(ctx: &Context) -> CliResult<()> {
    let rc = ctx.section(&ctx.cfg.risk, "risk")?;
    let data = ctx.cfg.data()?;
    let panel = load_panel(ctx, data)?;
    let x = trailing(&panel.log_returns(), rc.window)?;
    let as_of = panel.dates[panel.len() - 1];
    let fit: FittedModel = em_estimate(&x, rc.model, &rc.em).map_err(|e| at_date(as_of, e))?.model;
    let n = fit.dim();
    let ew = equal_weights(n)?.w;
    let mv = optimize_mv(&fit.covariance()?, rc.lower, rc.upper)?.w;
    let ma = optimize_ma(&fit, rc.delta, rc.lower, rc.upper, rc.horizon, rc.method)?;
    let mut summary = Table::new(&["date", "model", "strategy", "delta", "horizon", "var", "avar", "concentration"])?;
    let mut weights = Table::new(&["strategy", "ticker", "weight"])?;
    for (label, w) in [("ew", ew), ("mv", mv), ("ma", ma.weights.w)] {
        let tr = tail_risk_with(&portfolio_law(&w, &fit, rc.horizon)?, rc.delta, rc.method)?;
        summary.row(&[
            format_date(as_of),
            rc.model.to_string(),
            label.to_string(),
            num(rc.delta.value()),
            num(rc.horizon),
            num(tr.var),
            num(tr.avar),
            num(concentration(&w)),
        ])?;
        for (t, wj) in panel.tickers.iter().zip(&w) {
            weights.row(&[label.to_string(), t.clone(), num(*wj)])?;
        }
    }
    summary.write(&ctx.path("risk.csv"), &ctx.provenance)?;
    weights.write(&ctx.path("risk_weights.csv"), &ctx.provenance)
}

fn market_inputs(data: &DataConfig, panel: &PricePanel) -> CliResult<MarketInputs> {
    let path = data.quotes.as_ref().ok_or_else(|| CliError::Usage("double estimation needs data.quotes".into()))?;
    let quotes = load_quotes(path)?;
    quotes.validate(data.band)?;
    Ok(MarketInputs {
        quotes,
        rates: rate_series(data, panel)?,
        dividends: data.dividends_for(&panel.tickers),
        steps_per_year: data.steps_per_year,
        band: data.band,
    })
}

/// Backtest settings and inputs with `--dates` applied.
fn backtest_inputs(ctx: &Context) -> CliResult<(tsgh::backtest::BacktestConfig, PricePanel, Option<MarketInputs>)> {
    let mut bc = ctx.section(&ctx.cfg.backtest, "backtest")?.clone();
    let data = ctx.cfg.data()?;
    let panel = load_panel(ctx, data)?;
    if let Some(from) = ctx.dates.from.or_else(|| ctx.dates.list.as_ref().and_then(|l| l.first().copied())) {
        bc.start = Some(bc.start.map_or(from, |s| s.max(from)));
    }
    let market = if bc.estimation == Estimation::Double { Some(market_inputs(data, &panel)?) } else { None };
    Ok((bc, panel, market))
}

const METRIC_HEADER: [&str; 7] =
    ["weeks", "total_return", "annualized_return", "sharpe", "max_drawdown", "mean_concentration", "mean_turnover"];

fn metric_cells(m: &Metrics) -> Vec<String> {
    vec![
        m.weeks.to_string(),
        num(m.total_return),
        num(m.annualized_return),
        num(m.sharpe),
        num(m.max_drawdown),
        num(m.mean_concentration),
        num(m.mean_turnover),
    ]
}

fn write_ledger(ctx: &Context, l: &BacktestLedger) -> CliResult<()> {
    let prov = &ctx.provenance;
    for (name, series) in [("ledger", &l.daily), ("weekly", &l.weekly)] {
        let mut t = Table::new(&["date", "value"])?;
        for p in series {
            t.row(&[format_date(p.date), num(p.value)])?;
        }
        t.write(&ctx.path(&format!("{name}_{}.csv", l.label)), prov)?;
    }
    let mut header: Vec<String> = ["date", "turnover", "concentration", "predicted_avar", "converged"].map(String::from).to_vec();
    header.extend(l.tickers.iter().cloned());
    let mut t = Table::new(&header)?;
    for r in &l.rebalances {
        let mut cells = vec![format_date(r.date), opt(r.turnover), num(r.concentration), opt(r.predicted_avar), r.converged.to_string()];
        cells.extend(r.weights.iter().map(|w| num(*w)));
        t.row(&cells)?;
    }
    t.write(&ctx.path(&format!("weights_{}.csv", l.label)), prov)
}

fn backtest(ctx: &Context) -> CliResult<()> {
    let (bc, panel, market) = backtest_inputs(ctx)?;
    let ledger = run_backtest(&panel, market.as_ref(), &bc)?;
    write_ledger(ctx, &ledger)?;
    let mut header = vec!["label", "strategy", "model", "estimation", "frequency"];
    header.extend(METRIC_HEADER);
    let mut t = Table::new(&header)?;
    let mut cells = vec![ledger.label.clone(), bc.strategy.to_string(), bc.model.to_string(), bc.estimation.to_string(), bc.rebalance_every.to_string()];
    cells.extend(metric_cells(&ledger.metrics));
    t.row(&cells)?;
    t.write(&ctx.path("metrics.csv"), &ctx.provenance)
}

fn sweep(ctx: &Context) -> CliResult<()> {
    let (bc, panel, market) = backtest_inputs(ctx)?;
    let rows = frequency_sweep(&panel, market.as_ref(), &bc)?;
    let mut header = vec!["strategy", "model", "estimation", "frequency"];
    header.extend(METRIC_HEADER);
    let mut t = Table::new(&header)?;
    for (i, (row, ledger)) in rows.iter().enumerate() {
        let mut cells = vec![bc.strategy.to_string(), bc.model.to_string(), bc.estimation.to_string(), row.frequency.to_string()];
        cells.extend(metric_cells(&row.metrics));
        t.row(&cells)?;
        write_ledger(ctx, ledger)?;
        ctx.heartbeat("sweep", i + 1, rows.len(), json!({ "frequency": row.frequency.to_string() }));
    }
    t.write(&ctx.path("sweep.csv"), &ctx.provenance)
}
