//! Plot-ready series assembled from earlier `backtest`, `sweep` and
//! `calibrate` outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::context::Context;
use crate::error::{CliError, CliResult};
use crate::tables::{num, Table};

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?)
}

fn bad(path: &Path, what: &str) -> CliError {
    CliError::NoInput(format!("{}: {what}", path.display()))
}

fn parse(path: &Path, s: &str) -> CliResult<f64> {
    s.parse().map_err(|_| bad(path, &format!("{s:?} is not a number")))
}

/// `date,value` series keyed by date string.
fn read_series(path: &Path) -> CliResult<BTreeMap<String, f64>> {
    let mut r = reader(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != ["date", "value"] {
        return Err(bad(path, "expected header date,value"));
    }
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        out.insert(rec[0].to_string(), parse(path, &rec[1])?);
    }
    Ok(out)
}

fn ledgers(dir: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(label) = name.strip_prefix("ledger_").and_then(|n| n.strip_suffix(".csv")) {
            out.push((label.to_string(), path.clone()));
        }
    }
    out.sort();
    Ok(out)
}

fn wide(ctx: &Context, name: &str, labels: &[String], series: &[BTreeMap<String, f64>]) -> CliResult<()> {
    let dates: BTreeSet<&String> = series.iter().flat_map(|s| s.keys()).collect();
    let mut header = vec!["date".to_string()];
    header.extend(labels.iter().cloned());
    let mut t = Table::new(&header)?;
    for d in dates {
        let mut cells = vec![d.clone()];
        cells.extend(series.iter().map(|s| s.get(d).map(|v| num(*v)).unwrap_or_default()));
        t.row(&cells)?;
    }
    t.write(&ctx.path(name), &ctx.provenance)
}

fn drawdown(s: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut peak = f64::NEG_INFINITY;
    s.iter()
        .map(|(d, &v)| {
            peak = peak.max(v);
            (d.clone(), 1.0 - v / peak)
        })
        .collect()
}

/// Per-date summary of `calib_arpe.csv` and `calib_ks.csv`.
fn calibration_summary(ctx: &Context, dir: &Path) -> CliResult<bool> {
    let (arpe_path, ks_path) = (dir.join("calib_arpe.csv"), dir.join("calib_ks.csv"));
    if !arpe_path.exists() || !ks_path.exists() {
        return Ok(false);
    }
    let mut arpe: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in reader(&arpe_path)?.records() {
        let rec = rec?;
        arpe.entry(rec[0].to_string()).or_default().push(parse(&arpe_path, &rec[2])?);
    }
    let mut ks: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in reader(&ks_path)?.records() {
        let rec = rec?;
        ks.entry(rec[0].to_string()).or_default().push(parse(&ks_path, &rec[3])?);
    }
    if arpe.is_empty() {
        return Ok(false);
    }
    let mut t = Table::new(&["date", "mean_arpe", "max_arpe", "min_ks_p_value", "ks_rejections_5pct"])?;
    for (d, a) in &arpe {
        let p = ks.get(d).map(Vec::as_slice).unwrap_or_default();
        t.row(&[
            d.clone(),
            num(a.iter().sum::<f64>() / a.len() as f64),
            num(a.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            num(p.iter().copied().fold(f64::INFINITY, f64::min)),
            p.iter().filter(|&&x| x < 0.05).count().to_string(),
        ])?;
    }
    t.write(&ctx.path("report_calibration.csv"), &ctx.provenance)?;
    Ok(true)
}

pub fn report(ctx: &Context, dir: &Path) -> CliResult<()> {
    if !dir.is_dir() {
        return Err(CliError::NoInput(format!("{} is not a directory", dir.display())));
    }
    let found = ledgers(dir)?;
    let mut wrote = false;
    if !found.is_empty() {
        let labels: Vec<String> = found.iter().map(|(l, _)| l.clone()).collect();
        let series = found.iter().map(|(_, p)| read_series(p)).collect::<CliResult<Vec<_>>>()?;
        if series.iter().all(BTreeMap::is_empty) {
            return Err(CliError::NoInput(format!("ledgers in {} hold no rows", dir.display())));
        }
        wide(ctx, "report_values.csv", &labels, &series)?;
        let dd: Vec<_> = series.iter().map(drawdown).collect();
        wide(ctx, "report_drawdown.csv", &labels, &dd)?;
        wrote = true;
    }
    wrote |= calibration_summary(ctx, dir)?;
    if !wrote {
        return Err(CliError::NoInput(format!("no ledger_*.csv or calib_*.csv tables in {}", dir.display())));
    }
    Ok(())
}
