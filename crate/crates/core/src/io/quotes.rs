use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;

use super::{csv_reader, csv_writer, finish, format_date, parse_date, parse_f64, write_table, Provenance};
use crate::error::{Error, Result};
use crate::pricing::{AssetSmile, MarketData, SmileQuote};

#[derive(Clone, Debug, PartialEq)]
pub struct QuoteRow {
    pub date: NaiveDate,
    pub ticker: String,
    pub maturity_years: f64,
    pub moneyness: f64,
    pub implied_vol: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuoteFile {
    pub rows: Vec<QuoteRow>,
}

const QUOTE_HEADER: [&str; 5] = ["date", "ticker", "maturity_years", "moneyness", "implied_vol"];

impl QuoteFile {
    /// Positive vols and maturities, moneyness inside `band`, no repeated
    /// node.
    pub fn validate(&self, band: (f64, f64)) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, q) in self.rows.iter().enumerate() {
            if !(q.implied_vol > 0.0 && q.implied_vol.is_finite()) || !(q.maturity_years > 0.0 && q.maturity_years.is_finite()) {
                return Err(Error::Data(format!("quote {}: vol and maturity must be positive", i + 1)));
            }
            if !(q.moneyness >= band.0 && q.moneyness <= band.1) {
                return Err(Error::Data(format!("quote {}: moneyness {} outside [{}, {}]", i + 1, q.moneyness, band.0, band.1)));
            }
            if !seen.insert((q.date, q.ticker.clone(), q.maturity_years.to_bits(), q.moneyness.to_bits())) {
                return Err(Error::Data(format!("quote {}: duplicate node for {} on {}", i + 1, q.ticker, format_date(q.date))));
            }
        }
        Ok(())
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut d: Vec<NaiveDate> = self.rows.iter().map(|q| q.date).collect();
        d.sort();
        d.dedup();
        d
    }
}

pub fn load_quotes(path: &Path) -> Result<QuoteFile> {
    read_quotes(std::fs::File::open(path)?)
}

pub fn read_quotes<R: std::io::Read>(r: R) -> Result<QuoteFile> {
    let mut rd = csv_reader(r);
    if rd.headers()?.iter().ne(QUOTE_HEADER) {
        return Err(Error::Data(format!("quote header must be `{}`", QUOTE_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 5 {
            return Err(Error::Data(format!("line {line}: expected 5 fields")));
        }
        rows.push(QuoteRow {
            date: parse_date(&rec[0]).map_err(|e| Error::Data(format!("line {line}: {e}")))?,
            ticker: rec[1].to_string(),
            maturity_years: parse_f64(&rec[2], line, "maturity")?,
            moneyness: parse_f64(&rec[3], line, "moneyness")?,
            implied_vol: parse_f64(&rec[4], line, "implied vol")?,
        });
    }
    let f = QuoteFile { rows };
    f.validate((0.0, f64::INFINITY))?;
    Ok(f)
}

pub fn write_quotes(path: &Path, quotes: &QuoteFile, provenance: Option<&Provenance>) -> Result<()> {
    let mut w = csv_writer();
    w.write_record(QUOTE_HEADER)?;
    for q in &quotes.rows {
        w.write_record([
            format_date(q.date),
            q.ticker.clone(),
            format!("{}", q.maturity_years),
            format!("{}", q.moneyness),
            format!("{}", q.implied_vol),
        ])?;
    }
    write_table(path, provenance, &finish(w)?)
}

/// Annualized continuously compounded risk-free rates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateSeries {
    pub dates: Vec<NaiveDate>,
    pub rates: Vec<f64>,
}

impl RateSeries {
    /// Latest rate published on or before `date`.
    pub fn rate_on(&self, date: NaiveDate) -> Result<f64> {
        let k = self.dates.partition_point(|d| *d <= date);
        if k == 0 {
            return Err(Error::Data(format!("no rate on or before {}", format_date(date))));
        }
        Ok(self.rates[k - 1])
    }
}

pub fn load_rates(path: &Path) -> Result<RateSeries> {
    read_rates(std::fs::File::open(path)?)
}

pub fn read_rates<R: std::io::Read>(r: R) -> Result<RateSeries> {
    let mut rd = csv_reader(r);
    if rd.headers()?.iter().ne(["date", "rate"]) {
        return Err(Error::Data("rates header must be `date,rate`".into()));
    }
    let mut s = RateSeries::default();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::Data(format!("line {line}: expected 2 fields")));
        }
        let d = parse_date(&rec[0]).map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        if s.dates.last().is_some_and(|l| d <= *l) {
            return Err(Error::Data(format!("line {line}: duplicate or out-of-order date")));
        }
        let v = parse_f64(&rec[1], line, "rate")?;
        if !v.is_finite() {
            return Err(Error::Data(format!("line {line}: rate must be finite")));
        }
        s.dates.push(d);
        s.rates.push(v);
    }
    Ok(s)
}

pub fn write_rates(path: &Path, rates: &RateSeries, provenance: Option<&Provenance>) -> Result<()> {
    let mut w = csv_writer();
    w.write_record(["date", "rate"])?;
    for (d, r) in rates.dates.iter().zip(&rates.rates) {
        w.write_record([format_date(*d), format!("{r}")])?;
    }
    write_table(path, provenance, &finish(w)?)
}

/// Quotes of one date grouped per ticker, nodes sorted by maturity then
/// moneyness.
#[allow(clippy::too_many_arguments)]
pub fn market_for_date(
    quotes: &QuoteFile,
    date: NaiveDate,
    tickers: &[String],
    spots: &[f64],
    rate: f64,
    dividends: &[f64],
    steps_per_year: f64,
    band: (f64, f64),
) -> Result<MarketData> {
    if spots.len() != tickers.len() || dividends.len() != tickers.len() {
        return Err(Error::Data("spots and dividends need one entry per ticker".into()));
    }
    let known: HashSet<&str> = tickers.iter().map(String::as_str).collect();
    if let Some(q) = quotes.rows.iter().find(|q| q.date == date && !known.contains(q.ticker.as_str())) {
        return Err(Error::Data(format!("quote for unknown ticker {}", q.ticker)));
    }
    let assets = tickers
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let mut qs: Vec<SmileQuote> = quotes
                .rows
                .iter()
                .filter(|q| q.date == date && &q.ticker == t)
                .map(|q| SmileQuote { maturity: q.maturity_years, moneyness: q.moneyness, implied_vol: q.implied_vol })
                .collect();
            qs.sort_by(|a, b| a.maturity.total_cmp(&b.maturity).then(a.moneyness.total_cmp(&b.moneyness)));
            AssetSmile { spot: spots[j], dividend: dividends[j], quotes: qs }
        })
        .collect();
    MarketData::new(rate, assets, steps_per_year, band)
}
