use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::{csv_reader, csv_writer, finish, format_date, parse_date, parse_f64, write_table, Provenance};
use crate::error::{Error, Result};

/// Adjusted closing prices, one row per date.
#[derive(Clone, Debug, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub prices: DMatrix<f64>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: DMatrix<f64>) -> Result<Self> {
        let p = PricePanel { dates, tickers, prices };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.prices.nrows() != self.dates.len() || self.prices.ncols() != self.tickers.len() {
            return Err(Error::Data("price matrix does not match dates and tickers".into()));
        }
        if let Some(i) = (1..self.dates.len()).find(|&i| self.dates[i] <= self.dates[i - 1]) {
            return Err(Error::Data(format!("dates not strictly increasing at {}", format_date(self.dates[i]))));
        }
        if self.prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Data("prices must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// `ln(P_t / P_{t-1})`; row `i` is the return ending on `dates[i + 1]`.
    pub fn log_returns(&self) -> DMatrix<f64> {
        let t = self.len();
        DMatrix::from_fn(t.saturating_sub(1), self.tickers.len(), |i, j| (self.prices[(i + 1, j)] / self.prices[(i, j)]).ln())
    }

    /// Rows with dates up to and including `end`.
    pub fn truncate_to(&self, end: NaiveDate) -> PricePanel {
        let k = self.dates.partition_point(|d| *d <= end);
        PricePanel { dates: self.dates[..k].to_vec(), tickers: self.tickers.clone(), prices: self.prices.rows(0, k).into_owned() }
    }
}

pub fn load_prices(path: &Path) -> Result<PricePanel> {
    read_prices(std::fs::File::open(path)?)
}

/// Reads `date,<ticker>...`. Empty cells are forward-filled; rows before
/// every ticker has a first price are dropped.
pub fn read_prices<R: std::io::Read>(r: R) -> Result<PricePanel> {
    let mut rd = csv_reader(r);
    let header = rd.headers()?.clone();
    if header.len() < 2 || &header[0] != "date" {
        return Err(Error::Data("price header must be `date,<ticker>...`".into()));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut seen = std::collections::HashSet::new();
    for t in &tickers {
        if t.is_empty() || !seen.insert(t.clone()) {
            return Err(Error::Data(format!("empty or duplicate ticker {t:?} in header")));
        }
    }
    let n = tickers.len();
    let mut dates = Vec::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != n + 1 {
            return Err(Error::Data(format!("line {line}: expected {} fields, found {}", n + 1, rec.len())));
        }
        let d = parse_date(&rec[0]).map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        if let Some(last) = dates.last() {
            if d == *last {
                return Err(Error::Data(format!("line {line}: duplicate date {}", format_date(d))));
            }
            if d < *last {
                return Err(Error::Data(format!("line {line}: date {} out of order", format_date(d))));
            }
        }
        let mut row = Vec::with_capacity(n);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            if cell.is_empty() {
                row.push(None);
                continue;
            }
            let v = parse_f64(cell, line, &tickers[j])?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Data(format!("line {line}: non-positive price {v} for {}", tickers[j])));
            }
            row.push(Some(v));
        }
        dates.push(d);
        rows.push(row);
    }
    let start = (0..rows.len())
        .find(|&i| (0..n).all(|j| rows[..=i].iter().any(|r| r[j].is_some())))
        .ok_or_else(|| Error::Data("no date on which every ticker has a price".into()))?;
    let mut last: Vec<f64> = (0..n).map(|j| rows[..=start].iter().rev().find_map(|r| r[j]).expect("checked above")).collect();
    let t = rows.len() - start;
    let mut prices = DMatrix::zeros(t, n);
    for (i, row) in rows[start..].iter().enumerate() {
        for j in 0..n {
            if let Some(v) = row[j] {
                last[j] = v;
            }
            prices[(i, j)] = last[j];
        }
    }
    PricePanel::new(dates[start..].to_vec(), tickers, prices)
}

pub fn write_prices(path: &Path, panel: &PricePanel, provenance: Option<&Provenance>) -> Result<()> {
    panel.validate()?;
    let mut w = csv_writer();
    let mut head = vec!["date".to_string()];
    head.extend(panel.tickers.iter().cloned());
    w.write_record(&head)?;
    for (i, d) in panel.dates.iter().enumerate() {
        let mut rec = vec![format_date(*d)];
        rec.extend((0..panel.tickers.len()).map(|j| format!("{}", panel.prices[(i, j)])));
        w.write_record(&rec)?;
    }
    write_table(path, provenance, &finish(w)?)
}
