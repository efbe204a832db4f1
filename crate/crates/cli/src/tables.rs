use std::path::Path;

use tsgh::io::{write_table, Provenance};
use tsgh::models::{FittedModel, ModelParams};
use tsgh::subordinators::SubordinatorLaw;

use crate::error::CliResult;

/// Shortest representation that reads back to the same bits.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// In-memory CSV table written in one go behind the provenance header.
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> CliResult<Self> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header.iter().map(AsRef::as_ref))?;
        Ok(Table { w })
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) -> CliResult<()> {
        self.w.write_record(cells.iter().map(AsRef::as_ref))?;
        Ok(())
    }

    pub fn write(self, path: &Path, provenance: &Provenance) -> CliResult<()> {
        let body = self.w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        write_table(path, Some(provenance), &body)?;
        Ok(())
    }
}

/// `(name, value)` pairs for a mixture law, one per scalar.
pub fn mixture_entries(p: &ModelParams, tickers: &[String]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    match p.sub() {
        SubordinatorLaw::Gig(g) => {
            out.extend([("epsilon".to_string(), g.epsilon), ("chi".into(), g.chi), ("psi".into(), g.psi)]);
        }
        SubordinatorLaw::Cts(c) => {
            out.extend([("omega".to_string(), c.omega), ("lambda".into(), c.lambda), ("c".into(), c.c)]);
        }
    }
    for (name, v) in [("mu", p.mu()), ("theta", p.theta()), ("sigma", p.sigma())] {
        out.extend(tickers.iter().zip(v).map(|(t, x)| (format!("{name}:{t}"), *x)));
    }
    let corr = p.correlation();
    for i in 0..tickers.len() {
        for j in 0..i {
            out.push((format!("rho:{}:{}", tickers[i], tickers[j]), corr[(i, j)]));
        }
    }
    out
}

pub fn fitted_entries(m: &FittedModel, tickers: &[String]) -> Vec<(String, f64)> {
    match m {
        FittedModel::Mixture(p) => mixture_entries(p, tickers),
        FittedModel::Gaussian(g) => {
            let mut out: Vec<(String, f64)> = tickers.iter().zip(&g.mean).map(|(t, x)| (format!("mean:{t}"), *x)).collect();
            for i in 0..tickers.len() {
                for j in 0..=i {
                    out.push((format!("cov:{}:{}", tickers[i], tickers[j]), g.cov[(i, j)]));
                }
            }
            out
        }
    }
}
