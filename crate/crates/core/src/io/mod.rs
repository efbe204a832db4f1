//! CSV panels and quote files, run configuration, provenance headers and
//! the synthetic market generator.

mod config;
mod prices;
mod quotes;
mod synth;

use std::io::Write;
use std::path::Path;

pub use config::{load_config, parse_config, DataConfig, EstimateConfig, PriceConfig, QuoteSchedule, RiskConfig, RunConfig, SimulateConfig};
pub use prices::{load_prices, read_prices, write_prices, PricePanel};
pub use quotes::{load_quotes, load_rates, market_for_date, read_quotes, read_rates, write_quotes, write_rates, QuoteFile, QuoteRow, RateSeries};
pub use synth::{business_days, synth_generate, SynthWorld};

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).map_err(|e| Error::Data(format!("bad date {s:?}: {e}")))
}

pub fn format_date(d: NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

/// Run metadata written as `#` comment lines at the top of every table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!("# tsgh {}\n# config_sha256 {}\n# seed {}\n", self.version, self.config_sha256, self.seed)
    }
}

/// Writes `body` after the provenance header, if any.
pub fn write_table(path: &Path, provenance: Option<&Provenance>, body: &[u8]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    if let Some(p) = provenance {
        f.write_all(p.header().as_bytes())?;
    }
    f.write_all(body)?;
    f.flush()?;
    Ok(())
}

pub(crate) fn csv_reader<R: std::io::Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))
}

pub(crate) fn parse_f64(s: &str, line: u64, what: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Data(format!("line {line}: {what} {s:?} is not a number")))
}
