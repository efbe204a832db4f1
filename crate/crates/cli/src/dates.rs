use chrono::NaiveDate;
use tsgh::io::parse_date;

use crate::error::{CliError, CliResult};

/// Parsed `--dates` selection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DateFilter {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub list: Option<Vec<NaiveDate>>,
}

impl DateFilter {
    pub fn parse(s: Option<&str>) -> CliResult<Self> {
        let Some(s) = s.map(str::trim) else {
            return Ok(DateFilter::default());
        };
        let date = |x: &str| parse_date(x).map_err(|e| CliError::Usage(format!("--dates: {e}")));
        if let Some((a, b)) = s.split_once(':') {
            let from = if a.trim().is_empty() { None } else { Some(date(a)?) };
            let to = if b.trim().is_empty() { None } else { Some(date(b)?) };
            if let (Some(f), Some(t)) = (from, to) {
                if f > t {
                    return Err(CliError::Usage(format!("--dates range {s} is empty")));
                }
            }
            return Ok(DateFilter { from, to, list: None });
        }
        let mut list = s.split(',').map(date).collect::<CliResult<Vec<_>>>()?;
        list.sort();
        list.dedup();
        Ok(DateFilter { from: None, to: None, list: Some(list) })
    }

    pub fn accepts(&self, d: NaiveDate) -> bool {
        self.from.is_none_or(|f| d >= f) && self.to.is_none_or(|t| d <= t) && self.list.as_ref().is_none_or(|l| l.binary_search(&d).is_ok())
    }

    /// Latest date the selection allows, for as-of verbs.
    pub fn end(&self) -> Option<NaiveDate> {
        match &self.list {
            Some(l) => l.last().copied(),
            None => self.to,
        }
    }
}
