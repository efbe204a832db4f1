use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tsgh::backtest::{Estimation, Frequency, Strategy};
use tsgh::calibration::CalibConfig;
use tsgh::io::{parse_config, Provenance, RunConfig};
use tsgh::models::Family;

use crate::dates::DateFilter;
use crate::error::{CliError, CliResult};
use crate::Args;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub provenance: Provenance,
    pub dates: DateFilter,
    pub quiet: bool,
    pub verbose: u8,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Independent seed for the named consumer, derived from the root seed.
pub fn substream(root: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn parse_flag<T: std::str::FromStr<Err = tsgh::Error>>(v: &Option<String>) -> CliResult<Option<T>> {
    v.as_deref().map(str::parse::<T>).transpose().map_err(|e: tsgh::Error| CliError::Usage(e.to_string()))
}

/// Applies the command line overrides to every section they concern.
fn apply_overrides(cfg: &mut RunConfig, args: &Args) -> CliResult<()> {
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let model: Option<Family> = parse_flag(&args.model)?;
    let estimation: Option<Estimation> = parse_flag(&args.estimation)?;
    let strategy: Option<Strategy> = parse_flag(&args.strategy)?;
    let frequency: Option<Frequency> = parse_flag(&args.frequency)?;
    if let Some(m) = model {
        if let Some(e) = &mut cfg.estimate {
            e.model = m;
        }
        if let Some(r) = &mut cfg.risk {
            r.model = m;
        }
        if let Some(b) = &mut cfg.backtest {
            b.model = m;
            if let Some(c) = &mut b.calibration {
                if c.family != m && m != Family::Gaussian {
                    *c = refamily(c, m)?;
                }
            }
        }
        if let Some(c) = &mut cfg.calibrate {
            if c.family != m {
                *c = refamily(c, m)?;
            }
        }
    }
    if let Some(b) = &mut cfg.backtest {
        if let Some(s) = strategy {
            b.strategy = s;
        }
        if let Some(e) = estimation {
            b.estimation = e;
        }
        if let Some(f) = frequency {
            b.rebalance_every = f;
        }
    }
    Ok(())
}

/// Same settings for another family, with that family's default boxes.
fn refamily(c: &CalibConfig, family: Family) -> CliResult<CalibConfig> {
    let mut out = CalibConfig::new(family, c.window)?;
    out.xi1 = c.xi1;
    out.optimizer = c.optimizer;
    out.em = c.em.clone();
    out.penalty = c.penalty;
    Ok(out)
}

impl Context {
    pub fn new(args: &Args) -> CliResult<Self> {
        let (mut cfg, base) = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
                (parse_config(&text)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        apply_overrides(&mut cfg, args)?;
        // The hash covers the effective settings with paths as written.
        let canonical = serde_json::to_vec(&cfg)?;
        let provenance = Provenance {
            config_sha256: hex(&Sha256::digest(&canonical)),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        cfg.resolve_paths(if base.as_os_str().is_empty() { Path::new(".") } else { &base });
        std::fs::create_dir_all(&args.out)?;
        Ok(Context {
            cfg,
            out: args.out.clone(),
            provenance,
            dates: DateFilter::parse(args.dates.as_deref())?,
            quiet: args.quiet,
            verbose: args.verbose,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Progress record on stderr; never part of the output tables.
    pub fn heartbeat(&self, verb: &str, done: usize, total: usize, detail: serde_json::Value) {
        if !self.quiet {
            let mut rec = serde_json::json!({ "verb": verb, "done": done, "total": total });
            if self.verbose > 0 {
                rec["detail"] = detail;
            }
            eprintln!("{}", serde_json::json!({ "heartbeat": rec }));
        }
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        s.as_ref().ok_or_else(|| CliError::Usage(format!("config has no [{name}] section")))
    }
}
