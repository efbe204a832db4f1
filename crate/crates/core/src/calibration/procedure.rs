//! Daily rolling calibration: historical EM fit, forward Esscher start,
//! joint minimization with the dependence factor held fixed.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::em::{aic_bic, em_estimate, em_estimate_from, log_likelihood, EmConfig};
use super::ks::KsResult;
use super::objective::{evaluate_objective, q_from_vector, q_vector, ParameterBoxes};
use crate::error::{invalid, Error, Result};
use crate::esscher::esscher_forward;
use crate::models::{Family, FittedModel, ModelParams};
use crate::numerics::{minimize_box, BoxOptions};
use crate::pricing::{MarketData, PricingConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibConfigRecord")]
pub struct CalibConfig {
    pub family: Family,
    /// Weight of the KS terms.
    #[serde(default = "default_xi1")]
    pub xi1: f64,
    pub boxes: ParameterBoxes,
    /// Observations in the estimation window.
    pub window: usize,
    #[serde(default)]
    pub optimizer: BoxOptions,
    #[serde(default)]
    pub em: EmConfig,
    /// Objective value assigned to infeasible points.
    #[serde(default = "default_penalty")]
    pub penalty: f64,
}

/// Serialized form; `boxes` falls back to the family's defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibConfigRecord {
    family: Family,
    #[serde(default = "default_xi1")]
    xi1: f64,
    #[serde(default)]
    boxes: Option<ParameterBoxes>,
    window: usize,
    #[serde(default)]
    optimizer: BoxOptions,
    #[serde(default)]
    em: EmConfig,
    #[serde(default = "default_penalty")]
    penalty: f64,
}

impl TryFrom<CalibConfigRecord> for CalibConfig {
    type Error = Error;
    fn try_from(r: CalibConfigRecord) -> Result<Self> {
        let boxes = match r.boxes {
            Some(b) => b,
            None => ParameterBoxes::default_for(r.family)?,
        };
        Ok(CalibConfig { family: r.family, xi1: r.xi1, boxes, window: r.window, optimizer: r.optimizer, em: r.em, penalty: r.penalty })
    }
}

fn default_xi1() -> f64 {
    3.0
}

fn default_penalty() -> f64 {
    1e6
}

impl CalibConfig {
    pub fn new(family: Family, window: usize) -> Result<Self> {
        Ok(CalibConfig {
            family,
            xi1: default_xi1(),
            boxes: ParameterBoxes::default_for(family)?,
            window,
            optimizer: BoxOptions::default(),
            em: EmConfig::default(),
            penalty: default_penalty(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Gaussian {
            return Err(Error::Unsupported("the Gaussian family has no risk-neutral calibration".into()));
        }
        if !(self.xi1 >= 0.0) || !(self.penalty > 0.0) || self.window < 2 {
            return Err(invalid("calibration needs xi1 >= 0, a positive penalty and a window of at least two"));
        }
        self.boxes.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibDiagnostics {
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the starting point of the minimization.
    pub start_objective: f64,
    pub em_log_likelihood: f64,
    pub em_iterations: usize,
    pub inverse_residual: f64,
    /// Log-likelihood of the window under `P_h`, with information criteria.
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    /// Wall time; not serialized so that outputs are reproducible.
    #[serde(skip_serializing, default)]
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibOutcome {
    pub theta_q: ModelParams,
    pub theta_ph: ModelParams,
    /// Historical EM fit that supplied the dependence factor.
    pub em: ModelParams,
    pub arpe: Vec<f64>,
    pub ks: Vec<KsResult>,
    pub objective: f64,
    pub diagnostics: CalibDiagnostics,
}

/// Free parameter count of a mixture model in `n` assets.
pub fn parameter_count(n: usize) -> usize {
    n + n * (n + 1) / 2 + n + 3
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// One calibration date. `prev` warm-starts both the EM fit and the
/// minimizer.
pub fn calibrate_day(
    prev: Option<&CalibOutcome>,
    mkt: &MarketData,
    returns: &DMatrix<f64>,
    cfg: &CalibConfig,
    pricing: &PricingConfig,
) -> Result<CalibOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let (t, n) = returns.shape();
    if mkt.dim() != n {
        return Err(invalid("market and returns differ in dimension"));
    }
    let returns = if t > cfg.window { returns.rows(t - cfg.window, cfg.window).into_owned() } else { returns.clone() };

    // Historical fit; only its dependence factor enters the minimization.
    let em = match prev {
        Some(p) if p.em.dim() == n && p.em.family() == cfg.family => em_estimate_from(&returns, &p.em, &cfg.em)?,
        _ => em_estimate(&returns, cfg.family, &cfg.em)?,
    };
    let FittedModel::Mixture(em_params) = em.model else {
        return Err(Error::Unsupported("calibration requires a mixture family".into()));
    };
    let chol = em_params.chol().clone();

    let (lo, hi) = cfg.boxes.bounds(n);
    let mut x0 = match prev {
        Some(p) if p.theta_q.dim() == n && p.theta_q.family() == cfg.family => q_vector(&p.theta_q),
        _ => match esscher_forward(&em_params, &mkt.rates()) {
            Ok(f) => q_vector(&f.params),
            Err(_) => q_vector(&em_params),
        },
    };
    clamp_into(&mut x0, &lo, &hi);

    let objective = |x: &[f64]| -> f64 {
        q_from_vector(x, cfg.family, &chol, mkt)
            .and_then(|q| evaluate_objective(&q, mkt, &returns, cfg.xi1, pricing))
            .map(|b| b.value)
            .unwrap_or(cfg.penalty)
    };
    let start_objective = objective(&x0);
    let rep = minimize_box(objective, &x0, &lo, &hi, cfg.optimizer)?;
    let (x, converged) = if rep.value <= start_objective { (rep.x, rep.converged) } else { (x0, false) };

    let q = q_from_vector(&x, cfg.family, &chol, mkt)?;
    let b = evaluate_objective(&q, mkt, &returns, cfg.xi1, pricing)?;
    let ll = log_likelihood(&b.p_h, &returns)?;
    let (aic, bic) = aic_bic(ll, parameter_count(n), returns.nrows());
    Ok(CalibOutcome {
        theta_q: q,
        theta_ph: b.p_h,
        em: em_params,
        arpe: b.arpe,
        ks: b.ks,
        objective: b.value,
        diagnostics: CalibDiagnostics {
            evaluations: rep.evaluations,
            iterations: rep.iterations,
            converged,
            start_objective,
            em_log_likelihood: em.log_likelihood,
            em_iterations: em.iterations,
            inverse_residual: b.inverse_residual,
            log_likelihood: ll,
            aic,
            bic,
            seconds: started.elapsed().as_secs_f64(),
        },
    })
}
