//! Joint option-smile / historical-fit objective over risk-neutral
//! parameters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ks::{ks_distance, KsResult};
use crate::error::{invalid, Error, Result};
use crate::esscher::{esscher_inverse, risk_neutral_drift};
use crate::models::{Family, Measure, ModelParams};
use crate::pricing::{model_smile, MarketData, PricingConfig};
use crate::subordinators::{CtsParams, GigParams, SubordinatorLaw};

/// Bounds on the risk-neutral free parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBoxes {
    /// Clock parameters: `(ε, χ, ψ)` or `(ω, λ, C)`.
    pub sub_lower: [f64; 3],
    pub sub_upper: [f64; 3],
    pub theta: [f64; 2],
    pub sigma: [f64; 2],
}

impl ParameterBoxes {
    pub fn default_for(family: Family) -> Result<Self> {
        match family {
            Family::Mgh => Ok(ParameterBoxes {
                sub_lower: [-4.5, 1e-2, 1e-2],
                sub_upper: [-0.5, 5.0, 2.0],
                theta: [-0.1, 0.01],
                sigma: [0.01, 0.15],
            }),
            Family::Mnts => Ok(ParameterBoxes {
                sub_lower: [0.75, 1e-2, 1e-2],
                sub_upper: [0.99, 5.0, 100.0],
                theta: [-0.15, 0.01],
                sigma: [0.01, 0.2],
            }),
            Family::Gaussian => Err(Error::Unsupported("the Gaussian family has no risk-neutral calibration".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo <= hi;
        if (0..3).all(|i| ok(self.sub_lower[i], self.sub_upper[i]))
            && ok(self.theta[0], self.theta[1])
            && ok(self.sigma[0], self.sigma[1])
            && self.sigma[0] > 0.0
        {
            Ok(())
        } else {
            Err(invalid("parameter boxes must be finite and ordered with positive sigma"))
        }
    }

    /// Bounds for the vector `[clock(3), θ(n), σ(n)]`.
    pub fn bounds(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.sub_lower.to_vec();
        let mut hi = self.sub_upper.to_vec();
        lo.extend(std::iter::repeat_n(self.theta[0], n));
        hi.extend(std::iter::repeat_n(self.theta[1], n));
        lo.extend(std::iter::repeat_n(self.sigma[0], n));
        hi.extend(std::iter::repeat_n(self.sigma[1], n));
        (lo, hi)
    }
}

/// `[clock(3), θ(n), σ(n)]` of a model.
pub fn q_vector(q: &ModelParams) -> Vec<f64> {
    let mut v = q.sub().to_vec().to_vec();
    v.extend_from_slice(q.theta());
    v.extend_from_slice(q.sigma());
    v
}

/// Risk-neutral model from the free-parameter vector, the fixed factor `A`
/// and the martingale drift.
pub fn q_from_vector(x: &[f64], family: Family, chol: &DMatrix<f64>, mkt: &MarketData) -> Result<ModelParams> {
    let n = chol.nrows();
    if x.len() != 3 + 2 * n {
        return Err(invalid("parameter vector has the wrong length"));
    }
    let sub = match family {
        Family::Mgh => SubordinatorLaw::Gig(GigParams::new(x[0], x[1], x[2])?),
        Family::Mnts => SubordinatorLaw::Cts(CtsParams::new(x[0], x[1], x[2])?),
        Family::Gaussian => return Err(Error::Unsupported("the Gaussian family has no clock".into())),
    };
    let theta = x[3..3 + n].to_vec();
    let sigma = x[3 + n..].to_vec();
    let mu = risk_neutral_drift(&theta, &sigma, &sub, &mkt.rates())?;
    ModelParams::new(mu, theta, sigma, chol.clone(), sub, Measure::Q)
}

/// Mean relative error between two smiles on the same nodes.
pub fn smile_arpe(model: &[f64], market: &[f64]) -> Result<f64> {
    if model.len() != market.len() || market.is_empty() {
        return Err(invalid("smiles must share a non-empty node set"));
    }
    Ok(model.iter().zip(market).map(|(m, x)| (m - x).abs() / x).sum::<f64>() / market.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub value: f64,
    pub arpe: Vec<f64>,
    pub ks: Vec<KsResult>,
    pub p_h: ModelParams,
    /// Largest residual of the inverse Esscher solve.
    pub inverse_residual: f64,
}

/// Evaluates `Σ_j ARPE_j(q) + ξ₁ Σ_j KS_j(P_h)` where `P_h` is the inverse
/// Esscher image of `q` anchored at the sample mean of `returns`.
pub fn evaluate_objective(
    q: &ModelParams,
    mkt: &MarketData,
    returns: &DMatrix<f64>,
    xi1: f64,
    pricing: &PricingConfig,
) -> Result<ObjectiveBreakdown> {
    let n = q.dim();
    if mkt.dim() != n || returns.ncols() != n {
        return Err(invalid("model, market and returns differ in dimension"));
    }
    if !(xi1 >= 0.0) {
        return Err(invalid("KS weight must be nonnegative"));
    }
    let mean: Vec<f64> = (0..n).map(|j| returns.column(j).mean()).collect();
    let inv = esscher_inverse(q, &mkt.rates(), &mean)?;
    let p_h = inv.params;
    let per_asset: Vec<Result<(f64, KsResult)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .map(|j| {
                let p_h = &p_h;
                s.spawn(move || -> Result<(f64, KsResult)> {
                    let quotes = &mkt.assets[j].quotes;
                    let a = if quotes.is_empty() {
                        0.0
                    } else {
                        let iv = model_smile(q, mkt, j, pricing)?;
                        let mk: Vec<f64> = quotes.iter().map(|x| x.implied_vol).collect();
                        smile_arpe(&iv, &mk)?
                    };
                    let col: Vec<f64> = returns.column(j).iter().cloned().collect();
                    let k = ks_distance(&col, &p_h.marginal(j))?;
                    Ok((a, k))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::Domain("objective worker panicked".into())))).collect()
    });
    let mut arpe = Vec::with_capacity(n);
    let mut ks = Vec::with_capacity(n);
    for r in per_asset {
        let (a, k) = r?;
        arpe.push(a);
        ks.push(k);
    }
    let value = arpe.iter().sum::<f64>() + xi1 * ks.iter().map(|k| k.statistic).sum::<f64>();
    if !value.is_finite() {
        return Err(Error::Domain("objective is not finite".into()));
    }
    Ok(ObjectiveBreakdown { value, arpe, ks, p_h, inverse_residual: inv.report.residual_norm })
}

/// Objective value with failures mapped to `penalty`.
pub fn double_objective(q: &ModelParams, mkt: &MarketData, returns: &DMatrix<f64>, xi1: f64, pricing: &PricingConfig, penalty: f64) -> f64 {
    evaluate_objective(q, mkt, returns, xi1, pricing).map(|b| b.value).unwrap_or(penalty)
}
