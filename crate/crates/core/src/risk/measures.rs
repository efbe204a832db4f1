use serde::{Deserialize, Serialize};

use super::portfolio::{PortfolioLaw, TailLevel};
use crate::error::{Error, Result};
use crate::models::{MixtureLaw, ReturnLaw};
use crate::numerics::{brent, cumulant_range, norm_pdf, norm_quantile, CosExpansion, Quadrature};
use crate::subordinators::SubordinatorLaw;

/// Loss quantile and tail mean of a return law, both as positive losses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRisk {
    pub var: f64,
    pub avar: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMethod {
    /// Closed-form density for GH laws at unit horizon, cosine series
    /// otherwise.
    #[default]
    Auto,
    Cos,
    Density,
}

const COS_RANGE: f64 = 30.0;
const COS_TOL: f64 = 1e-13;
const COS_TERMS: usize = 1 << 15;

pub fn var(law: &PortfolioLaw, delta: TailLevel) -> Result<f64> {
    Ok(tail_risk(law, delta)?.var)
}

pub fn avar(law: &PortfolioLaw, delta: TailLevel) -> Result<f64> {
    Ok(tail_risk(law, delta)?.avar)
}

pub fn tail_risk(law: &PortfolioLaw, delta: TailLevel) -> Result<TailRisk> {
    tail_risk_with(law, delta, TailMethod::Auto)
}

pub fn tail_risk_with(law: &PortfolioLaw, delta: TailLevel, method: TailMethod) -> Result<TailRisk> {
    let d = delta.value();
    match law {
        PortfolioLaw::Gaussian(g) => {
            let z = norm_quantile(d);
            Ok(TailRisk { var: -(g.mean + g.sd * z), avar: -g.mean + g.sd * norm_pdf(z) / d })
        }
        PortfolioLaw::Mixture(m) => {
            let closed = matches!(m.sub, SubordinatorLaw::Gig(g) if g.chi > 0.0 && g.psi > 0.0) && m.horizon == 1.0;
            match method {
                TailMethod::Density => density_tail(m, d),
                TailMethod::Auto if closed => density_tail(m, d),
                _ => cos_tail(m, d),
            }
        }
    }
}

fn cos_tail(m: &MixtureLaw, d: f64) -> Result<TailRisk> {
    if m.sigma == 0.0 && m.theta == 0.0 {
        let x = m.mu * m.horizon;
        return Ok(TailRisk { var: -x, avar: -x });
    }
    let c = m.cumulants()?;
    let (a, b) = cumulant_range(c, COS_RANGE);
    let e = CosExpansion::build(|u| m.cf(u.into()), a, b, COS_TOL, COS_TERMS)?;
    let tol = 1e-14 * (b - a);
    let x = brent(|x| e.cdf(x) - d, a, c[0], tol)?;
    let pe = e.partial_expectation(x);
    let r = TailRisk { var: -x, avar: -pe / d };
    check(r)
}

fn density_tail(m: &MixtureLaw, d: f64) -> Result<TailRisk> {
    let c = m.cumulants()?;
    let sd = c[1].sqrt();
    let quad = Quadrature::adaptive(1e-15, 1e-12);
    let f = |y: f64| m.ln_density(y).map(f64::exp).unwrap_or(f64::NAN);
    // Left-tail integrals ∫_{-∞}^x g(y) f(y) dy as ∫_0^∞ g(x - s) f(x - s) ds.
    let cdf = |x: f64| -> f64 { quad.integrate(|s| f(x - s), 0.0, f64::INFINITY).map(|r| r.value).unwrap_or(f64::NAN) };
    // Bracket the quantile below the mean.
    let mut lo = c[0] - 4.0 * sd;
    let mut guard = 0;
    while cdf(lo) > d {
        lo -= 4.0 * sd;
        guard += 1;
        if guard > 60 {
            return Err(Error::Domain("could not bracket the loss quantile".into()));
        }
    }
    let x = brent(|x| cdf(x) - d, lo, c[0] + 0.5 * sd, 1e-14 * sd)?;
    let pe = quad.integrate(|s| (x - s) * f(x - s), 0.0, f64::INFINITY)?.value;
    check(TailRisk { var: -x, avar: -pe / d })
}

fn check(r: TailRisk) -> Result<TailRisk> {
    if r.var.is_finite() && r.avar.is_finite() {
        Ok(r)
    } else {
        Err(Error::Domain("tail risk evaluation produced a non-finite value".into()))
    }
}
