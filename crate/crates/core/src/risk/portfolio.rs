use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::measures::{tail_risk_with, TailMethod, TailRisk};
use crate::error::{invalid, Result};
use crate::models::{FittedModel, GaussianLaw, MixtureLaw, ReturnLaw};
use crate::numerics::{minimize_capped_simplex, CappedSimplex, SpgOptions};

/// Tail probability `δ` in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TailLevel(f64);

impl TailLevel {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta < 1.0 {
            Ok(TailLevel(delta))
        } else {
            Err(invalid(format!("tail level {delta} must lie in (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for TailLevel {
    fn default() -> Self {
        TailLevel(0.05)
    }
}

impl TryFrom<f64> for TailLevel {
    type Error = crate::error::Error;
    fn try_from(v: f64) -> Result<Self> {
        TailLevel::new(v)
    }
}

impl From<TailLevel> for f64 {
    fn from(t: TailLevel) -> f64 {
        t.0
    }
}

/// Fully invested long-only weights inside `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    pub w: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

const BUDGET_TOL: f64 = 1e-9;

impl PortfolioWeights {
    pub fn new(w: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !x.is_finite()) {
            return Err(invalid("weights must be nonempty and finite"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > BUDGET_TOL {
            return Err(invalid("weights must sum to one"));
        }
        if w.iter().any(|&x| x < lower - 1e-12 || x > upper + 1e-12) {
            return Err(invalid(format!("weights must lie in [{lower}, {upper}]")));
        }
        Ok(PortfolioWeights { w, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// `1/n` in every asset, with bounds `[0, 1]`.
pub fn equal_weights(n: usize) -> Result<PortfolioWeights> {
    if n == 0 {
        return Err(invalid("need at least one asset"));
    }
    PortfolioWeights::new(vec![1.0 / n as f64; n], 0.0, 1.0)
}

/// Inverse Herfindahl index `1 / Σ w²`.
pub fn concentration(w: &[f64]) -> f64 {
    1.0 / w.iter().map(|x| x * x).sum::<f64>()
}

/// Univariate law of `w'Y` over `horizon` steps.
#[derive(Clone, Debug, PartialEq)]
pub enum PortfolioLaw {
    Gaussian(GaussianLaw),
    Mixture(MixtureLaw),
}

impl ReturnLaw for PortfolioLaw {
    fn cf(&self, u: Complex64) -> Result<Complex64> {
        match self {
            PortfolioLaw::Gaussian(g) => g.cf(u),
            PortfolioLaw::Mixture(m) => m.cf(u),
        }
    }

    fn cumulants(&self) -> Result<[f64; 4]> {
        match self {
            PortfolioLaw::Gaussian(g) => g.cumulants(),
            PortfolioLaw::Mixture(m) => m.cumulants(),
        }
    }
}

pub fn portfolio_law(w: &[f64], model: &FittedModel, horizon: f64) -> Result<PortfolioLaw> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon must be positive"));
    }
    match model {
        FittedModel::Gaussian(g) => {
            let l = g.portfolio(w)?;
            Ok(PortfolioLaw::Gaussian(GaussianLaw::new(l.mean * horizon, l.sd * horizon.sqrt())?))
        }
        FittedModel::Mixture(p) => Ok(PortfolioLaw::Mixture(p.portfolio(w)?.at_horizon(horizon))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaResult {
    pub weights: PortfolioWeights,
    pub risk: TailRisk,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// AVaR of `w'Y` and its gradient in `w`. For mixtures the portfolio law
/// depends on `w` only through `(w'μ, w'θ, √(w'Σw))`; the location enters
/// AVaR with slope `-t`, the other two are differenced numerically.
fn avar_and_grad(model: &FittedModel, w: &[f64], delta: TailLevel, horizon: f64, method: TailMethod) -> Result<(f64, Vec<f64>)> {
    let law = portfolio_law(w, model, horizon)?;
    let base = tail_risk_with(&law, delta, method)?.avar;
    match (model, law) {
        (FittedModel::Gaussian(g), PortfolioLaw::Gaussian(l)) => {
            // AVaR = -t w'm + √t sd · φ(z)/δ.
            let k = if l.sd > 0.0 { (base + l.mean) / l.sd } else { 0.0 };
            let sw = &g.cov * DVector::from_column_slice(w);
            let sd1 = l.sd / horizon.sqrt();
            let grad = (0..w.len())
                .map(|i| -horizon * g.mean[i] + if sd1 > 0.0 { k * horizon.sqrt() * sw[i] / sd1 } else { 0.0 })
                .collect();
            Ok((base, grad))
        }
        (FittedModel::Mixture(p), PortfolioLaw::Mixture(l)) => {
            let eval = |theta: f64, sigma: f64| -> Result<f64> {
                let m = MixtureLaw { theta, sigma, ..l };
                tail_risk_with(&PortfolioLaw::Mixture(m), delta, method).map(|r| r.avar)
            };
            let ht = 1e-5 * (l.theta.abs() + l.sigma).max(1e-12);
            let hs = 1e-5 * l.sigma.max(1e-12);
            let g_theta = (eval(l.theta + ht, l.sigma)? - eval(l.theta - ht, l.sigma)?) / (2.0 * ht);
            let g_sigma = if l.sigma > hs {
                (eval(l.theta, l.sigma + hs)? - eval(l.theta, l.sigma - hs)?) / (2.0 * hs)
            } else {
                (eval(l.theta, l.sigma + hs)? - base) / hs
            };
            let sw = p.sigma_mul(w);
            let grad = (0..w.len())
                .map(|i| -horizon * p.mu()[i] + g_theta * p.theta()[i] + if l.sigma > 0.0 { g_sigma * sw[i] / l.sigma } else { 0.0 })
                .collect();
            Ok((base, grad))
        }
        _ => unreachable!("portfolio_law preserves the model kind"),
    }
}

/// Minimum-AVaR weights in `[lower, upper]` with full investment, started
/// from equal weights.
pub fn optimize_ma(
    model: &FittedModel,
    delta: TailLevel,
    lower: f64,
    upper: f64,
    horizon: f64,
    method: TailMethod,
) -> Result<MaResult> {
    let n = model.dim();
    let set = CappedSimplex::uniform(n, lower, upper)?;
    let x0 = set.project(&vec![1.0 / n as f64; n]);
    let opts = SpgOptions { tol: 1e-9, max_iter: 500, memory: 10 };
    let rep = minimize_capped_simplex(
        |w| tail_risk_with(&portfolio_law(w, model, horizon)?, delta, method).map(|r| r.avar),
        |w| avar_and_grad(model, w, delta, horizon, method).map(|x| x.1),
        &x0,
        &set,
        opts,
    )?;
    let w = set.project(&rep.weights);
    let risk = tail_risk_with(&portfolio_law(&w, model, horizon)?, delta, method)?;
    Ok(MaResult {
        weights: PortfolioWeights::new(w, lower, upper)?,
        risk,
        kkt_residual: rep.kkt_residual,
        iterations: rep.iterations,
        converged: rep.kkt_residual <= 1e-6,
    })
}

/// Minimum-variance weights in `[lower, upper]` with full investment.
pub fn optimize_mv(cov: &DMatrix<f64>, lower: f64, upper: f64) -> Result<PortfolioWeights> {
    let n = cov.nrows();
    if cov.ncols() != n || n == 0 || cov.iter().any(|x| !x.is_finite()) {
        return Err(invalid("covariance must be square, nonempty and finite"));
    }
    let set = CappedSimplex::uniform(n, lower, upper)?;
    let x0 = set.project(&vec![1.0 / n as f64; n]);
    // Scale so the step-size heuristics see unit-order curvature.
    let scale = cov.diagonal().iter().cloned().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let c = cov / scale;
    let rep = minimize_capped_simplex(
        |w| {
            let v = DVector::from_column_slice(w);
            Ok((v.transpose() * &c * &v)[(0, 0)])
        },
        |w| Ok((&c * DVector::from_column_slice(w) * 2.0).iter().cloned().collect()),
        &x0,
        &set,
        SpgOptions { tol: 1e-12, max_iter: 5_000, memory: 10 },
    )?;
    PortfolioWeights::new(set.project(&rep.weights), lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GaussianParams, Measure, ModelParams};
    use crate::numerics::{norm_pdf, norm_quantile};
    use crate::risk::tail_risk;
    use crate::subordinators::{CtsParams, GigParams, SubordinatorLaw};

    #[test]
    fn standard_normal_tail() {
        let law = PortfolioLaw::Gaussian(GaussianLaw::new(0.0, 1.0).unwrap());
        let r = tail_risk(&law, TailLevel::default()).unwrap();
        assert!((r.var - 1.6448536269514722).abs() < 1e-12);
        assert!((r.avar - norm_pdf(norm_quantile(0.05)) / 0.05).abs() < 1e-12);
        assert!((r.avar - 2.0627128075074257).abs() < 1e-10);
    }

    #[test]
    fn cos_and_density_agree_for_gh() {
        let l = MixtureLaw::new(0.001, -0.003, 0.012, SubordinatorLaw::Gig(GigParams::with_unit_mean(-1.2, 0.7).unwrap()), 1.0);
        let law = PortfolioLaw::Mixture(l);
        let a = tail_risk_with(&law, TailLevel::default(), TailMethod::Cos).unwrap();
        let b = tail_risk_with(&law, TailLevel::default(), TailMethod::Density).unwrap();
        assert!((a.var - b.var).abs() < 1e-9 * b.var.abs(), "{a:?} {b:?}");
        assert!((a.avar - b.avar).abs() < 1e-9 * b.avar.abs(), "{a:?} {b:?}");
        assert!(b.avar >= b.var);
    }

    #[test]
    fn cash_invariance_and_homogeneity() {
        let l = MixtureLaw::new(0.0, -0.002, 0.01, SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.7, 0.6).unwrap()), 1.0);
        let d = TailLevel::default();
        let base = tail_risk(&PortfolioLaw::Mixture(l), d).unwrap();
        let shifted = tail_risk(&PortfolioLaw::Mixture(MixtureLaw { mu: 0.01, ..l }), d).unwrap();
        assert!((shifted.avar - (base.avar - 0.01)).abs() < 1e-10);
        let scaled = tail_risk(&PortfolioLaw::Mixture(MixtureLaw { theta: 2.0 * l.theta, sigma: 2.0 * l.sigma, ..l }), d).unwrap();
        assert!((scaled.avar - 2.0 * base.avar).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_differences() {
        let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0]);
        let p = ModelParams::from_correlation(
            vec![0.0005, 0.0002, 0.0001],
            vec![-0.002, -0.001, -0.003],
            vec![0.01, 0.015, 0.012],
            &corr,
            SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.8, 0.5).unwrap()),
            Measure::P,
        )
        .unwrap();
        let m = FittedModel::Mixture(p);
        let w = [0.2, 0.5, 0.3];
        let (_, g) = avar_and_grad(&m, &w, TailLevel::default(), 1.0, TailMethod::Cos).unwrap();
        let f = |x: &[f64]| tail_risk_with(&portfolio_law(x, &m, 1.0).unwrap(), TailLevel::default(), TailMethod::Cos).unwrap().avar;
        let err = crate::numerics::check_gradient(f, &g, &w, 1e-5);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn symmetric_margins_give_equal_weights() {
        let p = ModelParams::from_correlation(
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.01; 4],
            &DMatrix::identity(4, 4),
            SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.7, 1.0).unwrap()),
            Measure::P,
        )
        .unwrap();
        let r = optimize_ma(&FittedModel::Mixture(p), TailLevel::default(), 0.0, 0.5, 1.0, TailMethod::Auto).unwrap();
        for w in &r.weights.w {
            assert!((w - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn dominated_asset_dropped() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.9 * 2.0, 0.9 * 2.0, 4.0]);
        let g = GaussianParams::new(vec![0.0, 0.0], cov * 1e-4).unwrap();
        let r = optimize_ma(&FittedModel::Gaussian(g), TailLevel::default(), 0.0, 1.0, 1.0, TailMethod::Auto).unwrap();
        assert!((r.weights.w[0] - 1.0).abs() < 1e-8, "{:?}", r.weights.w);
    }

    #[test]
    fn mv_cases() {
        let w = optimize_mv(&DMatrix::identity(5, 5), 0.0, 1.0).unwrap();
        assert!(w.w.iter().all(|x| (x - 0.2).abs() < 1e-12));
        let mut d = DMatrix::identity(12, 12);
        d[(3, 3)] = 1e-4;
        let w = optimize_mv(&d, 0.0, 0.1).unwrap();
        assert!((w.w[3] - 0.1).abs() < 1e-12);
        let ew = equal_weights(50).unwrap();
        assert!(ew.w.iter().all(|&x| x == 0.02));
        assert!((concentration(&ew.w) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_bounds_rejected() {
        assert!(optimize_mv(&DMatrix::identity(5, 5), 0.0, 0.1).is_err());
    }
}
