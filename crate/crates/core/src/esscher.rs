//! Esscher changes of measure between historical and risk-neutral laws.
//!
//! Tilting by `h` keeps the family: the clock is tilted by
//! `κ(h) = h'θ + ½h'Σh` and the skew becomes `θ + Σh`; `μ`, `σ` and the
//! correlation factor are unchanged. The forward map picks `h` so that every
//! discounted price is a martingale. Going back, the martingale condition
//! alone does not pin `h` down, since every tilt of a risk-neutral law is a
//! valid historical law. The inverse therefore also matches the historical
//! mean of each asset.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{Measure, ModelParams};
use crate::numerics::{solve_system, RootSolveReport, SolverOptions};
use crate::subordinators::SubordinatorLaw;

/// Interest rate and dividend yields per model time unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub r: f64,
    pub d: Vec<f64>,
}

impl Rates {
    pub fn new(r: f64, d: Vec<f64>) -> Self {
        Rates { r, d }
    }

    /// Same rate for `n` assets with no dividends.
    pub fn flat(r: f64, n: usize) -> Self {
        Rates { r, d: vec![0.0; n] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsscherResult {
    pub h: Vec<f64>,
    pub params: ModelParams,
    pub report: RootSolveReport,
    /// Max-norm of the martingale residuals of the risk-neutral side.
    pub martingale_residual: f64,
}

const SOLVE_TOL: f64 = 1e-12;

/// The law of `Y` under `dQ/dP ∝ e^{h'Y}`. The measure label is unchanged.
pub fn esscher_tilt(p: &ModelParams, h: &[f64]) -> Result<ModelParams> {
    if h.len() != p.dim() {
        return Err(invalid("tilt vector length differs from the model dimension"));
    }
    let k = p.kappa(h);
    let sub = p.sub().tilt(k)?;
    let sh = p.sigma_mul(h);
    let theta: Vec<f64> = p.theta().iter().zip(&sh).map(|(a, b)| a + b).collect();
    p.with_parts(p.mu().to_vec(), theta, p.sigma().to_vec(), sub)
}

/// `ln E[e^{Y^j_1}] - (r - d_j)` for each asset.
pub fn martingale_residuals(p: &ModelParams, rates: &Rates) -> Result<Vec<f64>> {
    check_rates(p.dim(), rates)?;
    (0..p.dim())
        .map(|j| {
            let a = p.theta()[j] + 0.5 * p.sigma()[j].powi(2);
            Ok(p.mu()[j] + p.sub().laplace_exponent(a)? - (rates.r - rates.d[j]))
        })
        .collect()
}

/// Drift making every asset a discounted martingale for given skew, scale
/// and clock: `μ_j = r - d_j - l(θ_j + ½σ_j²)`.
pub fn risk_neutral_drift(theta: &[f64], sigma: &[f64], sub: &SubordinatorLaw, rates: &Rates) -> Result<Vec<f64>> {
    check_rates(theta.len(), rates)?;
    theta
        .iter()
        .zip(sigma)
        .zip(&rates.d)
        .map(|((t, s), d)| Ok(rates.r - d - sub.laplace_exponent(t + 0.5 * s * s)?))
        .collect()
}

fn check_rates(n: usize, rates: &Rates) -> Result<()> {
    if rates.d.len() != n {
        return Err(invalid(format!("{} dividend yields for {n} assets", rates.d.len())));
    }
    if !rates.r.is_finite() || rates.d.iter().any(|d| !d.is_finite()) {
        return Err(invalid("rates must be finite"));
    }
    Ok(())
}

/// Finds the tilt making `p` risk-neutral and returns the tilted law.
pub fn esscher_forward(p: &ModelParams, rates: &Rates) -> Result<EsscherResult> {
    let n = p.dim();
    check_rates(n, rates)?;
    let sub = *p.sub();
    let bound = sub.upper_bound();
    let f = |h: &[f64]| -> Option<Vec<f64>> {
        let k = p.kappa(h);
        if !(k < bound) {
            return None;
        }
        let lk = sub.laplace_exponent(k).ok()?;
        let sh = p.sigma_mul(h);
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let a = k + p.theta()[j] + 0.5 * p.sigma()[j].powi(2) + sh[j];
            if !(a < bound) {
                return None;
            }
            out.push(p.mu()[j] + sub.laplace_exponent(a).ok()? - lk - (rates.r - rates.d[j]));
        }
        Some(out)
    };
    let report = solve_system(f, &vec![0.0; n], SolverOptions { tol: SOLVE_TOL, ..Default::default() })?;
    if !report.converged {
        return Err(Error::NotConverged {
            what: "forward Esscher system".into(),
            residual: report.residual_norm,
            report: Box::new(report),
        });
    }
    let q = esscher_tilt(p, &report.solution)?.with_measure(Measure::Q);
    let martingale_residual = max_abs(&martingale_residuals(&q, rates)?);
    Ok(EsscherResult { h: report.solution.clone(), params: q, report, martingale_residual })
}

/// Recovers the historical law `P_h` from a risk-neutral law `q`: `h` is
/// chosen so that `E^{P_h}[Y^j_1] = anchor_mean[j]`, and `q` itself must
/// satisfy the martingale condition. `μ` is carried over unchanged.
pub fn esscher_inverse(q: &ModelParams, rates: &Rates, anchor_mean: &[f64]) -> Result<EsscherResult> {
    let n = q.dim();
    check_rates(n, rates)?;
    if anchor_mean.len() != n || anchor_mean.iter().any(|m| !m.is_finite()) {
        return Err(invalid("anchor mean must be finite with one entry per asset"));
    }
    let mart = martingale_residuals(q, rates)?;
    let sub = *q.sub();
    let bound = sub.upper_bound();
    let f = |h: &[f64]| -> Option<Vec<f64>> {
        let neg: Vec<f64> = h.iter().map(|x| -x).collect();
        let k = q.kappa(&neg);
        if !(k < bound) {
            return None;
        }
        let c1 = sub.tilt(k).ok()?.mean().ok()?;
        let sh = q.sigma_mul(h);
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            out.push(q.mu()[j] + c1 * (q.theta()[j] - sh[j]) - anchor_mean[j]);
        }
        out.extend_from_slice(&mart);
        Some(out)
    };
    let report = solve_system(f, &vec![0.0; n], SolverOptions { tol: SOLVE_TOL, ..Default::default() })?;
    if !report.converged {
        return Err(Error::NotConverged {
            what: "inverse Esscher system".into(),
            residual: report.residual_norm,
            report: Box::new(report),
        });
    }
    let neg: Vec<f64> = report.solution.iter().map(|x| -x).collect();
    let p = esscher_tilt(q, &neg)?.with_measure(Measure::P);
    Ok(EsscherResult { h: report.solution.clone(), params: p, report, martingale_residual: max_abs(&mart) })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{joint_cf, moments};
    use crate::subordinators::{CtsParams, GigParams};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn p_params(sub: SubordinatorLaw) -> ModelParams {
        let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.0]);
        ModelParams::from_correlation(
            vec![0.0005, 0.0008, -0.0002],
            vec![-0.004, -0.002, 0.001],
            vec![0.012, 0.018, 0.01],
            &corr,
            sub,
            Measure::P,
        )
        .unwrap()
    }

    #[test]
    fn forward_satisfies_martingale_condition() {
        for sub in [
            SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.8, 0.3).unwrap()),
            SubordinatorLaw::Gig(GigParams::with_unit_mean(-1.5, 0.5).unwrap()),
        ] {
            let p = p_params(sub);
            let rates = Rates::new(0.0001, vec![0.0, 0.00002, 0.0]);
            let out = esscher_forward(&p, &rates).unwrap();
            assert!(out.martingale_residual <= 1e-10, "{}", out.martingale_residual);
            assert_eq!(out.params.mu(), p.mu());
            assert_eq!(out.params.sigma(), p.sigma());
            assert_eq!(out.params.chol(), p.chol());
            assert_eq!(out.params.measure(), Measure::Q);
        }
    }

    #[test]
    fn tilt_matches_reweighted_cf() {
        // E^P[e^{(h+iu)'Y}] / E^P[e^{h'Y}] equals the tilted cf.
        let p = p_params(SubordinatorLaw::Gig(GigParams::new(-0.8, 0.9, 1.4).unwrap()));
        let h = [1.5, -2.0, 0.7];
        let q = esscher_tilt(&p, &h).unwrap();
        let u = [3.0, 1.0, -2.0];
        let num: Vec<Complex64> = h.iter().zip(&u).map(|(a, b)| Complex64::new(*b, -*a)).collect();
        let den: Vec<Complex64> = h.iter().map(|a| Complex64::new(0.0, -*a)).collect();
        let ratio = crate::models::joint_cf_complex(&p, &num, 2.0).unwrap()
            / crate::models::joint_cf_complex(&p, &den, 2.0).unwrap();
        let direct = joint_cf(&q, &u, 2.0).unwrap();
        assert!((ratio - direct).norm() < 1e-12);
    }

    #[test]
    fn group_property() {
        let p = p_params(SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.6, 0.8).unwrap()));
        let h = [2.0, -1.0, 3.0];
        let back = esscher_tilt(&esscher_tilt(&p, &h).unwrap(), &[-2.0, 1.0, -3.0]).unwrap();
        for (a, b) in back.theta().iter().zip(p.theta()) {
            assert!((a - b).abs() < 1e-15);
        }
        let (sa, sb) = (back.sub().to_vec(), p.sub().to_vec());
        for k in 0..3 {
            assert!((sa[k] - sb[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let p = p_params(SubordinatorLaw::Gig(GigParams::with_unit_mean(-2.0, 0.7).unwrap()));
        let rates = Rates::flat(0.00015, 3);
        let fwd = esscher_forward(&p, &rates).unwrap();
        let mean = moments(&p, 1.0).unwrap().mean;
        let inv = esscher_inverse(&fwd.params, &rates, &mean).unwrap();
        for (a, b) in inv.h.iter().zip(&fwd.h) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in inv.params.theta().iter().zip(p.theta()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(inv.params.mu(), p.mu());
    }

    #[test]
    fn inverse_rejects_non_martingale_input() {
        let p = p_params(SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.7, 0.5).unwrap()));
        let rates = Rates::flat(0.0001, 3);
        let mean = moments(&p, 1.0).unwrap().mean;
        assert!(matches!(esscher_inverse(&p, &rates, &mean), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn drift_helper_gives_martingale() {
        let p = p_params(SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.5, 0.4).unwrap()));
        let rates = Rates::new(0.0002, vec![0.0001, 0.0, 0.0]);
        let mu = risk_neutral_drift(p.theta(), p.sigma(), p.sub(), &rates).unwrap();
        let q = p.with_mu(mu).unwrap();
        assert!(max_abs(&martingale_residuals(&q, &rates).unwrap()) < 1e-15);
    }
}
