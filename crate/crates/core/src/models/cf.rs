//! Joint and marginal characteristic functions.

use num_complex::Complex64;

use super::law::ReturnLaw;
use super::params::ModelParams;
use crate::error::{invalid, Result};

/// `E[exp(i u'Y_t)] = exp(t (i u'μ + l(i u'θ - ½ u'Σu)))`.
pub fn joint_cf(p: &ModelParams, u: &[f64], t: f64) -> Result<Complex64> {
    let uc: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    joint_cf_complex(p, &uc, t)
}

/// Joint characteristic function at a complex argument.
pub fn joint_cf_complex(p: &ModelParams, u: &[Complex64], t: f64) -> Result<Complex64> {
    let n = p.dim();
    if u.len() != n {
        return Err(invalid(format!("argument has length {}, model has {n} assets", u.len())));
    }
    let i = Complex64::new(0.0, 1.0);
    // u'Σu = Σ_k (Aᵀ D u)_k², without conjugation.
    let du: Vec<Complex64> = u.iter().zip(p.sigma()).map(|(a, s)| a * s).collect();
    let chol = p.chol();
    let mut quad = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mut v = Complex64::new(0.0, 0.0);
        for (r, d) in du.iter().enumerate().skip(k) {
            v += chol[(r, k)] * d;
        }
        quad += v * v;
    }
    let u_mu: Complex64 = u.iter().zip(p.mu()).map(|(a, b)| a * b).sum();
    let u_th: Complex64 = u.iter().zip(p.theta()).map(|(a, b)| a * b).sum();
    let l = p.sub().laplace_exponent_complex(i * u_th - 0.5 * quad)?;
    Ok((t * (i * u_mu + l)).exp())
}

/// Characteristic function of asset `j` over horizon `t`.
pub fn marginal_cf(p: &ModelParams, j: usize, u: Complex64, t: f64) -> Result<Complex64> {
    if j >= p.dim() {
        return Err(invalid(format!("asset index {j} out of range")));
    }
    p.marginal(j).at_horizon(t).cf(u)
}
