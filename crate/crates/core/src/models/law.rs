//! One-dimensional return laws.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::bessel::ln_bessel_k;
use crate::subordinators::SubordinatorLaw;

/// A one-dimensional law known through its characteristic function.
pub trait ReturnLaw {
    /// `E[e^{iuX}]`, analytically continued to complex `u` where it exists.
    fn cf(&self, u: Complex64) -> Result<Complex64>;
    /// First four cumulants.
    fn cumulants(&self) -> Result<[f64; 4]>;
}

/// `X = μt + θS_t + σ W_{S_t}` over a horizon `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureLaw {
    pub mu: f64,
    pub theta: f64,
    pub sigma: f64,
    pub sub: SubordinatorLaw,
    pub horizon: f64,
}

impl MixtureLaw {
    pub fn new(mu: f64, theta: f64, sigma: f64, sub: SubordinatorLaw, horizon: f64) -> Self {
        MixtureLaw { mu, theta, sigma, sub, horizon }
    }

    pub fn at_horizon(self, horizon: f64) -> Self {
        MixtureLaw { horizon, ..self }
    }

    /// Shift the location by `c`.
    pub fn shifted(self, c: f64) -> Self {
        MixtureLaw { mu: self.mu + c / self.horizon, ..self }
    }

    /// `ln E[e^{vX}]` for real `v`.
    pub fn log_mgf(&self, v: f64) -> Result<f64> {
        let arg = v * self.theta + 0.5 * self.sigma * self.sigma * v * v;
        Ok(self.horizon * (v * self.mu + self.sub.laplace_exponent(arg)?))
    }

    /// Closed-form density, available for a GIG clock at unit horizon with
    /// `χ, ψ > 0`.
    pub fn ln_density(&self, x: f64) -> Result<f64> {
        let SubordinatorLaw::Gig(g) = self.sub else {
            return Err(Error::Unsupported("closed-form density needs a GIG clock".into()));
        };
        if self.horizon != 1.0 || g.chi <= 0.0 || g.psi <= 0.0 {
            return Err(Error::Unsupported("closed-form density needs unit horizon and chi, psi > 0".into()));
        }
        gh_ln_density_1d(x, self.mu, self.theta, self.sigma, g.epsilon, g.chi, g.psi)
    }
}

/// Univariate generalized hyperbolic log-density with location `μ`, skew
/// `γ` and scale `σ` over a GIG(ε, χ, ψ) clock.
pub fn gh_ln_density_1d(x: f64, mu: f64, gamma: f64, sigma: f64, eps: f64, chi: f64, psi: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let q = (x - mu).powi(2) / s2;
    let b = psi + gamma * gamma / s2;
    let arg = ((chi + q) * b).sqrt();
    let ln_c = -eps * (chi * psi).sqrt().ln() + eps * psi.ln() + (0.5 - eps) * b.ln()
        - 0.5 * (2.0 * std::f64::consts::PI).ln()
        - sigma.ln()
        - ln_bessel_k(eps, (chi * psi).sqrt())?;
    Ok(ln_c + ln_bessel_k(eps - 0.5, arg)? + (x - mu) * gamma / s2 - (0.5 - eps) * arg.ln())
}

impl ReturnLaw for MixtureLaw {
    fn cf(&self, u: Complex64) -> Result<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let g = i * u * self.theta - 0.5 * self.sigma * self.sigma * u * u;
        let l = self.sub.laplace_exponent_complex(g)?;
        Ok((self.horizon * (i * u * self.mu + l)).exp())
    }

    fn cumulants(&self) -> Result<[f64; 4]> {
        let c = self.sub.cumulants()?;
        let (th, s2, t) = (self.theta, self.sigma * self.sigma, self.horizon);
        Ok([
            t * (self.mu + c[0] * th),
            t * (c[0] * s2 + c[1] * th * th),
            t * (3.0 * c[1] * th * s2 + c[2] * th.powi(3)),
            t * (3.0 * c[1] * s2 * s2 + 6.0 * c[2] * th * th * s2 + c[3] * th.powi(4)),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianLaw {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
            return Err(invalid(format!("Gaussian law needs finite mean and sd > 0, got {mean}, {sd}")));
        }
        Ok(GaussianLaw { mean, sd })
    }
}

impl ReturnLaw for GaussianLaw {
    fn cf(&self, u: Complex64) -> Result<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        Ok((i * u * self.mean - 0.5 * self.sd * self.sd * u * u).exp())
    }

    fn cumulants(&self) -> Result<[f64; 4]> {
        Ok([self.mean, self.sd * self.sd, 0.0, 0.0])
    }
}
