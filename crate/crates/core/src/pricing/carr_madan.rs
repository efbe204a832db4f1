//! Damped Fourier transform of the option price in log-strike.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::models::ReturnLaw;
use crate::numerics::{gauss_legendre, Quadrature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// Pricing tolerances and damping.
#[derive(Clone, Copy, Debug)]
pub struct PricingConfig {
    /// Damping for calls; halved while the cf is outside its strip.
    pub alpha: f64,
    /// Truncate the integral once `|ψ(v)|` drops below this fraction of `|ψ(0)|`.
    pub cf_cutoff: f64,
    pub quad: Quadrature,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig { alpha: 0.75, cf_cutoff: 1e-14, quad: Quadrature::adaptive(1e-15, 1e-12) }
    }
}

/// Normalized option price problem: spot 1, strike `m`, discount factor
/// `disc`, `law` the log-return over the option's life.
struct Damped<'a, L: ReturnLaw> {
    law: &'a L,
    alpha: f64,
    disc: f64,
}

impl<L: ReturnLaw> Damped<'_, L> {
    fn psi(&self, v: f64) -> Result<Complex64> {
        let a = self.alpha;
        let phi = self.law.cf(Complex64::new(v, -(a + 1.0)))?;
        Ok(self.disc * phi / Complex64::new(a * a + a - v * v, (2.0 * a + 1.0) * v))
    }

    fn truncation(&self, cutoff: f64) -> Result<f64> {
        let sd = self.law.cumulants()?[1].abs().sqrt().max(1e-6);
        let base = self.psi(0.0)?.norm();
        let mut v = 1.0 / sd;
        let mut quiet = 0;
        while v < 1e7 / sd {
            if self.psi(v)?.norm() < cutoff * base {
                quiet += 1;
                if quiet == 3 {
                    return Ok(v);
                }
            } else {
                quiet = 0;
            }
            v *= 1.25;
        }
        Ok(v)
    }
}

fn with_damping<T>(alpha0: f64, mut attempt: impl FnMut(f64) -> Result<T>) -> Result<T> {
    let mut alpha = alpha0;
    loop {
        match attempt(alpha) {
            Err(Error::StripViolation(msg)) => {
                if alpha.abs() < 1e-3 || (alpha0 < 0.0 && alpha > -1.0 - 1e-3) {
                    return Err(Error::StripViolation(msg));
                }
                alpha = if alpha0 > 0.0 { 0.5 * alpha } else { -1.0 + 0.5 * (alpha + 1.0) };
            }
            other => return other,
        }
    }
}

/// Price on unit spot by direct integration. `alpha > 0` yields the call,
/// `alpha < -1` the put.
pub fn carr_madan_normalized<L: ReturnLaw>(law: &L, moneyness: f64, disc: f64, alpha: f64, cfg: &PricingConfig) -> Result<f64> {
    if !(moneyness > 0.0) || !(disc > 0.0) {
        return Err(invalid(format!("moneyness and discount factor must be positive ({moneyness}, {disc})")));
    }
    if !!(-1.0..=0.0).contains(&alpha) {
        return Err(invalid(format!("damping must be > 0 or < -1, got {alpha}")));
    }
    let k = moneyness.ln();
    with_damping(alpha, |a| {
        let d = Damped { law, alpha: a, disc };
        let upper = d.truncation(cfg.cf_cutoff)?;
        let mut failure = None;
        let integrand = |v: f64| match d.psi(v) {
            Ok(p) => (Complex64::new(0.0, -v * k).exp() * p).re,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let r = cfg.quad.integrate(integrand, 0.0, upper)?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((-a * k).exp() / PI * r.value)
    })
}

/// Vanilla price. `law` is the log-return over the option's life, `r` and
/// `d` are continuously compounded per year and `maturity` is in years.
#[allow(clippy::too_many_arguments)]
pub fn price_vanilla<L: ReturnLaw>(
    law: &L,
    spot: f64,
    strike: f64,
    maturity: f64,
    r: f64,
    d: f64,
    kind: OptionKind,
    cfg: &PricingConfig,
) -> Result<f64> {
    if !(spot > 0.0) || !(strike > 0.0) || !(maturity > 0.0) {
        return Err(invalid("spot, strike and maturity must be positive"));
    }
    let disc = (-r * maturity).exp();
    let call = spot * carr_madan_normalized(law, strike / spot, disc, cfg.alpha, cfg)?;
    Ok(match kind {
        OptionKind::Call => call,
        OptionKind::Put => call - spot * (-d * maturity).exp() + strike * disc,
    })
}

/// Call prices on unit spot for many strikes sharing one set of
/// Gauss–Legendre nodes.
pub fn call_strip_normalized<L: ReturnLaw>(law: &L, moneyness: &[f64], disc: f64, cfg: &PricingConfig) -> Result<Vec<f64>> {
    const NODES: usize = 16;
    const PANELS: usize = 96;
    let (x, w) = gauss_legendre(NODES);
    with_damping(cfg.alpha, |a| {
        let d = Damped { law, alpha: a, disc };
        let upper = d.truncation(cfg.cf_cutoff)?;
        // Nodes are graded toward the origin where the integrand varies most.
        let mut vs = Vec::with_capacity(NODES * PANELS);
        let mut ws = Vec::with_capacity(NODES * PANELS);
        for p in 0..PANELS {
            let lo = upper * (p as f64 / PANELS as f64).powi(2);
            let hi = upper * ((p + 1) as f64 / PANELS as f64).powi(2);
            for (xi, wi) in x.iter().zip(&w) {
                vs.push(0.5 * (lo + hi) + 0.5 * (hi - lo) * xi);
                ws.push(0.5 * (hi - lo) * wi);
            }
        }
        let psi: Vec<Complex64> = vs.iter().map(|&v| d.psi(v)).collect::<Result<_>>()?;
        Ok(moneyness
            .iter()
            .map(|&m| {
                let k = m.ln();
                let s: f64 = vs
                    .iter()
                    .zip(&ws)
                    .zip(&psi)
                    .map(|((v, wt), p)| wt * (Complex64::new(0.0, -v * k).exp() * p).re)
                    .sum();
                (-a * k).exp() / PI * s
            })
            .collect())
    })
}

/// FFT grid of call prices on unit spot, interpolated to `moneyness` with
/// cubic Lagrange polynomials in log-strike.
pub fn call_fft_normalized<L: ReturnLaw>(law: &L, moneyness: &[f64], disc: f64, n: usize, eta: f64, cfg: &PricingConfig) -> Result<Vec<f64>> {
    if !n.is_power_of_two() || n < 16 || !(eta > 0.0) {
        return Err(invalid("FFT size must be a power of two >= 16 and the spacing positive"));
    }
    with_damping(cfg.alpha, |a| {
        let d = Damped { law, alpha: a, disc };
        let upper = d.truncation(cfg.cf_cutoff)?;
        let lambda = 2.0 * PI / (n as f64 * eta);
        let b = 0.5 * n as f64 * lambda;
        let mut buf: Vec<Complex64> = Vec::with_capacity(n);
        for j in 0..n {
            let v = j as f64 * eta;
            let simpson = (3.0 + if j % 2 == 0 { -1.0 } else { 1.0 } - if j == 0 { 1.0 } else { 0.0 }) / 3.0;
            let x = if v > upper {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, b * v).exp() * d.psi(v)? * eta * simpson
            };
            buf.push(x);
        }
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let grid: Vec<f64> = (0..n)
            .map(|u| {
                let k = -b + lambda * u as f64;
                (-a * k).exp() / PI * buf[u].re
            })
            .collect();
        moneyness
            .iter()
            .map(|&m| {
                let k = m.ln();
                let pos = (k + b) / lambda;
                let i = pos.floor() as isize - 1;
                if i < 0 || i as usize + 3 >= n {
                    return Err(Error::Domain(format!("moneyness {m} outside the FFT grid")));
                }
                let i = i as usize;
                let t = pos - i as f64;
                // Lagrange weights on nodes 0..3 evaluated at t in [1, 2).
                let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
                let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
                let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
                let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
                Ok(l0 * grid[i] + l1 * grid[i + 1] + l2 * grid[i + 2] + l3 * grid[i + 3])
            })
            .collect()
    })
}
