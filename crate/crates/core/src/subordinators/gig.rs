//! Generalized inverse Gaussian clock.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{invalid, Error, Result};
use crate::numerics::bessel::{d_ln_bessel_k_dnu, ln_bessel_k, ln_bessel_k_complex};
use crate::numerics::ln_gamma;

/// GIG law with density
/// `(ψ/χ)^{ε/2} x^{ε-1} exp(-(χ/x + ψx)/2) / (2 K_ε(√(χψ)))`.
/// `χ = 0` is the gamma law with shape `ε` and rate `ψ/2`; `ψ = 0` is the
/// inverse gamma law with shape `-ε` and scale `χ/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GigParams {
    pub epsilon: f64,
    pub chi: f64,
    pub psi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum GigCase {
    General,
    Gamma,
    InverseGamma,
}

impl GigParams {
    pub fn new(epsilon: f64, chi: f64, psi: f64) -> Result<Self> {
        let p = GigParams { epsilon, chi, psi };
        p.validate()?;
        Ok(p)
    }

    /// GIG with unit mean, parameterized by `ᾱ = √(χψ)`.
    pub fn with_unit_mean(epsilon: f64, alpha_bar: f64) -> Result<Self> {
        if !(alpha_bar > 0.0) || !alpha_bar.is_finite() {
            return Err(invalid(format!("alpha_bar must be positive, got {alpha_bar}")));
        }
        let k = (ln_bessel_k(epsilon + 1.0, alpha_bar)? - ln_bessel_k(epsilon, alpha_bar)?).exp();
        Self::new(epsilon, alpha_bar / k, alpha_bar * k)
    }

    pub fn validate(&self) -> Result<()> {
        let GigParams { epsilon, chi, psi } = *self;
        if !epsilon.is_finite() || !(chi >= 0.0) || !(psi >= 0.0) || !chi.is_finite() || !psi.is_finite() {
            return Err(invalid(format!("GIG parameters out of range: {self:?}")));
        }
        match (chi == 0.0, psi == 0.0) {
            (true, true) => Err(invalid("GIG chi and psi cannot both vanish")),
            (true, false) if epsilon <= 0.0 => Err(invalid("GIG with chi = 0 needs epsilon > 0")),
            (false, true) if epsilon >= 0.0 => Err(invalid("GIG with psi = 0 needs epsilon < 0")),
            _ => Ok(()),
        }
    }

    pub(crate) fn case(&self) -> GigCase {
        if self.chi == 0.0 {
            GigCase::Gamma
        } else if self.psi == 0.0 {
            GigCase::InverseGamma
        } else {
            GigCase::General
        }
    }

    /// Supremum of the real Laplace domain.
    pub fn upper_bound(&self) -> f64 {
        0.5 * self.psi
    }

    pub fn laplace_exponent(&self, u: f64) -> Result<f64> {
        let z = self.laplace_exponent_complex(Complex64::new(u, 0.0))?;
        Ok(z.re)
    }

    pub fn laplace_exponent_complex(&self, z: Complex64) -> Result<Complex64> {
        if z == Complex64::new(0.0, 0.0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let GigParams { epsilon, chi, psi } = *self;
        match self.case() {
            GigCase::Gamma => {
                if !(z.re < 0.5 * psi) {
                    return Err(Error::StripViolation(format!("GIG exponent needs Re z < psi/2, got {z}")));
                }
                Ok(-epsilon * (Complex64::new(1.0, 0.0) - 2.0 * z / psi).ln())
            }
            GigCase::InverseGamma => {
                // E e^{zW} = 2 (-bz)^{a/2} K_a(2√(-bz)) / Γ(a), a = -ε, b = χ/2.
                if z.re > 0.0 || (z.re == 0.0 && z.im == 0.0) {
                    return Err(Error::StripViolation(format!("inverse gamma exponent needs Re z <= 0, got {z}")));
                }
                let a = -epsilon;
                let mbz = -0.5 * chi * z;
                let w = 2.0 * mbz.sqrt();
                Ok(std::f64::consts::LN_2 + 0.5 * a * mbz.ln() + ln_bessel_k_complex(a, w)? - ln_gamma(a))
            }
            GigCase::General => {
                if !(z.re < 0.5 * psi) {
                    return Err(Error::StripViolation(format!("GIG exponent needs Re z < psi/2, got {z}")));
                }
                let ratio = Complex64::new(1.0, 0.0) - 2.0 * z / psi;
                let w = (chi * (psi - 2.0 * z)).sqrt();
                let w0 = (chi * psi).sqrt();
                Ok(-0.5 * epsilon * ratio.ln() + ln_bessel_k_complex(epsilon, w)? - ln_bessel_k(epsilon, w0)?)
            }
        }
    }

    /// `E[e^{iuW}]`.
    pub fn cf(&self, u: f64) -> Result<Complex64> {
        Ok(self.laplace_exponent_complex(Complex64::new(0.0, u))?.exp())
    }

    /// `E[W^α]`; errors when the moment is infinite.
    pub fn moment(&self, alpha: f64) -> Result<f64> {
        let GigParams { epsilon, chi, psi } = *self;
        match self.case() {
            GigCase::General => {
                let w = (chi * psi).sqrt();
                Ok((0.5 * alpha * (chi / psi).ln() + ln_bessel_k(epsilon + alpha, w)? - ln_bessel_k(epsilon, w)?).exp())
            }
            GigCase::Gamma => {
                if epsilon + alpha <= 0.0 {
                    return Err(Error::Domain(format!("gamma moment of order {alpha} is infinite")));
                }
                Ok((ln_gamma(epsilon + alpha) - ln_gamma(epsilon) + alpha * (2.0 / psi).ln()).exp())
            }
            GigCase::InverseGamma => {
                let a = -epsilon;
                if a - alpha <= 0.0 {
                    return Err(Error::Domain(format!("inverse gamma moment of order {alpha} is infinite")));
                }
                Ok((ln_gamma(a - alpha) - ln_gamma(a) + alpha * (0.5 * chi).ln()).exp())
            }
        }
    }

    /// `E[ln W]`.
    pub fn mean_log(&self) -> Result<f64> {
        let GigParams { epsilon, chi, psi } = *self;
        match self.case() {
            GigCase::General => Ok(0.5 * (chi / psi).ln() + d_ln_bessel_k_dnu(epsilon, (chi * psi).sqrt())?),
            GigCase::Gamma => Ok(digamma(epsilon) + (2.0 / psi).ln()),
            GigCase::InverseGamma => Ok((0.5 * chi).ln() - digamma(-epsilon)),
        }
    }

    /// First four cumulants from the raw moments.
    pub fn cumulants(&self) -> Result<[f64; 4]> {
        let m1 = self.moment(1.0)?;
        let m2 = self.moment(2.0)?;
        let m3 = self.moment(3.0)?;
        let m4 = self.moment(4.0)?;
        Ok([
            m1,
            m2 - m1 * m1,
            m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3),
            m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4),
        ])
    }

    pub fn ln_density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        let GigParams { epsilon, chi, psi } = *self;
        Ok(match self.case() {
            GigCase::General => {
                0.5 * epsilon * (psi / chi).ln() - std::f64::consts::LN_2 - ln_bessel_k(epsilon, (chi * psi).sqrt())?
                    + (epsilon - 1.0) * x.ln()
                    - 0.5 * (chi / x + psi * x)
            }
            GigCase::Gamma => {
                let rate = 0.5 * psi;
                epsilon * rate.ln() - ln_gamma(epsilon) + (epsilon - 1.0) * x.ln() - rate * x
            }
            GigCase::InverseGamma => {
                let (a, b) = (-epsilon, 0.5 * chi);
                a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x
            }
        })
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.ln_density(x).map(f64::exp)
    }

    /// Esscher tilt by `k`: `ψ` drops to `ψ - 2k`.
    pub fn tilt(&self, k: f64) -> Result<Self> {
        let psi = self.psi - 2.0 * k;
        let ok = match self.case() {
            GigCase::InverseGamma => k == 0.0,
            _ => psi > 0.0,
        };
        if !ok {
            return Err(Error::Domain(format!("tilt {k} leaves the GIG domain (psi = {})", self.psi)));
        }
        Self::new(self.epsilon, self.chi, psi)
    }
}
