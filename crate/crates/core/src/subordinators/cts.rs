//! Classical tempered stable clock.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::gamma;

/// Tempered stable law with Laplace exponent
/// `l(u) = C Γ(-ω) ((λ - u)^ω - λ^ω)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtsParams {
    pub omega: f64,
    pub lambda: f64,
    pub c: f64,
}

/// Mean, variance, skewness and excess kurtosis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn from_cumulants(c: [f64; 4]) -> Self {
        Moments {
            mean: c[0],
            variance: c[1],
            skewness: c[2] / c[1].powf(1.5),
            excess_kurtosis: c[3] / (c[1] * c[1]),
        }
    }
}

impl CtsParams {
    pub fn new(omega: f64, lambda: f64, c: f64) -> Result<Self> {
        let p = CtsParams { omega, lambda, c };
        p.validate()?;
        Ok(p)
    }

    /// The member with unit mean for the given shape and tempering.
    pub fn with_unit_mean(omega: f64, lambda: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(invalid(format!("unit-mean normalization needs omega in (0,1), got {omega}")));
        }
        let c = 1.0 / (-omega * gamma(-omega) * lambda.powf(omega - 1.0));
        Self::new(omega, lambda, c)
    }

    pub fn validate(&self) -> Result<()> {
        let CtsParams { omega, lambda, c } = *self;
        if !(omega > 0.0 && omega < 2.0) || omega == 1.0 {
            return Err(invalid(format!("CTS omega must lie in (0,1)∪(1,2), got {omega}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("CTS lambda must be positive, got {lambda}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid(format!("CTS C must be positive, got {c}")));
        }
        Ok(())
    }

    /// Increasing paths only exist for `ω < 1`.
    pub fn is_subordinator(&self) -> bool {
        self.omega < 1.0
    }

    fn scale(&self) -> f64 {
        self.c * gamma(-self.omega)
    }

    pub fn laplace_exponent(&self, u: f64) -> Result<f64> {
        if !(u <= self.lambda) {
            return Err(Error::StripViolation(format!("CTS exponent needs u <= lambda = {}, got {u}", self.lambda)));
        }
        Ok(self.scale() * ((self.lambda - u).powf(self.omega) - self.lambda.powf(self.omega)))
    }

    pub fn laplace_exponent_complex(&self, z: Complex64) -> Result<Complex64> {
        if !(z.re < self.lambda) {
            return Err(Error::StripViolation(format!(
                "CTS exponent needs Re z < lambda = {}, got {z}",
                self.lambda
            )));
        }
        let base = Complex64::new(self.lambda - z.re, -z.im);
        Ok(self.scale() * (base.powf(self.omega) - self.lambda.powf(self.omega)))
    }

    /// `E[e^{iuS}]`.
    pub fn cf(&self, u: f64) -> Complex64 {
        self.laplace_exponent_complex(Complex64::new(0.0, u))
            .expect("imaginary axis is inside the strip")
            .exp()
    }

    /// First four cumulants.
    pub fn cumulants(&self) -> [f64; 4] {
        let CtsParams { omega: w, lambda: l, .. } = *self;
        let s = self.scale();
        let c1 = -s * w * l.powf(w - 1.0);
        let c2 = s * w * (w - 1.0) * l.powf(w - 2.0);
        let c3 = -s * w * (w - 1.0) * (w - 2.0) * l.powf(w - 3.0);
        let c4 = s * w * (w - 1.0) * (w - 2.0) * (w - 3.0) * l.powf(w - 4.0);
        [c1, c2, c3, c4]
    }

    pub fn moments(&self) -> Moments {
        Moments::from_cumulants(self.cumulants())
    }

    /// Esscher tilt by `k`: tempering drops to `λ - k`.
    pub fn tilt(&self, k: f64) -> Result<Self> {
        if !(k < self.lambda) {
            return Err(Error::Domain(format!("tilt {k} exceeds CTS lambda {}", self.lambda)));
        }
        Self::new(self.omega, self.lambda - k, self.c)
    }

    /// Law of the clock after `t` time units.
    pub fn at_horizon(&self, t: f64) -> Self {
        CtsParams { c: self.c * t, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mean_normalization() {
        let p = CtsParams::with_unit_mean(0.6, 1.7).unwrap();
        assert!((p.cumulants()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cumulants_match_derivatives_of_exponent() {
        let p = CtsParams::new(0.7, 1.3, 0.4).unwrap();
        let h = 1e-3;
        let l = |u: f64| p.laplace_exponent(u).unwrap();
        let d1 = (l(h) - l(-h)) / (2.0 * h);
        let d2 = (l(h) - 2.0 * l(0.0) + l(-h)) / (h * h);
        let c = p.cumulants();
        assert!((d1 - c[0]).abs() < 1e-6);
        assert!((d2 - c[1]).abs() < 1e-5);
        // Ratio identities between successive cumulants.
        assert!((c[2] - c[1] * (2.0 - p.omega) / p.lambda).abs() < 1e-14);
        assert!((c[3] - c[2] * (3.0 - p.omega) / p.lambda).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CtsParams::new(1.0, 1.0, 1.0).is_err());
        assert!(CtsParams::new(0.5, 0.0, 1.0).is_err());
        assert!(CtsParams::new(0.5, 1.0, -1.0).is_err());
        assert!(CtsParams::new(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn strip_enforced() {
        let p = CtsParams::new(0.5, 1.0, 1.0).unwrap();
        assert!(matches!(p.laplace_exponent(1.5), Err(Error::StripViolation(_))));
        assert!(p.laplace_exponent_complex(Complex64::new(1.0, 0.3)).is_err());
    }

    #[test]
    fn above_one_is_not_a_subordinator() {
        let p = CtsParams::new(1.5, 1.0, 1.0).unwrap();
        assert!(!p.is_subordinator());
        assert!(p.cumulants()[0] < 0.0);
    }
}
