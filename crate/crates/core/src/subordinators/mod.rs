//! Positive clock laws driving the mixtures.

mod cts;
mod gig;
mod sampling;

pub use cts::{CtsParams, Moments};
pub use gig::GigParams;
pub use sampling::ClockSampler;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SubordinatorLaw {
    Cts(CtsParams),
    Gig(GigParams),
}

impl SubordinatorLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            SubordinatorLaw::Cts(p) => p.validate(),
            SubordinatorLaw::Gig(p) => p.validate(),
        }
    }

    /// `ln E[e^{uS}]` for real `u` below [`Self::upper_bound`].
    pub fn laplace_exponent(&self, u: f64) -> Result<f64> {
        match self {
            SubordinatorLaw::Cts(p) => p.laplace_exponent(u),
            SubordinatorLaw::Gig(p) => p.laplace_exponent(u),
        }
    }

    pub fn laplace_exponent_complex(&self, z: Complex64) -> Result<Complex64> {
        match self {
            SubordinatorLaw::Cts(p) => p.laplace_exponent_complex(z),
            SubordinatorLaw::Gig(p) => p.laplace_exponent_complex(z),
        }
    }

    pub fn cf(&self, u: f64) -> Result<Complex64> {
        match self {
            SubordinatorLaw::Cts(p) => Ok(p.cf(u)),
            SubordinatorLaw::Gig(p) => p.cf(u),
        }
    }

    pub fn cumulants(&self) -> Result<[f64; 4]> {
        match self {
            SubordinatorLaw::Cts(p) => Ok(p.cumulants()),
            SubordinatorLaw::Gig(p) => p.cumulants(),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            SubordinatorLaw::Cts(p) => Ok(p.cumulants()[0]),
            SubordinatorLaw::Gig(p) => p.moment(1.0),
        }
    }

    /// Supremum of the real domain of the Laplace exponent.
    pub fn upper_bound(&self) -> f64 {
        match self {
            SubordinatorLaw::Cts(p) => p.lambda,
            SubordinatorLaw::Gig(p) => p.upper_bound(),
        }
    }

    /// Esscher tilt of the clock by `k`.
    pub fn tilt(&self, k: f64) -> Result<Self> {
        Ok(match self {
            SubordinatorLaw::Cts(p) => SubordinatorLaw::Cts(p.tilt(k)?),
            SubordinatorLaw::Gig(p) => SubordinatorLaw::Gig(p.tilt(k)?),
        })
    }

    /// The three free parameters in a fixed order.
    pub fn to_vec(&self) -> [f64; 3] {
        match self {
            SubordinatorLaw::Cts(p) => [p.omega, p.lambda, p.c],
            SubordinatorLaw::Gig(p) => [p.epsilon, p.chi, p.psi],
        }
    }

    /// Same family with new parameters in [`Self::to_vec`] order.
    pub fn with_vec(&self, v: [f64; 3]) -> Result<Self> {
        Ok(match self {
            SubordinatorLaw::Cts(_) => SubordinatorLaw::Cts(CtsParams::new(v[0], v[1], v[2])?),
            SubordinatorLaw::Gig(_) => SubordinatorLaw::Gig(GigParams::new(v[0], v[1], v[2])?),
        })
    }
}

/// `count` independent clock values at unit horizon.
pub fn sample(law: &SubordinatorLaw, count: usize, seed: u64) -> Result<Vec<f64>> {
    let s = law.sampler(1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| s.draw(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn half_stable_equals_inverse_gaussian() {
        let chi = 1.7;
        let psi = 0.9;
        let cts = SubordinatorLaw::Cts(CtsParams::new(0.5, psi / 2.0, (chi / (2.0 * PI)).sqrt()).unwrap());
        let gig = SubordinatorLaw::Gig(GigParams::new(-0.5, chi, psi).unwrap());
        for &(re, im) in &[(0.0, 1.0), (-2.0, 0.3), (0.4, -3.0), (-0.01, 25.0)] {
            let z = Complex64::new(re, im);
            let a = cts.laplace_exponent_complex(z).unwrap();
            let b = gig.laplace_exponent_complex(z).unwrap();
            assert!((a - b).norm() < 1e-12, "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn serde_tags_family() {
        let law = SubordinatorLaw::Gig(GigParams::new(-0.5, 1.0, 2.0).unwrap());
        let s = serde_json::to_string(&law).unwrap();
        assert!(s.contains("\"family\":\"gig\""));
        let back: SubordinatorLaw = serde_json::from_str(&s).unwrap();
        assert_eq!(back, law);
    }

    #[test]
    fn sampling_is_reproducible() {
        let law = SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.5, 1.0).unwrap());
        assert_eq!(sample(&law, 50, 9).unwrap(), sample(&law, 50, 9).unwrap());
    }
}
