//! Exact samplers for the clock laws.
//!
//! Tempered stable: Kanter's representation of the positive stable law,
//! accepted with probability `e^{-λX}`; the horizon is split into enough
//! independent pieces that each acceptance rate stays above `e^{-1}`.
//! GIG: Hörmann and Leydold's ratio-of-uniforms and rejection scheme.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use std::f64::consts::PI;

use super::gig::{GigCase, GigParams};
use super::{CtsParams, SubordinatorLaw};
use crate::error::{invalid, Error, Result};
use crate::numerics::gamma;

#[derive(Clone, Debug)]
enum Kind {
    Cts {
        omega: f64,
        lambda: f64,
        /// `c^{1/ω}` per piece, with `c = -C Γ(-ω) t / pieces`.
        piece_scale: f64,
        pieces: usize,
    },
    Gig {
        core: GigCore,
        repeats: usize,
    },
    Gamma {
        dist: Gamma<f64>,
        repeats: usize,
    },
    InverseGamma {
        dist: Gamma<f64>,
        repeats: usize,
    },
}

/// Draws the clock value accumulated over a fixed horizon.
#[derive(Clone, Debug)]
pub struct ClockSampler {
    kind: Kind,
}

impl SubordinatorLaw {
    /// Sampler for the clock over `horizon` time units. GIG clocks are not
    /// closed under convolution, so their horizon must be a whole number.
    pub fn sampler(&self, horizon: f64) -> Result<ClockSampler> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        match self {
            SubordinatorLaw::Cts(p) => cts_sampler(p, horizon),
            SubordinatorLaw::Gig(p) => {
                if horizon.fract() != 0.0 {
                    return Err(Error::Unsupported(format!(
                        "GIG clocks can only be simulated over whole time units, got {horizon}"
                    )));
                }
                gig_sampler(p, horizon as usize)
            }
        }
    }
}

fn cts_sampler(p: &CtsParams, horizon: f64) -> Result<ClockSampler> {
    if !p.is_subordinator() {
        return Err(Error::Unsupported(format!("CTS with omega = {} >= 1 has no increasing paths", p.omega)));
    }
    let c_total = -p.c * gamma(-p.omega) * horizon;
    let pieces = (c_total * p.lambda.powf(p.omega)).ceil().max(1.0);
    if pieces > 1e7 {
        return Err(Error::Unsupported(format!("CTS clock too heavily tempered to sample ({pieces} pieces)")));
    }
    Ok(ClockSampler {
        kind: Kind::Cts {
            omega: p.omega,
            lambda: p.lambda,
            piece_scale: (c_total / pieces).powf(1.0 / p.omega),
            pieces: pieces as usize,
        },
    })
}

fn gig_sampler(p: &GigParams, repeats: usize) -> Result<ClockSampler> {
    let kind = match p.case() {
        GigCase::Gamma => Kind::Gamma {
            dist: Gamma::new(p.epsilon, 2.0 / p.psi).map_err(|e| invalid(e.to_string()))?,
            repeats,
        },
        GigCase::InverseGamma => Kind::InverseGamma {
            dist: Gamma::new(-p.epsilon, 2.0 / p.chi).map_err(|e| invalid(e.to_string()))?,
            repeats,
        },
        GigCase::General => Kind::Gig { core: GigCore::new(p), repeats },
    };
    Ok(ClockSampler { kind })
}

impl ClockSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::Cts { omega, lambda, piece_scale, pieces } => {
                let mut total = 0.0;
                for _ in 0..*pieces {
                    loop {
                        let x = piece_scale * positive_stable(*omega, rng);
                        let u: f64 = rng.random();
                        if u <= (-lambda * x).exp() {
                            total += x;
                            break;
                        }
                    }
                }
                total
            }
            Kind::Gig { core, repeats } => (0..*repeats).map(|_| core.draw(rng)).sum(),
            Kind::Gamma { dist, repeats } => (0..*repeats).map(|_| dist.sample(rng)).sum(),
            Kind::InverseGamma { dist, repeats } => (0..*repeats).map(|_| 1.0 / dist.sample(rng)).sum(),
        }
    }
}

/// Positive stable variate with `E e^{-sX} = e^{-s^α}`, `0 < α < 1`.
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            break PI * v;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * u).sin() / e;
    a * b.powf((1.0 - alpha) / alpha)
}

/// GIG(λ, ω, ω) on the unit scale with `λ >= 0`; the caller applies the
/// reciprocal for negative orders and the `√(χ/ψ)` scale.
#[derive(Clone, Debug)]
struct GigCore {
    lambda: f64,
    omega: f64,
    scale: f64,
    invert: bool,
    method: Method,
}

#[derive(Clone, Debug)]
enum Method {
    ShiftedRou { mode: f64, v_minus: f64, v_plus: f64, ln_gm: f64 },
    Rou { v_max: f64, ln_gm: f64 },
    Rejection { x0: f64, xs: f64, k1: f64, k2: f64, k3: f64, a1: f64, a2: f64, a3: f64 },
}

impl GigCore {
    fn new(p: &GigParams) -> Self {
        let lambda = p.epsilon.abs();
        let omega = (p.chi * p.psi).sqrt();
        let scale = (p.chi / p.psi).sqrt();
        let ln_g = |x: f64| (lambda - 1.0) * x.ln() - 0.5 * omega * (x + 1.0 / x);
        let mode = omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + 1.0 - lambda);
        let ln_gm = ln_g(mode);
        let method = if lambda > 1.0 || omega > 1.0 {
            let dphi = |x: f64| 1.0 / (x - mode) + 0.5 * ((lambda - 1.0) / x - 0.5 * omega + 0.5 * omega / (x * x));
            let h = |x: f64| (x - mode) * (0.5 * (ln_g(x) - ln_gm)).exp();
            // Extremum right of the mode.
            let mut hi = 2.0 * mode + 1.0;
            while dphi(hi) > 0.0 {
                hi *= 2.0;
            }
            let x_plus = bisect(&dphi, mode * (1.0 + 1e-12) + 1e-300, hi);
            let x_minus = bisect(&dphi, mode * 1e-12, mode * (1.0 - 1e-12));
            Method::ShiftedRou { mode, v_minus: h(x_minus), v_plus: h(x_plus), ln_gm }
        } else if omega >= (0.5f64).min(2.0 / 3.0 * (1.0 - lambda).sqrt()) {
            let x_max = ((1.0 + lambda) + ((1.0 + lambda).powi(2) + omega * omega).sqrt()) / omega;
            let v_max = x_max * (0.5 * (ln_g(x_max) - ln_gm)).exp();
            Method::Rou { v_max, ln_gm }
        } else {
            let x0 = omega / (1.0 - lambda);
            let xs = x0.max(2.0 / omega);
            let k1 = ln_gm.exp();
            let a1 = k1 * x0;
            let (k2, a2) = if x0 < 2.0 / omega {
                let k2 = (-omega).exp();
                let a2 = if lambda > 0.0 {
                    k2 * ((2.0 / omega).powf(lambda) - x0.powf(lambda)) / lambda
                } else {
                    k2 * (2.0 / (omega * omega)).ln()
                };
                (k2, a2)
            } else {
                (0.0, 0.0)
            };
            let k3 = xs.powf(lambda - 1.0);
            let a3 = 2.0 * k3 * (-xs * omega / 2.0).exp() / omega;
            Method::Rejection { x0, xs, k1, k2, k3, a1, a2, a3 }
        };
        GigCore { lambda, omega, scale, invert: p.epsilon < 0.0, method }
    }

    fn ln_g(&self, x: f64) -> f64 {
        (self.lambda - 1.0) * x.ln() - 0.5 * self.omega * (x + 1.0 / x)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = match &self.method {
            Method::ShiftedRou { mode, v_minus, v_plus, ln_gm } => loop {
                let u: f64 = rng.random();
                let v = v_minus + (v_plus - v_minus) * rng.random::<f64>();
                if u == 0.0 {
                    continue;
                }
                let x = v / u + mode;
                if x > 0.0 && 2.0 * u.ln() <= self.ln_g(x) - ln_gm {
                    break x;
                }
            },
            Method::Rou { v_max, ln_gm } => loop {
                let u: f64 = rng.random();
                let v = v_max * rng.random::<f64>();
                if u == 0.0 {
                    continue;
                }
                let x = v / u;
                if x > 0.0 && 2.0 * u.ln() <= self.ln_g(x) - ln_gm {
                    break x;
                }
            },
            Method::Rejection { x0, xs, k1, k2, k3, a1, a2, a3 } => loop {
                let lambda = self.lambda;
                let omega = self.omega;
                let mut u = (a1 + a2 + a3) * rng.random::<f64>();
                let (x, hx) = if u <= *a1 {
                    (x0 * u / a1, *k1)
                } else if u <= a1 + a2 {
                    u -= a1;
                    let x = if lambda > 0.0 {
                        (x0.powf(lambda) + u * lambda / k2).powf(1.0 / lambda)
                    } else {
                        omega * (u * omega.exp()).exp()
                    };
                    (x, k2 * x.powf(lambda - 1.0))
                } else {
                    u -= a1 + a2;
                    let x = -2.0 / omega * ((-xs * omega / 2.0).exp() - u * omega / (2.0 * k3)).ln();
                    (x, k3 * (-x * omega / 2.0).exp())
                };
                if x > 0.0 && x.is_finite() && rng.random::<f64>() * hx <= self.ln_g(x).exp() {
                    break x;
                }
            },
        };
        self.scale * if self.invert { 1.0 / y } else { y }
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa_pos = f(a) > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == fa_pos {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_stats(law: SubordinatorLaw, horizon: f64, n: usize, seed: u64) -> (f64, f64) {
        let s = law.sampler(horizon).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| s.draw(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (m, v)
    }

    fn check(law: SubordinatorLaw, horizon: f64) {
        let c = law.cumulants().unwrap();
        let n = 200_000;
        let (m, v) = sample_stats(law, horizon, n, 11);
        let se = (horizon * c[1] / n as f64).sqrt();
        assert!((m - horizon * c[0]).abs() < 4.0 * se, "{law:?}: mean {m} vs {}", horizon * c[0]);
        assert!((v / (horizon * c[1]) - 1.0).abs() < 0.05, "{law:?}: var {v} vs {}", horizon * c[1]);
    }

    #[test]
    fn cts_moments() {
        check(SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.6, 1.2).unwrap()), 1.0);
        check(SubordinatorLaw::Cts(CtsParams::new(0.3, 0.5, 0.8).unwrap()), 2.5);
    }

    #[test]
    fn gig_moments_all_regimes() {
        check(SubordinatorLaw::Gig(GigParams::new(2.5, 1.0, 2.0).unwrap()), 1.0);
        check(SubordinatorLaw::Gig(GigParams::new(-0.3, 0.8, 0.8).unwrap()), 1.0);
        check(SubordinatorLaw::Gig(GigParams::new(0.2, 0.05, 0.2).unwrap()), 1.0);
        check(SubordinatorLaw::Gig(GigParams::new(-3.0, 2.0, 1.0).unwrap()), 3.0);
        check(SubordinatorLaw::Gig(GigParams::new(1.5, 0.0, 2.0).unwrap()), 1.0);
        check(SubordinatorLaw::Gig(GigParams::new(-5.5, 3.0, 0.0).unwrap()), 1.0);
    }

    #[test]
    fn gig_horizon_must_be_whole() {
        let law = SubordinatorLaw::Gig(GigParams::new(1.0, 1.0, 1.0).unwrap());
        assert!(matches!(law.sampler(0.5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn stable_laplace_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let s = 0.7;
        let est: f64 = (0..n).map(|_| (-s * positive_stable(0.4, &mut rng)).exp()).sum::<f64>() / n as f64;
        assert!((est - (-s.powf(0.4)).exp()).abs() < 4e-3);
    }
}
