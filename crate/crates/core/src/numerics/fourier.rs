//! Distribution functions recovered from a characteristic function.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::quadrature::Quadrature;
use crate::error::{invalid, Result};

/// Truncation interval `c1 ± L·sqrt(c2 + sqrt|c4|)` from the first four
/// cumulants.
pub fn cumulant_range(c: [f64; 4], l: f64) -> (f64, f64) {
    let w = l * (c[1].abs() + c[3].abs().sqrt()).sqrt();
    (c[0] - w, c[0] + w)
}

/// `(cos kθ, sin kθ)` for `k = 0, 1, ...` by repeated rotation, resynced
/// with a direct evaluation every 64 steps to bound the drift.
struct Rotations {
    theta: f64,
    step: (f64, f64),
    cur: (f64, f64),
    k: usize,
    n: usize,
}

impl Rotations {
    fn new(theta: f64, n: usize) -> Self {
        Rotations { theta, step: theta.sin_cos(), cur: (1.0, 0.0), k: 0, n }
    }
}

impl Iterator for Rotations {
    type Item = (f64, f64);
    fn next(&mut self) -> Option<(f64, f64)> {
        if self.k >= self.n {
            return None;
        }
        if self.k.is_multiple_of(64) && self.k > 0 {
            let (s, c) = (self.k as f64 * self.theta).sin_cos();
            self.cur = (c, s);
        }
        let out = self.cur;
        let (c, s) = self.cur;
        let (ss, sc) = self.step;
        self.cur = (c * sc - s * ss, s * sc + c * ss);
        self.k += 1;
        Some(out)
    }
}

/// Cosine-series expansion of a density on `[a, b]`.
#[derive(Clone, Debug)]
pub struct CosExpansion {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl CosExpansion {
    /// Adds terms until 16 consecutive coefficients fall below `tol`
    /// (relative to the constant term) or `max_terms` is reached.
    pub fn build<F>(mut cf: F, a: f64, b: f64, tol: f64, max_terms: usize) -> Result<Self>
    where
        F: FnMut(f64) -> Result<Complex64>,
    {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("bad COS interval [{a}, {b}]")));
        }
        let width = b - a;
        let mut coeffs = Vec::with_capacity(256);
        let mut quiet = 0;
        let c0 = 2.0 / width;
        for k in 0..max_terms.max(2) {
            let u = k as f64 * PI / width;
            let phi = cf(u)?;
            let c = c0 * (phi * Complex64::new(0.0, -u * a).exp()).re;
            coeffs.push(c);
            if k > 0 && c.abs() < tol * c0 {
                quiet += 1;
                if quiet >= 16 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        Ok(CosExpansion { a, b, coeffs })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    fn omega(&self, k: usize) -> f64 {
        k as f64 * PI / (self.b - self.a)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.a || x > self.b {
            return 0.0;
        }
        let y = x - self.a;
        let mut s = 0.5 * self.coeffs[0];
        for (k, (cs, _)) in Rotations::new(self.omega(1) * y, self.coeffs.len()).enumerate().skip(1) {
            s += self.coeffs[k] * cs;
        }
        s
    }

    /// Distribution function, clamped to `[0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return 1.0;
        }
        let y = x - self.a;
        let mut s = 0.5 * self.coeffs[0] * y;
        for (k, (_, sn)) in Rotations::new(self.omega(1) * y, self.coeffs.len()).enumerate().skip(1) {
            s += self.coeffs[k] * sn / self.omega(k);
        }
        s.clamp(0.0, 1.0)
    }

    /// `∫_a^x y f(y) dy`.
    pub fn partial_expectation(&self, x: f64) -> f64 {
        let x = x.clamp(self.a, self.b);
        let l = x - self.a;
        let a = self.a;
        let mut s = 0.5 * self.coeffs[0] * (0.5 * l * l + a * l);
        for (k, (cs, sn)) in Rotations::new(self.omega(1) * l, self.coeffs.len()).enumerate().skip(1) {
            let w = self.omega(k);
            s += self.coeffs[k] * (a * sn / w + l * sn / w + (cs - 1.0) / (w * w));
        }
        s
    }
}

/// Gil-Pelaez inversion: `F(x) = 1/2 - (1/π) ∫_0^∞ Im[e^{-iux} φ(u)] / u du`.
pub fn gil_pelaez_cdf<F>(cf: F, x: f64, quad: &Quadrature) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut failure = None;
    let integrand = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        match cf(u) {
            Ok(phi) => (Complex64::new(0.0, -u * x).exp() * phi).im / u,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let r = quad.integrate(integrand, 0.0, f64::INFINITY)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(0.5 - r.value / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::norm_cdf;

    fn normal_cf(m: f64, s: f64) -> impl Fn(f64) -> Result<Complex64> {
        move |u| Ok(Complex64::new(-0.5 * s * s * u * u, m * u).exp())
    }

    #[test]
    fn cos_normal_cdf_and_density() {
        let (a, b) = cumulant_range([0.1, 0.04, 0.0, 0.0], 12.0);
        let e = CosExpansion::build(normal_cf(0.1, 0.2), a, b, 1e-15, 4096).unwrap();
        for &x in &[-0.3, 0.0, 0.1, 0.45] {
            assert!((e.cdf(x) - norm_cdf((x - 0.1) / 0.2)).abs() < 1e-12);
            let pdf = (-(x - 0.1f64).powi(2) / 0.08).exp() / (0.2 * (2.0 * PI).sqrt());
            assert!((e.density(x) - pdf).abs() < 1e-11);
        }
    }

    #[test]
    fn cos_partial_expectation_of_normal() {
        // ∫_{-∞}^q y φ(y) dy = -φ(q) for the standard normal.
        let e = CosExpansion::build(normal_cf(0.0, 1.0), -12.0, 12.0, 1e-15, 4096).unwrap();
        let q: f64 = -1.2;
        let want = -(-0.5 * q * q).exp() / (2.0 * PI).sqrt();
        assert!((e.partial_expectation(q) - want).abs() < 1e-12);
    }

    #[test]
    fn rotations_track_trig() {
        let th = 0.7312;
        for (k, (c, s)) in Rotations::new(th, 5000).enumerate() {
            let (s0, c0) = (k as f64 * th).sin_cos();
            assert!((c - c0).abs() < 1e-12 && (s - s0).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn gil_pelaez_matches_normal() {
        let q = Quadrature::adaptive(1e-13, 1e-12);
        for &x in &[-0.5, 0.05, 0.3] {
            let got = gil_pelaez_cdf(normal_cf(0.05, 0.3), x, &q).unwrap();
            assert!((got - norm_cdf((x - 0.05) / 0.3)).abs() < 1e-10, "{x}");
        }
    }
}
