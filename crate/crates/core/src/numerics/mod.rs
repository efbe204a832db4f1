//! Special functions, quadrature, root finding, optimization and
//! characteristic-function inversion.

pub mod bessel;
pub mod fourier;
pub mod optimize;
pub mod quadrature;
pub mod roots;

pub use bessel::{bessel_k, bessel_k_ratio, ln_bessel_k, ln_bessel_k_complex};
pub use fourier::{cumulant_range, gil_pelaez_cdf, CosExpansion};
pub use optimize::{
    check_gradient, minimize_box, minimize_capped_simplex, BoxOptions, CappedSimplex, MinimizeReport,
    SimplexReport, SpgOptions,
};
pub use quadrature::{gauss_legendre, QuadResult, Quadrature, QuadratureRule};
pub use roots::{brent, solve_system, RootSolveReport, SolverOptions};

use statrs::distribution::{ContinuousCDF, Normal};

/// `Γ(x)` for real `x`, including negative non-integers.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Standard normal distribution function, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile, polished with two Newton steps.
pub fn norm_quantile(p: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    let mut x = n.inverse_cdf(p);
    if x.is_finite() {
        for _ in 0..2 {
            let d = norm_pdf(x);
            if d > 0.0 {
                x -= (norm_cdf(x) - p) / d;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_negative_half() {
        let want = -2.0 * std::f64::consts::PI.sqrt();
        assert!((gamma(-0.5) - want).abs() < 1e-13);
    }

    #[test]
    fn normal_quantile_known_values() {
        assert!((norm_quantile(0.05) + 1.644_853_626_951_472_2).abs() < 1e-14);
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_far_tail() {
        // Φ(-10) = 7.61985302416047e-24
        assert!((norm_cdf(-10.0) / 7.619_853_024_160_47e-24 - 1.0).abs() < 1e-12);
    }
}
