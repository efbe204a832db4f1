mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use tsgh::numerics::{brent, gamma, Quadrature};
use tsgh::subordinators::{sample, CtsParams, GigParams, SubordinatorLaw};

use common::{batch_se, mean, se};

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Inverse Gaussian cf with `E[e^{-sS}] = exp(-γ(√(η²+2s) - η))`.
fn ig_cf(gamma_: f64, eta: f64, u: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (-gamma_ * ((eta * eta - 2.0 * i * u).sqrt() - eta)).exp()
}

fn cts_strategy() -> impl Strategy<Value = CtsParams> {
    (0.05f64..0.98, 0.05f64..5.0, 0.05f64..5.0).prop_map(|(w, l, c)| CtsParams::new(w, l, c).unwrap())
}

fn gig_strategy() -> impl Strategy<Value = GigParams> {
    (-4.0f64..4.0, 0.05f64..5.0, 0.05f64..5.0).prop_map(|(e, x, p)| GigParams::new(e, x, p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cf_bounded_and_one_at_zero(c in cts_strategy(), g in gig_strategy()) {
        prop_assert!(close(c.cf(0.0), Complex64::new(1.0, 0.0), 1e-15));
        prop_assert!(close(g.cf(0.0).unwrap(), Complex64::new(1.0, 0.0), 1e-15));
        for u in [0.1, -0.1, 1.0, -1.0, 10.0, -10.0] {
            prop_assert!(c.cf(u).norm() <= 1.0 + 1e-14);
            prop_assert!(g.cf(u).unwrap().norm() <= 1.0 + 1e-14);
        }
    }

    /// `s ↦ -l(-s)` is a Bernstein function, hence concave on `s ≥ 0`
    /// (equivalently `l` is convex on its domain).
    #[test]
    fn bernstein_exponent_concave(c in cts_strategy(), g in gig_strategy(), s in 0.0f64..3.0) {
        let h = 1e-2;
        for law in [SubordinatorLaw::Cts(c), SubordinatorLaw::Gig(g)] {
            let b = |x: f64| -law.laplace_exponent(-x).unwrap();
            let d2 = b(s + 2.0 * h) - 2.0 * b(s + h) + b(s);
            prop_assert!(d2 <= 1e-12 * b(s + 2.0 * h).abs().max(1.0), "{:?}: {}", law, d2);
        }
    }

    #[test]
    fn cts_skewed_and_leptokurtic(c in cts_strategy()) {
        let m = c.moments();
        prop_assert!(m.variance > 0.0 && m.skewness > 0.0 && m.excess_kurtosis > 0.0);
    }
}

#[test]
fn cts_cf_reference_value() {
    // 40-digit reference for p = (0.9, 1.2, 0.7), u = 1.
    let want = Complex64::new(0.769_947_383_024_298_927_2, 0.145_588_637_115_470_012_1);
    let got = CtsParams::new(0.9, 1.2, 0.7).unwrap().cf(1.0);
    assert!(close(got, want, 1e-13), "{got}");
}

#[test]
fn cts_half_is_inverse_gaussian() {
    let (lambda, c) = (1.3, 0.8);
    let p = CtsParams::new(0.5, lambda, c).unwrap();
    let (g, eta) = (-c * gamma(-0.5) / 2f64.sqrt(), (2.0 * lambda).sqrt());
    for k in -10..=10 {
        let u = 0.7 * k as f64;
        assert!(close(p.cf(u), ig_cf(g, eta, u), 1e-13), "u = {u}");
    }
    assert!((p.moments().mean - g / eta).abs() < 1e-14);
    // ω = 1/2, λ = 2, C = 1
    let m = CtsParams::new(0.5, 2.0, 1.0).unwrap().moments().mean;
    assert!((m - (-0.5 * gamma(-0.5) * 2f64.powf(-0.5))).abs() < 1e-15);
    assert!((m - PI.sqrt() / 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn cts_laplace_exponent_edges() {
    let p = CtsParams::new(0.7, 1.5, 0.9).unwrap();
    assert_eq!(p.laplace_exponent(0.0).unwrap(), 0.0);
    let h = 1e-5;
    let fd = (p.laplace_exponent(h).unwrap() - p.laplace_exponent(-h).unwrap()) / (2.0 * h);
    let mean = -0.7 * 0.9 * gamma(-0.7) * 1.5f64.powf(-0.3);
    assert!((fd - mean).abs() < 1e-8 * mean);
    assert!((p.cumulants()[0] - mean).abs() < 1e-14);
    let limit = -0.9 * gamma(-0.7) * 1.5f64.powf(0.7);
    assert!((p.laplace_exponent(1.5 - 1e-12).unwrap() - limit).abs() < 1e-6);
    // the tempering boundary itself is finite
    assert!((p.laplace_exponent(1.5).unwrap() - limit).abs() < 1e-12);
    assert!(p.laplace_exponent(2.0).is_err());
}

#[test]
fn gig_special_cases() {
    let (chi, psi) = (1.4, 0.6);
    let ig = GigParams::new(-0.5, chi, psi).unwrap();
    for k in -10..=10 {
        let u = 0.9 * k as f64;
        assert!(close(ig.cf(u).unwrap(), ig_cf(chi.sqrt(), psi.sqrt(), u), 1e-13), "u = {u}");
    }
    // χ = 0: gamma with shape ε and rate ψ/2
    let (eps, psi) = (1.7, 0.8);
    let ga = GigParams::new(eps, 0.0, psi).unwrap();
    let i = Complex64::new(0.0, 1.0);
    for u in [-3.0, -0.5, 0.2, 4.0] {
        let want = (1.0 - i * u / (psi / 2.0)).powf(-eps);
        assert!(close(ga.cf(u).unwrap(), want, 1e-13));
    }
    assert_eq!(ig.laplace_exponent(0.0).unwrap(), 0.0);
    assert!(ig.laplace_exponent(0.3).is_err());
    assert!(ig.laplace_exponent(0.31).is_err());
}

#[test]
fn gig_cumulant_cases() {
    let c = GigParams::new(-0.5, 1.0, 4.0).unwrap().cumulants().unwrap();
    assert!((c[0] - 0.5).abs() < 1e-15);
    let g = GigParams::new(-1.2, 1.5, 0.7).unwrap();
    let c = g.cumulants().unwrap();
    let h = 1e-3;
    let l = |u: f64| g.laplace_exponent(u).unwrap();
    let d2 = (-l(2.0 * h) + 16.0 * l(h) - 30.0 * l(0.0) + 16.0 * l(-h) - l(-2.0 * h)) / (12.0 * h * h);
    assert!((d2 - c[1]).abs() < 1e-7 * c[1], "{d2} vs {}", c[1]);
}

#[test]
fn gig_cumulants_against_draws() {
    let law = SubordinatorLaw::Gig(GigParams::new(-1.2, 1.5, 0.7).unwrap());
    let c = law.cumulants().unwrap();
    let x = sample(&law, 1_000_000, 17).unwrap();
    let k = |x: &[f64]| -> [f64; 4] {
        let m = mean(x);
        let c = |p: i32| x.iter().map(|v| (v - m).powi(p)).sum::<f64>() / x.len() as f64;
        let (m2, m3, m4) = (c(2), c(3), c(4));
        [m, m2, m3, m4 - 3.0 * m2 * m2]
    };
    let full = k(&x);
    let batches: Vec<[f64; 4]> = x.chunks(10_000).map(k).collect();
    for j in 0..4 {
        let s = batch_se(&batches.iter().map(|b| b[j]).collect::<Vec<_>>());
        assert!((full[j] - c[j]).abs() <= 3.0 * s, "cumulant {}: {} vs {} (se {s})", j + 1, full[j], c[j]);
    }
}

#[test]
fn gig_density_cases() {
    let g = GigParams::new(-0.5, 1.0, 1.0).unwrap();
    let q = Quadrature::adaptive(1e-13, 1e-12);
    let total = q.integrate(|x| if x > 0.0 { g.density(x).unwrap() } else { 0.0 }, 0.0, f64::INFINITY).unwrap().value;
    assert!((total - 1.0).abs() < 1e-8);

    let g = GigParams::new(1.8, 0.9, 2.5).unwrap();
    let dlog = |x: f64| {
        let h = 1e-6 * x;
        (g.ln_density(x + h).unwrap() - g.ln_density(x - h).unwrap()) / (2.0 * h)
    };
    let mode = brent(dlog, 1e-3, 20.0, 1e-12).unwrap();
    let (e, chi, psi) = (1.8f64, 0.9f64, 2.5f64);
    let want = ((e - 1.0) + ((e - 1.0).powi(2) + chi * psi).sqrt()) / psi;
    assert!((mode - want).abs() < 1e-6);

    let ga = GigParams::new(2.5, 0.0, 1.0).unwrap();
    assert!(ga.density(1e-8).unwrap() < 1e-10);
    assert_eq!(g.density(0.0).unwrap(), 0.0);
    assert_eq!(g.density(-1.0).unwrap(), 0.0);
}

#[test]
fn sampler_means() {
    let (chi, psi) = (2.0, 0.5);
    let ig = SubordinatorLaw::Gig(GigParams::new(-0.5, chi, psi).unwrap());
    let x = sample(&ig, 1_000_000, 5).unwrap();
    assert!((mean(&x) - (chi / psi).sqrt()).abs() <= 3.0 * se(&x));

    let c = CtsParams::new(0.5, 0.8, 0.6).unwrap();
    let want = (-0.6 * gamma(-0.5) / 2f64.sqrt()) / (1.6f64).sqrt();
    let x = sample(&SubordinatorLaw::Cts(c), 1_000_000, 6).unwrap();
    assert!((mean(&x) - want).abs() <= 3.0 * se(&x));
    let m = c.moments();
    let mx = mean(&x);
    let v = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / x.len() as f64;
    let vb: Vec<f64> = x
        .chunks(10_000)
        .map(|b| {
            let mb = mean(b);
            b.iter().map(|a| (a - mb).powi(2)).sum::<f64>() / b.len() as f64
        })
        .collect();
    assert!((v - m.variance).abs() <= 3.0 * batch_se(&vb));
}

#[test]
fn sampler_reproducible() {
    let law = common::cts(0.7, 1.0);
    assert_eq!(sample(&law, 1000, 3).unwrap(), sample(&law, 1000, 3).unwrap());
    assert_ne!(sample(&law, 1000, 3).unwrap(), sample(&law, 1000, 4).unwrap());
}
