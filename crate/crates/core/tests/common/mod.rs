#![allow(dead_code)]

use nalgebra::DMatrix;
use tsgh::models::{Measure, ModelParams};
use tsgh::subordinators::{CtsParams, GigParams, SubordinatorLaw};

pub fn cts(omega: f64, lambda: f64) -> SubordinatorLaw {
    SubordinatorLaw::Cts(CtsParams::with_unit_mean(omega, lambda).unwrap())
}

pub fn gig(eps: f64, alpha_bar: f64) -> SubordinatorLaw {
    SubordinatorLaw::Gig(GigParams::with_unit_mean(eps, alpha_bar).unwrap())
}

/// Symmetric matrix with unit diagonal, `f(i, j)` above it (`i < j`).
pub fn corr(n: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { f(i.min(j), i.max(j)) })
}

pub fn model(mu: &[f64], theta: &[f64], sigma: &[f64], c: &DMatrix<f64>, sub: SubordinatorLaw) -> ModelParams {
    ModelParams::from_correlation(mu.to_vec(), theta.to_vec(), sigma.to_vec(), c, sub, Measure::P).unwrap()
}

/// Daily-scale model with mild skew and positive correlation.
pub fn daily(n: usize, sub: SubordinatorLaw) -> ModelParams {
    let mu: Vec<f64> = (0..n).map(|j| 3e-4 + 1e-4 * j as f64).collect();
    let theta: Vec<f64> = (0..n).map(|j| -1.5e-3 - 5e-4 * j as f64).collect();
    let sigma: Vec<f64> = (0..n).map(|j| 0.012 + 0.002 * j as f64).collect();
    model(&mu, &theta, &sigma, &corr(n, |i, j| 0.25 + 0.05 * ((i + j) % 3) as f64), sub)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard error of the mean.
pub fn se(x: &[f64]) -> f64 {
    let m = mean(x);
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0);
    (v / x.len() as f64).sqrt()
}

/// Standard error of a statistic estimated on the whole sample, from its
/// values on equal batches.
pub fn batch_se(values: &[f64]) -> f64 {
    se(values)
}
