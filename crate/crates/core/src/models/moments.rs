//! Closed-form moments of the increments.

use serde::{Deserialize, Serialize};

use super::law::ReturnLaw;
use super::params::ModelParams;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
}

/// Moments of `Y_t` from the clock cumulants.
pub fn moments(p: &ModelParams, t: f64) -> Result<ModelMoments> {
    let n = p.dim();
    let c = p.sub().cumulants()?;
    let mut out = ModelMoments {
        mean: Vec::with_capacity(n),
        variance: Vec::with_capacity(n),
        skewness: Vec::with_capacity(n),
        excess_kurtosis: Vec::with_capacity(n),
        covariance: vec![vec![0.0; n]; n],
        correlation: vec![vec![0.0; n]; n],
    };
    for j in 0..n {
        let k = p.marginal(j).at_horizon(t).cumulants()?;
        out.mean.push(k[0]);
        out.variance.push(k[1]);
        out.skewness.push(k[2] / k[1].powf(1.5));
        out.excess_kurtosis.push(k[3] / (k[1] * k[1]));
    }
    let sig = p.sigma_matrix();
    let th = p.theta();
    for i in 0..n {
        for j in 0..n {
            out.covariance[i][j] = t * (c[0] * sig[(i, j)] + c[1] * th[i] * th[j]);
        }
    }
    for i in 0..n {
        for j in 0..n {
            out.correlation[i][j] = out.covariance[i][j] / (out.variance[i] * out.variance[j]).sqrt();
        }
    }
    Ok(out)
}
