//! Parameter containers for the multivariate models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::law::{GaussianLaw, MixtureLaw};
use crate::error::{invalid, Result};
use crate::subordinators::SubordinatorLaw;

/// Probability measure a parameter set lives under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    /// Historical (real-world).
    P,
    /// Risk-neutral.
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Mgh,
    Mnts,
}

impl std::str::FromStr for Family {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "mgh" => Ok(Family::Mgh),
            "mnts" => Ok(Family::Mnts),
            other => Err(invalid(format!("unknown model family {other:?}"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Mgh => "mgh",
            Family::Mnts => "mnts",
        })
    }
}

/// `Y = μ t + θ S_t + D_σ A W_{S_t}`: drift `μ`, skew `θ`, scale `σ`,
/// lower-triangular `A` with `AAᵀ` a correlation matrix, and the clock `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelParamsRecord", into = "ModelParamsRecord")]
pub struct ModelParams {
    mu: Vec<f64>,
    theta: Vec<f64>,
    sigma: Vec<f64>,
    chol: DMatrix<f64>,
    sub: SubordinatorLaw,
    measure: Measure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParamsRecord {
    pub measure: Measure,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Rows of the lower-triangular factor `A`.
    pub chol: Vec<Vec<f64>>,
    pub subordinator: SubordinatorLaw,
}

impl TryFrom<ModelParamsRecord> for ModelParams {
    type Error = crate::Error;
    fn try_from(r: ModelParamsRecord) -> Result<Self> {
        let n = r.chol.len();
        if r.chol.iter().any(|row| row.len() != n) {
            return Err(invalid("chol must be square"));
        }
        let chol = DMatrix::from_fn(n, n, |i, j| r.chol[i][j]);
        ModelParams::new(r.mu, r.theta, r.sigma, chol, r.subordinator, r.measure)
    }
}

impl From<ModelParams> for ModelParamsRecord {
    fn from(p: ModelParams) -> Self {
        let n = p.dim();
        ModelParamsRecord {
            measure: p.measure,
            chol: (0..n).map(|i| (0..n).map(|j| p.chol[(i, j)]).collect()).collect(),
            mu: p.mu,
            theta: p.theta,
            sigma: p.sigma,
            subordinator: p.sub,
        }
    }
}

const UNIT_DIAG_TOL: f64 = 1e-12;

impl ModelParams {
    pub fn new(
        mu: Vec<f64>,
        theta: Vec<f64>,
        sigma: Vec<f64>,
        chol: DMatrix<f64>,
        sub: SubordinatorLaw,
        measure: Measure,
    ) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(invalid("model needs at least one asset"));
        }
        if theta.len() != n || sigma.len() != n || chol.nrows() != n || chol.ncols() != n {
            return Err(invalid(format!(
                "dimension mismatch: mu {n}, theta {}, sigma {}, chol {}x{}",
                theta.len(),
                sigma.len(),
                chol.nrows(),
                chol.ncols()
            )));
        }
        if mu.iter().chain(&theta).any(|x| !x.is_finite()) {
            return Err(invalid("mu and theta must be finite"));
        }
        if let Some(j) = sigma.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(invalid(format!("sigma[{j}] = {} must be positive", sigma[j])));
        }
        for i in 0..n {
            if !(chol[(i, i)] > 0.0) {
                return Err(invalid(format!("chol[{i},{i}] must be positive")));
            }
            for j in (i + 1)..n {
                if chol[(i, j)] != 0.0 {
                    return Err(invalid("chol must be lower triangular"));
                }
            }
            let norm2: f64 = (0..=i).map(|j| chol[(i, j)].powi(2)).sum();
            if (norm2 - 1.0).abs() > UNIT_DIAG_TOL {
                return Err(invalid(format!("row {i} of chol has squared norm {norm2}, need 1")));
            }
        }
        sub.validate()?;
        if let SubordinatorLaw::Cts(c) = &sub {
            if !c.is_subordinator() {
                return Err(invalid(format!("CTS clock needs omega < 1, got {}", c.omega)));
            }
        }
        Ok(ModelParams { mu, theta, sigma, chol, sub, measure })
    }

    /// Builds the factor from a correlation matrix.
    pub fn from_correlation(
        mu: Vec<f64>,
        theta: Vec<f64>,
        sigma: Vec<f64>,
        corr: &DMatrix<f64>,
        sub: SubordinatorLaw,
        measure: Measure,
    ) -> Result<Self> {
        let chol = correlation_cholesky(corr)?;
        Self::new(mu, theta, sigma, chol, sub, measure)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }
    pub fn sub(&self) -> &SubordinatorLaw {
        &self.sub
    }
    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn family(&self) -> Family {
        match self.sub {
            SubordinatorLaw::Cts(_) => Family::Mnts,
            SubordinatorLaw::Gig(_) => Family::Mgh,
        }
    }

    pub fn with_mu(&self, mu: Vec<f64>) -> Result<Self> {
        Self::new(mu, self.theta.clone(), self.sigma.clone(), self.chol.clone(), self.sub, self.measure)
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    pub fn with_parts(&self, mu: Vec<f64>, theta: Vec<f64>, sigma: Vec<f64>, sub: SubordinatorLaw) -> Result<Self> {
        Self::new(mu, theta, sigma, self.chol.clone(), sub, self.measure)
    }

    /// `AAᵀ`.
    pub fn correlation(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| self.chol[(i, k)] * self.chol[(j, k)]).sum();
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        c
    }

    /// `Σ = D_σ AAᵀ D_σ`.
    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        let mut c = self.correlation();
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                c[(i, j)] *= self.sigma[i] * self.sigma[j];
            }
        }
        c
    }

    /// `Σh` without forming `Σ`.
    pub fn sigma_mul(&self, h: &[f64]) -> Vec<f64> {
        let dh = DVector::from_iterator(self.dim(), h.iter().zip(&self.sigma).map(|(a, s)| a * s));
        let v = &self.chol * (self.chol.transpose() * dh);
        v.iter().zip(&self.sigma).map(|(a, s)| a * s).collect()
    }

    /// `h'Σh`.
    pub fn quad_form(&self, h: &[f64]) -> f64 {
        let dh = DVector::from_iterator(self.dim(), h.iter().zip(&self.sigma).map(|(a, s)| a * s));
        (self.chol.transpose() * dh).norm_squared()
    }

    /// `κ(h) = h'θ + ½ h'Σh`, the Gaussian part of the exponent at `h`.
    pub fn kappa(&self, h: &[f64]) -> f64 {
        h.iter().zip(&self.theta).map(|(a, b)| a * b).sum::<f64>() + 0.5 * self.quad_form(h)
    }

    pub fn marginal(&self, j: usize) -> MixtureLaw {
        MixtureLaw::new(self.mu[j], self.theta[j], self.sigma[j], self.sub, 1.0)
    }

    /// Law of `w'Y`: same clock with `w'μ`, `w'θ` and `√(w'Σw)`.
    pub fn portfolio(&self, w: &[f64]) -> Result<MixtureLaw> {
        if w.len() != self.dim() {
            return Err(invalid("weight vector length differs from the model dimension"));
        }
        let dot = |a: &[f64]| a.iter().zip(w).map(|(x, y)| x * y).sum::<f64>();
        let s = self.quad_form(w).sqrt();
        Ok(MixtureLaw::new(dot(&self.mu), dot(&self.theta), s, self.sub, 1.0))
    }
}

/// Lower Cholesky factor of a correlation matrix with rows renormalized to
/// unit length.
pub fn correlation_cholesky(corr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = corr.nrows();
    if corr.ncols() != n || n == 0 {
        return Err(invalid("correlation matrix must be square and nonempty"));
    }
    for i in 0..n {
        if (corr[(i, i)] - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("correlation diagonal [{i}] = {}", corr[(i, i)])));
        }
        for j in 0..i {
            if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-12 {
                return Err(invalid("correlation matrix must be symmetric"));
            }
        }
    }
    let c = corr.clone().cholesky().ok_or_else(|| invalid("correlation matrix is not positive definite"))?;
    let mut l = c.l();
    for i in 0..n {
        let norm = l.row(i).norm();
        for j in 0..=i {
            l[(i, j)] /= norm;
        }
    }
    Ok(l)
}

/// Multivariate normal parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianParams {
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n || n == 0 {
            return Err(invalid("covariance shape differs from the mean"));
        }
        if cov.clone().cholesky().is_none() {
            return Err(invalid("covariance is not positive definite"));
        }
        Ok(GaussianParams { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn portfolio(&self, w: &[f64]) -> Result<GaussianLaw> {
        if w.len() != self.dim() {
            return Err(invalid("weight vector length differs from the model dimension"));
        }
        let wv = DVector::from_column_slice(w);
        let var = (wv.transpose() * &self.cov * &wv)[(0, 0)];
        let mean = w.iter().zip(&self.mean).map(|(a, b)| a * b).sum();
        GaussianLaw::new(mean, var.sqrt())
    }
}

/// Any fitted return model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedModel {
    Gaussian(GaussianParams),
    Mixture(ModelParams),
}

impl FittedModel {
    pub fn dim(&self) -> usize {
        match self {
            FittedModel::Gaussian(g) => g.dim(),
            FittedModel::Mixture(m) => m.dim(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            FittedModel::Gaussian(_) => Family::Gaussian,
            FittedModel::Mixture(m) => m.family(),
        }
    }

    /// Covariance of one-period returns.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        match self {
            FittedModel::Gaussian(g) => Ok(g.cov.clone()),
            FittedModel::Mixture(m) => {
                let c = m.sub().cumulants()?;
                let th = DVector::from_column_slice(m.theta());
                Ok(m.sigma_matrix() * c[0] + &th * th.transpose() * c[1])
            }
        }
    }
}
