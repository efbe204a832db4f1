//! Maximum-likelihood estimation of the historical law by EM.
//!
//! Both mixtures share the conditional-Gaussian complete-data likelihood, so
//! the location, skew and dispersion updates are the same closed forms. The
//! clock update differs: the GIG posterior is closed form, while the
//! tempered stable clock is replaced by a fixed grid of clock values whose
//! weights follow its density. The clock mean is pinned to one, which
//! removes the scale redundancy between the clock and `Σ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{Family, FittedModel, GaussianParams, Measure, ModelParams};
use crate::numerics::bessel::{d_ln_bessel_k_dnu, ln_bessel_k};
use crate::numerics::{minimize_box, BoxOptions, CosExpansion};
use crate::subordinators::{CtsParams, GigParams, SubordinatorLaw};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the log-likelihood gains less than `tol · (1 + |ℓ|)`.
    pub tol: f64,
    /// Box for `(ε, ᾱ)` of the GIG clock.
    pub gig_box: [[f64; 2]; 2],
    /// Box for `(ω, λ)` of the tempered stable clock.
    pub cts_box: [[f64; 2]; 2],
    /// Clock values in the tempered stable grid.
    pub grid_size: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 300,
            tol: 1e-10,
            gig_box: [[-8.0, 8.0], [1e-3, 50.0]],
            cts_box: [[0.05, 0.99], [1e-3, 50.0]],
            grid_size: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    pub model: FittedModel,
    pub log_likelihood: f64,
    /// Log-likelihood after each iteration; non-decreasing.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Location, skew and full dispersion matrix.
#[derive(Clone, Debug)]
struct Core {
    mu: DVector<f64>,
    gamma: DVector<f64>,
    sigma: DMatrix<f64>,
}

struct Prepared {
    ln_det: f64,
    /// `γ'Σ⁻¹γ`.
    g: f64,
    /// Per observation `(x-μ)'Σ⁻¹(x-μ)` and `(x-μ)'Σ⁻¹γ`.
    q: Vec<f64>,
    l: Vec<f64>,
}

fn prepare(x: &DMatrix<f64>, c: &Core) -> Result<Prepared> {
    let chol = c.sigma.clone().cholesky().ok_or_else(|| Error::Domain("dispersion matrix lost definiteness".into()))?;
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let sg = chol.solve(&c.gamma);
    let g = c.gamma.dot(&sg);
    let t = x.nrows();
    let mut q = Vec::with_capacity(t);
    let mut l = Vec::with_capacity(t);
    for r in 0..t {
        let d = x.row(r).transpose() - &c.mu;
        let sd = chol.solve(&d);
        q.push(d.dot(&sd));
        l.push(d.dot(&sg));
    }
    Ok(Prepared { ln_det, g, q, l })
}

/// Closed-form location/skew/dispersion update from `E[1/W | x_t]` and
/// `E[W | x_t]`.
fn core_update(x: &DMatrix<f64>, delta: &[f64], eta: &[f64]) -> Core {
    let t = x.nrows();
    let n = x.ncols();
    let tf = t as f64;
    let dbar = delta.iter().sum::<f64>() / tf;
    let ebar = eta.iter().sum::<f64>() / tf;
    let xbar = DVector::from_fn(n, |j, _| x.column(j).mean());
    let mut sx = DVector::zeros(n);
    for r in 0..t {
        sx += x.row(r).transpose() * delta[r];
    }
    let sx = sx / tf;
    let denom = dbar * ebar - 1.0;
    let gamma = if denom > 1e-14 { (&xbar * dbar - &sx) / denom } else { DVector::zeros(n) };
    let mu = (&sx - &gamma) / dbar;
    let mut s = DMatrix::zeros(n, n);
    for r in 0..t {
        let d = x.row(r).transpose() - &mu;
        s += &d * d.transpose() * delta[r];
    }
    let mut sigma = s / tf - &gamma * gamma.transpose() * ebar;
    sigma = (&sigma + sigma.transpose()) * 0.5;
    Core { mu, gamma, sigma }
}

fn to_params(c: &Core, sub: SubordinatorLaw) -> Result<ModelParams> {
    let n = c.mu.len();
    let sd: Vec<f64> = (0..n).map(|i| c.sigma[(i, i)].sqrt()).collect();
    let corr = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { c.sigma[(i, j)] / (sd[i] * sd[j]) });
    ModelParams::from_correlation(c.mu.iter().cloned().collect(), c.gamma.iter().cloned().collect(), sd, &corr, sub, Measure::P)
}

fn from_params(p: &ModelParams) -> Core {
    Core {
        mu: DVector::from_column_slice(p.mu()),
        gamma: DVector::from_column_slice(p.theta()),
        sigma: p.sigma_matrix(),
    }
}

fn check_window(x: &DMatrix<f64>) -> Result<()> {
    let (t, n) = x.shape();
    if n == 0 || t <= n + 1 {
        return Err(invalid(format!("window of {t} observations is too short for {n} assets")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("window contains non-finite returns"));
    }
    Ok(())
}

/// Sample mean and maximum-likelihood covariance.
pub fn gaussian_estimate(x: &DMatrix<f64>) -> Result<GaussianParams> {
    check_window(x)?;
    let (t, n) = x.shape();
    let mean = DVector::from_fn(n, |j, _| x.column(j).mean());
    let mut cov = DMatrix::zeros(n, n);
    for r in 0..t {
        let d = x.row(r).transpose() - &mean;
        cov += &d * d.transpose();
    }
    GaussianParams::new(mean.iter().cloned().collect(), cov / t as f64)
}

/// Fits the given family to the rows of `x`.
pub fn em_estimate(x: &DMatrix<f64>, family: Family, cfg: &EmConfig) -> Result<EmResult> {
    check_window(x)?;
    match family {
        Family::Gaussian => {
            let g = gaussian_estimate(x)?;
            let ll = gaussian_log_likelihood(&g, x)?;
            Ok(EmResult { model: FittedModel::Gaussian(g), log_likelihood: ll, trace: vec![ll], iterations: 0, converged: true })
        }
        Family::Mgh | Family::Mnts => {
            let g = gaussian_estimate(x)?;
            let n = x.ncols();
            let sd: Vec<f64> = (0..n).map(|i| g.cov[(i, i)].sqrt()).collect();
            let corr = DMatrix::from_fn(n, n, |i, j| g.cov[(i, j)] / (sd[i] * sd[j]));
            let sub = if family == Family::Mgh {
                SubordinatorLaw::Gig(GigParams::with_unit_mean(-1.0, 1.0)?)
            } else {
                SubordinatorLaw::Cts(CtsParams::with_unit_mean(0.7, 1.0)?)
            };
            let init = ModelParams::from_correlation(g.mean.clone(), vec![0.0; n], sd, &corr, sub, Measure::P)?;
            em_estimate_from(x, &init, cfg)
        }
    }
}

/// EM started from `init`; the family follows its clock.
pub fn em_estimate_from(x: &DMatrix<f64>, init: &ModelParams, cfg: &EmConfig) -> Result<EmResult> {
    check_window(x)?;
    if init.dim() != x.ncols() {
        return Err(invalid("initial model and window differ in dimension"));
    }
    match init.sub() {
        SubordinatorLaw::Gig(g) => em_gig(x, init, g, cfg),
        SubordinatorLaw::Cts(c) => em_cts(x, init, c, cfg),
    }
}

fn alpha_bar_of(g: &GigParams) -> f64 {
    (g.chi * g.psi).sqrt()
}

fn em_gig(x: &DMatrix<f64>, init: &ModelParams, g0: &GigParams, cfg: &EmConfig) -> Result<EmResult> {
    let (t, n) = x.shape();
    let mut core = from_params(init);
    let mut gig = GigParams::with_unit_mean(g0.epsilon, alpha_bar_of(g0).max(1e-3))?;
    let mut trace = vec![mgh_ll_core(x, &core, &gig)?];
    let mut converged = false;
    let mut iterations = 0;
    let posterior = |prep: &Prepared, gig: &GigParams| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let lam = gig.epsilon - 0.5 * n as f64;
        let psi = gig.psi + prep.g;
        let mut delta = Vec::with_capacity(t);
        let mut eta = Vec::with_capacity(t);
        let mut xi = Vec::with_capacity(t);
        for r in 0..t {
            let chi = gig.chi + prep.q[r];
            let w = (chi * psi).sqrt();
            let ratio = (chi / psi).sqrt();
            let k0 = ln_bessel_k(lam, w)?;
            eta.push(ratio * (ln_bessel_k(lam + 1.0, w)? - k0).exp());
            delta.push((ln_bessel_k(lam - 1.0, w)? - k0).exp() / ratio);
            xi.push(ratio.ln() + d_ln_bessel_k_dnu(lam, w)?);
        }
        Ok((delta, eta, xi))
    };
    while iterations < cfg.max_iter {
        iterations += 1;
        let prep = prepare(x, &core)?;
        let (delta, eta, _) = posterior(&prep, &gig)?;
        core = core_update(x, &delta, &eta);
        let prep = prepare(x, &core)?;
        let (delta, eta, xi) = posterior(&prep, &gig)?;
        let (db, eb, xb) = (mean(&delta), mean(&eta), mean(&xi));
        let obj = |v: &[f64]| -> f64 {
            match GigParams::with_unit_mean(v[0], v[1]) {
                Ok(p) => match ln_bessel_k(p.epsilon, v[1]) {
                    Ok(lk) => {
                        -(0.5 * p.epsilon * (p.psi / p.chi).ln() - std::f64::consts::LN_2 - lk + (p.epsilon - 1.0) * xb
                            - 0.5 * (p.chi * db + p.psi * eb))
                    }
                    Err(_) => f64::INFINITY,
                },
                Err(_) => f64::INFINITY,
            }
        };
        let start = [
            gig.epsilon.clamp(cfg.gig_box[0][0], cfg.gig_box[0][1]),
            alpha_bar_of(&gig).clamp(cfg.gig_box[1][0], cfg.gig_box[1][1]),
        ];
        let rep = minimize_box(
            obj,
            &start,
            &[cfg.gig_box[0][0], cfg.gig_box[1][0]],
            &[cfg.gig_box[0][1], cfg.gig_box[1][1]],
            BoxOptions { max_evals: 400, f_tol: 1e-13, x_tol: 1e-9, initial_step: 0.05, restarts: 1 },
        )?;
        if rep.value < obj(&start) {
            gig = GigParams::with_unit_mean(rep.x[0], rep.x[1])?;
        }
        let ll = mgh_ll_core(x, &core, &gig)?;
        let prev = *trace.last().expect("trace is never empty");
        trace.push(ll);
        if (ll - prev).abs() <= cfg.tol * (1.0 + ll.abs()) {
            converged = true;
            break;
        }
    }
    let ll = *trace.last().expect("trace is never empty");
    let model = to_params(&core, SubordinatorLaw::Gig(gig))?;
    Ok(EmResult { model: FittedModel::Mixture(model), log_likelihood: ll, trace, iterations, converged })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mgh_ll_core(x: &DMatrix<f64>, c: &Core, g: &GigParams) -> Result<f64> {
    let prep = prepare(x, c)?;
    let n = x.ncols() as f64;
    let (eps, chi, psi) = (g.epsilon, g.chi, g.psi);
    let b = psi + prep.g;
    let ln_c = -eps * (chi * psi).sqrt().ln() + eps * psi.ln() + (0.5 * n - eps) * b.ln()
        - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * prep.ln_det
        - ln_bessel_k(eps, (chi * psi).sqrt())?;
    let mut ll = 0.0;
    for r in 0..x.nrows() {
        let arg = ((chi + prep.q[r]) * b).sqrt();
        ll += ln_c + ln_bessel_k(eps - 0.5 * n, arg)? + prep.l[r] - (0.5 * n - eps) * arg.ln();
    }
    Ok(ll)
}

/// Clock grid `s_k` with log-weights, scaled to the clock mean.
pub(crate) struct ClockGrid {
    pub s: Vec<f64>,
    pub ln_w: Vec<f64>,
}

const GRID_LO: f64 = 1e-4;
const GRID_HI: f64 = 1e3;

fn unit_grid(size: usize) -> Vec<f64> {
    let (a, b) = (GRID_LO.ln(), GRID_HI.ln());
    (0..size).map(|k| (a + (b - a) * k as f64 / (size - 1) as f64).exp()).collect()
}

pub(crate) fn clock_grid(sub: &SubordinatorLaw, size: usize) -> Result<ClockGrid> {
    let c = sub.cumulants()?;
    let s: Vec<f64> = unit_grid(size).into_iter().map(|g| g * c[0]).collect();
    let dens: Vec<f64> = match sub {
        SubordinatorLaw::Gig(g) => s.iter().map(|&v| g.density(v)).collect::<Result<_>>()?,
        SubordinatorLaw::Cts(p) => {
            let hi = (c[0] + 40.0 * c[1].sqrt()).min(*s.last().expect("grid nonempty"));
            let e = CosExpansion::build(|u| Ok(p.cf(u)), 0.0, hi, 1e-14, 1 << 15)?;
            s.iter().map(|&v| e.density(v).max(0.0)).collect()
        }
    };
    // Trapezoid weights in log s: density · s · Δ ln s.
    let mut w: Vec<f64> = s.iter().zip(&dens).map(|(v, d)| v * d).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("clock density vanished on the grid".into()));
    }
    for v in &mut w {
        *v /= total;
    }
    Ok(ClockGrid { s, ln_w: w.iter().map(|v| v.ln()).collect() })
}

/// Per-observation log densities `ln Σ_k π_k N(x; μ + γ s_k, s_k Σ)` and
/// posterior weights over the grid if requested.
fn grid_e_step(x: &DMatrix<f64>, c: &Core, grid: &ClockGrid, mut post: Option<&mut DMatrix<f64>>) -> Result<Vec<f64>> {
    let prep = prepare(x, c)?;
    let n = x.ncols() as f64;
    let k = grid.s.len();
    let base = -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * prep.ln_det;
    let ln_s: Vec<f64> = grid.s.iter().map(|s| s.ln()).collect();
    let mut out = Vec::with_capacity(x.nrows());
    let mut buf = vec![0.0; k];
    for r in 0..x.nrows() {
        let (q, l) = (prep.q[r], prep.l[r]);
        let mut m = f64::NEG_INFINITY;
        for i in 0..k {
            let s = grid.s[i];
            let v = grid.ln_w[i] + base - 0.5 * n * ln_s[i] - 0.5 * (q / s - 2.0 * l + s * prep.g);
            buf[i] = v;
            m = m.max(v);
        }
        // Terms more than e^-40 below the peak cannot move the sum.
        let z: f64 = buf.iter().filter(|&&v| v - m > -40.0).map(|v| (v - m).exp()).sum();
        let lse = m + z.ln();
        out.push(lse);
        if let Some(p) = post.as_deref_mut() {
            for i in 0..k {
                let d = buf[i] - lse;
                p[(r, i)] = if d > -40.0 { d.exp() } else { 0.0 };
            }
        }
    }
    Ok(out)
}

fn em_cts(x: &DMatrix<f64>, init: &ModelParams, c0: &CtsParams, cfg: &EmConfig) -> Result<EmResult> {
    let t = x.nrows();
    let size = cfg.grid_size.max(50);
    let mut core = from_params(init);
    let mut cts = CtsParams::with_unit_mean(
        c0.omega.clamp(cfg.cts_box[0][0], cfg.cts_box[0][1]),
        c0.lambda.clamp(cfg.cts_box[1][0], cfg.cts_box[1][1]),
    )?;
    let mut grid = clock_grid(&SubordinatorLaw::Cts(cts), size)?;
    let mut trace = vec![grid_e_step(x, &core, &grid, None)?.iter().sum::<f64>()];
    let mut post = DMatrix::zeros(t, size);
    let mut converged = false;
    let mut iterations = 0;
    let mut step = 0.05;
    while iterations < cfg.max_iter {
        iterations += 1;
        grid_e_step(x, &core, &grid, Some(&mut post))?;
        let mut delta = vec![0.0; t];
        let mut eta = vec![0.0; t];
        for r in 0..t {
            for i in 0..size {
                let p = post[(r, i)];
                delta[r] += p / grid.s[i];
                eta[r] += p * grid.s[i];
            }
        }
        core = core_update(x, &delta, &eta);
        // ECME step: the clock maximizes the observed likelihood given the core.
        // Searched over (ω, ln λ); the step follows the size of the last move.
        let obj = |v: &[f64]| -> f64 {
            let Ok(p) = CtsParams::with_unit_mean(v[0], v[1].exp()) else { return f64::INFINITY };
            let Ok(g) = clock_grid(&SubordinatorLaw::Cts(p), size) else { return f64::INFINITY };
            match grid_e_step(x, &core, &g, None) {
                Ok(l) => -l.iter().sum::<f64>(),
                Err(_) => f64::INFINITY,
            }
        };
        let lo = [cfg.cts_box[0][0], cfg.cts_box[1][0].ln()];
        let hi = [cfg.cts_box[0][1], cfg.cts_box[1][1].ln()];
        let start = [cts.omega.clamp(lo[0], hi[0]), cts.lambda.ln().clamp(lo[1], hi[1])];
        let f_start = obj(&start);
        let rep = minimize_box(&obj, &start, &lo, &hi, BoxOptions { max_evals: 80, f_tol: 1e-13, x_tol: 1e-8, initial_step: step, restarts: 0 })?;
        if rep.value < f_start {
            let moved = (0..2).map(|i| ((rep.x[i] - start[i]) / (hi[i] - lo[i])).abs()).fold(0.0, f64::max);
            step = (4.0 * moved).clamp(1e-4, 0.05);
            cts = CtsParams::with_unit_mean(rep.x[0], rep.x[1].exp())?;
            grid = clock_grid(&SubordinatorLaw::Cts(cts), size)?;
        }
        let ll: f64 = grid_e_step(x, &core, &grid, None)?.iter().sum();
        let prev = *trace.last().expect("trace is never empty");
        trace.push(ll);
        if (ll - prev).abs() <= cfg.tol * (1.0 + ll.abs()) {
            converged = true;
            break;
        }
    }
    let ll = *trace.last().expect("trace is never empty");
    let model = to_params(&core, SubordinatorLaw::Cts(cts))?;
    Ok(EmResult { model: FittedModel::Mixture(model), log_likelihood: ll, trace, iterations, converged })
}

pub fn gaussian_log_likelihood(g: &GaussianParams, x: &DMatrix<f64>) -> Result<f64> {
    let chol = g.cov.clone().cholesky().ok_or_else(|| invalid("covariance is not positive definite"))?;
    let n = g.dim() as f64;
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let mu = DVector::from_column_slice(&g.mean);
    let mut ll = 0.0;
    for r in 0..x.nrows() {
        let d = x.row(r).transpose() - &mu;
        ll += -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + ln_det + d.dot(&chol.solve(&d)));
    }
    Ok(ll)
}

/// Log-likelihood of the rows of `x` under a one-period mixture model:
/// closed form for GIG clocks with `χ, ψ > 0`, a clock grid otherwise.
pub fn log_likelihood(p: &ModelParams, x: &DMatrix<f64>) -> Result<f64> {
    if p.dim() != x.ncols() {
        return Err(invalid("model and data differ in dimension"));
    }
    let core = from_params(p);
    match p.sub() {
        SubordinatorLaw::Gig(g) if g.chi > 0.0 && g.psi > 0.0 => mgh_ll_core(x, &core, g),
        sub => {
            let grid = clock_grid(sub, EmConfig::default().grid_size)?;
            Ok(grid_e_step(x, &core, &grid, None)?.iter().sum())
        }
    }
}

/// Information criteria for `k` free parameters and `t` observations.
pub fn aic_bic(log_likelihood: f64, k: usize, t: usize) -> (f64, f64) {
    let k = k as f64;
    (2.0 * k - 2.0 * log_likelihood, k * (t as f64).ln() - 2.0 * log_likelihood)
}
