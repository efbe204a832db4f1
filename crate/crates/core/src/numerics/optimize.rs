//! Box-constrained Nelder–Mead and projected gradient on a capped simplex.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxOptions {
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    /// Initial simplex edge in unit-cube coordinates.
    pub initial_step: f64,
    pub restarts: usize,
}

impl Default for BoxOptions {
    fn default() -> Self {
        BoxOptions { max_evals: 6_000, f_tol: 1e-10, x_tol: 1e-8, initial_step: 0.05, restarts: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration; never increases.
    pub trace: Vec<f64>,
}

/// Minimizes `obj` over the box `[lower, upper]` starting from `x0`.
/// Non-finite objective values are treated as `+∞`.
pub fn minimize_box<F>(mut obj: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: BoxOptions) -> Result<MinimizeReport>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(invalid("box bounds and start point differ in length"));
    }
    for i in 0..n {
        if !(lower[i] <= upper[i]) || !lower[i].is_finite() || !upper[i].is_finite() {
            return Err(invalid(format!("bad bounds on coordinate {i}: [{}, {}]", lower[i], upper[i])));
        }
    }
    if let Some(i) = (0..n).find(|&i| !(x0[i] >= lower[i] && x0[i] <= upper[i])) {
        return Err(invalid(format!("start point {} outside [{}, {}] on coordinate {i}", x0[i], lower[i], upper[i])));
    }
    let free: Vec<usize> = (0..n).filter(|&i| upper[i] > lower[i]).collect();
    let to_x = |z: &[f64]| -> Vec<f64> {
        let mut x: Vec<f64> = (0..n).map(|i| x0[i].clamp(lower[i], upper[i])).collect();
        for (k, &i) in free.iter().enumerate() {
            x[i] = lower[i] + z[k].clamp(0.0, 1.0) * (upper[i] - lower[i]);
        }
        x
    };
    let mut evals = 0usize;
    let mut eval = |z: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = obj(&to_x(z));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let m = free.len();
    // Dimension-adaptive coefficients (Gao and Han); the classical values at m = 2.
    let mf = m as f64;
    let (expand, contract, shrink) = (1.0 + 2.0 / mf.max(2.0), 0.75 - 0.5 / mf.max(2.0), 1.0 - 1.0 / mf.max(2.0));
    let z_start: Vec<f64> = free
        .iter()
        .map(|&i| ((x0[i] - lower[i]) / (upper[i] - lower[i])).clamp(0.0, 1.0))
        .collect();
    if m == 0 {
        let v = eval(&z_start, &mut evals);
        return Ok(MinimizeReport {
            x: to_x(&z_start),
            value: v,
            evaluations: evals,
            iterations: 0,
            converged: true,
            trace: vec![v],
        });
    }

    let mut best_z = z_start;
    let mut best_f = eval(&best_z, &mut evals);
    let mut trace = vec![best_f];
    let mut iterations = 0;
    let mut converged = false;
    let mut step = opts.initial_step;

    for _round in 0..=opts.restarts {
        // Fresh simplex around the incumbent.
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_z.clone(), best_f)];
        for k in 0..m {
            let mut z = best_z.clone();
            z[k] = if z[k] + step <= 1.0 { z[k] + step } else { z[k] - step };
            let v = eval(&z, &mut evals);
            simplex.push((z, v));
        }
        let round_start = best_f;
        converged = false;
        while evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            iterations += 1;
            if simplex[0].1 < best_f {
                best_f = simplex[0].1;
                best_z = simplex[0].0.clone();
            }
            trace.push(best_f);
            let f_lo = simplex[0].1;
            let f_hi = simplex[m].1;
            let diam = simplex
                .iter()
                .skip(1)
                .map(|(z, _)| z.iter().zip(&simplex[0].0).fold(0.0f64, |d, (a, b)| d.max((a - b).abs())))
                .fold(0.0f64, f64::max);
            if (f_hi - f_lo).abs() <= opts.f_tol * (f_lo.abs() + opts.f_tol) && diam <= opts.x_tol
                || diam <= 1e-14
            {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; m];
            for (z, _) in simplex.iter().take(m) {
                for k in 0..m {
                    centroid[k] += z[k] / m as f64;
                }
            }
            let along = |t: f64, worst: &[f64]| -> Vec<f64> {
                (0..m).map(|k| (centroid[k] + t * (centroid[k] - worst[k])).clamp(0.0, 1.0)).collect()
            };
            let worst = simplex[m].0.clone();
            let zr = along(1.0, &worst);
            let fr = eval(&zr, &mut evals);
            if fr < simplex[0].1 {
                let ze = along(expand, &worst);
                let fe = eval(&ze, &mut evals);
                simplex[m] = if fe < fr { (ze, fe) } else { (zr, fr) };
            } else if fr < simplex[m - 1].1 {
                simplex[m] = (zr, fr);
            } else {
                let (zc, fc) = if fr < simplex[m].1 {
                    let z = along(contract, &worst);
                    let v = eval(&z, &mut evals);
                    (z, v)
                } else {
                    let z = along(-contract, &worst);
                    let v = eval(&z, &mut evals);
                    (z, v)
                };
                if fc < simplex[m].1.min(fr) {
                    simplex[m] = (zc, fc);
                } else {
                    let z0 = simplex[0].0.clone();
                    for s in simplex.iter_mut().skip(1) {
                        for k in 0..m {
                            s.0[k] = z0[k] + shrink * (s.0[k] - z0[k]);
                        }
                        s.1 = eval(&s.0, &mut evals);
                    }
                }
            }
        }
        for (z, v) in &simplex {
            if *v < best_f {
                best_f = *v;
                best_z = z.clone();
            }
        }
        trace.push(best_f);
        if evals >= opts.max_evals {
            break;
        }
        if converged && round_start - best_f <= opts.f_tol * (best_f.abs() + opts.f_tol) && _round > 0 {
            break;
        }
        step *= 0.5;
    }
    Ok(MinimizeReport {
        x: to_x(&best_z),
        value: best_f,
        evaluations: evals,
        iterations,
        converged,
        trace,
    })
}

/// Feasible set `{w : Σw = 1, lower <= w <= upper}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CappedSimplex {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CappedSimplex {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(invalid("bounds must be nonempty and equal in length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Infeasible("a lower bound exceeds its upper bound".into()));
        }
        let (sl, su): (f64, f64) = (lower.iter().sum(), upper.iter().sum());
        if sl > 1.0 + 1e-12 || su < 1.0 - 1e-12 {
            return Err(Error::Infeasible(format!(
                "bounds admit no fully invested portfolio (sum of lower {sl}, sum of upper {su})"
            )));
        }
        Ok(CappedSimplex { lower, upper })
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Euclidean projection: `clamp(v - τ)` with `τ` found by bisection.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let clamp_sum = |tau: f64| -> f64 {
            v.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(x, (l, u))| (x - tau).clamp(*l, *u))
                .sum()
        };
        let mut lo = v.iter().zip(&self.upper).map(|(x, u)| x - u).fold(f64::INFINITY, f64::min);
        let mut hi = v.iter().zip(&self.lower).map(|(x, l)| x - l).fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if clamp_sum(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| (x - tau).clamp(*l, *u))
            .collect()
    }

    /// `‖w - P(w - g)‖∞`, zero exactly at first-order stationary points.
    pub fn kkt_residual(&self, w: &[f64], g: &[f64]) -> f64 {
        let step: Vec<f64> = w.iter().zip(g).map(|(a, b)| a - b).collect();
        let p = self.project(&step);
        w.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexReport {
    pub weights: Vec<f64>,
    pub value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpgOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for SpgOptions {
    fn default() -> Self {
        SpgOptions { tol: 1e-9, max_iter: 2_000, memory: 10 }
    }
}

/// Spectral projected gradient with a nonmonotone Armijo search.
pub fn minimize_capped_simplex<F, G>(
    mut f: F,
    mut grad: G,
    x0: &[f64],
    set: &CappedSimplex,
    opts: SpgOptions,
) -> Result<SimplexReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if x0.len() != set.dim() {
        return Err(invalid("start point and bounds differ in length"));
    }
    let mut w = set.project(x0);
    let mut fw = f(&w)?;
    let mut g = grad(&w)?;
    let mut history = vec![fw];
    let pg0 = set.kkt_residual(&w, &g);
    let mut alpha = if pg0 > 0.0 { (1.0 / pg0).clamp(1e-10, 1e10) } else { 1.0 };
    let mut iterations = 0;
    let mut kkt = pg0;
    while iterations < opts.max_iter && kkt > opts.tol {
        iterations += 1;
        let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        let p = set.project(&trial);
        let d: Vec<f64> = p.iter().zip(&w).map(|(a, b)| a - b).collect();
        let gd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lam = 1.0;
        let (w_new, f_new) = loop {
            let cand: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + lam * b).collect();
            let fc = f(&cand)?;
            if fc <= f_ref + 1e-4 * lam * gd || lam < 1e-12 {
                break (cand, fc);
            }
            lam *= 0.5;
        };
        let g_new = grad(&w_new)?;
        let s: Vec<f64> = w_new.iter().zip(&w).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sty: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sts: f64 = s.iter().map(|a| a * a).sum();
        alpha = if sty <= 0.0 { 1e10 } else { (sts / sty).clamp(1e-10, 1e10) };
        let stalled = sts == 0.0;
        w = w_new;
        fw = f_new;
        g = g_new;
        history.push(fw);
        if history.len() > opts.memory {
            history.remove(0);
        }
        kkt = set.kkt_residual(&w, &g);
        if stalled {
            break;
        }
    }
    Ok(SimplexReport { weights: w, value: fw, kkt_residual: kkt, iterations, converged: kkt <= opts.tol })
}

/// Largest discrepancy between `grad` and central differences of `f`,
/// relative to `max(1, |g_i|)`.
pub fn check_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, grad: &[f64], x: &[f64], h: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let fd = (f(&xp) - f(&xm)) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
    }
    worst
}
