//! Nonlinear systems and scalar roots.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Outcome of a system solve. The best iterate is always reported, even when
/// the solver gives up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSolveReport {
    pub solution: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Max-norm of the residual vector at `solution`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: 100, fd_step: 1e-6 }
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `f(x) = 0` (or the least-squares problem when `f` has more
/// components than `x`) by damped Gauss–Newton with a Levenberg–Marquardt
/// fallback. `f` returns `None` outside its domain; steps that leave the
/// domain are halved.
pub fn solve_system<F>(f: F, x0: &[f64], opts: SolverOptions) -> Result<RootSolveReport>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    if n == 0 {
        return Err(invalid("empty system"));
    }
    let mut evals = 1;
    let mut fx = f(x0).ok_or_else(|| Error::Domain("initial point outside the domain".into()))?;
    let m = fx.len();
    if m < n {
        return Err(invalid(format!("{m} equations for {n} unknowns")));
    }
    let mut x = x0.to_vec();
    let mut iterations = 0;
    let mut lm_mu = 1e-3;

    while iterations < opts.max_iter {
        if fx.iter().any(|v| !v.is_finite()) {
            break;
        }
        if norm_inf(&fx) <= opts.tol {
            break;
        }
        iterations += 1;

        // Central-difference Jacobian, one-sided at the domain boundary.
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let fp = f(&xp);
            let fm = f(&xm);
            evals += 2;
            match (fp, fm) {
                (Some(p), Some(q)) => {
                    for i in 0..m {
                        jac[(i, j)] = (p[i] - q[i]) / (2.0 * h);
                    }
                }
                (Some(p), None) => {
                    for i in 0..m {
                        jac[(i, j)] = (p[i] - fx[i]) / h;
                    }
                }
                (None, Some(q)) => {
                    for i in 0..m {
                        jac[(i, j)] = (fx[i] - q[i]) / h;
                    }
                }
                (None, None) => {
                    return Ok(report(x, fx, iterations, evals, opts.tol));
                }
            }
        }
        let r = DVector::from_column_slice(&fx);
        let base = norm2(&fx);

        let mut accepted = false;
        // Gauss–Newton direction by SVD least squares.
        let svd = jac.clone().svd(true, true);
        if let Ok(step) = svd.solve(&(-&r), 1e-14) {
            let mut t = 1.0;
            while t > 1e-10 {
                let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
                evals += 1;
                if let Some(fnew) = f(&xn) {
                    if fnew.iter().all(|v| v.is_finite()) && norm2(&fnew) < (1.0 - 1e-4 * t) * base {
                        x = xn;
                        fx = fnew;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        if !accepted {
            // Levenberg–Marquardt fallback.
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * &r;
            for _ in 0..30 {
                let mut a = jtj.clone();
                for i in 0..n {
                    a[(i, i)] += lm_mu * jtj[(i, i)].max(1e-12);
                }
                let Some(chol) = a.cholesky() else {
                    lm_mu *= 10.0;
                    continue;
                };
                let step = chol.solve(&(-&jtr));
                let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
                evals += 1;
                if let Some(fnew) = f(&xn) {
                    if fnew.iter().all(|v| v.is_finite()) && norm2(&fnew) < base {
                        x = xn;
                        fx = fnew;
                        accepted = true;
                        lm_mu = (lm_mu * 0.3).max(1e-12);
                        break;
                    }
                }
                lm_mu *= 10.0;
            }
        }
        if !accepted {
            break;
        }
    }
    Ok(report(x, fx, iterations, evals, opts.tol))
}

fn report(x: Vec<f64>, fx: Vec<f64>, iterations: usize, evaluations: usize, tol: f64) -> RootSolveReport {
    let residual_norm = norm_inf(&fx);
    RootSolveReport {
        solution: x,
        converged: residual_norm <= tol,
        residuals: fx,
        residual_norm,
        iterations,
        evaluations,
    }
}

/// Brent's method on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Domain(format!("root not bracketed on [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = f(b);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_needs_bracket() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn newton_on_nonlinear_pair() {
        let f = |x: &[f64]| Some(vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0].exp() + x[1] - 1.0]);
        let rep = solve_system(f, &[1.0, -1.0], SolverOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.residual_norm <= 1e-12);
    }

    #[test]
    fn respects_domain() {
        // ln(x) = -3 starting far from the root; big steps leave x > 0.
        let f = |x: &[f64]| if x[0] > 0.0 { Some(vec![x[0].ln() + 3.0]) } else { None };
        let rep = solve_system(f, &[5.0], SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!((rep.solution[0] - (-3f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_system_reports_failure() {
        let f = |x: &[f64]| Some(vec![x[0] - 1.0, x[0] - 2.0]);
        let rep = solve_system(f, &[0.0], SolverOptions::default()).unwrap();
        assert!(!rep.converged);
        assert!((rep.solution[0] - 1.5).abs() < 1e-6);
    }
}
