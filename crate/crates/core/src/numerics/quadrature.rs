//! Adaptive Gauss–Kronrod and fixed-node Gauss–Legendre quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadratureRule {
    /// Globally adaptive 7/15-point Gauss–Kronrod.
    Adaptive,
    /// Composite Gauss–Legendre with `panels` panels of `nodes` points.
    FixedNode { nodes: usize, panels: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub rule: QuadratureRule,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            rule: QuadratureRule::Adaptive,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_evals: 200_000,
        }
    }
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

impl Quadrature {
    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn fixed(nodes: usize, panels: usize) -> Self {
        Quadrature {
            rule: QuadratureRule::FixedNode { nodes, panels },
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || self.abs_tol + self.rel_tol == 0.0 {
            return Err(invalid("quadrature tolerances must be nonnegative and not both zero"));
        }
        if let QuadratureRule::FixedNode { nodes, panels } = self.rule {
            if nodes == 0 || panels == 0 {
                return Err(invalid("fixed-node rule needs at least one node and panel"));
            }
        }
        Ok(())
    }

    /// Integrates `f` over `[a, b]`; `b` may be `+∞` (mapped to `[0, 1)`).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<QuadResult> {
        self.validate()?;
        if !a.is_finite() || b.is_nan() || b < a {
            return Err(invalid(format!("bad integration range [{a}, {b}]")));
        }
        if b == f64::INFINITY {
            let mapped = move |t: f64| {
                let one_m = 1.0 - t;
                let x = a + t / one_m;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v / (one_m * one_m)
                }
            };
            return self.integrate_finite(mapped, 0.0, 1.0);
        }
        self.integrate_finite(f, a, b)
    }

    fn integrate_finite<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<QuadResult> {
        if a == b {
            return Ok(QuadResult { value: 0.0, error_estimate: 0.0, evaluations: 0 });
        }
        match self.rule {
            QuadratureRule::FixedNode { nodes, panels } => {
                let (x, w) = gauss_legendre(nodes);
                let width = (b - a) / panels as f64;
                let mut total = 0.0;
                for p in 0..panels {
                    let lo = a + p as f64 * width;
                    let c = lo + 0.5 * width;
                    let mut s = 0.0;
                    for (xi, wi) in x.iter().zip(&w) {
                        s += wi * f(c + 0.5 * width * xi);
                    }
                    total += 0.5 * width * s;
                }
                Ok(QuadResult {
                    value: total,
                    error_estimate: f64::NAN,
                    evaluations: nodes * panels,
                })
            }
            QuadratureRule::Adaptive => {
                let mut heap = BinaryHeap::new();
                let (v, e) = gk15(&mut f, a, b);
                let mut evals = 15;
                let mut value = v;
                let mut error = e;
                heap.push(Segment { a, b, value: v, error: e });
                loop {
                    if !value.is_finite() {
                        return Err(Error::Domain("integrand produced a non-finite value".into()));
                    }
                    if error <= self.abs_tol.max(self.rel_tol * value.abs()) {
                        break;
                    }
                    if evals + 30 > self.max_evals {
                        return Err(Error::Domain(format!(
                            "quadrature budget exhausted (value {value:.6e}, error {error:.3e})"
                        )));
                    }
                    let seg = heap.pop().expect("heap never empties");
                    let mid = 0.5 * (seg.a + seg.b);
                    if mid <= seg.a || mid >= seg.b {
                        // Interval cannot be split further; accept what we have.
                        heap.push(seg);
                        break;
                    }
                    let (v1, e1) = gk15(&mut f, seg.a, mid);
                    let (v2, e2) = gk15(&mut f, mid, seg.b);
                    evals += 30;
                    value += v1 + v2 - seg.value;
                    error += e1 + e2 - seg.error;
                    heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
                    heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
                }
                // Re-sum to shed accumulated rounding from the running totals.
                let mut v = 0.0;
                let mut e = 0.0;
                for s in heap.iter() {
                    v += s.value;
                    e += s.error;
                }
                Ok(QuadResult { value: v, error_estimate: e, evaluations: evals })
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
