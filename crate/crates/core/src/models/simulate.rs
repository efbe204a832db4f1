//! Monte Carlo draws of the increments.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::params::ModelParams;
use crate::error::{invalid, Result};

/// Draws rows of one sampler into `out`, starting at `row`.
pub(crate) fn fill_rows<R: Rng>(p: &ModelParams, t: f64, out: &mut DMatrix<f64>, rows: std::ops::Range<usize>, rng: &mut R) -> Result<()> {
    let n = p.dim();
    let sampler = p.sub().sampler(t)?;
    let mut z = DVector::<f64>::zeros(n);
    for r in rows {
        let s = sampler.draw(rng);
        for k in 0..n {
            z[k] = rng.sample(StandardNormal);
        }
        let az = p.chol() * &z;
        let sq = s.sqrt();
        for j in 0..n {
            out[(r, j)] = p.mu()[j] * t + p.theta()[j] * s + sq * p.sigma()[j] * az[j];
        }
    }
    Ok(())
}

/// `count × n` matrix of independent draws of `Y_t`.
pub fn simulate_increments(p: &ModelParams, t: f64, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(invalid("count must be positive"));
    }
    let mut out = DMatrix::zeros(count, p.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fill_rows(p, t, &mut out, 0..count, &mut rng)?;
    Ok(out)
}

/// Independent draws of a portfolio `w'Y_t`, generated in chunks so memory
/// stays bounded for very large counts. Each chunk has its own stream.
pub fn simulate_portfolio(p: &ModelParams, w: &[f64], t: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    const CHUNK: usize = 1 << 16;
    if w.len() != p.dim() {
        return Err(invalid("weight vector length differs from the model dimension"));
    }
    let mut out = Vec::with_capacity(count);
    let mut buf = DMatrix::zeros(CHUNK, p.dim());
    let mut chunk = 0u64;
    while out.len() < count {
        let m = CHUNK.min(count - out.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        fill_rows(p, t, &mut buf, 0..m, &mut rng)?;
        for r in 0..m {
            out.push((0..p.dim()).map(|j| w[j] * buf[(r, j)]).sum());
        }
        chunk += 1;
    }
    Ok(out)
}
