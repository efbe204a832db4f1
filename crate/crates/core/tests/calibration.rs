mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsgh::calibration::{
    calibrate_day, double_objective, em_estimate, evaluate_objective, gaussian_estimate, gaussian_log_likelihood, ks_distance,
    ks_with_cdf, q_from_vector, q_vector, smile_arpe, CalibConfig, EmConfig,
};
use tsgh::esscher::esscher_inverse;
use tsgh::io::{business_days, market_for_date, synth_generate};
use tsgh::models::{moments, simulate_increments, Family, FittedModel, ModelParams};
use tsgh::pricing::{AssetSmile, MarketData, PricingConfig, SmileQuote};
use tsgh::subordinators::{GigParams, SubordinatorLaw};

use common::{corr, daily, gig, model};

struct World {
    q: ModelParams,
    mkt: MarketData,
    returns: DMatrix<f64>,
}

fn template(n: usize, rate: f64) -> MarketData {
    let quotes: Vec<SmileQuote> = [1.0 / 12.0, 0.25]
        .iter()
        .flat_map(|&t| [0.9, 1.0, 1.1].map(|m| SmileQuote { maturity: t, moneyness: m, implied_vol: 0.2 }))
        .collect();
    let assets = (0..n).map(|_| AssetSmile { spot: 100.0, dividend: 0.0, quotes: quotes.clone() }).collect();
    MarketData::new(rate, assets, 252.0, (0.8, 1.2)).unwrap()
}

/// Noise-free quotes and `days` prices from a two-asset MGH world.
fn world(days: usize, noise: f64, seed: u64) -> World {
    let sub = SubordinatorLaw::Gig(GigParams::new(-1.5, 2.0, 0.5).unwrap());
    let p = model(&[4e-4, 6e-4], &[-2e-3, -3e-3], &[0.012, 0.016], &corr(2, |_, _| 0.35), sub);
    let tickers = vec!["A".to_string(), "B".to_string()];
    let dates = business_days(chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), days);
    let last = *dates.last().unwrap();
    let w = synth_generate(&p, &template(2, 0.01), &tickers, &dates, &[last], noise, seed).unwrap();
    let spots: Vec<f64> = (0..2).map(|j| w.panel.prices[(days - 1, j)]).collect();
    let mkt = market_for_date(&w.quotes, last, &tickers, &spots, 0.01, &[0.0, 0.0], 252.0, (0.8, 1.2)).unwrap();
    World { q: w.q, mkt, returns: w.panel.log_returns() }
}

#[test]
fn em_recovers_mgh() {
    let p = daily(3, gig(-1.5, 1.0));
    let x = simulate_increments(&p, 1.0, 6000, 5).unwrap();
    let fit = em_estimate(&x, Family::Mgh, &EmConfig::default()).unwrap();
    assert!(fit.trace.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs()));
    let FittedModel::Mixture(f) = fit.model else { panic!("expected a mixture fit") };
    let (a, b) = (moments(&p, 1.0).unwrap(), moments(&f, 1.0).unwrap());
    for j in 0..3 {
        let sd = a.variance[j].sqrt();
        assert!((a.mean[j] - b.mean[j]).abs() < 4.0 * sd / 6000f64.sqrt(), "mean {j}");
        assert!((b.variance[j].sqrt() / sd - 1.0).abs() < 0.10, "sd {j}");
        assert!((a.excess_kurtosis[j] - b.excess_kurtosis[j]).abs() < 0.25 * a.excess_kurtosis[j], "kurtosis {j}");
        for k in 0..j {
            assert!((a.correlation[j][k] - b.correlation[j][k]).abs() < 0.05);
        }
    }
}

#[test]
fn gaussian_fit_is_the_mle() {
    let x = simulate_increments(&daily(2, gig(-1.0, 2.0)), 1.0, 400, 9).unwrap();
    let g = gaussian_estimate(&x).unwrap();
    let t = x.nrows() as f64;
    for j in 0..2 {
        let m = x.column(j).mean();
        assert!((g.mean[j] - m).abs() < 1e-15);
        for k in 0..2 {
            let c = x.column(j).iter().zip(x.column(k).iter()).map(|(a, b)| (a - m) * (b - x.column(k).mean())).sum::<f64>() / t;
            assert!((g.cov[(j, k)] - c).abs() < 1e-14);
        }
    }
    let best = gaussian_log_likelihood(&g, &x).unwrap();
    let mut shifted = g.clone();
    shifted.mean[0] += 1e-4;
    assert!(gaussian_log_likelihood(&shifted, &x).unwrap() < best);
    let mut scaled = g.clone();
    scaled.cov *= 1.01;
    assert!(gaussian_log_likelihood(&scaled, &x).unwrap() < best);
}

#[test]
fn em_is_permutation_equivariant() {
    let x = simulate_increments(&daily(3, gig(-1.5, 1.0)), 1.0, 1500, 21).unwrap();
    let perm = [2, 0, 1];
    let xp = DMatrix::from_fn(x.nrows(), 3, |i, j| x[(i, perm[j])]);
    let fit = |m: &DMatrix<f64>| match em_estimate(m, Family::Mgh, &EmConfig::default()).unwrap().model {
        FittedModel::Mixture(p) => p,
        FittedModel::Gaussian(_) => unreachable!(),
    };
    let (a, b) = (fit(&x), fit(&xp));
    for j in 0..3 {
        assert!((b.sigma()[j] / a.sigma()[perm[j]] - 1.0).abs() < 1e-4);
        assert!((b.theta()[j] - a.theta()[perm[j]]).abs() < 1e-4 * a.sigma()[perm[j]]);
    }
}

#[test]
fn ks_p_values_are_uniform_under_the_truth() {
    let p = daily(1, common::cts(0.7, 1.0));
    let law = p.marginal(0);
    let small = (0..200u64)
        .filter(|&s| {
            let x = simulate_increments(&p, 1.0, 1500, 1000 + s).unwrap();
            ks_distance(x.as_slice(), &law).unwrap().p_value < 0.05
        })
        .count() as f64
        / 200.0;
    assert!((0.02..=0.09).contains(&small), "{small}");
}

#[test]
fn ks_statistic_cases() {
    let x = simulate_increments(&daily(1, gig(-0.5, 1.0)), 1.0, 800, 4).unwrap();
    let mut s: Vec<f64> = x.as_slice().to_vec();
    s.sort_by(f64::total_cmp);
    let ecdf = |v: f64| s.partition_point(|&a| a <= v) as f64 / s.len() as f64;
    assert!(ks_with_cdf(&s, ecdf).unwrap().statistic <= 1.0 / s.len() as f64 + 1e-15);

    let law = daily(1, gig(-0.5, 1.0)).marginal(0);
    let sd = law_sd(&s);
    let stats: Vec<f64> = [0.0, 0.5, 1.0, 2.0]
        .iter()
        .map(|c| {
            let shifted: Vec<f64> = s.iter().map(|v| v + c * sd).collect();
            ks_distance(&shifted, &law).unwrap().statistic
        })
        .collect();
    assert!(stats.windows(2).all(|w| w[1] > w[0]), "{stats:?}");
}

fn law_sd(x: &[f64]) -> f64 {
    common::se(x) * (x.len() as f64).sqrt()
}

#[test]
fn arpe_cases() {
    let m = [0.2, 0.3, 0.3];
    assert_eq!(smile_arpe(&m, &m).unwrap(), 0.0);
    let up: Vec<f64> = m.iter().map(|v| v * 1.1).collect();
    assert!((smile_arpe(&up, &m).unwrap() - 0.1).abs() < 1e-14);
    assert!((smile_arpe(&[0.218, 0.3, 0.3], &m).unwrap() - 0.03).abs() < 1e-14);
    assert!(smile_arpe(&m[..2], &m).is_err());
}

#[test]
fn objective_cases() {
    let w = world(500, 0.0, 11);
    let cfg = PricingConfig::default();
    let truth = evaluate_objective(&w.q, &w.mkt, &w.returns, 3.0, &cfg).unwrap();
    assert!(truth.arpe.iter().all(|a| *a < 1e-6), "{:?}", truth.arpe);
    let pure = evaluate_objective(&w.q, &w.mkt, &w.returns, 0.0, &cfg).unwrap();
    assert!((pure.value - pure.arpe.iter().sum::<f64>()).abs() < 1e-15);

    // the truth beats random feasible points
    let boxes = CalibConfig::new(Family::Mgh, 499).unwrap().boxes;
    let (lo, hi) = boxes.bounds(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..*h)).collect();
        let v = q_from_vector(&x, Family::Mgh, w.q.chol(), &w.mkt)
            .map(|q| double_objective(&q, &w.mkt, &w.returns, 3.0, &cfg, 1e6))
            .unwrap_or(1e6);
        assert!(v >= truth.value, "{x:?}");
    }

    // quotes priced at another rate no longer fit
    let mut other = w.mkt.clone();
    other.rate = 0.05;
    let q = q_from_vector(&q_vector(&w.q), Family::Mgh, w.q.chol(), &other).unwrap();
    let moved = evaluate_objective(&q, &other, &w.returns, 3.0, &cfg).unwrap();
    assert!(moved.arpe.iter().all(|a| *a > 1e-4), "{:?}", moved.arpe);
}

#[test]
fn objective_ignores_ordering() {
    let w = world(400, 0.01, 12);
    let cfg = PricingConfig::default();
    let base = evaluate_objective(&w.q, &w.mkt, &w.returns, 3.0, &cfg).unwrap().value;
    let mut mkt = w.mkt.clone();
    for a in &mut mkt.assets {
        a.quotes.reverse();
    }
    let t = w.returns.nrows();
    let rev = DMatrix::from_fn(t, 2, |i, j| w.returns[(t - 1 - i, j)]);
    let v = evaluate_objective(&w.q, &mkt, &rev, 3.0, &cfg).unwrap().value;
    assert!((v - base).abs() < 1e-12, "{v} vs {base}");
}

#[test]
fn calibration_outcome_is_consistent() {
    let w = world(400, 0.01, 13);
    let mut cfg = CalibConfig::new(Family::Mgh, 399).unwrap();
    cfg.optimizer.max_evals = 60;
    cfg.optimizer.restarts = 0;
    let out = calibrate_day(None, &w.mkt, &w.returns, &cfg, &PricingConfig::default()).unwrap();
    assert_eq!(out.theta_q.chol(), out.em.chol());
    assert_eq!(out.theta_ph.chol(), out.em.chol());
    let mean: Vec<f64> = (0..2).map(|j| w.returns.column(j).mean()).collect();
    let inv = esscher_inverse(&out.theta_q, &w.mkt.rates(), &mean).unwrap().params;
    assert_eq!(inv, out.theta_ph);
    let (lo, hi) = cfg.boxes.bounds(2);
    let x = q_vector(&out.theta_q);
    assert!(x.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| l <= v && v <= h));
}
