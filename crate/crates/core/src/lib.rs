//! Multivariate normal mean–variance mixtures with tempered-stable and
//! generalized-inverse-Gaussian clocks: densities, option prices, Esscher
//! changes of measure, calibration to returns and option smiles, tail-risk
//! portfolios and rolling backtests.

pub mod backtest;
pub mod calibration;
pub mod error;
pub mod esscher;
pub mod io;
pub mod models;
pub mod numerics;
pub mod pricing;
pub mod risk;
pub mod subordinators;

pub use error::{Error, Result};
