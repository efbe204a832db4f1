//! Portfolio laws, VaR/AVaR and the minimum-AVaR, minimum-variance and
//! equally weighted allocations.

mod measures;
mod portfolio;

pub use measures::{avar, tail_risk, tail_risk_with, var, TailMethod, TailRisk};
pub use portfolio::{
    concentration, equal_weights, optimize_ma, optimize_mv, portfolio_law, MaResult, PortfolioLaw, PortfolioWeights,
    TailLevel,
};
