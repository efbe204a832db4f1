//! Multivariate normal mean–variance mixtures over a common clock.

mod cf;
mod law;
mod moments;
mod params;
mod simulate;

pub use cf::{joint_cf, joint_cf_complex, marginal_cf};
pub use law::{gh_ln_density_1d, GaussianLaw, MixtureLaw, ReturnLaw};
pub use moments::{moments, ModelMoments};
pub use params::{
    correlation_cholesky, Family, FittedModel, GaussianParams, Measure, ModelParams, ModelParamsRecord,
};
pub use simulate::{simulate_increments, simulate_portfolio};
