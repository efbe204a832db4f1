//! Historical estimation, goodness of fit and the joint historical/option
//! calibration.

mod em;
mod ks;
mod objective;
mod procedure;

pub use em::{aic_bic, em_estimate, em_estimate_from, gaussian_estimate, gaussian_log_likelihood, log_likelihood, EmConfig, EmResult};
pub use ks::{kolmogorov_p_value, ks_distance, ks_with_cdf, KsResult};
pub use objective::{double_objective, evaluate_objective, q_from_vector, q_vector, smile_arpe, ObjectiveBreakdown, ParameterBoxes};
pub use procedure::{calibrate_day, parameter_count, CalibConfig, CalibDiagnostics, CalibOutcome};
