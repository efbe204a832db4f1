use crate::numerics::RootSolveReport;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The characteristic function was evaluated outside the strip where its
    /// analytic extension exists.
    #[error("outside the analytic strip: {0}")]
    StripViolation(String),

    #[error("{what} did not converge (residual {residual:.3e})")]
    NotConverged {
        what: String,
        residual: f64,
        report: Box<RootSolveReport>,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("{date}: {source}")]
    AtDate {
        date: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::StripViolation(_) => "strip_violation",
            Error::NotConverged { .. } => "not_converged",
            Error::Optimization(_) => "optimization",
            Error::Infeasible(_) => "infeasible",
            Error::Data(_) => "data",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
            Error::AtDate { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
