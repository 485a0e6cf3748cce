use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("measure is not a probability measure: total mass {mass}")]
    NotNormalized { mass: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure has unbounded support")]
    UnboundedSupport,

    #[error("set family must be nonempty")]
    EmptyFamily,

    #[error("integrand undefined at x = {at}")]
    UndefinedIntegrand { at: f64 },

    #[error("polynomial degree {degree} exceeds the supported maximum of 3")]
    DegreeTooHigh { degree: usize },

    #[error("invalid piecewise polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("affine pushforward requires a nonzero scale")]
    ZeroScale,

    #[error("incompatible models: {0}")]
    Incompatible(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),

    #[error("linear system is singular or ill-conditioned (residual {residual:e})")]
    SingularSystem { residual: f64 },

    #[error("policy is not measurable with respect to the region partition: {0}")]
    PolicyNotMeasurable(String),

    #[error("node budget {budget} exceeded: horizon {horizon} needs at least {required} nodes")]
    BudgetExceeded {
        horizon: usize,
        budget: u64,
        required: u64,
    },

    #[error("discretization defect {defect:e} at state {state}, action {action} exceeds 1e-6")]
    DiscretizationDefect {
        defect: f64,
        state: usize,
        action: usize,
    },

    #[error("drift leaves the state interval: {0}")]
    DriftOutOfRange(String),

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("sample set is empty")]
    EmptySamples,

    #[error("sample {value} lies outside the range [{lo}, {hi}]")]
    SampleOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("no solver applies: {0}")]
    NoSolver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
