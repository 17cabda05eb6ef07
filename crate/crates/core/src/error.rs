use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("gradient vanishes at r = {r} and p = {p} < 2; the radial operator is singular there")]
    DegenerateGradient { r: f64, p: f64 },

    #[error("radius {r} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfTable { r: f64, lo: f64, hi: f64 },

    #[error("condition (C{which}) verdict is {verdict}; pass an explicit override to proceed")]
    ConditionViolation { which: u8, verdict: String },

    #[error("quadrature did not reach the error target: {0}")]
    QuadratureFailure(String),

    #[error("solution lost positivity at r = {r}")]
    PositivityLost { r: f64 },

    #[error("step size control failed at r = {r}: {msg}")]
    StepFailure { r: f64, msg: String },

    #[error("no sign change found for the shooting mismatch after {expansions} expansions")]
    BracketFailure { expansions: usize },

    #[error("no envelope constant up to {c_max:e} certifies the sign pattern: {msg}")]
    EnvelopeFailure { c_max: f64, msg: String },

    #[error("domain too short: {available} samples available, {required} required")]
    DomainTooShort { available: usize, required: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no three-spheres validity window found: {0}")]
    WindowNotFound(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("parse error at {location}: {msg}")]
    Parse { location: String, msg: String },

    #[error("task {index} ({task}) failed: {source}")]
    Task {
        index: usize,
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
