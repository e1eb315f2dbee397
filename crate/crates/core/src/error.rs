use thiserror::Error;

/// Errors raised by geometry, calculus and solver routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration failure: {reason} (t = {t}, step = {step:e})")]
    IntegrationFailure { reason: String, t: f64, step: f64 },

    #[error("ambiguous log map: target lies on the cut locus ({} candidate branches)", candidates.len())]
    AmbiguousLog { candidates: Vec<Vec<f64>> },

    #[error("point is outside the domain of the function (value is +inf)")]
    OutsideDomain,

    #[error("search failure: {0}")]
    SearchFailure(String),

    #[error("function appears unbounded below (reached {0})")]
    UnboundedBelow(f64),

    #[error("premise violated: {0}")]
    PremiseViolation(String),

    #[error("hypothesis refuted: {0}")]
    HypothesisRefuted(String),

    #[error("precondition ({condition}) violated: {detail}")]
    PreconditionViolated { condition: String, detail: String },

    #[error("budget exhausted after {0} evaluations")]
    BudgetExhausted(usize),

    #[error("classification inconclusive: {0}")]
    ClassificationInconclusive(String),

    #[error("differentiability probe failed: {0}")]
    DifferentiabilityProbe(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown registry key `{0}`")]
    UnknownKey(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
