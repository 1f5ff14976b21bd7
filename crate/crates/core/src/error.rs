use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mixture has no terms")]
    EmptyMixture,

    #[error("rate must be positive and finite, got {0}")]
    NonpositiveRate(f64),

    #[error("coefficient must be nonnegative and finite, got {0}")]
    InvalidCoefficient(f64),

    #[error("leading coefficient (smallest rate) is zero")]
    LeadingCoefficientZero,

    #[error("exponent {0} sits on the pole of the antiderivative")]
    ExponentAtPole(f64),

    #[error("correction undefined: rho_1 * t = {0} is not above 1")]
    CorrectionUndefined(f64),

    #[error("location must satisfy 0 < t < inf, got {0}")]
    LocationNotPositive(f64),

    #[error("epsilon {epsilon} outside (0, {bound})")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },

    #[error("evaluation time t + c*w = {0} is not positive")]
    EvaluationTimeNegative(f64),

    #[error("no index falls in the epsilon band below the location")]
    EmptyIStarSet,

    #[error("certificate parameter c = {0} has the wrong sign")]
    InvalidOffset(f64),

    #[error("coefficient schedule yields a_n <= 1 at n = {0}")]
    CoefficientNotAboveOne(u64),

    #[error("index n = {0} is below the family's minimum {1}")]
    IndexTooSmall(u64, u64),

    #[error("gamma must be positive, got {0}")]
    GammaNonpositive(f64),

    #[error("beta = {beta} outside [0, 1] at n = {n}")]
    BetaOutOfRange { n: u64, beta: f64 },

    #[error("family at n = {0} has too many terms to materialize")]
    NotMaterializable(u64),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("generator is not irreducible")]
    NotIrreducible,

    #[error("generator is not reversible: pi_{i} Q_{i}{j} != pi_{j} Q_{j}{i}")]
    NotReversible { i: usize, j: usize },

    #[error("start state {0} out of range")]
    InvalidState(usize),

    #[error("start state is already stationary; chi-square mixture is empty")]
    DegenerateLeadingTerm,

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),

    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o failure: {0}")]
    IoFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}
