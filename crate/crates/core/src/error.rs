use thiserror::Error;

/// Errors raised by the toolkit. Numeric payloads are widened to `f64`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid growth function: {0}")]
    InvalidGSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("profile does not vanish at infinity; mass is infinite")]
    InfiniteMass,
    #[error("functional overflows even in log form (ln G = {log_value})")]
    Overflow { log_value: f64 },
    #[error("quadrature did not reach tolerance (estimate {estimate:e}, error {error:e})")]
    QuadratureNotConverged { estimate: f64, error: f64 },
    #[error("division by zero: profile is identically zero")]
    DivisionByZero,
    #[error("growth function tail does not match requested regime: {0}")]
    RegimeMismatch(String),
    #[error("constraint set is empty: h = {h} exceeds sqrt(N + 1) = {limit}")]
    Infeasible { h: f64, limit: f64 },
    #[error("bisection did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("profile is not nonincreasing on the requested region")]
    NotMonotone,
    #[error("energy budget exceeded: {energy} > {budget}")]
    EnergyBudgetExceeded { energy: f64, budget: f64 },
    #[error("boundary value {value} is out of range (need phi(R)^2 / K > 1)")]
    ZeroBoundaryValue { value: f64 },
    #[error("profile energy {energy} is not normalized to {target}")]
    NotNormalized { energy: f64, target: f64 },
    #[error("profile is not constant near the origin")]
    NoPlateau,
    #[error("condition (1) fails numerically: {0}")]
    ConditionFailed(String),
    #[error("norm budget exceeded: {0}")]
    NormBudgetExceeded(String),
    #[error("ODE step size underflow at r = {r}")]
    StiffnessFailure { r: f64 },
    #[error("no overshoot found below amplitude cap {cap}")]
    NoSignChange { cap: f64 },
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
