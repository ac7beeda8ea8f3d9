use thiserror::Error;

/// Errors raised by the capacity library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("correlation {rho} is infeasible for marginals ({p_t}, {p_r}); feasible interval is [{min}, {max}]")]
    InfeasibleCorrelation {
        rho: f64,
        p_t: f64,
        p_r: f64,
        min: f64,
        max: f64,
    },

    #[error("marginal {0} is degenerate (0 or 1); correlation is undefined")]
    DegenerateMarginal(f64),

    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("conditioning event has zero probability")]
    ConditionOnNullEvent,

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("mixture weights must be nonnegative and sum to 1 (sum = {0})")]
    InvalidWeights(f64),

    #[error("adaptive quadrature did not converge after {intervals} subdivisions (error estimate {error:e}, target {target:e})")]
    QuadratureNonConvergence { intervals: usize, error: f64, target: f64 },

    #[error("transcript does not match the supplied model: {0}")]
    ModelMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
