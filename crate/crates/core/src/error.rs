use thiserror::Error;

/// Errors raised by the analytical, simulation and optimization layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("K_{nu}({x}) overflows f64")]
    Overflow { nu: f64, x: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
    NoConvergence { estimate: f64, error: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("power allocation violates protocol constraint: {0}")]
    PowerConstraint(String),

    #[error("exact all-active enumeration limited to {max} relays, got {n}")]
    TooManyRelays { n: usize, max: usize },

    #[error("optimizer stopped after {iterations} iterations with KKT residual {kkt_residual:e}")]
    SolverStalled { iterations: usize, kkt_residual: f64, best: Vec<f64> },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
