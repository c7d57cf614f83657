use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("tail mass {tail:e} beyond v = {v_max} exceeds the truncation threshold {threshold:e}")]
    Truncation { v_max: usize, tail: f64, threshold: f64 },

    #[error("mean interval K = {k} is infeasible for average-age budget c_a = {c_a}")]
    InfeasibleAtK { k: f64, c_a: f64 },

    /// `residual` and `lambda` describe the point the failed search started from.
    #[error("dual solver did not converge at K = {k} within {iterations} iterations (start: residual {residual:e}, lambda = [{}, {}])", lambda[0], lambda[1])]
    NonConvergence {
        k: f64,
        residual: f64,
        iterations: usize,
        lambda: [f64; 2],
    },

    #[error("infeasible age budgets: {0}")]
    Infeasible(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("trace length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cannot parse `{0}` as a number or `inf`")]
    Parse(String),

    #[error("configuration mismatch: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
