use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{what}: n = {n} exceeds limit {limit}")]
    Capacity { what: &'static str, n: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chain is not irreducible: link {link} has q = 0")]
    NotIrreducible { link: usize },

    #[error("arrival rates are not strictly inside the capacity region (margin {margin:.3e})")]
    Infeasible { margin: f64 },

    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NotConverged { iterations: u64, grad_norm: f64 },

    #[error("threshold not reached within horizon {horizon} (last TV {last_tv:.6})")]
    Horizon { horizon: usize, last_tv: f64 },

    #[error("not applicable: {0}")]
    Inapplicable(String),
}
