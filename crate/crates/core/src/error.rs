use thiserror::Error;

/// Failure modes shared by every stage of the lab.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("ellipticity violated: sup {sup:.6e} is not below {bound:.6e}")]
    Ellipticity { sup: f64, bound: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("degenerate Jacobian on {fraction:.3e} of samples (allowed {allowed:.3e})")]
    Degeneracy { fraction: f64, allowed: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
