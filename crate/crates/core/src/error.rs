use thiserror::Error;

/// Errors surfaced by the analytical and Monte Carlo routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum NomaError {
    /// The `(d, βd)` pair, SNR, or matrix dimensions are outside the admissible set.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed (non-finite values, no convergence, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The random graph sampler could not produce a simple graph.
    #[error("generation error: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, NomaError>;
