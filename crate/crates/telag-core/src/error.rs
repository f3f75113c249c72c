use thiserror::Error;

/// Errors produced by estimation, testing, alignment, and generation.
#[derive(Debug, Error)]
pub enum TeError {
    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("insufficient history: {len} events with past window {past_window}")]
    InsufficientHistory { len: usize, past_window: u32 },

    #[error("degenerate alphabet, zero degrees of freedom")]
    DegenerateAlphabet,

    #[error("degenerate variance: omega is zero but delta_l {delta_l} differs from nu {nu}")]
    DegenerateVariance { delta_l: f64, nu: f64 },

    #[error("no overlap between target and source events")]
    NoOverlap,

    #[error("state space too large: {cells} cells exceeds limit {limit}")]
    TableTooLarge { cells: u64, limit: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "optimizer did not converge after {iterations} iterations (best residual {residual:.3e})"
    )]
    NonConvergence { iterations: u32, residual: f64 },

    #[error("insufficient series: {0} usable, need at least 2")]
    InsufficientSeries(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, TeError>;
