use thiserror::Error;

/// Errors reported by the core algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// Run parameters or an initial configuration are inconsistent.
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    /// The operation needs at least one sample.
    #[error("empty input")]
    EmptyInput,
    /// Histograms with different binning cannot be merged.
    #[error("histogram binning mismatch")]
    BinningMismatch,
    /// A required exact joint moment `E[μ^a D^b]` is not available.
    #[error("initial-law oracle has no moment E[mu^{mu_power} D^{d_power}]")]
    MissingMoment { mu_power: u32, d_power: u32 },
    /// A trajectory step record lacks the left/right flag.
    #[error("step {0} has no left/right record")]
    MissingSide(usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
