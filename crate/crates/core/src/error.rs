use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two points that must be distinct coincide (e.g. a scatterer on top of the BS).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A path length `rho = toa - bias` that is not strictly positive.
    #[error("infeasible path length rho = {rho}")]
    InfeasibleRange { rho: f64 },

    /// Invalid parameters, covariances, grids or inputs.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// No hypothesis on the search grid produced a usable metric.
    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    /// Scenario generation could not satisfy its constraints.
    #[error("scenario generation failed: {0}")]
    Generation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
