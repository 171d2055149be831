use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// A displacement or coherent amplitude exceeds what the Fock truncation
    /// can represent at the configured accuracy.
    #[error("truncation risk: amplitude {amplitude:.4} exceeds the configured maximum {max:.4}")]
    TruncationRisk { amplitude: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),

    #[error("integration diverged at t = {time:.6}: {monitor}")]
    IntegrationDiverged { time: f64, monitor: String },

    #[error("solver failed to converge after {steps} steps (last objective {last:.6e})")]
    SolverStalled { steps: usize, last: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    /// The linear coupling already meets or exceeds the reference; no
    /// nonlinear boost is required.
    #[error("no boost needed: omega_c = {omega_c:.6e} >= omega_g = {omega_g:.6e}")]
    NoBoostNeeded { omega_c: f64, omega_g: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
