use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit space")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("trace drifted to {trace} at t = {time} (|Tr rho - 1| = {drift:e})")]
    TraceDrift { time: f64, trace: f64, drift: f64 },

    #[error("Hermiticity drift {drift:e} before symmetrization at t = {time}")]
    HermiticityDrift { time: f64, drift: f64 },

    #[error("density matrix has eigenvalue {eigenvalue:e} at t = {time}")]
    NegativeEigenvalue { time: f64, eigenvalue: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("reconstructed distribution has negative mass {value:e} at x = {x}")]
    NegativeDensity { x: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
