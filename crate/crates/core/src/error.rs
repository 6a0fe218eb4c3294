use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("site index {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("{what} = {value} exceeds the hard cap {cap}")]
    ExceedsCap { what: &'static str, value: usize, cap: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid inverse temperature beta = {0}")]
    InvalidBeta(f64),

    #[error("{name} = {value:e} is outside the allowed range [{min:e}, {max:e}]")]
    OutOfRange { name: &'static str, value: f64, min: f64, max: f64 },

    #[error("eigensolver did not converge on a {dim}x{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("expectation value has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error(
        "degenerate cluster {cluster:?} was not rotated: off-diagonal |O_mn| = {value:e} exceeds {tolerance:e}"
    )]
    UnrotatedCluster { cluster: (usize, usize), value: f64, tolerance: f64 },

    #[error("numerical corruption: {0}")]
    NumericalCorruption(String),

    #[error("spectrum kind mismatch: expected {expected}, got {actual}")]
    SpectrumKind { expected: &'static str, actual: &'static str },

    #[error("spectra come from different ensembles: {0}")]
    EnsembleMismatch(String),

    #[error("quantum Fisher information {0:e} vanishes; quantity is undefined")]
    VanishingQfi(f64),

    #[error("matrix square root of a non-PSD matrix (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("kernel is singular at t = 0")]
    SingularKernel,

    #[error("not enough usable points for a fit: {usable} < {required}")]
    InsufficientFitPoints { usable: usize, required: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated at {context}: {detail}")]
    Invariant { context: String, detail: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
