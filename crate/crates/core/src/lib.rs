//! Quantum Fisher information of thermal states by exact diagonalization.
//!
//! Dense Hermitian operators and transverse-field Ising chains
//! ([`operators`]), eigensystems with degeneracy handling ([`spectral`]),
//! Gibbs ensembles ([`gibbs`]), the bounds chain `LB <= F <= UB1 <= UB2`
//! ([`qfi`]), line spectra and the fluctuation-dissipation relation
//! ([`fluctuation`]), the symmetric logarithmic derivative ([`sld`]),
//! operator locality diagnostics ([`locality`]) and the sweep harness
//! ([`harness`]).

pub mod error;
pub mod fluctuation;
pub mod gibbs;
pub mod harness;
pub mod linalg;
pub mod locality;
pub mod operators;
pub mod qfi;
pub mod quadrature;
pub mod sld;
pub mod spectral;

pub use error::{Error, Result};

/// Order-preserving map, parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(range: std::ops::Range<usize>, f: F) -> Vec<T> {
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F: Fn(usize) -> T>(range: std::ops::Range<usize>, f: F) -> Vec<T> {
    range.map(f).collect()
}
