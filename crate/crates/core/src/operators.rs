//! Dense Hermitian operators on spin chains.
//!
//! Site 0 is the leftmost tensor factor, so in a basis index `b` of an
//! `n`-site chain the state of site `i` is bit `n - 1 - i`.

use std::collections::BTreeMap;
use std::fmt;

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, ZERO};

/// Hard cap on chain length. A 14-site operator is already 16384 x 16384.
pub const MAX_SITES: usize = 14;
pub const MAX_DIM: usize = 1 << MAX_SITES;

/// Absolute tolerance of the Hermiticity check in [`DenseHermitian::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Square complex Hermitian matrix in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHermitian {
    mat: Mat<c64>,
}

impl DenseHermitian {
    /// Validates squareness and Hermiticity (absolute tolerance [`HERMITICITY_TOL`]).
    pub fn new(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), actual: mat.ncols() });
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidModel("empty matrix".into()));
        }
        let deviation = linalg::hermiticity_defect(mat.as_ref());
        if deviation > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { mat })
    }

    /// Symmetrizes a matrix that is Hermitian up to rounding.
    pub(crate) fn from_hermitized(mut mat: Mat<c64>) -> Self {
        linalg::hermitize(&mut mat);
        Self { mat }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Result<Self> {
        Self::new(Mat::from_fn(dim, dim, f))
    }

    /// Real symmetric matrix from row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, actual: bad.len() });
        }
        Self::from_fn(n, |i, j| c64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            mat: Mat::from_fn(n, n, |i, j| if i == j { c64::new(values[i], 0.0) } else { ZERO }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: Mat::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.mat
    }

    pub fn into_inner(self) -> Mat<c64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(self.as_ref())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(self.as_ref())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, actual: self.dim() })
        }
    }

    /// `self + scale * other`
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Result<Self> {
        other.check_dim(self.dim())?;
        let n = self.dim();
        Ok(Self {
            mat: Mat::from_fn(n, n, |i, j| self.mat[(i, j)] + other.mat[(i, j)] * scale),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let n = self.dim();
        Self { mat: Mat::from_fn(n, n, |i, j| self.mat[(i, j)] * factor) }
    }

    /// `self + shift * I`
    pub fn shifted(&self, shift: f64) -> Self {
        let mut mat = self.mat.clone();
        for i in 0..self.dim() {
            mat[(i, i)] += c64::new(shift, 0.0);
        }
        Self { mat }
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim(), other.dim());
        Self {
            mat: Mat::from_fn(a * b, a * b, |i, j| {
                self.mat[(i / b, j / b)] * other.mat[(i % b, j % b)]
            }),
        }
    }

    /// Spectral norm (largest |eigenvalue|).
    pub fn spectral_norm(&self) -> Result<f64> {
        linalg::spectral_norm_hermitian(self.as_ref())
    }
}

/// Single-site Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// Column action on a single-site basis state: `(flips_bit, amplitude)`.
    fn act(self, bit: usize) -> (bool, c64) {
        match (self, bit) {
            (Pauli::X, _) => (true, c64::new(1.0, 0.0)),
            (Pauli::Y, 0) => (true, c64::new(0.0, 1.0)),
            (Pauli::Y, _) => (true, c64::new(0.0, -1.0)),
            (Pauli::Z, 0) => (false, c64::new(1.0, 0.0)),
            (Pauli::Z, _) => (false, c64::new(-1.0, 0.0)),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        };
        f.write_str(s)
    }
}

/// Real coefficient times a tensor product of Paulis; identity on unlisted sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub factors: BTreeMap<usize, Pauli>,
    pub coefficient: f64,
}

impl PauliString {
    pub fn new(coefficient: f64) -> Self {
        Self { factors: BTreeMap::new(), coefficient }
    }

    pub fn single(site: usize, pauli: Pauli, coefficient: f64) -> Self {
        Self::new(coefficient).with(site, pauli)
    }

    pub fn with(mut self, site: usize, pauli: Pauli) -> Self {
        self.factors.insert(site, pauli);
        self
    }

    fn check(&self, n_sites: usize) -> Result<()> {
        check_sites(n_sites)?;
        match self.factors.keys().find(|&&s| s >= n_sites) {
            Some(&site) => Err(Error::SiteOutOfRange { site, n_sites }),
            None => Ok(()),
        }
    }

    /// Adds this string into `acc`, one nonzero per column.
    fn accumulate(&self, acc: &mut Mat<c64>, n_sites: usize) {
        let dim = 1usize << n_sites;
        for col in 0..dim {
            let mut row = col;
            let mut amp = c64::new(self.coefficient, 0.0);
            for (&site, &p) in &self.factors {
                let shift = n_sites - 1 - site;
                let (flip, a) = p.act((col >> shift) & 1);
                if flip {
                    row ^= 1 << shift;
                }
                amp *= a;
            }
            acc[(row, col)] += amp;
        }
    }
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::InvalidModel("a chain needs at least one site".into()));
    }
    if n_sites > MAX_SITES {
        return Err(Error::ExceedsCap { what: "n_sites", value: n_sites, cap: MAX_SITES });
    }
    Ok(())
}

/// Dense matrix of a Pauli string on `n_sites` qubits.
pub fn pauli_string_matrix(ps: &PauliString, n_sites: usize) -> Result<DenseHermitian> {
    pauli_sum_matrix(std::slice::from_ref(ps), n_sites)
}

/// Dense matrix of a sum of Pauli strings, accumulated in place.
pub fn pauli_sum_matrix(terms: &[PauliString], n_sites: usize) -> Result<DenseHermitian> {
    check_sites(n_sites)?;
    for t in terms {
        t.check(n_sites)?;
    }
    let dim = 1usize << n_sites;
    let mut acc = Mat::<c64>::zeros(dim, dim);
    for t in terms {
        t.accumulate(&mut acc, n_sites);
    }
    DenseHermitian::new(acc)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Open chain: bonds (i, i+1) for i < N - 1.
    #[default]
    Open,
}

/// Transverse-field Ising chain parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_sites: usize,
    /// Field angle in radians; the zero-temperature transition sits at pi/4.
    pub gamma: f64,
    /// Longitudinal field, the estimated parameter.
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn new(n_sites: usize, gamma: f64, theta: f64) -> Self {
        Self { n_sites, gamma, theta, boundary: Boundary::Open }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_cap(MAX_SITES)
    }

    /// Like [`ModelSpec::validate`] with a tighter site cap (never above [`MAX_SITES`]).
    pub fn validate_with_cap(&self, cap: usize) -> Result<()> {
        let cap = cap.min(MAX_SITES);
        if self.n_sites == 0 {
            return Err(Error::InvalidModel("n_sites must be at least 1".into()));
        }
        if self.n_sites > cap {
            return Err(Error::ExceedsCap { what: "n_sites", value: self.n_sites, cap });
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidModel(format!("gamma must be finite, got {}", self.gamma)));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidModel(format!("theta must be finite, got {}", self.theta)));
        }
        Ok(())
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

fn tfim_terms(spec: &ModelSpec) -> (Vec<PauliString>, Vec<PauliString>) {
    let n = spec.n_sites;
    let (s, c) = spec.gamma.sin_cos();
    let mut h = Vec::with_capacity(3 * n);
    let mut o = Vec::with_capacity(n);
    for i in 0..n {
        h.push(PauliString::single(i, Pauli::Z, s));
    }
    for i in 0..n.saturating_sub(1) {
        h.push(PauliString::new(-c).with(i, Pauli::X).with(i + 1, Pauli::X));
    }
    for i in 0..n {
        if spec.theta != 0.0 {
            h.push(PauliString::single(i, Pauli::X, spec.theta));
        }
        o.push(PauliString::single(i, Pauli::X, 1.0));
    }
    (h, o)
}

/// Transverse-field Ising Hamiltonian and its conjugate observable:
///
/// `H = sin(g) sum_i Z_i - cos(g) sum_i X_i X_{i+1} + theta sum_i X_i`,
/// `O = dH/dtheta = sum_i X_i`.
pub fn build_tfim(spec: &ModelSpec) -> Result<(DenseHermitian, DenseHermitian)> {
    spec.validate()?;
    let (h, o) = tfim_terms(spec);
    Ok((pauli_sum_matrix(&h, spec.n_sites)?, pauli_sum_matrix(&o, spec.n_sites)?))
}

/// Seeded random Hermitian matrix for property tests.
///
/// Draws a complex Gaussian matrix `A` from `ChaCha8Rng::seed_from_u64(seed)`,
/// entry by entry in row-major order, real part first, each part a standard
/// normal, and returns `(A + A^dagger) / 2`.
pub fn random_hermitian(dim: usize, seed: u64) -> Result<DenseHermitian> {
    if dim == 0 {
        return Err(Error::InvalidModel("dimension must be at least 1".into()));
    }
    if dim > MAX_DIM {
        return Err(Error::ExceedsCap { what: "dim", value: dim, cap: MAX_DIM });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        draws.push(c64::new(re, im));
    }
    let a = |i: usize, j: usize| draws[i * dim + j];
    let mat = Mat::from_fn(dim, dim, |i, j| {
        if i == j {
            c64::new(a(i, i).re, 0.0)
        } else {
            (a(i, j) + a(j, i).conj()) * 0.5
        }
    });
    DenseHermitian::new(mat)
}

/// Two-level fixture `H = Z + theta X`, `O = X`.
pub fn single_qubit_model(theta: f64) -> (DenseHermitian, DenseHermitian) {
    let h = DenseHermitian::from_real_rows(&[&[1.0, theta], &[theta, -1.0]])
        .expect("2x2 symmetric fixture");
    let o = DenseHermitian::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("Pauli X");
    (h, o)
}

/// Hamiltonian family `H(theta) = H0 + theta O`, which covers every model here.
///
/// Oracles that need `rho` at shifted parameters rebuild the Hamiltonian from
/// this family and rediagonalize it.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub h0: DenseHermitian,
    pub observable: DenseHermitian,
    pub theta: f64,
}

impl LinearModel {
    pub fn new(h0: DenseHermitian, observable: DenseHermitian, theta: f64) -> Result<Self> {
        observable.check_dim(h0.dim())?;
        Ok(Self { h0, observable, theta })
    }

    pub fn tfim(spec: &ModelSpec) -> Result<Self> {
        let (h0, o) = build_tfim(&spec.with_theta(0.0))?;
        Self::new(h0, o, spec.theta)
    }

    pub fn single_qubit(theta: f64) -> Self {
        let (h0, o) = single_qubit_model(0.0);
        Self { h0, observable: o, theta }
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn hamiltonian_at(&self, theta: f64) -> DenseHermitian {
        if theta == 0.0 {
            return self.h0.clone();
        }
        self.h0.add_scaled(&self.observable, theta).expect("dimensions checked in new")
    }

    pub fn hamiltonian(&self) -> DenseHermitian {
        self.hamiltonian_at(self.theta)
    }
}
