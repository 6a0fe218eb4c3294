//! Eigendecomposition with explicit degeneracy clusters.
//!
//! Downstream formulas distinguish pairs of levels inside one degenerate
//! subspace from pairs in different subspaces. Float equality of eigenvalues
//! is meaningless after diagonalization, so levels are grouped into clusters
//! with an absolute tolerance, and [`rotate_within_clusters`] chooses the basis
//! inside every cluster that diagonalizes the conjugate observable.

use std::ops::Range;

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64};
use crate::operators::DenseHermitian;

/// Absolute energy tolerance below which neighbouring eigenvalues are merged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyPolicy {
    pub eps_deg: f64,
}

impl DegeneracyPolicy {
    /// Default tolerance relative to `max(1, spectral range)`.
    pub const DEFAULT_RELATIVE: f64 = 1e-8;

    pub fn new(eps_deg: f64) -> Result<Self> {
        if eps_deg > 0.0 && eps_deg.is_finite() {
            Ok(Self { eps_deg })
        } else {
            Err(Error::OutOfRange { name: "eps_deg", value: eps_deg, min: f64::MIN_POSITIVE, max: f64::MAX })
        }
    }

    /// `1e-8 * max(1, E_max - E_min)`.
    pub fn for_spectrum(energies: &[f64]) -> Self {
        let range = match (energies.first(), energies.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        };
        Self { eps_deg: Self::DEFAULT_RELATIVE * range.max(1.0) }
    }
}

/// Sorted spectrum, eigenvectors as columns, and degeneracy clusters.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    energies: Vec<f64>,
    vectors: Mat<c64>,
    clusters: Vec<Range<usize>>,
    cluster_of: Vec<usize>,
    policy: DegeneracyPolicy,
}

impl EigenSystem {
    fn from_parts(energies: Vec<f64>, vectors: Mat<c64>, policy: DegeneracyPolicy) -> Self {
        let clusters = cluster_degeneracies(&energies, policy);
        let mut cluster_of = vec![0; energies.len()];
        for (c, r) in clusters.iter().enumerate() {
            for k in r.clone() {
                cluster_of[k] = c;
            }
        }
        Self { energies, vectors, clusters, cluster_of, policy }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Ascending eigenvalues.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Unitary matrix whose columns are the eigenvectors.
    pub fn vectors(&self) -> MatRef<'_, c64> {
        self.vectors.as_ref()
    }

    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    /// Index of the cluster containing level `n`.
    pub fn cluster_of(&self, n: usize) -> usize {
        self.cluster_of[n]
    }

    pub fn same_cluster(&self, m: usize, n: usize) -> bool {
        self.cluster_of[m] == self.cluster_of[n]
    }

    pub fn policy(&self) -> DegeneracyPolicy {
        self.policy
    }

    pub fn spectral_range(&self) -> f64 {
        self.energies.last().unwrap_or(&0.0) - self.energies.first().unwrap_or(&0.0)
    }

    /// Matrix elements `<m|A|n>` in the eigenbasis.
    pub fn represent(&self, a: &DenseHermitian) -> Result<Mat<c64>> {
        a.check_dim(self.dim())?;
        Ok(linalg::congruence(self.vectors(), a.as_ref()))
    }

    /// Maps an eigenbasis matrix back to the computational basis.
    pub fn to_computational(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        linalg::congruence_adj(self.vectors(), m)
    }

    /// `V diag(E) V^dagger`
    pub fn reconstruct(&self) -> Mat<c64> {
        let d = DenseHermitian::diagonal(&self.energies);
        self.to_computational(d.as_ref())
    }

    /// `max |H V - V diag(E)|`
    pub fn residual(&self, h: &DenseHermitian) -> f64 {
        let hv = linalg::mul(h.as_ref(), self.vectors());
        let n = self.dim();
        let mut m: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                m = m.max((hv[(i, j)] - self.vectors[(i, j)] * self.energies[j]).norm());
            }
        }
        m
    }

    /// `max |V^dagger V - I|`
    pub fn unitarity_defect(&self) -> f64 {
        let g = linalg::mul(self.vectors.adjoint().to_owned().as_ref(), self.vectors());
        linalg::max_abs_diff(g.as_ref(), Mat::<c64>::identity(self.dim(), self.dim()).as_ref())
    }

    /// Same spectrum with a seeded Haar-random unitary applied inside every
    /// cluster of size > 1. Physical results must not depend on this gauge.
    pub fn remix_within_clusters(&self, seed: u64) -> EigenSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for r in &self.clusters {
            if r.len() > 1 {
                let u = linalg::random_unitary(r.len(), &mut rng);
                out.replace_cluster_columns(r.clone(), u.as_ref());
            }
        }
        out
    }

    /// Replaces the columns of cluster `r` by `V_r * w`.
    fn replace_cluster_columns(&mut self, r: Range<usize>, w: MatRef<'_, c64>) {
        let block = self.vectors.subcols(r.start, r.len()).to_owned();
        let rotated = linalg::mul(block.as_ref(), w);
        for (k, col) in r.enumerate() {
            for i in 0..self.dim() {
                self.vectors[(i, col)] = rotated[(i, k)];
            }
        }
    }
}

/// Diagonalizes `h` with the default degeneracy policy.
pub fn eigendecompose(h: &DenseHermitian) -> Result<EigenSystem> {
    let (energies, vectors) = linalg::eigh(h.as_ref())?;
    let policy = DegeneracyPolicy::for_spectrum(&energies);
    Ok(EigenSystem::from_parts(energies, vectors, policy))
}

pub fn eigendecompose_with_policy(h: &DenseHermitian, policy: DegeneracyPolicy) -> Result<EigenSystem> {
    let (energies, vectors) = linalg::eigh(h.as_ref())?;
    Ok(EigenSystem::from_parts(energies, vectors, policy))
}

/// Greedy chaining: consecutive levels whose gap is at most `eps_deg` share a cluster.
pub fn cluster_degeneracies(energies: &[f64], policy: DegeneracyPolicy) -> Vec<Range<usize>> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=energies.len() {
        if k == energies.len() || energies[k] - energies[k - 1] > policy.eps_deg {
            clusters.push(start..k);
            start = k;
        }
    }
    clusters
}

/// Rotates each degenerate cluster onto the eigenbasis of `o` projected into it.
///
/// Afterwards `o` is diagonal inside every cluster, which is the gauge in
/// which the derivative of the eigenvectors stays finite.
pub fn rotate_within_clusters(eigs: &EigenSystem, o: &DenseHermitian) -> Result<EigenSystem> {
    o.check_dim(eigs.dim())?;
    let mut out = eigs.clone();
    for r in eigs.clusters.iter().filter(|r| r.len() > 1) {
        let block = eigs.vectors.subcols(r.start, r.len()).to_owned();
        let mut projected = linalg::congruence(block.as_ref(), o.as_ref());
        linalg::hermitize(&mut projected);
        let (_, w) = linalg::eigh(projected.as_ref())?;
        out.replace_cluster_columns(r.clone(), w.as_ref());
    }
    Ok(out)
}

/// Diagonalizes `h` and rotates its clusters for `o` in one step.
pub fn prepare(h: &DenseHermitian, o: &DenseHermitian, policy: Option<DegeneracyPolicy>) -> Result<EigenSystem> {
    let eigs = match policy {
        Some(p) => eigendecompose_with_policy(h, p)?,
        None => eigendecompose(h)?,
    };
    rotate_within_clusters(&eigs, o)
}
