//! Thin dense linear-algebra layer over faer.
//!
//! Everything runs with `Par::Seq` so that sums are evaluated in a fixed order
//! and repeated runs are bit-identical.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

pub use faer::c64;

pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// `a * b`
pub fn mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
    out
}

/// `a^dagger * b`
pub fn adjoint_mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::zeros(a.ncols(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a.adjoint(), b, ONE, Par::Seq);
    out
}

/// `a^dagger * b * a`, the change of basis into the columns of `a`.
pub fn congruence(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let ba = mul(b, a);
    let mut out = Mat::zeros(a.ncols(), a.ncols());
    matmul(out.as_mut(), Accum::Replace, a.adjoint(), ba.as_ref(), ONE, Par::Seq);
    out
}

/// `a * b * a^dagger`, the inverse of [`congruence`] for unitary `a`.
pub fn congruence_adj(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let ab = mul(a, b);
    let mut out = Mat::zeros(a.nrows(), a.nrows());
    matmul(out.as_mut(), Accum::Replace, ab.as_ref(), a.adjoint(), ONE, Par::Seq);
    out
}

/// `a * b - b * a`
pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = mul(a, b);
    matmul(out.as_mut(), Accum::Add, b, a, c64::new(-1.0, 0.0), Par::Seq);
    out
}

/// Largest absolute entry.
pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Largest |A_ij - conj(A_ji)|.
pub fn hermiticity_defect(a: MatRef<'_, c64>) -> f64 {
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

/// Replaces `a` by `(a + a^dagger) / 2`.
pub fn hermitize(a: &mut Mat<c64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
        a[(j, j)] = c64::new(a[(j, j)].re, 0.0);
    }
}

pub fn is_real(a: MatRef<'_, c64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].im == 0.0))
}

/// Ascending eigenvalues and unitary eigenvectors of a Hermitian matrix.
///
/// Real input takes the real-symmetric solver, which is several times faster
/// and returns real eigenvectors.
pub fn eigh(a: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let n = a.nrows();
    let (mut values, mut vectors) = if is_real(a) {
        let re = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re);
        let evd = re
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenNoConvergence { dim: n })?;
        let s = evd.S().column_vector();
        let u = evd.U();
        (
            (0..n).map(|i| s[i]).collect::<Vec<_>>(),
            Mat::<c64>::from_fn(n, n, |i, j| c64::new(u[(i, j)], 0.0)),
        )
    } else {
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenNoConvergence { dim: n })?;
        let s = evd.S().column_vector();
        ((0..n).map(|i| s[i].re).collect::<Vec<_>>(), evd.U().to_owned())
    };
    if values.windows(2).any(|w| w[0] > w[1]) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
        values = order.iter().map(|&k| values[k]).collect();
        vectors = Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    }
    Ok((values, vectors))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut values = if is_real(a) {
        let re = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re);
        re.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::EigenNoConvergence { dim: n })?
    } else {
        a.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::EigenNoConvergence { dim: n })?
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn spectral_norm_hermitian(a: MatRef<'_, c64>) -> Result<f64> {
    let values = eigvalsh(a)?;
    Ok(values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Spectral norm of an anti-Hermitian matrix `c`, computed from the Hermitian
/// matrix `i c`. A real `c` is antisymmetric and `i c` would be complex, so the
/// real-symmetric `c^T c` is used instead.
pub fn spectral_norm_antihermitian(c: MatRef<'_, c64>) -> Result<f64> {
    if is_real(c) {
        let ctc = adjoint_mul(c, c);
        let top = eigvalsh(ctc.as_ref())?.last().copied().unwrap_or(0.0);
        Ok(top.max(0.0).sqrt())
    } else {
        let ic = Mat::<c64>::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] * c64::new(0.0, 1.0));
        spectral_norm_hermitian(ic.as_ref())
    }
}

/// Spectral norm of an arbitrary square matrix via the largest eigenvalue of `a^dagger a`.
pub fn spectral_norm(a: MatRef<'_, c64>) -> Result<f64> {
    let mut ata = adjoint_mul(a, a);
    hermitize(&mut ata);
    let top = eigvalsh(ata.as_ref())?.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// Sum of singular values.
pub fn trace_norm(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|_| Error::EigenNoConvergence { dim: a.nrows() })?;
    Ok(s.iter().sum())
}

/// Haar-random unitary from the QR factorization of a complex Gaussian matrix,
/// with column phases fixed by the diagonal of R.
pub fn random_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Mat<c64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut draws = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        draws.push(c64::new(re, im));
    }
    let g = Mat::from_fn(dim, dim, |i, j| draws[i * dim + j]);
    let qr = g.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `tanh(x) / x` with its limit 1 at the origin.
pub(crate) fn tanhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}
