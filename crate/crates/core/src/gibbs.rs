//! Gibbs ensembles, thermal averages, variance and susceptibility.
//!
//! Sign convention: for `H(theta) = H0 + theta O` the mean `<O>` decreases
//! with `theta`. [`susceptibility`] returns the positive static response
//! `chi = -d<O>/dtheta`, the quantity that enters `UB1 = beta chi`.
//! [`susceptibility_fd`] uses the same sign, so the two routes compare directly.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, c64};
use crate::operators::{DenseHermitian, LinearModel};
use crate::spectral::{self, EigenSystem};

/// Thermal state `exp(-beta H) / Z` on a fixed eigensystem (`k_B = 1`).
#[derive(Clone, Debug)]
pub struct GibbsEnsemble<'a> {
    beta: f64,
    populations: Vec<f64>,
    log_z: f64,
    eigs: &'a EigenSystem,
}

impl<'a> GibbsEnsemble<'a> {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    /// `ln Z`, evaluated with the ground energy factored out.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn eigs(&self) -> &'a EigenSystem {
        self.eigs
    }

    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    /// Density matrix in the computational basis, `V diag(p) V^dagger`.
    pub fn density_matrix(&self) -> Mat<c64> {
        let d = DenseHermitian::diagonal(&self.populations);
        let mut rho = self.eigs.to_computational(d.as_ref());
        linalg::hermitize(&mut rho);
        rho
    }

    /// Expresses `o` in the eigenbasis and records its thermal mean.
    pub fn observable(&self, o: &DenseHermitian) -> Result<ObservableInBasis> {
        self.observable_from_elements(self.eigs.represent(o)?, o.max_abs())
    }

    /// Like [`GibbsEnsemble::observable`] for elements already expressed in
    /// this eigenbasis, so that one basis change serves many temperatures.
    /// `norm` is `max |O_ij|` in the computational basis.
    pub fn observable_from_elements(&self, elements: Mat<c64>, norm: f64) -> Result<ObservableInBasis> {
        if elements.nrows() != self.dim() || elements.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: elements.nrows() });
        }
        let mean = diagonal_average(&self.populations, &elements, norm)?;
        Ok(ObservableInBasis { elements, mean, norm })
    }
}

/// An observable's matrix elements `<m|O|n>` in the eigenbasis of one
/// ensemble, with its mean `<O>` and the max-entry norm of `O`.
#[derive(Clone, Debug)]
pub struct ObservableInBasis {
    pub elements: Mat<c64>,
    pub mean: f64,
    pub norm: f64,
}

impl ObservableInBasis {
    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// Rejects a cluster in which `O` is not diagonal.
    ///
    /// Every formula that treats same-cluster pairs through the diagonal
    /// elements alone requires the rotation from
    /// [`spectral::rotate_within_clusters`] to have been applied first.
    pub fn ensure_rotated(&self, eigs: &EigenSystem) -> Result<()> {
        let tolerance = ROTATION_TOL * self.norm;
        for r in eigs.clusters().iter().filter(|r| r.len() > 1) {
            for m in r.clone() {
                for n in r.clone() {
                    let value = self.elements[(m, n)].norm();
                    if m != n && value > tolerance {
                        return Err(Error::UnrotatedCluster { cluster: (r.start, r.end), value, tolerance });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Within-cluster off-diagonals of `O` must be below this times `max |O_ij|`.
pub const ROTATION_TOL: f64 = 1e-9;

fn diagonal_average(p: &[f64], elements: &Mat<c64>, norm: f64) -> Result<f64> {
    let mut re = 0.0;
    let mut im = 0.0;
    for (n, &pn) in p.iter().enumerate() {
        re += pn * elements[(n, n)].re;
        im += pn * elements[(n, n)].im;
    }
    if im.abs() > 1e-10 * norm.max(1.0) {
        return Err(Error::ImaginaryResidue(im));
    }
    Ok(re)
}

/// `p_n = exp(-beta (E_n - E_min)) / sum_k exp(-beta (E_k - E_min))`.
pub fn gibbs_ensemble(eigs: &EigenSystem, beta: f64) -> Result<GibbsEnsemble<'_>> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidBeta(beta));
    }
    let e = eigs.energies();
    let e0 = e.first().copied().unwrap_or(0.0);
    let mut populations: Vec<f64> = e.iter().map(|&x| (-beta * (x - e0)).exp()).collect();
    let z: f64 = populations.iter().sum();
    for p in &mut populations {
        *p /= z;
    }
    Ok(GibbsEnsemble { beta, populations, log_z: z.ln() - beta * e0, eigs })
}

/// `<A> = sum_n p_n <n|A|n>`.
pub fn thermal_average(ens: &GibbsEnsemble<'_>, a: &DenseHermitian) -> Result<f64> {
    Ok(ens.observable(a)?.mean)
}

/// `<O^2> - <O>^2`, evaluated as `sum_n p_n sum_m |O_mn - delta_mn <O>|^2`.
pub fn variance(ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<f64> {
    Ok(variance_in_basis(ens, &ens.observable(o)?))
}

pub fn variance_in_basis(ens: &GibbsEnsemble<'_>, o: &ObservableInBasis) -> f64 {
    let d = ens.dim();
    let mut total = 0.0;
    for n in 0..d {
        let mut row = 0.0;
        for m in 0..d {
            let mut x = o.elements[(m, n)];
            if m == n {
                x.re -= o.mean;
            }
            row += x.norm_sqr();
        }
        total += ens.populations[n] * row;
    }
    total
}

/// Static susceptibility `chi = -d<O>/dtheta` from the spectral representation
///
/// `chi = beta sum_n p_n (O_nn - <O>)^2 + sum_{m,n} (p_n - p_m)/(E_m - E_n) |O_mn|^2`,
///
/// the pair sum running over ordered pairs in different clusters. The
/// population difference is evaluated as `(p_m + p_n) tanh(beta (E_m - E_n) / 2)`,
/// which avoids cancellation for nearly degenerate pairs.
pub fn susceptibility(ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<f64> {
    susceptibility_in_basis(ens, &ens.observable(o)?)
}

pub fn susceptibility_in_basis(ens: &GibbsEnsemble<'_>, o: &ObservableInBasis) -> Result<f64> {
    if o.dim() != ens.dim() {
        return Err(Error::DimensionMismatch { expected: ens.dim(), actual: o.dim() });
    }
    o.ensure_rotated(ens.eigs)?;
    let beta = ens.beta;
    let p = &ens.populations;
    let e = ens.eigs.energies();
    let d = ens.dim();
    let mut classical = 0.0;
    for n in 0..d {
        let dev = o.elements[(n, n)].re - o.mean;
        classical += p[n] * dev * dev;
    }
    let mut quantum = 0.0;
    for n in 0..d {
        for m in 0..d {
            if ens.eigs.same_cluster(m, n) {
                continue;
            }
            let gap = e[m] - e[n];
            let dp = (p[m] + p[n]) * (0.5 * beta * gap).tanh();
            quantum += dp / gap * o.elements[(m, n)].norm_sqr();
        }
    }
    Ok(beta * classical + quantum)
}

/// Finite-difference oracle for [`susceptibility`]:
/// `-(<O>_{theta+delta} - <O>_{theta-delta}) / (2 delta)`, rediagonalizing at
/// both shifted parameters.
pub fn susceptibility_fd(model: &LinearModel, beta: f64, delta: f64) -> Result<f64> {
    if !(1e-6..=1e-2).contains(&delta) {
        return Err(Error::OutOfRange { name: "delta", value: delta, min: 1e-6, max: 1e-2 });
    }
    let mean_at = |theta: f64| -> Result<f64> {
        let eigs = spectral::eigendecompose(&model.hamiltonian_at(theta))?;
        let ens = gibbs_ensemble(&eigs, beta)?;
        thermal_average(&ens, &model.observable)
    };
    let plus = mean_at(model.theta + delta)?;
    let minus = mean_at(model.theta - delta)?;
    Ok(-(plus - minus) / (2.0 * delta))
}
