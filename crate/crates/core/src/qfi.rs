//! Quantum Fisher information of a Gibbs state and the bounds chain
//! `LB <= F <= UB1 <= UB2`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{self, GibbsEnsemble, ObservableInBasis};
use crate::linalg::{self, c64};
use crate::operators::{DenseHermitian, LinearModel};
use crate::spectral;

/// Relative slack allowed in every inequality of the chain.
pub const CHAIN_RTOL: f64 = 1e-9;

/// Absolute floor for the chain checks, in units of `beta^2 max|O|^2`.
/// Observables with vanishing variance (such as `O = I`) produce all four
/// quantities at the `1e-30` level, where relative comparisons are noise.
pub const CHAIN_FLOOR: f64 = 1e-12;

/// The four quantities of the chain with the derived angles and uncertainties.
///
/// Fields that are undefined (`beta = 0`, or vanishing QFI or variance) are
/// `None` and serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub lb: f64,
    pub qfi: f64,
    pub ub1: f64,
    pub ub2: f64,
    pub beta: f64,
    pub alpha: Option<f64>,
    pub phi: Option<f64>,
    pub dtheta_min: Option<f64>,
    pub d_o: f64,
    pub d_o_bar: Option<f64>,
}

/// `F = beta^2 sum_n p_n (O_nn - <O>)^2
///      + 2 sum_{m,n} (p_m - p_n)^2 / ((p_m + p_n)(E_m - E_n)^2) |O_mn|^2`
///
/// with the pair sum over ordered pairs in different degeneracy clusters.
pub fn qfi_spectral(ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<f64> {
    qfi_in_basis(ens, &ens.observable(o)?)
}

pub fn qfi_in_basis(ens: &GibbsEnsemble<'_>, o: &ObservableInBasis) -> Result<f64> {
    if o.dim() != ens.dim() {
        return Err(Error::DimensionMismatch { expected: ens.dim(), actual: o.dim() });
    }
    o.ensure_rotated(ens.eigs())?;
    let beta = ens.beta();
    let p = ens.populations();
    let e = ens.eigs().energies();
    let d = ens.dim();
    let mut classical = 0.0;
    for n in 0..d {
        let dev = o.elements[(n, n)].re - o.mean;
        classical += p[n] * dev * dev;
    }
    let mut quantum = 0.0;
    for n in 0..d {
        for m in 0..d {
            let sum = p[m] + p[n];
            if sum < 1e-300 || ens.eigs().same_cluster(m, n) {
                continue;
            }
            let gap = e[m] - e[n];
            let dp = p[m] - p[n];
            quantum += dp * dp / (sum * gap * gap) * o.elements[(m, n)].norm_sqr();
        }
    }
    Ok(beta * beta * classical + 2.0 * quantum)
}

/// Evaluates the chain on one ensemble and checks its invariants.
pub fn bounds_chain(ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<BoundsReport> {
    bounds_chain_in_basis(ens, &ens.observable(o)?)
}

pub fn bounds_chain_in_basis(ens: &GibbsEnsemble<'_>, basis: &ObservableInBasis) -> Result<BoundsReport> {
    let beta = ens.beta();
    let qfi = qfi_in_basis(ens, basis)?;
    let chi = gibbs::susceptibility_in_basis(ens, basis)?;
    let var = gibbs::variance_in_basis(ens, basis);
    let ub1 = beta * chi;
    let ub2 = beta * beta * var;
    let lb = if ub2 > 0.0 {
        ub1 * ub1 / ub2
    } else if ub1 != 0.0 {
        return Err(Error::NumericalCorruption(format!("ub2 = 0 but ub1 = {ub1:e}")));
    } else {
        0.0
    };

    let floor = CHAIN_FLOOR * (beta * basis.norm).powi(2);
    let defined = beta > 0.0 && qfi > floor;
    let dtheta_min = defined.then(|| qfi.powf(-0.5));
    let report = BoundsReport {
        lb,
        qfi,
        ub1,
        ub2,
        beta,
        alpha: (ub2 > floor).then(|| (ub1 / ub2).clamp(-1.0, 1.0).acos()),
        phi: defined.then(|| (lb / qfi).clamp(-1.0, 1.0).acos()),
        dtheta_min,
        d_o: var.max(0.0).sqrt(),
        d_o_bar: dtheta_min.map(|t| chi * t),
    };
    report.check_invariants(floor)?;

    // lb is fixed by the geometric-mean construction; recompute it from its
    // own definition as a guard against a broken susceptibility or variance.
    if var > 0.0 {
        let direct = chi * chi / var;
        if (direct - lb).abs() > CHAIN_RTOL * ub2 + floor {
            return Err(invariant("lb", format!("(d<O>)^2/Var = {direct:e} but lb = {lb:e}")));
        }
    }
    Ok(report)
}

fn invariant(context: &str, detail: String) -> Error {
    Error::Invariant { context: context.to_string(), detail }
}

impl BoundsReport {
    /// Checks the chain, the geometric-mean identity and both uncertainty
    /// relations. `floor` is an absolute slack added to every comparison.
    pub fn check_invariants(&self, floor: f64) -> Result<()> {
        let slack = CHAIN_RTOL * self.ub2.abs() + floor;
        let chain = [("lb", self.lb), ("qfi", self.qfi), ("ub1", self.ub1), ("ub2", self.ub2)];
        if self.lb < -slack {
            return Err(invariant("chain", format!("lb = {:e} is negative", self.lb)));
        }
        for w in chain.windows(2) {
            let ((a, x), (b, y)) = (w[0], w[1]);
            if x - y > slack {
                return Err(invariant("chain", format!("{a} = {x:e} exceeds {b} = {y:e}")));
            }
        }
        let gm = self.ub1 * self.ub1 - self.ub2 * self.lb;
        if gm.abs() > CHAIN_RTOL * self.ub2 * self.ub2 + floor * floor {
            return Err(invariant("geometric mean", format!("ub1^2 - ub2 lb = {gm:e}")));
        }
        if let (Some(t), Some(bar)) = (self.dtheta_min, self.d_o_bar) {
            let bound = 1.0 / self.beta;
            let tol = 1e-9 * bound.max(1.0);
            if t * self.d_o < bound - tol {
                return Err(invariant("uncertainty", format!("dtheta dO = {:e} < 1/beta", t * self.d_o)));
            }
            if t * bar < bound - tol {
                return Err(invariant("uncertainty", format!("dtheta dObar = {:e} < 1/beta", t * bar)));
            }
            if bar > self.d_o * (1.0 + 1e-9) + 1e-12 {
                return Err(invariant("uncertainty", format!("dObar = {bar:e} > dO = {:e}", self.d_o)));
            }
        }
        Ok(())
    }
}

/// Both thermodynamic uncertainty products for one report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub beta: f64,
    /// `false` when `beta = 0` or `F = 0`; the products are then `None`.
    pub defined: bool,
    pub dtheta_d_o: Option<f64>,
    pub dtheta_d_o_bar: Option<f64>,
    /// Products in units of `1/beta`; both are at least 1.
    pub ratio_d_o: Option<f64>,
    pub ratio_d_o_bar: Option<f64>,
    /// `dObar <= dO`: the response-based relation is the tighter one.
    pub d_o_bar_not_above_d_o: Option<bool>,
}

pub fn uncertainty_report(report: &BoundsReport) -> UncertaintyReport {
    let (t, bar) = match (report.dtheta_min, report.d_o_bar) {
        (Some(t), Some(bar)) if report.beta > 0.0 => (t, bar),
        _ => {
            return UncertaintyReport {
                beta: report.beta,
                defined: false,
                dtheta_d_o: None,
                dtheta_d_o_bar: None,
                ratio_d_o: None,
                ratio_d_o_bar: None,
                d_o_bar_not_above_d_o: None,
            }
        }
    };
    let p = t * report.d_o;
    let pbar = t * bar;
    UncertaintyReport {
        beta: report.beta,
        defined: true,
        dtheta_d_o: Some(p),
        dtheta_d_o_bar: Some(pbar),
        ratio_d_o: Some(p * report.beta),
        ratio_d_o_bar: Some(pbar * report.beta),
        d_o_bar_not_above_d_o: Some(bar <= report.d_o * (1.0 + 1e-9) + 1e-12),
    }
}

impl std::fmt::Display for UncertaintyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.dtheta_d_o, self.dtheta_d_o_bar, self.ratio_d_o, self.ratio_d_o_bar) {
            (Some(p), Some(pbar), Some(r), Some(rbar)) => {
                writeln!(f, "beta               {}", self.beta)?;
                writeln!(f, "dtheta_min * dO    {p:.6}  ({r:.6} x 1/beta)")?;
                writeln!(f, "dtheta_min * dObar {pbar:.6}  ({rbar:.6} x 1/beta)")?;
                write!(f, "dObar <= dO        {}", self.d_o_bar_not_above_d_o.unwrap_or(false))
            }
            _ => write!(f, "beta {}: products undefined (F = 0 or beta = 0)", self.beta),
        }
    }
}

/// Bures-fidelity oracle for [`qfi_spectral`].
///
/// Builds the two Gibbs states at `theta -/+ delta/2` from their own
/// eigensystems and returns `8 (1 - sqrt(Fid)) / delta^2`, where `sqrt(Fid)`
/// is the trace norm of `sqrt(rho) sqrt(sigma)`. The estimate carries an
/// `O(delta^2)` bias.
pub fn qfi_fidelity_oracle(model: &LinearModel, beta: f64, delta: f64) -> Result<f64> {
    if !(1e-4..=1e-2).contains(&delta) {
        return Err(Error::OutOfRange { name: "delta", value: delta, min: 1e-4, max: 1e-2 });
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidBeta(beta));
    }
    let sqrt_state = |theta: f64| -> Result<(Vec<f64>, Mat<c64>)> {
        let eigs = spectral::eigendecompose(&model.hamiltonian_at(theta))?;
        let ens = gibbs::gibbs_ensemble(&eigs, beta)?;
        let roots = ens.populations().iter().map(|p| p.sqrt()).collect();
        Ok((roots, eigs.vectors().to_owned()))
    };
    let (sp, v) = sqrt_state(model.theta - 0.5 * delta)?;
    let (sq, w) = sqrt_state(model.theta + 0.5 * delta)?;
    // sqrt(rho) sqrt(sigma) = V diag(sp) V^dag W diag(sq) W^dag has the same
    // singular values as diag(sp) (V^dag W) diag(sq).
    let overlap = linalg::adjoint_mul(v.as_ref(), w.as_ref());
    let a = Mat::from_fn(sp.len(), sq.len(), |i, j| overlap[(i, j)] * (sp[i] * sq[j]));
    let root_fid = linalg::trace_norm(a.as_ref())?;
    Ok(8.0 * (1.0 - root_fid) / (delta * delta))
}
