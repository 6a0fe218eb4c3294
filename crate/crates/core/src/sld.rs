//! Symmetric logarithmic derivative of a Gibbs state, its time-domain
//! integral representation, and the optimal estimator.
//!
//! In the eigenbasis `L_mn = f(E_m - E_n) (O - <O>)_mn` with
//! `f(omega) = -tanh(beta omega / 2) / (omega / 2)` and `f(0) = -beta`.
//! Equivalently `L = int g(t) O(t) dt` with
//! `g(t) = (2 / pi) ln tanh(pi |t| / (2 beta))`.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{self, GibbsEnsemble, ObservableInBasis};
use crate::linalg::{self, c64, tanhc};
use crate::operators::{DenseHermitian, LinearModel};
use crate::qfi;
use crate::quadrature::{dyadic_panels, neumaier_sum, uniform_panels, Rule};
use crate::spectral;

/// Gauss-Legendre order used on every quadrature panel.
const PANEL_ORDER: usize = 8;

/// Dyadic refinement levels towards the `ln u` singularity at `t = 0`.
const SINGULAR_LEVELS: usize = 60;

/// Energy-domain weight `f(omega)`, continuous through `f(0) = -beta`.
pub fn sld_weight(omega: f64, beta: f64) -> f64 {
    -beta * tanhc(0.5 * beta * omega)
}

#[derive(Clone, Debug)]
pub struct SldResult {
    /// `L` in the computational basis.
    pub l: DenseHermitian,
    eigenbasis: Mat<c64>,
    pub trace_rho_l: f64,
    pub trace_rho_l2: f64,
    pub qfi: f64,
    /// Filled by [`SldResult::with_lyapunov_residual`].
    pub lyapunov_residual: Option<f64>,
}

/// The scalar part of an [`SldResult`], for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SldSummary {
    pub trace_rho_l: f64,
    pub trace_rho_l2: f64,
    pub qfi: f64,
    pub lyapunov_residual: Option<f64>,
    pub l_norm: f64,
}

impl SldResult {
    /// `L` in the energy eigenbasis of the ensemble.
    pub fn eigenbasis(&self) -> &Mat<c64> {
        &self.eigenbasis
    }

    pub fn with_lyapunov_residual(mut self, model: &LinearModel, ens: &GibbsEnsemble<'_>, delta: f64) -> Result<Self> {
        self.lyapunov_residual = Some(lyapunov_residual(ens, &self.l, model, delta)?);
        Ok(self)
    }

    pub fn summary(&self) -> SldSummary {
        SldSummary {
            trace_rho_l: self.trace_rho_l,
            trace_rho_l2: self.trace_rho_l2,
            qfi: self.qfi,
            lyapunov_residual: self.lyapunov_residual,
            l_norm: self.l.max_abs(),
        }
    }
}

/// Builds `L` elementwise in the rotated eigenbasis and checks
/// `Tr[rho L] = 0` and `Tr[rho L^2] = F`.
pub fn sld_matrix(ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<SldResult> {
    sld_with_degenerate_weight(ens, o, -ens.beta())
}

/// [`sld_matrix`] with an arbitrary same-cluster weight `f0`; anything other
/// than `-beta` must fail the trace checks.
pub(crate) fn sld_with_degenerate_weight(ens: &GibbsEnsemble<'_>, o: &DenseHermitian, f0: f64) -> Result<SldResult> {
    let beta = ens.beta();
    if !(beta > 0.0) {
        return Err(Error::InvalidBeta(beta));
    }
    let basis = ens.observable(o)?;
    basis.ensure_rotated(ens.eigs())?;
    let eigs = ens.eigs();
    let e = eigs.energies();
    let d = ens.dim();
    let centered = centered(&basis);
    let l_eig = Mat::from_fn(d, d, |m, n| {
        let f = if eigs.same_cluster(m, n) { f0 } else { sld_weight(e[m] - e[n], beta) };
        centered[(m, n)] * f
    });

    let p = ens.populations();
    let trace_rho_l = (0..d).map(|n| p[n] * l_eig[(n, n)].re).sum::<f64>();
    let trace_rho_l2 = (0..d)
        .map(|n| p[n] * (0..d).map(|m| l_eig[(m, n)].norm_sqr()).sum::<f64>())
        .sum::<f64>();
    let qfi = qfi::qfi_in_basis(ens, &basis)?;

    let l = DenseHermitian::from_hermitized(eigs.to_computational(l_eig.as_ref()));
    let l_norm = linalg::max_abs(l_eig.as_ref());
    if trace_rho_l.abs() > 1e-9 * l_norm.max(f64::MIN_POSITIVE) + 1e-15 {
        return Err(Error::Invariant { context: "sld".into(), detail: format!("Tr[rho L] = {trace_rho_l:e}") });
    }
    if (trace_rho_l2 - qfi).abs() > 1e-8 * qfi.max(1.0) {
        return Err(Error::Invariant {
            context: "sld".into(),
            detail: format!("Tr[rho L^2] = {trace_rho_l2:e} but F = {qfi:e}"),
        });
    }
    Ok(SldResult { l, eigenbasis: l_eig, trace_rho_l, trace_rho_l2, qfi, lyapunov_residual: None })
}

fn centered(basis: &ObservableInBasis) -> Mat<c64> {
    let mut c = basis.elements.clone();
    for n in 0..c.nrows() {
        c[(n, n)].re -= basis.mean;
    }
    c
}

/// `max |(rho L + L rho)/2 - d rho/d theta|`, with the derivative taken by a
/// central difference of full density matrices at `theta +/- delta`.
///
/// `ens` must be the ensemble of `model` at `model.theta`.
pub fn lyapunov_residual(ens: &GibbsEnsemble<'_>, l: &DenseHermitian, model: &LinearModel, delta: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&delta) {
        return Err(Error::OutOfRange { name: "delta", value: delta, min: 1e-6, max: 1e-3 });
    }
    l.check_dim(ens.dim())?;
    let rho_at = |theta: f64| -> Result<Mat<c64>> {
        let eigs = spectral::eigendecompose(&model.hamiltonian_at(theta))?;
        Ok(gibbs::gibbs_ensemble(&eigs, ens.beta())?.density_matrix())
    };
    let plus = rho_at(model.theta + delta)?;
    let minus = rho_at(model.theta - delta)?;
    let rho = ens.density_matrix();
    let rl = linalg::mul(rho.as_ref(), l.as_ref());
    let d = ens.dim();
    let mut worst: f64 = 0.0;
    for j in 0..d {
        for i in 0..d {
            let sym = (rl[(i, j)] + rl[(j, i)].conj()) * 0.5;
            let drho = (plus[(i, j)] - minus[(i, j)]) / (2.0 * delta);
            worst = worst.max((sym - drho).norm());
        }
    }
    Ok(worst)
}

/// `g(t) = (2 / pi) ln tanh(pi |t| / (2 beta))`, negative and integrable,
/// singular at `t = 0`.
pub fn kernel_g(t: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidBeta(beta));
    }
    if t == 0.0 {
        return Err(Error::SingularKernel);
    }
    Ok(g_unchecked(t, beta))
}

fn g_unchecked(t: f64, beta: f64) -> f64 {
    let x = PI * t.abs() / (2.0 * beta);
    let ln_tanh = if x > 1.0 {
        let q = (-2.0 * x).exp();
        (-2.0 * q / (1.0 + q)).ln_1p()
    } else {
        x.tanh().ln()
    };
    2.0 / PI * ln_tanh
}

/// Quadrature resolution for the time-domain representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeKernelSpec {
    pub beta: f64,
    /// Integration covers `|t| <= horizon`.
    pub horizon: f64,
    /// Number of Gauss-Legendre panels on the smooth part of the kernel.
    pub panels: usize,
}

impl TimeKernelSpec {
    pub fn new(beta: f64, horizon: f64, panels: usize) -> Self {
        TimeKernelSpec { beta, horizon, panels }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidBeta(self.beta));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidQuadrature(format!("horizon {} must be positive", self.horizon)));
        }
        if self.panels < 16 {
            return Err(Error::InvalidQuadrature(format!("panels {} < 16", self.panels)));
        }
        Ok(())
    }

    /// Nodes `t_k > 0` with weights already multiplied by `g(t_k)`, so that
    /// `int_0^horizon g(t) h(t) dt ~ sum_k w_k h(t_k)`.
    ///
    /// Near the origin the substitution `u = tanh(pi t / (2 beta))` turns the
    /// integrand into `(4 beta / pi^2) ln(u) / (1 - u^2)`, integrated on
    /// uniform panels in `u` with dyadic refinement of the first panel. From
    /// `t = min(beta, horizon)` onwards the kernel is smooth and decays like
    /// `exp(-pi t / beta)`; it is integrated directly on `panels` uniform
    /// panels in `t`. A single `u` map cannot reach large horizons because
    /// `tanh` rounds to 1 beyond `t ~ 12 beta`.
    pub fn weighted_rule(&self) -> Result<Rule> {
        self.validate()?;
        let beta = self.beta;
        let t_split = beta.min(self.horizon);
        let u_split = (PI * t_split / (2.0 * beta)).tanh();
        let inner_panels = (self.panels / 8).max(16);
        let h = u_split / inner_panels as f64;

        let mut u_rule = Rule::default();
        u_rule.add_panels(dyadic_panels(h, SINGULAR_LEVELS), PANEL_ORDER);
        u_rule.add_panels(uniform_panels(h, u_split, inner_panels - 1), PANEL_ORDER);

        let jac = 2.0 * beta / PI;
        let mut rule = Rule::default();
        for (&u, &w) in u_rule.nodes.iter().zip(&u_rule.weights) {
            rule.nodes.push(jac * u.atanh());
            rule.weights.push(w * jac / (1.0 - u * u) * (2.0 / PI) * u.ln());
        }
        if self.horizon > t_split {
            let mut t_rule = Rule::default();
            t_rule.add_panels(uniform_panels(t_split, self.horizon, self.panels), PANEL_ORDER);
            for (&t, &w) in t_rule.nodes.iter().zip(&t_rule.weights) {
                rule.nodes.push(t);
                rule.weights.push(w * g_unchecked(t, beta));
            }
        }
        Ok(rule)
    }
}

/// `int_{-horizon}^{horizon} g(t) dt`, which tends to `-beta`.
pub fn kernel_integral(spec: &TimeKernelSpec) -> Result<f64> {
    let rule = spec.weighted_rule()?;
    Ok(2.0 * neumaier_sum(rule.weights.iter().copied()))
}

/// `G(omega) = int g(t) cos(omega t) dt` over `|t| <= horizon`.
fn kernel_transform(rule: &Rule, omega: f64) -> f64 {
    2.0 * neumaier_sum(rule.nodes.iter().zip(&rule.weights).map(|(&t, &w)| w * (omega * t).cos()))
}

/// `L = int g(t) (O(t) - <O>) dt` by quadrature, with
/// `O(t)_mn = exp(i (E_m - E_n) t) O_mn` evaluated elementwise in the
/// eigenbasis. Since `g` is even only the cosine part survives. Returned in
/// the computational basis.
pub fn sld_time_domain(ens: &GibbsEnsemble<'_>, o: &DenseHermitian, spec: &TimeKernelSpec) -> Result<DenseHermitian> {
    if spec.beta != ens.beta() {
        return Err(Error::InvalidQuadrature(format!("spec beta {} vs ensemble beta {}", spec.beta, ens.beta())));
    }
    let rule = spec.weighted_rule()?;
    let basis = ens.observable(o)?;
    let centered = centered(&basis);
    let e = ens.eigs().energies();
    let d = ens.dim();

    // Equal gaps share one transform.
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(d * (d + 1) / 2);
    for n in 0..d {
        for m in 0..=n {
            entries.push(((e[n] - e[m]).abs(), m, n));
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut l_eig = Mat::<c64>::zeros(d, d);
    let mut cached: Option<(f64, f64)> = None;
    for &(w, m, n) in &entries {
        let g = match cached {
            Some((w0, g0)) if w - w0 <= 1e-13 => g0,
            _ => {
                let g = kernel_transform(&rule, w);
                cached = Some((w, g));
                g
            }
        };
        l_eig[(m, n)] = centered[(m, n)] * g;
        l_eig[(n, m)] = centered[(n, m)] * g;
    }
    Ok(DenseHermitian::from_hermitized(ens.eigs().to_computational(l_eig.as_ref())))
}

/// `theta_hat = theta I + L / Tr[rho L^2]`.
pub fn optimal_estimator(ens: &GibbsEnsemble<'_>, o: &DenseHermitian, theta: f64) -> Result<DenseHermitian> {
    let sld = sld_matrix(ens, o)?;
    if !(sld.trace_rho_l2 > 1e-12) {
        return Err(Error::VanishingQfi(sld.trace_rho_l2));
    }
    Ok(sld.l.scaled(1.0 / sld.trace_rho_l2).shifted(theta))
}
