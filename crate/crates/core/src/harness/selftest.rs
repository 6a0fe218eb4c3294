//! Built-in self-test: closed-form fixtures, route identities, the randomized
//! chain suite and a deliberate-fault check.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuation::{autocorrelation_spectrum, dissipation_spectrum, generalized_fdt, moment, KernelKind};
use crate::gibbs::{gibbs_ensemble, susceptibility, variance};
use crate::operators::{build_tfim, random_hermitian, single_qubit_model, DenseHermitian, ModelSpec};
use crate::qfi::{bounds_chain, qfi_spectral};
use crate::sld::{kernel_integral, sld_matrix, sld_with_degenerate_weight, TimeKernelSpec};
use crate::spectral::prepare;

/// Instances in the randomized chain suite.
pub const CHAIN_INSTANCES: usize = 200;

const ROUTE_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()) + 1e-14
}

fn outcome(name: &str, r: Result<String>) -> Check {
    match r {
        Ok(detail) => Check { name: name.into(), passed: true, detail },
        Err(e) => Check { name: name.into(), passed: false, detail: e.to_string() },
    }
}

fn fail(detail: String) -> Error {
    Error::Invariant { context: "selftest".into(), detail }
}

fn ensure(ok: bool, detail: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(fail(detail()))
    }
}

fn single_qubit() -> Result<String> {
    let (h, o) = single_qubit_model(0.0);
    let e = prepare(&h, &o, None)?;
    let r = bounds_chain(&gibbs_ensemble(&e, 1.0)?, &o)?;
    let t = 1f64.tanh();
    let expected = [t * t, t * t, t, 1.0];
    let got = [r.lb, r.qfi, r.ub1, r.ub2];
    for (g, x) in got.iter().zip(expected) {
        ensure((g - x).abs() <= 1e-9, || format!("(lb, F, ub1, ub2) = {got:?}, expected {expected:?}"))?;
    }
    Ok(format!("(lb, F, ub1, ub2) = ({:.5}, {:.5}, {:.5}, {:.5})", r.lb, r.qfi, r.ub1, r.ub2))
}

fn tfim_single_site() -> Result<String> {
    let mut worst: f64 = 0.0;
    for beta in [0.5, 1.0, 2.0, 5.0] {
        for gamma in [0.1, 0.3, 0.7, 1.2] {
            let (h, o) = build_tfim(&ModelSpec::new(1, gamma, 0.0))?;
            let e = prepare(&h, &o, None)?;
            let f = qfi_spectral(&gibbs_ensemble(&e, beta)?, &o)?;
            let s = f64::sin(gamma);
            let exact = (beta * s).tanh().powi(2) / (s * s);
            worst = worst.max((f - exact).abs() / exact);
        }
    }
    ensure(worst <= 1e-9, || format!("max relative deviation {worst:e}"))?;
    Ok(format!("max relative deviation {worst:.1e} over 16 points"))
}

fn commuting() -> Result<String> {
    let z = DenseHermitian::diagonal(&[1.0, -1.0]);
    let e = prepare(&z, &z, None)?;
    let ens = gibbs_ensemble(&e, 1.0)?;
    let r = bounds_chain(&ens, &z)?;
    let v = 1.0 - 1f64.tanh().powi(2);
    for x in [r.lb, r.qfi, r.ub1, r.ub2] {
        ensure(close(x, v, 1e-12), || format!("chain {r:?} should collapse to {v}"))?;
    }
    let s = autocorrelation_spectrum(&ens, &z)?;
    let d = dissipation_spectrum(&ens, &z)?;
    let rebuilt = generalized_fdt(&d, &ens, &z)?;
    ensure(rebuilt.lines.len() == 1 && close(rebuilt.lines[0].weight, s.lines[0].weight, 1e-12), || {
        "zero-frequency term is not the whole spectrum".into()
    })?;
    Ok(format!("LB = F = UB1 = UB2 = {v:.6}"))
}

fn random_pair(seed: u64, i: usize, d: usize) -> Result<(DenseHermitian, DenseHermitian)> {
    let base = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(2 * i as u64);
    Ok((random_hermitian(d, base)?, random_hermitian(d, base + 1)?))
}

fn route_identities(seed: u64) -> Result<String> {
    let mut count = 0;
    for (i, d) in [2usize, 4, 8].into_iter().enumerate() {
        let (h, o) = random_pair(seed ^ 0x5eed, i, d)?;
        let e = prepare(&h, &o, None)?;
        for beta in [0.1, 1.0, 10.0] {
            let ens = gibbs_ensemble(&e, beta)?;
            let s = autocorrelation_spectrum(&ens, &o)?;
            let f = qfi_spectral(&ens, &o)?;
            let chi = susceptibility(&ens, &o)?;
            let var = variance(&ens, &o)?;
            let pairs = [
                ("line-sum F", moment(&s, KernelKind::Qfi, beta)?, f),
                ("moment / beta", moment(&s, KernelKind::Susceptibility, beta)? / beta, chi),
                ("moment / beta^2", moment(&s, KernelKind::Variance, beta)? / (beta * beta), var),
                ("total weight", s.total_weight(), 2.0 * PI * var),
            ];
            for (name, a, b) in pairs {
                ensure(close(a, b, ROUTE_RTOL), || format!("{name}: {a:e} vs {b:e} (d {d}, beta {beta})"))?;
            }
            let rebuilt = generalized_fdt(&dissipation_spectrum(&ens, &o)?, &ens, &o)?;
            for (a, b) in rebuilt.lines.iter().zip(&s.lines) {
                ensure(a.omega == b.omega && close(a.weight, b.weight, ROUTE_RTOL), || {
                    format!("FDT line {a:?} vs {b:?} (d {d}, beta {beta})")
                })?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} ensembles"))
}

fn chain_suite(seed: u64) -> Result<String> {
    let dims = [2usize, 4, 8];
    let betas = [0.1, 1.0, 10.0];
    let mut tightest = f64::INFINITY;
    for i in 0..CHAIN_INSTANCES {
        let d = dims[i % 3];
        let beta = betas[(i / 3) % 3];
        let (h, o) = random_pair(seed, i, d)?;
        let e = prepare(&h, &o, None)?;
        let r = bounds_chain(&gibbs_ensemble(&e, beta)?, &o)?;
        tightest = tightest.min((r.qfi - r.lb) / r.ub2);
    }
    Ok(format!("{CHAIN_INSTANCES} instances, min (F - LB) / UB2 = {tightest:.2e}"))
}

fn sld_fault_injection() -> Result<String> {
    let (h, o) = build_tfim(&ModelSpec::new(3, 0.4, 0.3))?;
    let e = prepare(&h, &o, None)?;
    let ens = gibbs_ensemble(&e, 2.0)?;
    sld_matrix(&ens, &o)?;
    match sld_with_degenerate_weight(&ens, &o, 0.0) {
        Err(Error::Invariant { detail, .. }) => Ok(format!("f(0) = 0 rejected: {detail}")),
        Err(e) => Err(fail(format!("f(0) = 0 failed for the wrong reason: {e}"))),
        Ok(_) => Err(fail("f(0) = 0 was not detected".into())),
    }
}

fn kernel_normalization() -> Result<String> {
    let beta = 1.5;
    let i = kernel_integral(&TimeKernelSpec::new(beta, 12.0 * beta, 2048))?;
    ensure(((i + beta) / beta).abs() <= 1e-6, || format!("integral {i} vs {}", -beta))?;
    Ok(format!("integral of g = {i:.9} at beta = {beta}"))
}

fn infinite_temperature() -> Result<String> {
    let (h, o) = build_tfim(&ModelSpec::new(3, 0.6, 0.0))?;
    let e = prepare(&h, &o, None)?;
    let r = bounds_chain(&gibbs_ensemble(&e, 0.0)?, &o)?;
    ensure(r.qfi == 0.0 && r.ub1 == 0.0 && r.ub2 == 0.0, || format!("beta = 0 chain {r:?}"))?;
    ensure(r.dtheta_min.is_none() && r.phi.is_none() && r.d_o_bar.is_none(), || "undefined fields are set".into())?;
    Ok("F = 0 with undefined angles".into())
}

/// Runs every check; failures are recorded, not raised.
pub fn selftest(seed: u64) -> SelftestReport {
    let checks = vec![
        outcome("single qubit fixture", single_qubit()),
        outcome("TFIM N=1 closed form", tfim_single_site()),
        outcome("commuting observable", commuting()),
        outcome("route identities", route_identities(seed)),
        outcome("chain inequality suite", chain_suite(seed)),
        outcome("SLD fault injection", sld_fault_injection()),
        outcome("kernel normalization", kernel_normalization()),
        outcome("beta = 0 ensemble", infinite_temperature()),
    ];
    SelftestReport { seed, checks }
}
