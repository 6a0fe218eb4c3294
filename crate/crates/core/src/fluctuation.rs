//! Exact line spectra of the autocorrelation `S(omega)` and the dissipation
//! `Im chi(omega)`, the generalized fluctuation-dissipation relation, and the
//! kernel moments that reproduce `F`, `UB1` and `UB2`.
//!
//! A finite system has delta-spike spectra, so each spectrum is a list of
//! `(omega, weight)` lines and every frequency integral is a finite sum.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{GibbsEnsemble, ObservableInBasis};
use crate::linalg::tanhc;
use crate::operators::DenseHermitian;

/// Frequencies closer than this are merged into one line.
pub const MERGE_TOL: f64 = 1e-10;

/// Pairs with `|O_mn|` below this times `max |O_ij|` carry no line.
const NEGLIGIBLE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Autocorrelation,
    Dissipation,
}

impl SpectrumKind {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::Autocorrelation => "autocorrelation",
            SpectrumKind::Dissipation => "dissipation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub omega: f64,
    pub weight: f64,
}

/// Lines sorted by ascending frequency. The `omega = 0` line is always present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSpectrum {
    pub kind: SpectrumKind,
    pub beta: f64,
    pub lines: Vec<Line>,
}

impl LineSpectrum {
    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }

    pub fn weight_at(&self, omega: f64) -> Option<f64> {
        self.lines.iter().find(|l| (l.omega - omega).abs() <= MERGE_TOL).map(|l| l.weight)
    }

    /// Writes `omega,weight` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io { path: "<csv>".into(), message: e.to_string() };
        for line in &self.lines {
            w.serialize(line).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// Frequency weight functions for [`moment`], each with its `omega -> 0` limit
/// `beta^2 / 4` built in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `tanh^2(beta omega / 2) / omega^2`
    Qfi,
    /// `beta tanh(beta omega / 2) / (2 omega)`
    Susceptibility,
    /// `beta^2 / 4`
    Variance,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Qfi, KernelKind::Susceptibility, KernelKind::Variance];

    pub fn eval(self, omega: f64, beta: f64) -> f64 {
        let c = 0.25 * beta * beta;
        let t = tanhc(0.5 * beta * omega);
        match self {
            KernelKind::Qfi => c * t * t,
            KernelKind::Susceptibility => c * t,
            KernelKind::Variance => c,
        }
    }
}

/// Positive-frequency pair groups; a group holds the ordered pairs `(m, n)`
/// with `E_n - E_m` within [`MERGE_TOL`] of its neighbours.
struct Groups {
    pairs: Vec<(f64, usize, usize)>,
    bounds: Vec<(usize, usize)>,
}

impl Groups {
    fn build(ens: &GibbsEnsemble<'_>, o: &ObservableInBasis) -> Result<Self> {
        if o.dim() != ens.dim() {
            return Err(Error::DimensionMismatch { expected: ens.dim(), actual: o.dim() });
        }
        o.ensure_rotated(ens.eigs())?;
        let eigs = ens.eigs();
        let e = eigs.energies();
        let cut = NEGLIGIBLE * o.norm;
        let mut pairs = Vec::new();
        for n in 0..ens.dim() {
            for m in 0..n {
                if !eigs.same_cluster(m, n) && o.elements[(m, n)].norm() > cut {
                    pairs.push((e[n] - e[m], m, n));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut bounds = Vec::new();
        let mut start = 0;
        for k in 1..=pairs.len() {
            if k == pairs.len() || pairs[k].0 - pairs[k - 1].0 > MERGE_TOL {
                bounds.push((start, k));
                start = k;
            }
        }
        Ok(Groups { pairs, bounds })
    }

    fn omega(&self, g: (usize, usize)) -> f64 {
        let members = &self.pairs[g.0..g.1];
        members.iter().map(|p| p.0).sum::<f64>() / members.len() as f64
    }

    /// Mirrors positive-frequency lines onto `-omega` with `parity` and
    /// inserts the zero line.
    fn assemble(&self, kind: SpectrumKind, beta: f64, zero: f64, positive: &[f64], parity: f64) -> LineSpectrum {
        let omegas: Vec<f64> = self.bounds.iter().map(|&g| self.omega(g)).collect();
        let mut lines = Vec::with_capacity(2 * omegas.len() + 1);
        for (w, x) in omegas.iter().zip(positive).rev() {
            lines.push(Line { omega: -w, weight: parity * x });
        }
        lines.push(Line { omega: 0.0, weight: zero });
        for (w, x) in omegas.iter().zip(positive) {
            lines.push(Line { omega: *w, weight: *x });
        }
        LineSpectrum { kind, beta, lines }
    }
}

fn classical_weight(ens: &GibbsEnsemble<'_>, o: &ObservableInBasis) -> f64 {
    let p = ens.populations();
    let mut s = 0.0;
    for (n, pn) in p.iter().enumerate() {
        let dev = o.elements[(n, n)].re - o.mean;
        s += pn * dev * dev;
    }
    2.0 * PI * s
}

/// `S(omega) = sum_{m,n} (p_m + p_n) |O_mn - delta_mn <O>|^2 pi delta(omega + E_m - E_n)`.
pub fn autocorrelation_spectrum(ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<LineSpectrum> {
    let basis = ens.observable(o)?;
    let groups = Groups::build(ens, &basis)?;
    let p = ens.populations();
    let positive: Vec<f64> = groups
        .bounds
        .iter()
        .map(|&(a, b)| {
            groups.pairs[a..b]
                .iter()
                .map(|&(_, m, n)| (p[m] + p[n]) * PI * basis.elements[(m, n)].norm_sqr())
                .sum()
        })
        .collect();
    let zero = classical_weight(ens, &basis);
    Ok(groups.assemble(SpectrumKind::Autocorrelation, ens.beta(), zero, &positive, 1.0))
}

/// `Im chi(omega) = sum_{E_m != E_n} (p_m - p_n) pi |O_mn|^2 delta(omega + E_m - E_n)`.
///
/// `p_m - p_n` is evaluated as `(p_m + p_n) tanh(beta (E_n - E_m) / 2)`.
pub fn dissipation_spectrum(ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<LineSpectrum> {
    let basis = ens.observable(o)?;
    let groups = Groups::build(ens, &basis)?;
    let p = ens.populations();
    let beta = ens.beta();
    let positive: Vec<f64> = groups
        .bounds
        .iter()
        .map(|&(a, b)| {
            groups.pairs[a..b]
                .iter()
                .map(|&(w, m, n)| (p[m] + p[n]) * (0.5 * beta * w).tanh() * PI * basis.elements[(m, n)].norm_sqr())
                .sum()
        })
        .collect();
    Ok(groups.assemble(SpectrumKind::Dissipation, beta, 0.0, &positive, -1.0))
}

/// Rebuilds `S(omega)` from `Im chi(omega)`:
/// `S = coth(beta omega / 2) Im chi` for `omega != 0`, plus the zero-frequency
/// line `2 pi sum_n p_n (O_nn - <O>)^2` that the dissipation spectrum cannot
/// carry. Requires `beta > 0`.
pub fn generalized_fdt(dissipation: &LineSpectrum, ens: &GibbsEnsemble<'_>, o: &DenseHermitian) -> Result<LineSpectrum> {
    if dissipation.kind != SpectrumKind::Dissipation {
        return Err(Error::SpectrumKind { expected: "dissipation", actual: dissipation.kind.name() });
    }
    let beta = ens.beta();
    if !(beta > 0.0) {
        return Err(Error::InvalidBeta(beta));
    }
    if dissipation.beta != beta {
        return Err(Error::EnsembleMismatch(format!("beta {} vs {}", dissipation.beta, beta)));
    }
    let basis = ens.observable(o)?;
    let groups = Groups::build(ens, &basis)?;
    if dissipation.lines.len() != 2 * groups.bounds.len() + 1 {
        return Err(Error::EnsembleMismatch(format!(
            "{} lines, ensemble has {}",
            dissipation.lines.len(),
            2 * groups.bounds.len() + 1
        )));
    }
    let k = groups.bounds.len();
    for (i, &g) in groups.bounds.iter().enumerate() {
        let w = groups.omega(g);
        let line = dissipation.lines[k + 1 + i];
        if (line.omega - w).abs() > MERGE_TOL {
            return Err(Error::EnsembleMismatch(format!("line at {} vs {}", line.omega, w)));
        }
    }
    let lines = dissipation
        .lines
        .iter()
        .map(|l| {
            let weight = if l.omega == 0.0 {
                classical_weight(ens, &basis)
            } else {
                l.weight / (0.5 * beta * l.omega).tanh()
            };
            Line { omega: l.omega, weight }
        })
        .collect();
    Ok(LineSpectrum { kind: SpectrumKind::Autocorrelation, beta, lines })
}

/// `(2 / pi) sum_lines kernel(omega) weight`.
///
/// On an autocorrelation spectrum the three kernels give `F`, `beta chi` and
/// `beta^2 Var`.
pub fn moment(spectrum: &LineSpectrum, kernel: KernelKind, beta: f64) -> Result<f64> {
    if spectrum.kind != SpectrumKind::Autocorrelation {
        return Err(Error::SpectrumKind { expected: "autocorrelation", actual: spectrum.kind.name() });
    }
    let s: f64 = spectrum.lines.iter().map(|l| kernel.eval(l.omega, beta) * l.weight).sum();
    Ok(2.0 / PI * s)
}
