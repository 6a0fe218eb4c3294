//! Heisenberg evolution, exponentially dressed local operators, commutator
//! decay against distant probes, and local approximations on a chain prefix.

use std::io::Write;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64};
use crate::operators::{pauli_string_matrix, DenseHermitian, ModelSpec, Pauli, PauliString};
use crate::quadrature::{neumaier_sum, uniform_panels, Rule};
use crate::spectral::EigenSystem;

/// Norms at or below this are excluded from the decay fit.
pub const FIT_FLOOR: f64 = 1e-12;

/// Minimum number of points for the decay fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Random complement unitaries in the sampled `epsilon` probe set.
pub const RANDOM_PROBES: usize = 100;

/// `A(t) = exp(iHt) A exp(-iHt)`, built from the phases `exp(i (E_m - E_n) t)`
/// in the eigenbasis.
pub fn heisenberg_evolve(eigs: &EigenSystem, a: &DenseHermitian, t: f64) -> Result<DenseHermitian> {
    let e = eigs.energies();
    let mut m = eigs.represent(a)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let phase = (e[i] - e[j]) * t;
            m[(i, j)] *= c64::new(phase.cos(), phase.sin());
        }
    }
    Ok(DenseHermitian::from_hermitized(eigs.to_computational(m.as_ref())))
}

/// Parameters of the dressing `int exp(-mu |t|) A(t) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressSpec {
    pub mu: f64,
    /// Quadrature route only: integration covers `|t| <= horizon`.
    pub horizon: f64,
    /// Quadrature route only: number of Gauss-Legendre panels on `[0, horizon]`.
    pub panels: usize,
    /// Use the exact Lorentzian filter instead of quadrature.
    pub closed_form: bool,
}

impl DressSpec {
    pub fn closed_form(mu: f64) -> Self {
        DressSpec { mu, horizon: 0.0, panels: 0, closed_form: true }
    }

    pub fn quadrature(mu: f64, horizon: f64, panels: usize) -> Self {
        DressSpec { mu, horizon, panels, closed_form: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::OutOfRange { name: "mu", value: self.mu, min: f64::MIN_POSITIVE, max: f64::INFINITY });
        }
        if !self.closed_form {
            if !(self.horizon > 0.0) || !self.horizon.is_finite() {
                return Err(Error::InvalidQuadrature(format!("horizon {} must be positive", self.horizon)));
            }
            if self.panels == 0 {
                return Err(Error::InvalidQuadrature("panels must be positive".into()));
            }
        }
        Ok(())
    }

    /// Frequency filter `int exp(-mu |t|) cos(omega t) dt`.
    ///
    /// The quadrature route truncates at the horizon, which costs at most
    /// `2 exp(-mu horizon) / mu`.
    fn filter(&self, rule: &Rule, omega: f64) -> f64 {
        if self.closed_form {
            2.0 * self.mu / (self.mu * self.mu + omega * omega)
        } else {
            2.0 * neumaier_sum(
                rule.nodes.iter().zip(&rule.weights).map(|(&t, &w)| w * (-self.mu * t).exp() * (omega * t).cos()),
            )
        }
    }
}

/// `L_loc = int exp(-mu |t|) A(t) dt`, elementwise in the eigenbasis.
pub fn dressed_operator(eigs: &EigenSystem, a: &DenseHermitian, spec: &DressSpec) -> Result<DenseHermitian> {
    spec.validate()?;
    let mut rule = Rule::default();
    if !spec.closed_form {
        rule.add_panels(uniform_panels(0.0, spec.horizon, spec.panels), 8);
    }
    let e = eigs.energies();
    let d = eigs.dim();
    let m = eigs.represent(a)?;

    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(d * (d + 1) / 2);
    for n in 0..d {
        for k in 0..=n {
            entries.push(((e[n] - e[k]).abs(), k, n));
        }
    }
    entries.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = Mat::<c64>::zeros(d, d);
    let mut cached: Option<(f64, f64)> = None;
    for &(w, k, n) in &entries {
        let f = match cached {
            Some((w0, f0)) if w - w0 <= 1e-13 => f0,
            _ => {
                let f = spec.filter(&rule, w);
                cached = Some((w, f));
                f
            }
        };
        out[(k, n)] = m[(k, n)] * f;
        out[(n, k)] = m[(n, k)] * f;
    }
    Ok(DenseHermitian::from_hermitized(eigs.to_computational(out.as_ref())))
}

/// Commutator norms of a dressed operator against single-site probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityProfile {
    /// Distance from site 0.
    pub distances: Vec<usize>,
    /// `||[L_loc, sigma_r]||`, spectral norm.
    pub commutator_norms: Vec<f64>,
    /// `lambda` in `norm ~ exp(-lambda r)`, fitted on `r >= 1`. `None` when
    /// fewer than [`MIN_FIT_POINTS`] norms clear [`FIT_FLOOR`].
    pub fitted_rate: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub fit_r2: Option<f64>,
    pub mu: f64,
    pub probe: Pauli,
}

/// The JSON fit record emitted next to the profile CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub lambda: Option<f64>,
    pub r2: Option<f64>,
    pub mu: f64,
    pub model: ModelSpec,
}

impl LocalityProfile {
    pub fn fit_record(&self, model: &ModelSpec) -> FitRecord {
        FitRecord { lambda: self.fitted_rate, r2: self.fit_r2, mu: self.mu, model: model.clone() }
    }

    /// Writes `r,norm` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io { path: "<csv>".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "norm"]).map_err(io)?;
        for (r, n) in self.distances.iter().zip(&self.commutator_norms) {
            w.serialize((r, n)).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

fn n_sites_of(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::InvalidRegion(format!("dimension {dim} is not a qubit chain")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Dresses `a_loc` (supported on site 0) and measures `||[L_loc, sigma_r^probe]||`
/// for every site `r`. The decay rate is fitted on `r >= 1` over norms above
/// [`FIT_FLOOR`]. Chains with fewer than [`MIN_FIT_POINTS`] sites beyond the
/// origin are rejected.
pub fn commutator_decay_profile(
    eigs: &EigenSystem,
    a_loc: &DenseHermitian,
    spec: &DressSpec,
    probe: Pauli,
) -> Result<LocalityProfile> {
    let n = n_sites_of(eigs.dim())?;
    if n - 1 < MIN_FIT_POINTS {
        return Err(Error::InsufficientFitPoints { usable: n - 1, required: MIN_FIT_POINTS });
    }
    let dressed = dressed_operator(eigs, a_loc, spec)?;
    let norms = crate::par_map(0..n, |r| -> Result<f64> {
        let b = pauli_string_matrix(&PauliString::single(r, probe, 1.0), n)?;
        let c = linalg::commutator(dressed.as_ref(), b.as_ref());
        linalg::spectral_norm_antihermitian(c.as_ref())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;

    let (xs, ys): (Vec<f64>, Vec<f64>) = norms
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &v)| v > FIT_FLOOR)
        .map(|(r, v)| (r as f64, v.ln()))
        .unzip();
    let fit = (xs.len() >= MIN_FIT_POINTS).then(|| linear_fit(&xs, &ys));
    Ok(LocalityProfile {
        distances: (0..n).collect(),
        commutator_norms: norms,
        fitted_rate: fit.map(|f| -f.0),
        fit_intercept: fit.map(|f| f.1),
        fit_r2: fit.map(|f| f.2),
        mu: spec.mu,
        probe,
    })
}

/// `A' = Tr_complement(A) / d_complement` on the first `k` sites, and
/// `err = ||A - A' (x) I||`.
pub fn local_approximation(a: &DenseHermitian, k: usize) -> Result<(DenseHermitian, f64)> {
    let n = n_sites_of(a.dim())?;
    if k == 0 || k > n {
        return Err(Error::InvalidRegion(format!("region of {k} leading sites on a chain of {n}")));
    }
    let dr = 1usize << k;
    let dc = 1usize << (n - k);
    let m = a.as_ref();
    let reduced = Mat::from_fn(dr, dr, |r, s| {
        let mut acc = c64::new(0.0, 0.0);
        for c in 0..dc {
            acc += m[(r * dc + c, s * dc + c)];
        }
        acc / dc as f64
    });
    let reduced = DenseHermitian::new(reduced)?;
    let embedded = reduced.kron(&DenseHermitian::identity(dc));
    let diff = a.add_scaled(&embedded, -1.0)?;
    let err = diff.spectral_norm()?;
    Ok((reduced, err))
}

/// Sampled lower estimate of `sup_B ||[A, I (x) B]|| / ||B||` over operators
/// `B` on the complement of the first `k` sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub epsilon: f64,
    /// Label of the maximizing probe, e.g. `x3` or `haar17`.
    pub maximizing_probe: String,
    pub probes: usize,
}

/// Probes are every single-site Pauli on the complement and
/// [`RANDOM_PROBES`] Haar unitaries drawn from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn sampled_epsilon(a: &DenseHermitian, k: usize, seed: u64) -> Result<EpsilonEstimate> {
    let n = n_sites_of(a.dim())?;
    if k == 0 || k >= n {
        return Err(Error::InvalidRegion(format!("complement of {k} leading sites on a chain of {n} is empty")));
    }
    let nc = n - k;
    let dc = 1usize << nc;
    let mut probes: Vec<(String, Mat<c64>)> = Vec::new();
    for site in 0..nc {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let b = pauli_string_matrix(&PauliString::single(site, p, 1.0), nc)?;
            probes.push((format!("{p}{}", site + k), b.into_inner()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..RANDOM_PROBES {
        probes.push((format!("haar{i}"), linalg::random_unitary(dc, &mut rng)));
    }
    let ratios = crate::par_map(0..probes.len(), |i| -> Result<f64> {
        let b = &probes[i].1;
        let c = commutator_with_complement(a.as_ref(), b.as_ref(), 1 << k);
        Ok(linalg::spectral_norm(c.as_ref())? / linalg::spectral_norm(b.as_ref())?)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let (best, epsilon) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok(EpsilonEstimate { epsilon, maximizing_probe: probes[best].0.clone(), probes: probes.len() })
}

/// `[A, I (x) B]` using the block structure of `I (x) B`.
fn commutator_with_complement(a: faer::MatRef<'_, c64>, b: faer::MatRef<'_, c64>, dr: usize) -> Mat<c64> {
    let dc = b.nrows();
    let mut out = Mat::<c64>::zeros(a.nrows(), a.ncols());
    for r in 0..dr {
        for s in 0..dr {
            let block = a.submatrix(r * dc, s * dc, dc, dc);
            let ab = linalg::mul(block, b);
            let ba = linalg::mul(b, block);
            for j in 0..dc {
                for i in 0..dc {
                    out[(r * dc + i, s * dc + j)] = ab[(i, j)] - ba[(i, j)];
                }
            }
        }
    }
    out
}
