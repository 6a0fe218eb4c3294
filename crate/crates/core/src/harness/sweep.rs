//! Temperature and field sweeps of the bounds chain, and their CSV/JSON artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Axis, SweepConfig};
use crate::error::{Error, Result};
use crate::gibbs::{self, gibbs_ensemble};
use crate::operators::{build_tfim, LinearModel, ModelSpec};
use crate::qfi::{self, BoundsReport};
use crate::spectral::{prepare, DegeneracyPolicy, EigenSystem};

/// Fixed CSV header.
pub const CSV_HEADER: [&str; 11] =
    ["axis", "lb", "qfi", "ub1", "ub2", "alpha", "phi", "dtheta_min", "d_o", "d_o_bar", "ms"];

/// Relative tolerance of the fidelity oracle against the spectral QFI, with
/// an absolute floor of `1e-6`.
pub const ORACLE_QFI_RTOL: f64 = 1e-3;

/// Relative tolerance of the finite-difference susceptibility.
pub const ORACLE_CHI_RTOL: f64 = 1e-4;

const FD_DELTA: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    pub gamma: f64,
    #[serde(flatten)]
    pub report: BoundsReport,
    /// Wall-clock milliseconds, only when timing is recorded.
    pub ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_qfi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_susceptibility: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow {
    axis: f64,
    lb: f64,
    qfi: f64,
    ub1: f64,
    ub2: f64,
    alpha: Option<f64>,
    phi: Option<f64>,
    dtheta_min: Option<f64>,
    d_o: f64,
    d_o_bar: Option<f64>,
    ms: Option<f64>,
}

impl From<&SweepRow> for CsvRow {
    fn from(r: &SweepRow) -> Self {
        let b = &r.report;
        CsvRow {
            axis: r.axis,
            lb: b.lb,
            qfi: b.qfi,
            ub1: b.ub1,
            ub2: b.ub2,
            alpha: b.alpha,
            phi: b.phi,
            dtheta_min: b.dtheta_min,
            d_o: b.d_o,
            d_o_bar: b.d_o_bar,
            ms: r.ms,
        }
    }
}

/// JSON artifact: tool version, the config as given, the resolved grid and the rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub tool: String,
    pub version: String,
    pub config: SweepConfig,
    pub grid: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

struct Prepared {
    model: ModelSpec,
    eigs: EigenSystem,
    elements: faer::Mat<crate::linalg::c64>,
    norm: f64,
}

impl Prepared {
    fn new(model: ModelSpec, policy: Option<DegeneracyPolicy>) -> Result<Self> {
        let (h, o) = build_tfim(&model)?;
        let eigs = prepare(&h, &o, policy)?;
        let elements = eigs.represent(&o)?;
        Ok(Prepared { model, eigs, elements, norm: o.max_abs() })
    }

    fn row(&self, axis: f64, beta: f64, config: &SweepConfig) -> Result<SweepRow> {
        let start = config.numerics.record_timing.then(Instant::now);
        let ens = gibbs_ensemble(&self.eigs, beta)?;
        let basis = ens.observable_from_elements(self.elements.clone(), self.norm)?;
        let report = qfi::bounds_chain_in_basis(&ens, &basis)?;
        let (mut oracle_qfi, mut oracle_susceptibility) = (None, None);
        if config.numerics.oracles && beta > 0.0 {
            let model = LinearModel::tfim(&self.model)?;
            let f = qfi::qfi_fidelity_oracle(&model, beta, config.numerics.oracle_delta)?;
            if (f - report.qfi).abs() > (ORACLE_QFI_RTOL * report.qfi.abs()).max(1e-6) {
                return Err(invariant("fidelity oracle", format!("oracle {f:e} vs spectral {:e}", report.qfi)));
            }
            let chi = gibbs::susceptibility_fd(&model, beta, FD_DELTA)?;
            let exact = report.ub1 / beta;
            if (chi - exact).abs() > ORACLE_CHI_RTOL * exact.abs() + 1e-10 * self.norm {
                return Err(invariant("susceptibility oracle", format!("finite difference {chi:e} vs {exact:e}")));
            }
            oracle_qfi = Some(f);
            oracle_susceptibility = Some(chi);
        }
        let ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
        Ok(SweepRow { axis, gamma: self.model.gamma, report, ms, oracle_qfi, oracle_susceptibility })
    }
}

fn invariant(context: &str, detail: String) -> Error {
    Error::Invariant { context: context.into(), detail }
}

/// Names the grid point in an invariant failure.
fn locate(e: Error, axis: Axis, value: f64, model: &ModelSpec) -> Error {
    match e {
        Error::Invariant { context, detail } => Error::Invariant {
            context: format!("{}={value} (n_sites={}, gamma={}, theta={}) {context}", axis.name(), model.n_sites, model.gamma, model.theta),
            detail,
        },
        other => other,
    }
}

/// One row per grid point, sorted by ascending axis value.
///
/// A temperature sweep shares one eigensystem across the grid; a gamma sweep
/// diagonalizes each point. Rows are independent and computed in parallel
/// when the `parallel` feature is on; the result does not depend on it.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let spec = config.sweep_spec()?;
    let grid = spec.resolve()?;
    let policy = config.numerics.policy()?;
    let rows = match spec.axis {
        Axis::Temperature => {
            let prepared = Prepared::new(config.model, policy)?;
            crate::par_map(0..grid.len(), |i| {
                let t = grid[i];
                prepared.row(t, 1.0 / t, config).map_err(|e| locate(e, Axis::Temperature, t, &config.model))
            })
        }
        Axis::Gamma => {
            let beta = 1.0 / spec.temperature.expect("validated");
            crate::par_map(0..grid.len(), |i| {
                let g = grid[i];
                let model = config.model.with_gamma(g);
                Prepared::new(model, policy)
                    .and_then(|p| p.row(g, beta, config))
                    .map_err(|e| locate(e, Axis::Gamma, g, &model))
            })
        }
    };
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.axis.total_cmp(&b.axis));
    Ok(rows)
}

/// Writes the fixed-header CSV. Undefined quantities are empty fields.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io { path: "<csv>".into(), message: e.to_string() };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.serialize(CsvRow::from(r)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io { path: "<csv>".into(), message: e.to_string() })
}

pub fn sweep_report(config: &SweepConfig, rows: &[SweepRow]) -> Result<SweepReport> {
    let mut grid = config.sweep_spec()?.resolve()?;
    grid.sort_by(f64::total_cmp);
    Ok(SweepReport {
        tool: "qfi".into(),
        version: tool_version().into(),
        config: config.clone(),
        grid,
        rows: rows.to_vec(),
    })
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir` and returns their paths.
pub fn emit_report(config: &SweepConfig, rows: &[SweepRow], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let io = |p: &Path, e: std::io::Error| Error::Io { path: p.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let csv_path = dir.join(format!("{}.csv", config.outputs.stem));
    let json_path = dir.join(format!("{}.json", config.outputs.stem));

    let mut csv_bytes = Vec::new();
    write_csv(rows, &mut csv_bytes)?;
    std::fs::write(&csv_path, csv_bytes).map_err(|e| io(&csv_path, e))?;

    let report = sweep_report(config, rows)?;
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    json.push('\n');
    std::fs::write(&json_path, json).map_err(|e| io(&json_path, e))?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Grid, Spacing, SweepSpec};

    fn config(axis: Axis, grid: Grid, temperature: Option<f64>) -> SweepConfig {
        let mut c = SweepConfig::new(ModelSpec::new(4, 0.3, 0.0));
        c.sweep = Some(SweepSpec { axis, grid, temperature });
        c
    }

    #[test]
    fn temperature_sweep_is_sorted_and_valid() {
        let c = config(Axis::Temperature, Grid::Points(vec![5.0, 1.0, 0.2]), None);
        let rows = run_sweep(&c).unwrap();
        let axes: Vec<f64> = rows.iter().map(|r| r.axis).collect();
        assert_eq!(axes, vec![0.2, 1.0, 5.0]);
        for r in &rows {
            assert_eq!(r.report.beta, 1.0 / r.axis);
            assert!(r.ms.is_none());
            r.report.check_invariants(1e-12).unwrap();
        }
    }

    #[test]
    fn gamma_sweep_matches_direct_evaluation() {
        let c = config(Axis::Gamma, Grid::Range { spacing: Spacing::Linear, start: 0.2, stop: 1.2, num: 3 }, Some(2.0));
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), 3);
        let (h, o) = build_tfim(&ModelSpec::new(4, 0.7, 0.0)).unwrap();
        let e = prepare(&h, &o, None).unwrap();
        let direct = qfi::bounds_chain(&gibbs_ensemble(&e, 0.5).unwrap(), &o).unwrap();
        assert!((rows[1].report.qfi - direct.qfi).abs() < 1e-12 * direct.qfi);
    }

    #[test]
    fn oracles_agree_on_a_small_sweep() {
        let mut c = config(Axis::Temperature, Grid::Points(vec![0.5, 2.0]), None);
        c.numerics.oracles = true;
        let rows = run_sweep(&c).unwrap();
        assert!(rows.iter().all(|r| r.oracle_qfi.is_some() && r.oracle_susceptibility.is_some()));
    }

    #[test]
    fn empty_grid_is_a_config_error() {
        let c = config(Axis::Temperature, Grid::Points(vec![]), None);
        assert!(matches!(run_sweep(&c), Err(Error::Config(_))));
        let mut c = config(Axis::Temperature, Grid::Points(vec![1.0]), None);
        c.sweep = None;
        assert!(matches!(run_sweep(&c), Err(Error::Config(_))));
    }

    #[test]
    fn csv_layout() {
        let c = config(Axis::Temperature, Grid::Points(vec![1.0]), None);
        let rows = run_sweep(&c).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[0], "1.0");
        assert_eq!(fields[10], "");
        assert_eq!(fields[2].parse::<f64>().unwrap(), rows[0].report.qfi);
    }

    #[test]
    fn infinite_temperature_row_has_undefined_fields() {
        let p = Prepared::new(ModelSpec::new(2, 0.3, 0.0), None).unwrap();
        let c = SweepConfig::new(ModelSpec::new(2, 0.3, 0.0));
        let r = p.row(f64::INFINITY, 0.0, &c).unwrap();
        assert_eq!(r.report.qfi, 0.0);
        assert!(r.report.dtheta_min.is_none() && r.report.phi.is_none());
    }
}
