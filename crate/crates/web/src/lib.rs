//! Browser bindings: temperature and field sweeps of the bounds chain, and
//! line spectra. Every export returns a JSON string.

use std::f64::consts::PI;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qfi_core::fluctuation::{autocorrelation_spectrum, dissipation_spectrum, Line};
use qfi_core::gibbs::gibbs_ensemble;
use qfi_core::harness::{run_sweep, Axis, Grid, Spacing, SweepConfig, SweepRow, SweepSpec};
use qfi_core::operators::{build_tfim, ModelSpec};
use qfi_core::spectral::prepare;

/// Site cap for interactive use.
pub const MAX_SITES: usize = 8;

fn model(n_sites: usize, gamma: f64) -> Result<ModelSpec, String> {
    let m = ModelSpec::new(n_sites, gamma, 0.0);
    m.validate_with_cap(MAX_SITES).map_err(|e| e.to_string())?;
    Ok(m)
}

#[derive(Serialize)]
struct SweepOut {
    axis: &'static str,
    rows: Vec<SweepRow>,
}

fn sweep(m: ModelSpec, spec: SweepSpec) -> Result<String, String> {
    let axis = spec.axis.name();
    let mut c = SweepConfig::new(m);
    c.sweep = Some(spec);
    let rows = run_sweep(&c).map_err(|e| e.to_string())?;
    serde_json::to_string(&SweepOut { axis, rows }).map_err(|e| e.to_string())
}

/// Bounds chain on `points` log-spaced temperatures in `[tmin, tmax]`.
pub fn temperature_sweep_json(n_sites: usize, gamma: f64, tmin: f64, tmax: f64, points: usize) -> Result<String, String> {
    let spec = SweepSpec {
        axis: Axis::Temperature,
        grid: Grid::Range { spacing: Spacing::Log, start: tmin, stop: tmax, num: points },
        temperature: None,
    };
    sweep(model(n_sites, gamma)?, spec)
}

/// Bounds chain on `points` field angles strictly inside `(0, pi/2)`.
pub fn gamma_sweep_json(n_sites: usize, temperature: f64, points: usize) -> Result<String, String> {
    let grid = (1..=points).map(|k| k as f64 * 0.5 * PI / (points + 1) as f64).collect();
    let spec = SweepSpec { axis: Axis::Gamma, grid: Grid::Points(grid), temperature: Some(temperature) };
    sweep(model(n_sites, 0.0)?, spec)
}

#[derive(Serialize)]
struct SpectraOut {
    beta: f64,
    autocorrelation: Vec<Line>,
    dissipation: Vec<Line>,
}

/// Autocorrelation and dissipation line spectra at inverse temperature `beta`.
pub fn spectra_json(n_sites: usize, gamma: f64, beta: f64) -> Result<String, String> {
    let m = model(n_sites, gamma)?;
    let run = || -> qfi_core::Result<SpectraOut> {
        let (h, o) = build_tfim(&m)?;
        let e = prepare(&h, &o, None)?;
        let ens = gibbs_ensemble(&e, beta)?;
        Ok(SpectraOut {
            beta,
            autocorrelation: autocorrelation_spectrum(&ens, &o)?.lines,
            dissipation: dissipation_spectrum(&ens, &o)?.lines,
        })
    };
    let out = run().map_err(|e| e.to_string())?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn temperature_sweep(n_sites: usize, gamma: f64, tmin: f64, tmax: f64, points: usize) -> Result<String, JsError> {
    temperature_sweep_json(n_sites, gamma, tmin, tmax, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn gamma_sweep(n_sites: usize, temperature: f64, points: usize) -> Result<String, JsError> {
    gamma_sweep_json(n_sites, temperature, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectra(n_sites: usize, gamma: f64, beta: f64) -> Result<String, JsError> {
    spectra_json(n_sites, gamma, beta).map_err(|e| JsError::new(&e))
}
