//! Sweep configuration: a TOML file with `model`, `sweep`, `numerics`,
//! `quadrature` and `outputs` sections.
//!
//! ```toml
//! [model]
//! n_sites = 8
//! gamma = 0.47123889803846897
//!
//! [sweep]
//! axis = "temperature"
//! grid = { spacing = "log", start = 0.05, stop = 50.0, num = 40 }
//!
//! [outputs]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::ModelSpec;
use crate::spectral::DegeneracyPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Grid values are temperatures `T = 1 / beta`; `gamma` comes from the model.
    Temperature,
    /// Grid values are field angles; the temperature is `sweep.temperature`.
    Gamma,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Temperature => "temperature",
            Axis::Gamma => "gamma",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Either explicit points or `num` points from `start` to `stop` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range { spacing: Spacing, start: f64, stop: f64, num: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Points(p) => p.clone(),
            &Grid::Range { spacing, start, stop, num } => {
                if num == 0 {
                    return Err(Error::Config("grid has zero points".into()));
                }
                if spacing == Spacing::Log && !(start > 0.0 && stop > 0.0) {
                    return Err(Error::Config(format!("log grid needs positive ends, got {start} and {stop}")));
                }
                (0..num)
                    .map(|k| {
                        if k + 1 == num && num > 1 {
                            return stop;
                        }
                        let s = if num == 1 { 0.0 } else { k as f64 / (num - 1) as f64 };
                        match spacing {
                            Spacing::Linear => start + (stop - start) * s,
                            Spacing::Log => start * ((stop / start).ln() * s).exp(),
                        }
                    })
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("grid value {x} is not finite")));
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Config("grid is not strictly monotone".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Grid,
    /// Fixed temperature of a gamma sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Absolute degeneracy tolerance; the spectrum-relative default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_deg: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Cross-check every row against the fidelity and finite-difference oracles.
    #[serde(default)]
    pub oracles: bool,
    #[serde(default = "default_oracle_delta")]
    pub oracle_delta: f64,
    /// Fill the `ms` column with wall-clock times. Off keeps output byte-stable.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_oracle_delta() -> f64 {
    1e-3
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics { eps_deg: None, seed: 0, oracles: false, oracle_delta: default_oracle_delta(), record_timing: false }
    }
}

impl Numerics {
    pub fn policy(&self) -> Result<Option<DegeneracyPolicy>> {
        self.eps_deg.map(DegeneracyPolicy::new).transpose()
    }
}

/// Time-domain SLD quadrature, horizon in units of `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadrature {
    #[serde(default = "default_horizon")]
    pub horizon_beta: f64,
    #[serde(default = "default_panels")]
    pub panels: usize,
}

fn default_horizon() -> f64 {
    12.0
}

fn default_panels() -> usize {
    2048
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { horizon_beta: default_horizon(), panels: default_panels() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    /// File stem of the CSV and JSON artifacts.
    #[serde(default = "default_stem")]
    pub stem: String,
}

fn default_stem() -> String {
    "sweep".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: PathBuf::from("out"), stem: default_stem() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelSpec,
    /// Required by the sweep subcommands only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default)]
    pub outputs: Outputs,
}

impl SweepConfig {
    pub fn new(model: ModelSpec) -> Self {
        SweepConfig {
            model,
            sweep: None,
            numerics: Numerics::default(),
            quadrature: Quadrature::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the model and numerics, and the sweep section when present.
    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.numerics.policy().map_err(|e| Error::Config(e.to_string()))?;
        let d = self.numerics.oracle_delta;
        if !(1e-4..=1e-2).contains(&d) {
            return Err(Error::Config(format!("oracle_delta {d} outside [1e-4, 1e-2]")));
        }
        if !(self.quadrature.horizon_beta > 0.0) || self.quadrature.panels < 16 {
            return Err(Error::Config("quadrature needs horizon_beta > 0 and panels >= 16".into()));
        }
        if let Some(s) = &self.sweep {
            s.resolve()?;
        }
        Ok(())
    }

    /// The sweep section, or a config error naming the missing section.
    pub fn sweep_spec(&self) -> Result<&SweepSpec> {
        self.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep] section".into()))
    }
}

impl SweepSpec {
    /// Grid values after validation: strictly monotone, and positive
    /// temperatures on either axis.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let v = self.grid.values()?;
        match self.axis {
            Axis::Temperature => {
                if let Some(x) = v.iter().find(|&&x| !(x > 0.0)) {
                    return Err(Error::Config(format!("temperature {x} must be positive")));
                }
                if self.temperature.is_some() {
                    return Err(Error::Config("a temperature sweep takes no fixed temperature".into()));
                }
            }
            Axis::Gamma => match self.temperature {
                Some(t) if t > 0.0 && t.is_finite() => {}
                Some(t) => return Err(Error::Config(format!("temperature {t} must be positive"))),
                None => return Err(Error::Config("a gamma sweep needs sweep.temperature".into())),
            },
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[model]
n_sites = 4
gamma = 0.5

[sweep]
axis = "temperature"
grid = { spacing = "log", start = 0.05, stop = 50.0, num = 40 }

[numerics]
eps_deg = 1e-9
seed = 3

[outputs]
dir = "out"
"#;

    #[test]
    fn parses_and_resolves() {
        let c = SweepConfig::from_toml_str(EXAMPLE).unwrap();
        c.validate().unwrap();
        let g = c.sweep_spec().unwrap().resolve().unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[39], 50.0);
        assert!((g[1] / g[0] - (1000f64).powf(1.0 / 39.0)).abs() < 1e-12);
        assert_eq!(c.numerics.oracle_delta, 1e-3);
        assert_eq!(c.outputs.stem, "sweep");
    }

    #[test]
    fn json_and_toml_round_trip() {
        let c = SweepConfig::from_toml_str(EXAMPLE).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SweepConfig>(&json).unwrap(), c);
        assert_eq!(SweepConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap(), c);
    }

    #[test]
    fn invalid_grids() {
        let spec = |grid: Grid, axis: Axis, temperature: Option<f64>| SweepSpec { axis, grid, temperature };
        let t = Axis::Temperature;
        assert!(matches!(spec(Grid::Points(vec![]), t, None).resolve(), Err(Error::Config(_))));
        assert!(spec(Grid::Points(vec![1.0, 1.0]), t, None).resolve().is_err());
        assert!(spec(Grid::Points(vec![1.0, 3.0, 2.0]), t, None).resolve().is_err());
        assert!(spec(Grid::Points(vec![0.0, 1.0]), t, None).resolve().is_err());
        assert!(spec(Grid::Points(vec![3.0, 2.0, 1.0]), t, None).resolve().is_ok());
        assert!(spec(Grid::Points(vec![0.1, 0.2]), Axis::Gamma, None).resolve().is_err());
        assert!(spec(Grid::Points(vec![0.1, 0.2]), Axis::Gamma, Some(0.0)).resolve().is_err());
        assert!(spec(Grid::Points(vec![0.0, 0.2]), Axis::Gamma, Some(1.0)).resolve().is_ok());
        let range = Grid::Range { spacing: Spacing::Log, start: 0.0, stop: 1.0, num: 3 };
        assert!(spec(range, t, None).resolve().is_err());
    }

    #[test]
    fn unknown_fields_and_bad_numerics_are_config_errors() {
        assert!(SweepConfig::from_toml_str("[model]\nn_sites = 2\ngamma = 0.1\n[numerics]\nbogus = 1\n").is_err());
        let mut c = SweepConfig::new(ModelSpec::new(2, 0.1, 0.0));
        c.numerics.eps_deg = Some(-1.0);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = SweepConfig::new(ModelSpec::new(0, 0.1, 0.0));
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
