use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qfi_core::fluctuation::{autocorrelation_spectrum, dissipation_spectrum, generalized_fdt};
use qfi_core::gibbs::gibbs_ensemble;
use qfi_core::harness::{self, Axis, Grid, Spacing, SweepConfig, SweepSpec};
use qfi_core::locality::{commutator_decay_profile, dressed_operator, local_approximation, sampled_epsilon, DressSpec};
use qfi_core::operators::{build_tfim, pauli_string_matrix, LinearModel, ModelSpec, Pauli, PauliString};
use qfi_core::qfi::{bounds_chain, uncertainty_report};
use qfi_core::sld::{kernel_integral, sld_matrix, sld_time_domain, TimeKernelSpec};
use qfi_core::spectral::{eigendecompose, prepare};
use qfi_core::{linalg, Error, Result};

#[derive(Parser)]
#[command(name = "qfi", version, about = "Quantum Fisher information bounds for thermal transverse-field Ising chains")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Absolute degeneracy tolerance.
    #[arg(long, global = true)]
    eps_deg: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    n_sites: Option<usize>,
    /// Field angle in radians.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds chain on a temperature grid (log-spaced unless the config gives one).
    SweepTemperature {
        #[arg(long)]
        tmin: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Bounds chain on a field-angle grid inside (0, pi/2) at fixed temperature.
    SweepGamma {
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Bounds chain and uncertainty products at one temperature.
    Bounds {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Line spectrum of the conjugate observable as `omega,weight` CSV.
    Spectrum {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = SpectrumChoice::Autocorrelation)]
        kind: SpectrumChoice,
    },
    /// SLD trace identities, Lyapunov residual and time-domain reconstruction.
    SldCheck {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
    },
    /// Commutator decay of the dressed site-0 operator and local approximations.
    Locality {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Dressing rate; defaults to pi / beta.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, value_enum, default_value_t = PauliChoice::X)]
        operator: PauliChoice,
        #[arg(long, value_enum, default_value_t = PauliChoice::Z)]
        probe: PauliChoice,
        /// Also estimate the sampled commutator bound for each region.
        #[arg(long)]
        epsilon: bool,
    },
    /// Closed-form fixtures, route identities, chain suite and fault injection.
    Selftest,
}

#[derive(Args)]
struct SweepFlags {
    /// Cross-check each row against the fidelity and finite-difference oracles.
    #[arg(long)]
    oracles: bool,
    /// Record wall-clock time per row (the CSV is then not byte-stable).
    #[arg(long)]
    timing: bool,
    /// Artifact file stem.
    #[arg(long)]
    stem: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumChoice {
    Autocorrelation,
    Dissipation,
    /// Autocorrelation rebuilt from the dissipation spectrum.
    Fdt,
}

#[derive(Clone, Copy, ValueEnum)]
enum PauliChoice {
    X,
    Y,
    Z,
}

impl From<PauliChoice> for Pauli {
    fn from(p: PauliChoice) -> Pauli {
        match p {
            PauliChoice::X => Pauli::X,
            PauliChoice::Y => Pauli::Y,
            PauliChoice::Z => Pauli::Z,
        }
    }
}

const DEFAULT_POINTS: usize = 40;

fn base_config(common: &Common) -> Result<SweepConfig> {
    let mut c = match &common.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::new(ModelSpec::new(8, 0.15 * PI, 0.0)),
    };
    if let Some(n) = common.n_sites {
        c.model.n_sites = n;
    }
    if let Some(g) = common.gamma {
        c.model.gamma = g;
    }
    if let Some(t) = common.theta {
        c.model.theta = t;
    }
    if let Some(s) = common.seed {
        c.numerics.seed = s;
    }
    if let Some(e) = common.eps_deg {
        c.numerics.eps_deg = Some(e);
    }
    if let Some(o) = &common.out {
        c.outputs.dir = o.clone();
    }
    Ok(c)
}

fn apply_sweep_flags(c: &mut SweepConfig, flags: &SweepFlags) {
    c.numerics.oracles |= flags.oracles;
    c.numerics.record_timing |= flags.timing;
    if let Some(s) = &flags.stem {
        c.outputs.stem = s.clone();
    }
}

/// The config's sweep section for `axis`, or a fresh one.
fn sweep_section(c: &SweepConfig, axis: Axis, default: impl FnOnce() -> SweepSpec) -> Result<SweepSpec> {
    match &c.sweep {
        Some(s) if s.axis == axis => Ok(s.clone()),
        Some(s) => Err(Error::Config(format!("config sweeps {}, command sweeps {}", s.axis.name(), axis.name()))),
        None => Ok(default()),
    }
}

fn gamma_grid(points: usize) -> Grid {
    Grid::Points((1..=points).map(|k| k as f64 * 0.5 * PI / (points + 1) as f64).collect())
}

fn run_sweep(c: SweepConfig) -> Result<i32> {
    let rows = harness::run_sweep(&c)?;
    let (csv, json) = harness::emit_report(&c, &rows, &c.outputs.dir)?;
    println!("{} rows -> {} and {}", rows.len(), csv.display(), json.display());
    Ok(harness::EXIT_PASS)
}

fn print_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let io = |p: &Path, e: std::io::Error| Error::Io { path: p.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    Ok(path)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("beta {beta} must be finite and non-negative")))
    }
}

#[derive(Serialize)]
struct BoundsOutput {
    version: &'static str,
    model: ModelSpec,
    report: qfi_core::qfi::BoundsReport,
    uncertainty: qfi_core::qfi::UncertaintyReport,
}

fn bounds(c: &SweepConfig, common: &Common, beta: f64) -> Result<i32> {
    check_beta(beta)?;
    let (h, o) = build_tfim(&c.model)?;
    let e = prepare(&h, &o, c.numerics.policy()?)?;
    let report = bounds_chain(&gibbs_ensemble(&e, beta)?, &o)?;
    let uncertainty = uncertainty_report(&report);
    eprintln!("{uncertainty}");
    let text = print_json(&BoundsOutput { version: harness::tool_version(), model: c.model, report, uncertainty })?;
    println!("{text}");
    if common.out.is_some() {
        write_file(&c.outputs.dir, "bounds.json", format!("{text}\n").as_bytes())?;
    }
    Ok(harness::EXIT_PASS)
}

fn spectrum(c: &SweepConfig, common: &Common, beta: f64, kind: SpectrumChoice) -> Result<i32> {
    check_beta(beta)?;
    let (h, o) = build_tfim(&c.model)?;
    let e = prepare(&h, &o, c.numerics.policy()?)?;
    let ens = gibbs_ensemble(&e, beta)?;
    let s = match kind {
        SpectrumChoice::Autocorrelation => autocorrelation_spectrum(&ens, &o)?,
        SpectrumChoice::Dissipation => dissipation_spectrum(&ens, &o)?,
        SpectrumChoice::Fdt => generalized_fdt(&dissipation_spectrum(&ens, &o)?, &ens, &o)?,
    };
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    if common.out.is_some() {
        let p = write_file(&c.outputs.dir, "spectrum.csv", &buf)?;
        eprintln!("{} lines -> {}", s.lines.len(), p.display());
    } else {
        print!("{}", String::from_utf8_lossy(&buf));
    }
    Ok(harness::EXIT_PASS)
}

/// Tolerances of the `sld-check` subcommand.
const SLD_LYAPUNOV_TOL: f64 = 1e-6;
const SLD_TIME_DOMAIN_RTOL: f64 = 1e-5;
const SLD_KERNEL_RTOL: f64 = 1e-6;

#[derive(Serialize)]
struct SldCheckOutput {
    version: &'static str,
    model: ModelSpec,
    beta: f64,
    sld: qfi_core::sld::SldSummary,
    time_domain_deviation: f64,
    kernel_integral: f64,
    passed: bool,
}

fn sld_check(c: &SweepConfig, common: &Common, beta: f64, delta: f64) -> Result<i32> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Config(format!("sld-check needs beta > 0, got {beta}")));
    }
    let model = LinearModel::tfim(&c.model)?;
    let (h, o) = build_tfim(&c.model)?;
    let e = prepare(&h, &o, c.numerics.policy()?)?;
    let ens = gibbs_ensemble(&e, beta)?;
    let sld = sld_matrix(&ens, &o)?.with_lyapunov_residual(&model, &ens, delta)?;
    let spec = TimeKernelSpec::new(beta, c.quadrature.horizon_beta * beta, c.quadrature.panels);
    let l_time = sld_time_domain(&ens, &o, &spec)?;
    let deviation = linalg::max_abs_diff(l_time.as_ref(), sld.l.as_ref());
    let integral = kernel_integral(&spec)?;
    let summary = sld.summary();
    let passed = summary.lyapunov_residual.is_some_and(|r| r <= SLD_LYAPUNOV_TOL)
        && deviation <= SLD_TIME_DOMAIN_RTOL * summary.l_norm.max(f64::MIN_POSITIVE)
        && ((integral + beta) / beta).abs() <= SLD_KERNEL_RTOL;
    let out = SldCheckOutput {
        version: harness::tool_version(),
        model: c.model,
        beta,
        sld: summary,
        time_domain_deviation: deviation,
        kernel_integral: integral,
        passed,
    };
    let text = print_json(&out)?;
    println!("{text}");
    if common.out.is_some() {
        write_file(&c.outputs.dir, "sld_check.json", format!("{text}\n").as_bytes())?;
    }
    Ok(if passed { harness::EXIT_PASS } else { harness::EXIT_INVARIANT })
}

#[derive(Serialize)]
struct RegionRow {
    k: usize,
    error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

#[derive(Serialize)]
struct LocalityOutput {
    version: &'static str,
    #[serde(flatten)]
    fit: qfi_core::locality::FitRecord,
    beta: f64,
    regions: Vec<RegionRow>,
}

fn locality(c: &SweepConfig, beta: f64, mu: Option<f64>, op: Pauli, probe: Pauli, epsilon: bool) -> Result<i32> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Config(format!("locality needs beta > 0, got {beta}")));
    }
    let n = c.model.n_sites;
    let (h, _) = build_tfim(&c.model)?;
    let e = eigendecompose(&h)?;
    let a = pauli_string_matrix(&PauliString::single(0, op, 1.0), n)?;
    let spec = DressSpec::closed_form(mu.unwrap_or(PI / beta));
    let profile = commutator_decay_profile(&e, &a, &spec, probe)?;
    let dressed = dressed_operator(&e, &a, &spec)?;
    let mut regions = Vec::new();
    for k in 1..n {
        let (_, error) = local_approximation(&dressed, k)?;
        let epsilon = if epsilon { Some(sampled_epsilon(&dressed, k, c.numerics.seed)?.epsilon) } else { None };
        regions.push(RegionRow { k, error, epsilon });
    }

    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    let record = LocalityOutput { version: harness::tool_version(), fit: profile.fit_record(&c.model), beta, regions };
    let text = print_json(&record)?;
    let dir = &c.outputs.dir;
    let p1 = write_file(dir, "locality.csv", &csv)?;
    let p2 = write_file(dir, "locality_fit.json", format!("{text}\n").as_bytes())?;
    println!("{text}");
    eprintln!("-> {} and {}", p1.display(), p2.display());
    Ok(harness::EXIT_PASS)
}

fn run(cli: Cli) -> Result<i32> {
    let common = &cli.common;
    let mut c = base_config(common)?;
    c.validate()?;
    match cli.command {
        Command::SweepTemperature { tmin, tmax, points, sweep } => {
            apply_sweep_flags(&mut c, &sweep);
            let mut s = sweep_section(&c, Axis::Temperature, || SweepSpec {
                axis: Axis::Temperature,
                grid: Grid::Range { spacing: Spacing::Log, start: 0.05, stop: 50.0, num: DEFAULT_POINTS },
                temperature: None,
            })?;
            if tmin.is_some() || tmax.is_some() || points.is_some() {
                let (start, stop, num) = match s.grid {
                    Grid::Range { start, stop, num, .. } => (start, stop, num),
                    Grid::Points(ref p) => (p[0], p[p.len() - 1], p.len()),
                };
                s.grid = Grid::Range {
                    spacing: Spacing::Log,
                    start: tmin.unwrap_or(start),
                    stop: tmax.unwrap_or(stop),
                    num: points.unwrap_or(num),
                };
            }
            c.sweep = Some(s);
            run_sweep(c)
        }
        Command::SweepGamma { temperature, points, sweep } => {
            apply_sweep_flags(&mut c, &sweep);
            let mut s = sweep_section(&c, Axis::Gamma, || SweepSpec {
                axis: Axis::Gamma,
                grid: gamma_grid(DEFAULT_POINTS),
                temperature: Some(10.0),
            })?;
            if let Some(p) = points {
                s.grid = gamma_grid(p);
            }
            if let Some(t) = temperature {
                s.temperature = Some(t);
            }
            c.sweep = Some(s);
            run_sweep(c)
        }
        Command::Bounds { beta } => bounds(&c, common, beta),
        Command::Spectrum { beta, kind } => spectrum(&c, common, beta, kind),
        Command::SldCheck { beta, delta } => sld_check(&c, common, beta, delta),
        Command::Locality { beta, mu, operator, probe, epsilon } => {
            locality(&c, beta, mu, operator.into(), probe.into(), epsilon)
        }
        Command::Selftest => {
            let report = harness::selftest(c.numerics.seed);
            println!("{report}");
            Ok(if report.passed() { harness::EXIT_PASS } else { harness::EXIT_INVARIANT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
