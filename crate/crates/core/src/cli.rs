//! Config-driven batch runs and their on-disk artifacts.
//!
//! A run config is a flat TOML table, one key per setting. Every key is
//! optional except `variant` (or a `preset`). Unknown keys are rejected.
//!
//! ```toml
//! preset = "fig2_extinction"     # optional; fixes the model parameters below
//! variant = "mode_forced"        # full_dirichlet | full_zero_flux | radial_reduced
//!                                # | mode_forced | mode_forced_with_birth
//! output_dir = "out"
//!
//! diffusion = 5.0                # mature diffusivity D_m (length²/time)
//! death = 0.01                   # mature death rate d_m (1/time)
//! eps = 0.1                      # immature survival fraction, in [0, 1]
//! alpha = 0.1                    # accumulated immature diffusivity (length²)
//! tau = 1.0                      # maturation delay (time)
//! radius = 1.0                   # disk radius (length)
//! bc = "zero_flux"               # dirichlet | zero_flux | mixed (with bc_a, bc_b)
//! birth = "ricker_quadratic"     # zero | identity | logistic (birth_p, birth_kcap)
//! birth_c1 = 0.25                # | ricker_quadratic (birth_c1, birth_c2) | mode_seed
//! birth_c2 = 0.1
//! forcing = "constant"           # constant (forcing_value)
//! forcing_value = 1.0            # | exponential (forcing_amplitude, forcing_rate)
//! k2 = 3.831705970207512         # seeded wavenumber (1/length); default j_{1,1}/R
//! exponent_as_printed = false
//! n_max = 16                     # angular truncation
//! j_max = 32                     # radial truncation
//!
//! n_r = 96                       # radial grid points
//! n_theta = 48                   # angular grid points
//!
//! scheme = "etd_ab2"             # etd_ab2 | reference_fd
//! dt = 0.01                      # time step (time), reduced to divide tau
//! t_end = 400.0                  # final time (time)
//! snapshot_every = 0             # steps between snapshots; 0 = first and last
//! convergence_tol = 1e-6         # RMS dw/dt threshold (density/time)
//!
//! initial = "cartesian_wave"     # zero | constant (initial_value)
//! initial_mean = 0.2             # | cartesian_wave (initial_mean, initial_amplitude,
//! initial_amplitude = 0.02       #   initial_kx, initial_ky)
//! initial_kx = 3.0               # | bessel_mode (initial_n, initial_j, initial_amplitude,
//! initial_ky = 2.0               #   initial_sine, initial_rate)
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bessel::BoundaryCondition;
use crate::error::{Error, Result};
use crate::model::{homogeneous_equilibria, seeded_wavenumber, BirthFunction, ModelSpec, TimeProfile, Variant};
use crate::solver::{integrate, GridConfig, InitialCondition, Scheme, SimulationResult, SolverConfig};
use crate::transform::{DiskField, SpectralBasis, SpectralField};

/// Parameter sets of the two published experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig2Extinction,
    Fig3Establishment,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2Extinction => "fig2_extinction",
            Preset::Fig3Establishment => "fig3_establishment",
        }
    }

    fn t_end(&self) -> f64 {
        match self {
            Preset::Fig2Extinction => 400.0,
            Preset::Fig3Establishment => 600.0,
        }
    }

    /// Overwrites the model parameters and initial history.
    fn apply(&self, spec: &mut ModelSpec, initial: &mut InitialCondition) -> Result<()> {
        let variant = match self {
            Preset::Fig2Extinction => Variant::ModeForced,
            Preset::Fig3Establishment => Variant::ModeForcedWithBirth,
        };
        let (n_max, j_max) = (spec.n_max, spec.j_max);
        *spec = ModelSpec::new(variant);
        spec.n_max = n_max;
        spec.j_max = j_max;
        spec.bc = BoundaryCondition::ZeroFlux;
        spec.forcing = TimeProfile::Constant { value: 1.0 };
        spec.k2 = seeded_wavenumber(spec.radius)?;
        spec.exponent_as_printed = false;
        spec.birth = match self {
            Preset::Fig2Extinction => BirthFunction::Zero,
            Preset::Fig3Establishment => BirthFunction::RickerQuadratic { c1: 0.25, c2: 0.1 },
        };
        *initial = InitialCondition::perturbed_plateau();
        Ok(())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fig2_extinction" => Ok(Preset::Fig2Extinction),
            "fig3_establishment" => Ok(Preset::Fig3Establishment),
            _ => Err(format!("unknown preset `{s}`, expected fig2_extinction or fig3_establishment")),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BcKind {
    Dirichlet,
    ZeroFlux,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BirthKind {
    Zero,
    Identity,
    Logistic,
    RickerQuadratic,
    ModeSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ForcingKind {
    Constant,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InitialKind {
    Zero,
    Constant,
    CartesianWave,
    BesselMode,
}

/// The flat key-value file, before defaults are filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<Variant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,

    #[serde(skip_serializing_if = "Option::is_none")]
    diffusion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    death: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bc: Option<BcKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bc_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bc_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    birth: Option<BirthKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    birth_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    birth_kcap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    birth_c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    birth_c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forcing: Option<ForcingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forcing_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forcing_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forcing_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent_as_printed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    j_max: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    n_r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_theta: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convergence_tol: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<InitialKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_kx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_ky: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_sine: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_rate: Option<f64>,
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn required(value: Option<f64>, key: &str, what: &str) -> Result<f64> {
    value.ok_or_else(|| config_err(key, format!("required by {what}")))
}

/// Key on the line where a TOML error points.
fn key_at(source: &str, offset: usize) -> String {
    let start = source[..offset.min(source.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = source[start..].lines().next().unwrap_or("");
    line.split('=').next().unwrap_or("").trim().to_string()
}

impl RawConfig {
    pub fn parse(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| {
            let key = e.span().map(|s| key_at(source, s.start)).unwrap_or_default();
            config_err(if key.is_empty() { "<file>" } else { &key }, e.message().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat table of scalars always serialises")
    }

    pub fn set_preset(&mut self, preset: Preset) {
        self.preset = Some(preset);
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub grid: GridConfig,
    pub initial: InitialCondition,
    pub output_dir: PathBuf,
}

/// Maps a parameter error onto the config key that set it.
fn keyed(err: Error) -> Error {
    match err {
        Error::InvalidParameter { name, reason } => config_err(name, reason),
        Error::Incompatible { variant, what } => {
            config_err("variant", format!("{variant} is incompatible with {what}"))
        }
        other => other,
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let source = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_raw(RawConfig::parse(&source)?)
    }

    pub fn from_preset(preset: Preset) -> Result<Self> {
        Self::from_raw(RawConfig {
            preset: Some(preset),
            ..Default::default()
        })
    }

    /// Fills defaults, applies the preset on top of the file's model keys
    /// and validates everything.
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let variant = match (raw.variant, raw.preset) {
            (Some(v), _) => v,
            (None, Some(_)) => Variant::ModeForced,
            (None, None) => return Err(config_err("variant", "missing (or set a preset)")),
        };
        let mut spec = ModelSpec::new(variant);
        if let Some(v) = raw.diffusion {
            spec.diffusion = v;
        }
        if let Some(v) = raw.death {
            spec.death = v;
        }
        if let Some(v) = raw.eps {
            spec.eps = v;
        }
        if let Some(v) = raw.alpha {
            spec.alpha = v;
        }
        if let Some(v) = raw.tau {
            spec.tau = v;
        }
        if let Some(v) = raw.radius {
            spec.radius = v;
        }
        if let Some(v) = raw.n_max {
            spec.n_max = v;
        }
        if let Some(v) = raw.j_max {
            spec.j_max = v;
        }
        if let Some(v) = raw.exponent_as_printed {
            spec.exponent_as_printed = v;
        }
        if !(spec.radius > 0.0 && spec.radius.is_finite()) {
            return Err(config_err("radius", format!("must be > 0, got {}", spec.radius)));
        }
        spec.k2 = match raw.k2 {
            Some(v) => v,
            None => seeded_wavenumber(spec.radius).map_err(keyed)?,
        };
        if let Some(kind) = raw.bc {
            spec.bc = match kind {
                BcKind::Dirichlet => BoundaryCondition::Dirichlet,
                BcKind::ZeroFlux => BoundaryCondition::ZeroFlux,
                BcKind::Mixed => BoundaryCondition::Mixed {
                    a: required(raw.bc_a, "bc_a", "bc = \"mixed\"")?,
                    b: required(raw.bc_b, "bc_b", "bc = \"mixed\"")?,
                },
            };
        }
        if let Some(kind) = raw.forcing {
            spec.forcing = match kind {
                ForcingKind::Constant => TimeProfile::Constant {
                    value: raw.forcing_value.unwrap_or(1.0),
                },
                ForcingKind::Exponential => TimeProfile::Exponential {
                    amplitude: required(raw.forcing_amplitude, "forcing_amplitude", "forcing = \"exponential\"")?,
                    rate: required(raw.forcing_rate, "forcing_rate", "forcing = \"exponential\"")?,
                },
            };
        }
        if let Some(kind) = raw.birth {
            spec.birth = match kind {
                BirthKind::Zero => BirthFunction::Zero,
                BirthKind::Identity => BirthFunction::Identity,
                BirthKind::Logistic => BirthFunction::Logistic {
                    p: required(raw.birth_p, "birth_p", "birth = \"logistic\"")?,
                    kcap: required(raw.birth_kcap, "birth_kcap", "birth = \"logistic\"")?,
                },
                BirthKind::RickerQuadratic => BirthFunction::RickerQuadratic {
                    c1: required(raw.birth_c1, "birth_c1", "birth = \"ricker_quadratic\"")?,
                    c2: required(raw.birth_c2, "birth_c2", "birth = \"ricker_quadratic\"")?,
                },
                BirthKind::ModeSeed => BirthFunction::ModeSeed {
                    amplitude: spec.forcing,
                    k2: spec.k2,
                },
            };
        }

        let plateau = InitialCondition::perturbed_plateau();
        let mut initial = match raw.initial {
            None => plateau,
            Some(InitialKind::Zero) => InitialCondition::Zero,
            Some(InitialKind::Constant) => InitialCondition::Constant {
                value: required(raw.initial_value, "initial_value", "initial = \"constant\"")?,
            },
            Some(InitialKind::CartesianWave) => {
                let InitialCondition::CartesianWave {
                    mean,
                    amplitude,
                    kx,
                    ky,
                } = plateau
                else {
                    unreachable!()
                };
                InitialCondition::CartesianWave {
                    mean: raw.initial_mean.unwrap_or(mean),
                    amplitude: raw.initial_amplitude.unwrap_or(amplitude),
                    kx: raw.initial_kx.unwrap_or(kx),
                    ky: raw.initial_ky.unwrap_or(ky),
                }
            }
            Some(InitialKind::BesselMode) => InitialCondition::BesselMode {
                n: raw.initial_n.unwrap_or(0),
                j: raw.initial_j.unwrap_or(0),
                amplitude: raw.initial_amplitude.unwrap_or(1.0),
                sine: raw.initial_sine.unwrap_or(false),
                rate: raw.initial_rate.unwrap_or(0.0),
            },
        };

        if let Some(preset) = raw.preset {
            preset.apply(&mut spec, &mut initial).map_err(keyed)?;
        }
        spec.validate().map_err(keyed)?;
        if let InitialCondition::BesselMode { n, j, sine, .. } = initial {
            if n > spec.n_max || j >= spec.j_max || (sine && n == 0) {
                return Err(config_err("initial_n", format!("mode ({n}, {j}) lies outside the truncation")));
            }
        }

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            dt: raw.dt.unwrap_or(defaults.dt),
            t_end: raw
                .t_end
                .unwrap_or_else(|| raw.preset.map_or(defaults.t_end, |p| p.t_end())),
            scheme: raw.scheme.unwrap_or_default(),
            snapshot_every: raw.snapshot_every.unwrap_or(defaults.snapshot_every),
            convergence_tol: raw.convergence_tol.unwrap_or(defaults.convergence_tol),
        };
        solver.validate().map_err(keyed)?;

        let default_grid = GridConfig::default();
        let grid = GridConfig {
            n_r: raw.n_r.unwrap_or(default_grid.n_r),
            n_theta: raw.n_theta.unwrap_or(default_grid.n_theta),
        };
        if grid.n_r == 0 {
            return Err(config_err("n_r", "must be positive"));
        }
        if grid.n_theta == 0 {
            return Err(config_err("n_theta", "must be positive"));
        }

        Ok(RunConfig {
            preset: raw.preset,
            model: spec,
            solver,
            grid,
            initial,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("output")),
        })
    }

    /// Every resolved setting as a flat table.
    pub fn to_raw(&self) -> RawConfig {
        let m = &self.model;
        let mut raw = RawConfig {
            preset: self.preset,
            variant: Some(m.variant),
            output_dir: Some(self.output_dir.clone()),
            diffusion: Some(m.diffusion),
            death: Some(m.death),
            eps: Some(m.eps),
            alpha: Some(m.alpha),
            tau: Some(m.tau),
            radius: Some(m.radius),
            k2: Some(m.k2),
            exponent_as_printed: Some(m.exponent_as_printed),
            n_max: Some(m.n_max),
            j_max: Some(m.j_max),
            n_r: Some(self.grid.n_r),
            n_theta: Some(self.grid.n_theta),
            scheme: Some(self.solver.scheme),
            dt: Some(self.solver.dt),
            t_end: Some(self.solver.t_end),
            snapshot_every: Some(self.solver.snapshot_every),
            convergence_tol: Some(self.solver.convergence_tol),
            ..Default::default()
        };
        match m.bc {
            BoundaryCondition::Dirichlet => raw.bc = Some(BcKind::Dirichlet),
            BoundaryCondition::ZeroFlux => raw.bc = Some(BcKind::ZeroFlux),
            BoundaryCondition::Mixed { a, b } => {
                raw.bc = Some(BcKind::Mixed);
                raw.bc_a = Some(a);
                raw.bc_b = Some(b);
            }
        }
        match m.forcing {
            TimeProfile::Constant { value } => {
                raw.forcing = Some(ForcingKind::Constant);
                raw.forcing_value = Some(value);
            }
            TimeProfile::Exponential { amplitude, rate } => {
                raw.forcing = Some(ForcingKind::Exponential);
                raw.forcing_amplitude = Some(amplitude);
                raw.forcing_rate = Some(rate);
            }
        }
        raw.birth = Some(match m.birth {
            BirthFunction::Zero => BirthKind::Zero,
            BirthFunction::Identity => BirthKind::Identity,
            BirthFunction::Logistic { p, kcap } => {
                raw.birth_p = Some(p);
                raw.birth_kcap = Some(kcap);
                BirthKind::Logistic
            }
            BirthFunction::RickerQuadratic { c1, c2 } => {
                raw.birth_c1 = Some(c1);
                raw.birth_c2 = Some(c2);
                BirthKind::RickerQuadratic
            }
            BirthFunction::ModeSeed { .. } => BirthKind::ModeSeed,
        });
        raw.initial = Some(match self.initial {
            InitialCondition::Zero => InitialKind::Zero,
            InitialCondition::Constant { value } => {
                raw.initial_value = Some(value);
                InitialKind::Constant
            }
            InitialCondition::CartesianWave {
                mean,
                amplitude,
                kx,
                ky,
            } => {
                raw.initial_mean = Some(mean);
                raw.initial_amplitude = Some(amplitude);
                raw.initial_kx = Some(kx);
                raw.initial_ky = Some(ky);
                InitialKind::CartesianWave
            }
            InitialCondition::BesselMode {
                n,
                j,
                amplitude,
                sine,
                rate,
            } => {
                raw.initial_n = Some(n);
                raw.initial_j = Some(j);
                raw.initial_amplitude = Some(amplitude);
                raw.initial_sine = Some(sine);
                raw.initial_rate = Some(rate);
                InitialKind::BesselMode
            }
        });
        raw
    }
}

/// Terminal state of a run, written as `summary`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub variant: Variant,
    pub scheme: Scheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub terminal_max: f64,
    pub terminal_min: f64,
    pub terminal_total_population: f64,
    pub terminal_mean: f64,
    pub terminal_dwdt_norm: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged_at: Option<f64>,
    pub snapshots: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibria: Option<Vec<f64>>,
}

impl Summary {
    pub fn new(config: &RunConfig, result: &SimulationResult) -> Self {
        let d = result.terminal();
        let area = std::f64::consts::PI * config.model.radius.powi(2);
        Summary {
            variant: config.model.variant,
            scheme: result.scheme,
            preset: config.preset,
            steps: result.steps,
            dt: result.dt,
            t_end: d.t,
            terminal_max: d.max,
            terminal_min: d.min,
            terminal_total_population: d.total_population,
            terminal_mean: d.total_population / area,
            terminal_dwdt_norm: d.dwdt_norm,
            converged: result.converged,
            converged_at: result.converged_at,
            snapshots: result.snapshots.len(),
            equilibria: homogeneous_equilibria(&config.model).ok(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat table of scalars always serialises")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_rows<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Field dump with columns `r, theta, value`, row-major over the grid.
pub fn write_field_csv(path: &Path, field: &DiskField) -> Result<()> {
    let grid = field.grid();
    let rows = grid.r_nodes().iter().enumerate().flat_map(|(i, &r)| {
        grid.theta_nodes()
            .iter()
            .enumerate()
            .map(move |(j, &th)| (r, th, field.values()[[i, j]]))
    });
    write_rows(path, &["r", "theta", "value"], rows)
}

/// Coefficient dump with columns `n, j, a, b`.
pub fn write_coefficients_csv(path: &Path, coeffs: &SpectralField) -> Result<()> {
    let basis = coeffs.basis();
    let rows = (0..=basis.n_max()).flat_map(|n| {
        (0..basis.j_max()).map(move |j| {
            let b = if n == 0 { 0.0 } else { coeffs.b()[[n - 1, j]] };
            (n, j, coeffs.a()[[n, j]], b)
        })
    });
    write_rows(path, &["n", "j", "a", "b"], rows)
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_{t:.4}.csv")
}

/// Runs one configuration and writes all artifacts under `output_dir`.
pub fn run(config: &RunConfig) -> Result<Summary> {
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_text(&out.join("effective_config"), &config.to_raw().to_toml())?;

    let result = integrate(&config.model, config.grid, &config.solver, &config.initial)?;

    let diag_path = out.join("diagnostics.csv");
    write_rows(
        &diag_path,
        &["t", "max", "min", "total_population", "dwdt_norm"],
        result
            .diagnostics
            .iter()
            .map(|d| (d.t, d.max, d.min, d.total_population, d.dwdt_norm)),
    )?;
    for snap in &result.snapshots {
        write_field_csv(&out.join(snapshot_file_name(snap.t)), &snap.field)?;
    }
    if let Some(coeffs) = &result.final_coefficients {
        write_coefficients_csv(&out.join("coefficients.csv"), coeffs)?;
    }
    let summary = Summary::new(config, &result);
    write_text(&out.join("summary"), &summary.to_toml())?;
    Ok(summary)
}

/// Parses `dirichlet`, `zero_flux` or `mixed` (with both coefficients).
pub fn parse_bc(kind: &str, a: Option<f64>, b: Option<f64>) -> Result<BoundaryCondition> {
    match kind {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "zero_flux" => Ok(BoundaryCondition::ZeroFlux),
        "mixed" => BoundaryCondition::mixed(
            a.ok_or_else(|| config_err("a", "required by bc mixed"))?,
            b.ok_or_else(|| config_err("b", "required by bc mixed"))?,
        ),
        other => Err(config_err("bc", format!("unknown `{other}`, expected dirichlet, zero_flux or mixed"))),
    }
}

/// Writes eigenvalues and norms with columns `n, j, k, norm`.
pub fn dump_eigen_table(n_max: usize, j_max: usize, radius: f64, bc: BoundaryCondition, out: &Path) -> Result<()> {
    let basis = SpectralBasis::new(radius, bc, n_max, j_max)?;
    let rows = basis.orders().iter().flat_map(|order| {
        order
            .eigenvalues()
            .iter()
            .zip(order.norms())
            .enumerate()
            .map(move |(j, (&k, &norm))| (order.order(), j, k, norm))
    });
    write_rows(out, &["n", "j", "k", "norm"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_sets_published_parameters() {
        let cfg = RunConfig::from_preset(Preset::Fig2Extinction).unwrap();
        let m = &cfg.model;
        assert_eq!(m.variant, Variant::ModeForced);
        assert_eq!((m.diffusion, m.eps, m.death, m.alpha, m.radius), (5.0, 0.1, 0.01, 0.1, 1.0));
        assert_eq!(m.bc, BoundaryCondition::ZeroFlux);
        assert!((m.k2 - 3.831705970207512).abs() < 1e-12);
        assert!(!m.exponent_as_printed);
        assert_eq!(cfg.solver.t_end, 400.0);
        assert_eq!(cfg.solver.dt, 0.01);
        assert_eq!(cfg.initial, InitialCondition::perturbed_plateau());

        let cfg = RunConfig::from_preset(Preset::Fig3Establishment).unwrap();
        assert_eq!(cfg.model.variant, Variant::ModeForcedWithBirth);
        assert_eq!(cfg.model.birth, BirthFunction::RickerQuadratic { c1: 0.25, c2: 0.1 });
    }

    #[test]
    fn preset_overrides_file_model_keys() {
        let raw = RawConfig::parse("preset = \"fig2_extinction\"\ndiffusion = 1.0\nt_end = 3.0\n").unwrap();
        let cfg = RunConfig::from_raw(raw).unwrap();
        assert_eq!(cfg.model.diffusion, 5.0);
        assert_eq!(cfg.solver.t_end, 3.0);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("variant = \"mode_forced\"\nbogus = 1\n", "bogus"),
            ("variant = \"mode_forced\"\ndt = \"fast\"\n", "dt"),
            ("variant = \"mode_forced\"\neps = 2.0\n", "eps"),
            ("variant = \"mode_forced\"\nbirth = \"logistic\"\nbirth_p = 1.0\n", "birth_kcap"),
            ("variant = \"full_dirichlet\"\nbc = \"zero_flux\"\n", "variant"),
            ("variant = \"sideways\"\n", "variant"),
            ("dt = 0.1\n", "variant"),
            ("variant = \"mode_forced\"\nt_end = -1.0\n", "t_end"),
        ];
        for (text, key) in cases {
            let err = RawConfig::parse(text).and_then(RunConfig::from_raw).unwrap_err();
            match err {
                Error::Config { key: k, .. } => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other}"),
            }
        }
    }

    #[test]
    fn effective_config_round_trips() {
        let text = "variant = \"full_dirichlet\"\nbirth = \"logistic\"\nbirth_p = 0.5\nbirth_kcap = 2.0\n\
                    initial = \"bessel_mode\"\ninitial_n = 1\ninitial_j = 2\nforcing = \"exponential\"\n\
                    forcing_amplitude = 2.0\nforcing_rate = -0.1\nbc = \"mixed\"\nbc_a = 0.0\nbc_b = 1.0\n";
        let cfg = RunConfig::from_raw(RawConfig::parse(text).unwrap()).unwrap();
        let written = cfg.to_raw().to_toml();
        let again = RunConfig::from_raw(RawConfig::parse(&written).unwrap()).unwrap();
        assert_eq!(cfg, again);
        for key in ["diffusion", "tau", "k2", "n_r", "convergence_tol", "exponent_as_printed", "birth_kcap"] {
            assert!(written.contains(&format!("{key} = ")), "{key} missing from\n{written}");
        }
    }

    #[test]
    fn key_lookup_from_offset() {
        let src = "a = 1\nlong_key = \"x\"\n";
        assert_eq!(key_at(src, src.find("\"x\"").unwrap()), "long_key");
        assert_eq!(key_at(src, 0), "a");
    }
}
