//! Time integration of the delayed model.
//!
//! The spectral integrator propagates each mode's linear decay exactly and
//! treats the source term with a second-order Adams–Bashforth rule
//! (ETD-AB2). Delayed states come from a ring buffer whose spacing divides
//! the delay exactly. [`reference`] holds an explicit finite-difference
//! integrator used to cross-check it.

pub mod reference;

use std::collections::VecDeque;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{disk_area, Model, ModelSpec};
use crate::transform::{DiskField, DiskGrid, SpectralField, Transform};

/// Coefficient magnitude treated as numeric blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Consecutive steps below the tolerance needed to flag convergence.
pub const CONVERGENCE_STREAK: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EtdAb2,
    ReferenceFd,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::EtdAb2 => "etd_ab2",
            Scheme::ReferenceFd => "reference_fd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Requested step; reduced so that it divides the delay.
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Snapshot interval in steps; 0 keeps only the first and last state.
    pub snapshot_every: usize,
    /// Tolerance on the RMS time derivative for the convergence flag.
    pub convergence_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            t_end: 400.0,
            scheme: Scheme::EtdAb2,
            snapshot_every: 0,
            convergence_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(invalid("convergence_tol", "must be > 0"));
        }
        Ok(())
    }

    /// Number of steps of size `dt` needed to reach `t_end`.
    pub fn steps(&self, dt: f64) -> usize {
        (self.t_end / dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Sampling grid resolution, shared by both schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_r: 96, n_theta: 48 }
    }
}

/// Largest step not above `dt` that divides `tau` exactly, with the number
/// of steps per delay.
pub fn adjusted_dt(dt: f64, tau: f64) -> Result<(f64, usize)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if tau == 0.0 {
        return Ok((dt, 0));
    }
    let m = (tau / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((tau / m as f64, m))
}

/// Initial history `w(t, ·)` on `t ∈ [-τ, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    Constant {
        value: f64,
    },
    /// `mean + amplitude · sin(kx x) cos(ky y)`.
    CartesianWave {
        mean: f64,
        amplitude: f64,
        kx: f64,
        ky: f64,
    },
    /// `amplitude · e^{rate t} J_n(k_{nj} r) (cos nθ | sin nθ)`.
    BesselMode {
        n: usize,
        j: usize,
        amplitude: f64,
        #[serde(default)]
        sine: bool,
        #[serde(default)]
        rate: f64,
    },
}

impl InitialCondition {
    /// Time-constant `0.2 + 0.02 sin(3x) cos(2y)`.
    pub fn perturbed_plateau() -> Self {
        InitialCondition::CartesianWave {
            mean: 0.2,
            amplitude: 0.02,
            kx: 3.0,
            ky: 2.0,
        }
    }

    /// Coefficients of the history at time `t`. Modes are set directly,
    /// other profiles are analysed on the transform's grid.
    pub fn coefficients(&self, t: f64, transform: &Transform) -> Result<SpectralField> {
        let basis = transform.basis();
        match *self {
            InitialCondition::BesselMode {
                n,
                j,
                amplitude,
                sine,
                rate,
            } => {
                if n > basis.n_max() || j >= basis.j_max() || (sine && n == 0) {
                    return Err(invalid(
                        "initial",
                        format!("mode ({n}, {j}, sine={sine}) is outside the truncation"),
                    ));
                }
                let mut c = SpectralField::unit_mode(basis.clone(), n, j, sine);
                let s = amplitude * (rate * t).exp();
                c.a_mut().mapv_inplace(|v| v * s);
                c.b_mut().mapv_inplace(|v| v * s);
                Ok(c)
            }
            InitialCondition::Zero => Ok(SpectralField::zeros(basis.clone())),
            _ => transform.analyze(&self.field(t, transform.grid(), None)?),
        }
    }

    /// Pointwise profile on a grid. Modes need the basis for their wavenumber.
    pub fn field(&self, t: f64, grid: &Arc<DiskGrid>, transform: Option<&Transform>) -> Result<DiskField> {
        Ok(match *self {
            InitialCondition::Zero => DiskField::zeros(grid.clone()),
            InitialCondition::Constant { value } => DiskField::from_polar(grid.clone(), |_, _| value),
            InitialCondition::CartesianWave {
                mean,
                amplitude,
                kx,
                ky,
            } => DiskField::from_cartesian(grid.clone(), |x, y| mean + amplitude * (kx * x).sin() * (ky * y).cos()),
            InitialCondition::BesselMode { .. } => {
                let transform = transform.ok_or_else(|| invalid("initial", "bessel_mode needs a spectral basis"))?;
                let coeffs = self.coefficients(t, transform)?;
                transform.synthesize(&coeffs)
            }
        })
    }
}

/// The last `m + 1` states at spacing `dt`, newest last.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    dt: f64,
    lag_steps: usize,
    ring: VecDeque<SpectralField>,
    head_step: usize,
}

impl HistoryBuffer {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lag_steps(&self) -> usize {
        self.lag_steps
    }

    pub fn t_head(&self) -> f64 {
        self.head_step as f64 * self.dt
    }

    pub fn current(&self) -> &SpectralField {
        self.ring.back().expect("ring is never empty")
    }

    /// State at `t_head - τ`.
    pub fn lagged(&self) -> &SpectralField {
        self.ring.front().expect("ring is never empty")
    }

    /// Stored states, oldest first.
    pub fn states(&self) -> impl Iterator<Item = &SpectralField> {
        self.ring.iter()
    }

    fn push(&mut self, state: SpectralField) {
        self.ring.push_back(state);
        self.ring.pop_front();
        self.head_step += 1;
    }
}

/// Fills the history from a pointwise `w0(t, r, θ)` by analysing each
/// sample `w0(-τ + i dt, ·)` on the model grid.
pub fn initialize_history_with<F>(w0: F, model: &Model, dt: f64) -> Result<HistoryBuffer>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let (dt, m) = adjusted_dt(dt, model.spec().tau)?;
    let transform = model.transform();
    let ring = (0..=m)
        .map(|i| {
            let t = (i as f64 - m as f64) * dt;
            let field = DiskField::from_polar(transform.grid().clone(), |r, th| w0(t, r, th));
            transform.analyze(&field)
        })
        .collect::<Result<VecDeque<_>>>()?;
    Ok(HistoryBuffer {
        dt,
        lag_steps: m,
        ring,
        head_step: 0,
    })
}

pub fn initialize_history(ic: &InitialCondition, model: &Model, dt: f64) -> Result<HistoryBuffer> {
    let (dt, m) = adjusted_dt(dt, model.spec().tau)?;
    let ring = (0..=m)
        .map(|i| ic.coefficients((i as f64 - m as f64) * dt, model.transform()))
        .collect::<Result<VecDeque<_>>>()?;
    Ok(HistoryBuffer {
        dt,
        lag_steps: m,
        ring,
        head_step: 0,
    })
}

/// `φ₁(λ, dt) = (1 - e^{-λ dt}) / λ`, by series for small `λ dt`.
pub fn phi1(lambda: f64, dt: f64) -> f64 {
    let x = lambda * dt;
    if x.abs() < 1e-4 {
        dt * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0)
    } else {
        -(-x).exp_m1() / lambda
    }
}

/// ETD-AB2 integrator state for one [`Model`].
#[derive(Debug, Clone)]
pub struct EtdStepper<'m> {
    model: &'m Model,
    history: HistoryBuffer,
    propagator: Array2<f64>,
    phi: Array2<f64>,
    previous: Option<SpectralField>,
    steps: usize,
}

impl<'m> EtdStepper<'m> {
    pub fn new(model: &'m Model, history: HistoryBuffer) -> Self {
        let dt = history.dt;
        let propagator = model.decay_rates().mapv(|l| (-l * dt).exp());
        let phi = model.decay_rates().mapv(|l| phi1(l, dt));
        EtdStepper {
            model,
            history,
            propagator,
            phi,
            previous: None,
            steps: 0,
        }
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    pub fn into_history(self) -> HistoryBuffer {
        self.history
    }

    pub fn time(&self) -> f64 {
        self.history.t_head()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Source coefficients at the current time. `current_grid` may carry the
    /// current state already synthesised on the model grid.
    pub fn source(&self, current_grid: Option<&DiskField>) -> Result<SpectralField> {
        self.model.nonlinear_coefficients(
            self.history.t_head(),
            self.history.current(),
            current_grid,
            self.history.lagged(),
        )
    }

    /// `dw/dt` coefficients at the current time for a given source.
    pub fn derivative(&self, source: &SpectralField) -> SpectralField {
        let mut d = self.history.current().clone();
        d.scale_modes(&self.model.decay_rates().mapv(|l| -l));
        d.axpy(1.0, source);
        d
    }

    /// Advances one step using `source`, the output of [`source`](Self::source)
    /// at the current time.
    pub fn step_with(&mut self, source: SpectralField) -> Result<()> {
        let mut next = self.history.current().clone();
        next.scale_modes(&self.propagator);
        let mut drive = source.clone();
        if let Some(prev) = &self.previous {
            drive.a_mut().mapv_inplace(|v| 1.5 * v);
            drive.b_mut().mapv_inplace(|v| 1.5 * v);
            drive.axpy(-0.5, prev);
        }
        drive.scale_modes(&self.phi);
        next.axpy(1.0, &drive);
        self.previous = Some(source);
        self.steps += 1;

        let magnitude = next.max_abs();
        if magnitude.is_nan() || magnitude > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp {
                step: self.steps,
                t: self.history.t_head() + self.history.dt,
                magnitude,
            });
        }
        self.history.push(next);
        Ok(())
    }

    pub fn step(&mut self) -> Result<()> {
        let s = self.source(None)?;
        self.step_with(s)
    }
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub max: f64,
    pub min: f64,
    pub total_population: f64,
    /// RMS of `dw/dt` over the disk.
    pub dwdt_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: DiskField,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub scheme: Scheme,
    /// Step actually used after adjustment to the delay.
    pub dt: f64,
    pub steps: usize,
    pub diagnostics: Vec<Diagnostics>,
    pub snapshots: Vec<Snapshot>,
    pub final_field: DiskField,
    /// Final coefficients; absent for the finite-difference scheme.
    pub final_coefficients: Option<SpectralField>,
    /// Set once the RMS derivative stays below the tolerance for
    /// [`CONVERGENCE_STREAK`] consecutive steps.
    pub converged: bool,
    pub converged_at: Option<f64>,
}

impl SimulationResult {
    pub fn terminal(&self) -> &Diagnostics {
        self.diagnostics.last().expect("at least the initial state is recorded")
    }
}

/// Accumulates diagnostics, snapshots and the convergence streak.
#[derive(Debug)]
pub(crate) struct Recorder {
    snapshot_every: usize,
    last_step: usize,
    tol: f64,
    streak: usize,
    pub(crate) diagnostics: Vec<Diagnostics>,
    pub(crate) snapshots: Vec<Snapshot>,
    pub(crate) converged_at: Option<f64>,
}

impl Recorder {
    pub(crate) fn new(config: &SolverConfig, last_step: usize) -> Self {
        Recorder {
            snapshot_every: config.snapshot_every,
            last_step,
            tol: config.convergence_tol,
            streak: 0,
            diagnostics: Vec::with_capacity(last_step + 1),
            snapshots: Vec::new(),
            converged_at: None,
        }
    }

    pub(crate) fn record(&mut self, step: usize, d: Diagnostics, field: &DiskField) {
        if d.dwdt_norm < self.tol {
            self.streak += 1;
            if self.streak >= CONVERGENCE_STREAK && self.converged_at.is_none() {
                self.converged_at = Some(d.t);
            }
        } else {
            self.streak = 0;
        }
        let periodic = self.snapshot_every > 0 && step.is_multiple_of(self.snapshot_every);
        if step == 0 || step == self.last_step || periodic {
            self.snapshots.push(Snapshot {
                step,
                t: d.t,
                field: field.clone(),
            });
        }
        self.diagnostics.push(d);
    }
}

/// Runs the spectral integrator on a prepared model and history.
pub fn integrate_model(model: &Model, history: HistoryBuffer, config: &SolverConfig) -> Result<SimulationResult> {
    config.validate()?;
    let dt = history.dt;
    let steps = config.steps(dt);
    let area = disk_area(model.spec().radius);
    let mut stepper = EtdStepper::new(model, history);
    let mut recorder = Recorder::new(config, steps);
    let mut step = 0;
    loop {
        let field = model.transform().synthesize(stepper.history.current());
        let source = stepper.source(Some(&field))?;
        let derivative = stepper.derivative(&source);
        recorder.record(
            step,
            Diagnostics {
                t: stepper.time(),
                max: field.max(),
                min: field.min(),
                total_population: stepper.history.current().total(),
                dwdt_norm: (derivative.energy() / area).sqrt(),
            },
            &field,
        );
        if step == steps {
            let final_coefficients = stepper.history.current().clone();
            return Ok(SimulationResult {
                scheme: Scheme::EtdAb2,
                dt,
                steps,
                diagnostics: recorder.diagnostics,
                snapshots: recorder.snapshots,
                final_field: field,
                final_coefficients: Some(final_coefficients),
                converged: recorder.converged_at.is_some(),
                converged_at: recorder.converged_at,
            });
        }
        stepper.step_with(source)?;
        step += 1;
    }
}

/// Builds the grid for `scheme` and runs the whole integration.
pub fn integrate(
    spec: &ModelSpec,
    grid: GridConfig,
    config: &SolverConfig,
    initial: &InitialCondition,
) -> Result<SimulationResult> {
    config.validate()?;
    match config.scheme {
        Scheme::EtdAb2 => {
            let grid = Arc::new(DiskGrid::new(spec.radius, grid.n_r, grid.n_theta)?);
            let model = Model::new(spec.clone(), grid)?;
            let history = initialize_history(initial, &model, config.dt)?;
            integrate_model(&model, history, config)
        }
        Scheme::ReferenceFd => {
            let grid = Arc::new(DiskGrid::cell_centered(spec.radius, grid.n_r, grid.n_theta)?);
            reference::integrate_reference(spec, grid, config, initial)
        }
    }
}
