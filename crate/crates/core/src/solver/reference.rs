//! Explicit finite-difference reference integrator on a cell-centred polar
//! grid.
//!
//! Cells sit at `r_i = (i + ½) Δr`; the innermost cell has a face of zero
//! length at the origin, so no flux crosses it. The boundary uses one ghost
//! ring `g = γ w_last` chosen so that the boundary condition holds at the
//! face `r = R`.

use std::collections::VecDeque;
use std::sync::Arc;

use ndarray::Array2;

use crate::bessel::BoundaryCondition;
use crate::error::{invalid, Error, Result};
use crate::kernel;
use crate::model::{disk_area, ModelSpec, Variant};
use crate::transform::{DiskField, DiskGrid, RadialRule, SpectralBasis, Transform};

use super::{adjusted_dt, Diagnostics, InitialCondition, Recorder, Scheme, SimulationResult, SolverConfig};

/// Fraction of the stability bound used when choosing substeps.
const SAFETY: f64 = 0.9;

#[derive(Debug, Clone)]
enum Source {
    Maturation(Transform),
    Radial(Transform),
    Forcing { field: DiskField, local_birth: bool },
}

/// Forward-Euler stepper for one model on one cell-centred grid.
#[derive(Debug, Clone)]
pub struct ReferenceIntegrator {
    spec: ModelSpec,
    grid: Arc<DiskGrid>,
    ghost: f64,
    source: Source,
    bound: f64,
}

/// Ghost-cell factor `γ` with `g = γ w_last`.
pub fn ghost_factor(bc: BoundaryCondition, dr: f64) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => -1.0,
        BoundaryCondition::ZeroFlux => 1.0,
        BoundaryCondition::Mixed { a, b } => (a / dr - b / 2.0) / (a / dr + b / 2.0),
    }
}

impl ReferenceIntegrator {
    pub fn new(spec: ModelSpec, grid: Arc<DiskGrid>) -> Result<Self> {
        spec.validate()?;
        if grid.rule() != RadialRule::CellCentered {
            return Err(invalid("grid", "the reference integrator needs a cell-centred grid"));
        }
        if (grid.radius() - spec.radius).abs() > 1e-12 * spec.radius {
            return Err(Error::RadiusMismatch {
                grid: grid.radius(),
                basis: spec.radius,
            });
        }
        let dr = grid.radius() / grid.n_r() as f64;
        let ghost = ghost_factor(spec.bc, dr);
        let source = match spec.variant {
            Variant::FullDirichlet | Variant::FullZeroFlux | Variant::RadialReduced => {
                let basis = Arc::new(SpectralBasis::new(spec.radius, spec.bc, spec.n_max, spec.j_max)?);
                let transform = Transform::new(basis, grid.clone())?;
                if spec.variant == Variant::RadialReduced {
                    Source::Radial(transform)
                } else {
                    Source::Maturation(transform)
                }
            }
            Variant::ModeForced | Variant::ModeForcedWithBirth => {
                let damping = kernel::mode_seed_damping(spec.k2, spec.eps, spec.alpha, spec.exponent_as_printed);
                Source::Forcing {
                    field: kernel::mode_seed_response(&grid, spec.k2, 1.0, damping),
                    local_birth: spec.variant == Variant::ModeForcedWithBirth,
                }
            }
        };
        let mut out = ReferenceIntegrator {
            spec,
            grid,
            ghost,
            source,
            bound: 0.0,
        };
        out.bound = out.gershgorin_bound();
        Ok(out)
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        &self.grid
    }

    /// Largest stable forward-Euler step for the linear operator.
    pub fn stability_bound(&self) -> f64 {
        self.bound
    }

    fn dr(&self) -> f64 {
        self.grid.radius() / self.grid.n_r() as f64
    }

    fn gershgorin_bound(&self) -> f64 {
        let dr = self.dr();
        let dth2 = self.grid.dtheta().powi(2);
        let n_r = self.grid.n_r();
        let d = self.spec.diffusion;
        let mut rho: f64 = 0.0;
        for (i, &r) in self.grid.r_nodes().iter().enumerate() {
            let inner = i as f64 * dr;
            let outer = (i + 1) as f64 * dr;
            let radial = 1.0 / (r * dr * dr);
            let angular = 1.0 / (r * r * dth2);
            let mut diag = -d * (radial * (inner + outer) + 2.0 * angular) - self.spec.death;
            let mut off = d * (radial * inner + 2.0 * angular);
            if i + 1 == n_r {
                diag += d * radial * outer * self.ghost;
            } else {
                off += d * radial * outer;
            }
            rho = rho.max(diag.abs() + off);
        }
        2.0 / rho
    }

    /// Conservative five-point polar Laplacian with the ghost-ring boundary.
    pub fn laplacian(&self, w: &DiskField) -> DiskField {
        let dr = self.dr();
        let dth2 = self.grid.dtheta().powi(2);
        let n_r = self.grid.n_r();
        let n_t = self.grid.n_theta();
        let v = w.values();
        let mut out = Array2::zeros((n_r, n_t));
        for (i, &r) in self.grid.r_nodes().iter().enumerate() {
            let inner = i as f64 * dr;
            let outer = (i + 1) as f64 * dr;
            for j in 0..n_t {
                let c = v[[i, j]];
                let up = if i + 1 == n_r { self.ghost * c } else { v[[i + 1, j]] };
                let down = if i == 0 { c } else { v[[i - 1, j]] };
                let radial = (outer * (up - c) - inner * (c - down)) / (r * dr * dr);
                let left = v[[i, (j + n_t - 1) % n_t]];
                let right = v[[i, (j + 1) % n_t]];
                let angular = (right - 2.0 * c + left) / (r * r * dth2);
                out[[i, j]] = radial + angular;
            }
        }
        DiskField::from_values(self.grid.clone(), out).expect("shape and finiteness follow from input")
    }

    fn needs_lagged(&self) -> bool {
        matches!(self.source, Source::Maturation(_) | Source::Radial(_))
    }

    /// Source field at time `t`; `lagged` is the state at `t - τ`.
    pub fn source(&self, t: f64, current: &DiskField, lagged: &DiskField) -> Result<DiskField> {
        let s = &self.spec;
        let lagged_time = t - s.tau;
        match &self.source {
            Source::Maturation(tr) => kernel::maturation_term(lagged, lagged_time, &s.birth, s.eps, s.alpha, tr),
            Source::Radial(tr) => kernel::radial_maturation_term(lagged, lagged_time, &s.birth, s.eps, s.alpha, tr),
            Source::Forcing { field, local_birth } => {
                let f = s.forcing.eval(lagged_time);
                let mut out = field.map(|v| v * f);
                if *local_birth {
                    *out.values_mut() += &current.values().mapv(|v| s.birth.eval(v));
                }
                Ok(out)
            }
        }
    }

    /// Time derivative `D_m Δw - d_m w + source`.
    pub fn derivative(&self, t: f64, w: &DiskField, lagged: &DiskField) -> Result<DiskField> {
        let mut out = self.source(t, w, lagged)?;
        let lap = self.laplacian(w);
        let (d, m) = (self.spec.diffusion, self.spec.death);
        ndarray::Zip::from(out.values_mut())
            .and(lap.values())
            .and(w.values())
            .for_each(|o, &l, &v| *o += d * l - m * v);
        Ok(out)
    }

    /// One forward-Euler step; fails above the stability bound.
    pub fn step(&self, w: &DiskField, t: f64, lagged: &DiskField, dt: f64) -> Result<DiskField> {
        if dt > self.bound {
            return Err(Error::Unstable { dt, bound: self.bound });
        }
        let mut next = self.derivative(t, w, lagged)?;
        ndarray::Zip::from(next.values_mut())
            .and(w.values())
            .for_each(|n, &v| *n = v + dt * *n);
        Ok(next)
    }
}

fn lerp(a: &DiskField, b: &DiskField, s: f64) -> DiskField {
    let mut out = a.clone();
    ndarray::Zip::from(out.values_mut())
        .and(b.values())
        .for_each(|o, &v| *o += s * (v - *o));
    out
}

/// Runs the reference scheme. Output times are spaced by the delay-adjusted
/// `dt`; each output interval is split into stable forward-Euler substeps,
/// and lagged states between stored times are interpolated linearly.
pub fn integrate_reference(
    spec: &ModelSpec,
    grid: Arc<DiskGrid>,
    config: &SolverConfig,
    initial: &InitialCondition,
) -> Result<SimulationResult> {
    config.validate()?;
    let integrator = ReferenceIntegrator::new(spec.clone(), grid.clone())?;
    let (dt, m) = adjusted_dt(config.dt, spec.tau)?;
    let substeps = (dt / (SAFETY * integrator.bound)).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let steps = config.steps(dt);
    let area = disk_area(spec.radius);

    let basis = Arc::new(SpectralBasis::new(spec.radius, spec.bc, spec.n_max, spec.j_max)?);
    let mode_transform = Transform::synthesis_only(basis, grid.clone())?;
    let mut ring = (0..=m)
        .map(|i| initial.field((i as f64 - m as f64) * dt, &grid, Some(&mode_transform)))
        .collect::<Result<VecDeque<_>>>()?;

    let mut recorder = Recorder::new(config, steps);
    let mut t = 0.0;
    for step in 0..=steps {
        let current = ring.back().expect("ring is never empty").clone();
        let lagged = ring.front().expect("ring is never empty");
        let derivative = integrator.derivative(t, &current, lagged)?;
        let sq = derivative.values().mapv(|v| v * v);
        recorder.record(
            step,
            Diagnostics {
                t,
                max: current.max(),
                min: current.min(),
                total_population: current.total(),
                dwdt_norm: (grid.integrate(&sq) / area).sqrt(),
            },
            &current,
        );
        if step == steps {
            return Ok(SimulationResult {
                scheme: Scheme::ReferenceFd,
                dt,
                steps,
                diagnostics: recorder.diagnostics,
                snapshots: recorder.snapshots,
                final_field: current,
                final_coefficients: None,
                converged: recorder.converged_at.is_some(),
                converged_at: recorder.converged_at,
            });
        }

        let mut w = current;
        for sub in 0..substeps {
            let ts = t + sub as f64 * h;
            w = if m == 0 {
                let lagged = w.clone();
                integrator.step(&w, ts, &lagged, h)?
            } else if integrator.needs_lagged() {
                let lagged = lerp(&ring[0], &ring[1], sub as f64 / substeps as f64);
                integrator.step(&w, ts, &lagged, h)?
            } else {
                integrator.step(&w, ts, &ring[0], h)?
            };
        }
        let magnitude = w.max_abs();
        if magnitude.is_nan() || magnitude > super::BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp {
                step: step + 1,
                t: t + dt,
                magnitude,
            });
        }
        ring.push_back(w);
        ring.pop_front();
        t = (step + 1) as f64 * dt;
    }
    unreachable!("the loop returns at the final step")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;
    use crate::model::{BirthFunction, TimeProfile};

    fn linear_spec(bc: BoundaryCondition) -> ModelSpec {
        let mut spec = ModelSpec::new(Variant::ModeForced);
        spec.bc = bc;
        spec.forcing = TimeProfile::Constant { value: 0.0 };
        spec.diffusion = 1.0;
        spec.n_max = 2;
        spec.j_max = 4;
        spec
    }

    #[test]
    fn eigenmode_decay_rate() {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::ZeroFlux] {
            let spec = linear_spec(bc);
            let grid = Arc::new(DiskGrid::cell_centered(1.0, 128, 4).unwrap());
            let fd = ReferenceIntegrator::new(spec.clone(), grid.clone()).unwrap();
            let basis = SpectralBasis::new(1.0, bc, 0, 2).unwrap();
            let k = basis.eigenvalue(0, 1);
            let mode = DiskField::from_polar(grid.clone(), |r, _| bessel_j(0, k * r));
            let project = |w: &DiskField| grid.integrate(&(w.values() * mode.values()));
            let dt = 0.9 * fd.stability_bound();
            let steps = (0.05 / dt).ceil() as usize;
            let mut w = mode.clone();
            for s in 0..steps {
                w = fd.step(&w, s as f64 * dt, &mode, dt).unwrap();
            }
            let rate = (project(&w) / project(&mode)).ln() / (steps as f64 * dt);
            let expected = -(spec.diffusion * k * k + spec.death);
            assert!(((rate - expected) / expected).abs() < 0.01, "{bc:?}: {rate} vs {expected}");
        }
    }

    #[test]
    fn constant_field_is_conserved_under_zero_flux() {
        let mut spec = linear_spec(BoundaryCondition::ZeroFlux);
        spec.death = 0.0;
        let grid = Arc::new(DiskGrid::cell_centered(1.0, 16, 8).unwrap());
        let fd = ReferenceIntegrator::new(spec, grid.clone()).unwrap();
        let w0 = DiskField::from_polar(grid, |_, _| 0.7);
        let dt = fd.stability_bound() * 0.5;
        let mut w = w0.clone();
        for s in 0..100 {
            w = fd.step(&w, s as f64 * dt, &w0, dt).unwrap();
        }
        assert!(w.values().iter().all(|v| (v - 0.7).abs() < 1e-14));
    }

    #[test]
    fn zero_field_stays_zero() {
        let mut spec = ModelSpec::new(Variant::FullDirichlet);
        spec.n_max = 2;
        spec.j_max = 4;
        spec.birth = BirthFunction::RickerQuadratic { c1: 0.25, c2: 0.1 };
        let grid = Arc::new(DiskGrid::cell_centered(1.0, 12, 8).unwrap());
        let fd = ReferenceIntegrator::new(spec, grid.clone()).unwrap();
        let zero = DiskField::zeros(grid);
        let dt = fd.stability_bound() * 0.5;
        let next = fd.step(&zero, 0.0, &zero, dt).unwrap();
        assert_eq!(next.max_abs(), 0.0);
    }

    #[test]
    fn rejects_unstable_step() {
        let spec = linear_spec(BoundaryCondition::Dirichlet);
        let grid = Arc::new(DiskGrid::cell_centered(1.0, 16, 8).unwrap());
        let fd = ReferenceIntegrator::new(spec, grid.clone()).unwrap();
        let w = DiskField::zeros(grid);
        let dt = 1.01 * fd.stability_bound();
        assert!(matches!(fd.step(&w, 0.0, &w, dt), Err(Error::Unstable { .. })));
    }

    #[test]
    fn rejects_gauss_grid() {
        let spec = linear_spec(BoundaryCondition::Dirichlet);
        let grid = Arc::new(DiskGrid::new(1.0, 16, 8).unwrap());
        assert!(ReferenceIntegrator::new(spec, grid).is_err());
    }

    #[test]
    fn mixed_ghost_degenerates() {
        let dr = 0.01;
        assert_eq!(ghost_factor(BoundaryCondition::Mixed { a: 0.0, b: 1.0 }, dr), -1.0);
        assert_eq!(ghost_factor(BoundaryCondition::Mixed { a: 1.0, b: 0.0 }, dr), 1.0);
        let g = ghost_factor(BoundaryCondition::Mixed { a: 1.0, b: 2.0 }, dr);
        // A (g - w)/Δr + B (g + w)/2 = 0 with w = 1
        assert!(((g - 1.0) / dr + (g + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn integrate_reports_stable_run() {
        let mut spec = linear_spec(BoundaryCondition::ZeroFlux);
        spec.forcing = TimeProfile::Constant { value: 1.0 };
        let grid = Arc::new(DiskGrid::cell_centered(1.0, 12, 8).unwrap());
        let config = SolverConfig {
            dt: 0.05,
            t_end: 0.2,
            ..Default::default()
        };
        let out = integrate_reference(&spec, grid, &config, &InitialCondition::Constant { value: 0.3 }).unwrap();
        assert_eq!(out.steps, 4);
        assert_eq!(out.diagnostics.len(), 5);
        let mean = out.terminal().total_population / disk_area(1.0);
        assert!((mean - 0.3 * (-0.01f64 * 0.2).exp()).abs() < 1e-6);
    }
}
