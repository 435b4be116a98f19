//! Birth functions, model variants and the split right-hand side.
//!
//! Every variant shares the linear part `D_m Δw - d_m w`, which is diagonal
//! in the Fourier–Bessel basis with rate `-(D_m k² + d_m)` per mode. The
//! variants differ only in the source term:
//!
//! | variant                   | source                                              |
//! |---------------------------|-----------------------------------------------------|
//! | `FullDirichlet`           | nonlocal maturation of `b(w(t-τ))`, Dirichlet basis |
//! | `FullZeroFlux`            | same, zero-flux basis                               |
//! | `RadialReduced`           | order-zero maturation of the azimuthal mean         |
//! | `ModeForced`              | `ε e^{-k₂²α} f(t-τ) J_1(k₂ r) cos θ`                |
//! | `ModeForcedWithBirth`     | the forcing above plus the local `b(w)`             |

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bessel::{find_eigenvalues, BoundaryCondition};
use crate::error::{invalid, Error, Result};
use crate::kernel;
use crate::transform::{DiskField, DiskGrid, SpectralBasis, SpectralField, Transform};

/// Scalar function of time used for the seeded birth amplitude `f(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant { value: f64 },
    /// `amplitude · e^{rate · s}`
    Exponential { amplitude: f64, rate: f64 },
}

impl TimeProfile {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            TimeProfile::Constant { value } => value,
            TimeProfile::Exponential { amplitude, rate } => amplitude * (rate * s).exp(),
        }
    }
}

impl Default for TimeProfile {
    fn default() -> Self {
        TimeProfile::Constant { value: 1.0 }
    }
}

/// Density-dependent birth rate, or a fixed seeded spatial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BirthFunction {
    /// `b ≡ 0`
    Zero,
    /// `b(w) = w`
    Identity,
    /// `b(w) = p w (1 - w / kcap)`
    Logistic { p: f64, kcap: f64 },
    /// `b(w) = c1 w² e^{-c2 w}`
    RickerQuadratic { c1: f64, c2: f64 },
    /// `b = f(s) J_1(k₂ r) cos θ`, independent of the density.
    ModeSeed { amplitude: TimeProfile, k2: f64 },
}

impl BirthFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BirthFunction::Logistic { p, kcap } => {
                if !(p > 0.0 && kcap > 0.0) {
                    return Err(invalid("birth", "logistic needs p > 0 and kcap > 0"));
                }
            }
            BirthFunction::RickerQuadratic { c1, c2 } => {
                if !(c1 > 0.0 && c2 > 0.0) {
                    return Err(invalid("birth", "ricker_quadratic needs c1 > 0 and c2 > 0"));
                }
            }
            BirthFunction::ModeSeed { k2, .. } => {
                if !(k2 > 0.0 && k2.is_finite()) {
                    return Err(invalid("birth", "mode_seed needs k2 > 0"));
                }
            }
            BirthFunction::Zero | BirthFunction::Identity => {}
        }
        Ok(())
    }

    pub fn is_density_dependent(&self) -> bool {
        !matches!(self, BirthFunction::ModeSeed { .. })
    }

    /// Pointwise rate; the mode seed has none and yields 0.
    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            BirthFunction::Zero => 0.0,
            BirthFunction::Identity => w,
            BirthFunction::Logistic { p, kcap } => p * w * (1.0 - w / kcap),
            BirthFunction::RickerQuadratic { c1, c2 } => c1 * w * w * (-c2 * w).exp(),
            BirthFunction::ModeSeed { .. } => 0.0,
        }
    }

    /// Birth field at time `s` given the density field at that time.
    pub fn birth_field(&self, density: &DiskField, s: f64) -> DiskField {
        match *self {
            BirthFunction::ModeSeed { amplitude, k2 } => {
                kernel::mode_seed_response(density.grid(), k2, amplitude.eval(s), 1.0)
            }
            _ => density.map(|w| self.eval(w)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BirthFunction::Zero => "zero",
            BirthFunction::Identity => "identity",
            BirthFunction::Logistic { .. } => "logistic",
            BirthFunction::RickerQuadratic { .. } => "ricker_quadratic",
            BirthFunction::ModeSeed { .. } => "mode_seed",
        }
    }
}

/// Which model is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FullDirichlet,
    FullZeroFlux,
    RadialReduced,
    ModeForced,
    ModeForcedWithBirth,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::FullDirichlet => "full_dirichlet",
            Variant::FullZeroFlux => "full_zero_flux",
            Variant::RadialReduced => "radial_reduced",
            Variant::ModeForced => "mode_forced",
            Variant::ModeForcedWithBirth => "mode_forced_with_birth",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "full_dirichlet" => Variant::FullDirichlet,
            "full_zero_flux" => Variant::FullZeroFlux,
            "radial_reduced" => Variant::RadialReduced,
            "mode_forced" => Variant::ModeForced,
            "mode_forced_with_birth" => Variant::ModeForcedWithBirth,
            _ => return None,
        })
    }

    /// Boundary condition the variant was derived with.
    pub fn default_bc(&self) -> BoundaryCondition {
        match self {
            Variant::FullZeroFlux => BoundaryCondition::ZeroFlux,
            _ => BoundaryCondition::Dirichlet,
        }
    }

    fn uses_forcing(&self) -> bool {
        matches!(self, Variant::ModeForced | Variant::ModeForcedWithBirth)
    }
}

/// All model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub variant: Variant,
    /// Mature diffusivity `D_m`.
    pub diffusion: f64,
    /// Mature death rate `d_m`.
    pub death: f64,
    /// Survival fraction through the immature stage.
    pub eps: f64,
    /// Accumulated immature diffusivity.
    pub alpha: f64,
    /// Maturation delay.
    pub tau: f64,
    pub radius: f64,
    pub bc: BoundaryCondition,
    pub birth: BirthFunction,
    /// Seeded amplitude `f` for the mode-forced variants.
    pub forcing: TimeProfile,
    /// Wavenumber of the seeded mode `J_1(k₂ r) cos θ`.
    pub k2: f64,
    /// Use `e^{-k₂ α}` instead of `e^{-k₂² α}` for the seeded mode.
    pub exponent_as_printed: bool,
    pub n_max: usize,
    pub j_max: usize,
}

/// First positive zero of `J_1` divided by `radius`.
pub fn seeded_wavenumber(radius: f64) -> Result<f64> {
    Ok(find_eigenvalues(1, radius, BoundaryCondition::Dirichlet, 1)?.eigenvalues()[0])
}

impl ModelSpec {
    /// Parameters of the extinction/establishment experiments, with the
    /// variant's own boundary condition and birth function.
    pub fn new(variant: Variant) -> Self {
        let birth = match variant {
            Variant::ModeForced => BirthFunction::Zero,
            _ => BirthFunction::RickerQuadratic { c1: 0.25, c2: 0.1 },
        };
        ModelSpec {
            variant,
            diffusion: 5.0,
            death: 0.01,
            eps: 0.1,
            alpha: 0.1,
            tau: 1.0,
            radius: 1.0,
            bc: variant.default_bc(),
            birth,
            forcing: TimeProfile::default(),
            k2: seeded_wavenumber(1.0).expect("J_1 has a zero below 2π"),
            exponent_as_printed: false,
            n_max: 16,
            j_max: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(invalid("diffusion", format!("D_m must be > 0, got {}", self.diffusion)));
        }
        if !(self.death >= 0.0 && self.death.is_finite()) {
            return Err(invalid("death", format!("d_m must be >= 0, got {}", self.death)));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(invalid("eps", format!("must lie in [0, 1], got {}", self.eps)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", format!("must be >= 0, got {}", self.tau)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid("radius", format!("must be > 0, got {}", self.radius)));
        }
        if !(self.k2 > 0.0 && self.k2.is_finite()) {
            return Err(invalid("k2", format!("must be > 0, got {}", self.k2)));
        }
        self.bc.validate()?;
        self.birth.validate()?;

        let bc_ok = match (self.variant, self.bc) {
            (Variant::FullDirichlet, BoundaryCondition::Dirichlet) => true,
            (Variant::FullDirichlet, BoundaryCondition::Mixed { a, .. }) => a == 0.0,
            (Variant::FullDirichlet, _) => false,
            (Variant::FullZeroFlux, BoundaryCondition::ZeroFlux) => true,
            (Variant::FullZeroFlux, BoundaryCondition::Mixed { b, .. }) => b == 0.0,
            (Variant::FullZeroFlux, _) => false,
            _ => true,
        };
        if !bc_ok {
            return Err(Error::Incompatible {
                variant: self.variant.name(),
                what: format!("boundary condition {}", self.bc.name()),
            });
        }
        if self.variant == Variant::ModeForcedWithBirth && !self.birth.is_density_dependent() {
            return Err(Error::Incompatible {
                variant: self.variant.name(),
                what: "a mode_seed birth function (needs a density-dependent b(w))".into(),
            });
        }
        Ok(())
    }
}

/// Linear rates and source field of the right-hand side.
#[derive(Debug, Clone)]
pub struct RhsSplit {
    /// `-(D_m k_{nj}² + d_m)` per mode, shape `[n_max + 1, j_max]`.
    pub linear: Array2<f64>,
    /// Nonlocal, forcing and local birth contributions on the grid.
    pub nonlinear: DiskField,
}

/// A [`ModelSpec`] bound to its basis and grid, with cached operators.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    transform: Transform,
    decay: Array2<f64>,
    forcing_field: Option<DiskField>,
    forcing_coeffs: Option<SpectralField>,
}

impl Model {
    pub fn new(spec: ModelSpec, grid: Arc<DiskGrid>) -> Result<Self> {
        spec.validate()?;
        let basis = Arc::new(SpectralBasis::new(spec.radius, spec.bc, spec.n_max, spec.j_max)?);
        let transform = Transform::new(basis.clone(), grid.clone())?;
        let decay = basis.mode_map(|_, _, k| spec.diffusion * k * k + spec.death);
        let (forcing_field, forcing_coeffs) = if spec.variant.uses_forcing() {
            let damping = kernel::mode_seed_damping(spec.k2, spec.eps, spec.alpha, spec.exponent_as_printed);
            let field = kernel::mode_seed_response(&grid, spec.k2, 1.0, damping);
            let coeffs = transform.analyze(&field)?;
            (Some(field), Some(coeffs))
        } else {
            (None, None)
        };
        Ok(Model {
            spec,
            transform,
            decay,
            forcing_field,
            forcing_coeffs,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        self.transform.basis()
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        self.transform.grid()
    }

    /// `D_m k² + d_m` per mode.
    pub fn decay_rates(&self) -> &Array2<f64> {
        &self.decay
    }

    fn check_basis(&self, w: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(w.basis(), self.basis()) || **w.basis() == **self.basis() {
            Ok(())
        } else {
            Err(Error::Incompatible {
                variant: self.spec.variant.name(),
                what: "a spectral field expanded in a different basis".into(),
            })
        }
    }

    fn check_grid(&self, f: &DiskField) -> Result<()> {
        if Arc::ptr_eq(f.grid(), self.grid()) || **f.grid() == **self.grid() {
            Ok(())
        } else {
            Err(Error::Incompatible {
                variant: self.spec.variant.name(),
                what: "a field sampled on a different grid".into(),
            })
        }
    }

    /// Right-hand side at time `t` for state `w` and the field `lagged`
    /// observed at `t - τ`.
    pub fn rhs(&self, t: f64, w: &SpectralField, lagged: &DiskField) -> Result<RhsSplit> {
        self.check_basis(w)?;
        self.check_grid(lagged)?;
        let s = &self.spec;
        let lagged_time = t - s.tau;
        let nonlinear = match s.variant {
            Variant::FullDirichlet | Variant::FullZeroFlux => {
                kernel::maturation_term(lagged, lagged_time, &s.birth, s.eps, s.alpha, &self.transform)?
            }
            Variant::RadialReduced => kernel::radial_maturation_term(
                lagged,
                lagged_time,
                &s.birth,
                s.eps,
                s.alpha,
                &self.transform,
            )?,
            Variant::ModeForced => self.forcing_at(lagged_time),
            Variant::ModeForcedWithBirth => {
                let mut field = self.forcing_at(lagged_time);
                let current = self.transform.synthesize(w);
                *field.values_mut() += &current.values().mapv(|v| s.birth.eval(v));
                field
            }
        };
        Ok(RhsSplit {
            linear: self.decay.mapv(|l| -l),
            nonlinear,
        })
    }

    fn forcing_at(&self, lagged_time: f64) -> DiskField {
        let f = self.spec.forcing.eval(lagged_time);
        self.forcing_field
            .as_ref()
            .expect("forcing is cached for mode-forced variants")
            .map(|v| v * f)
    }

    /// Coefficients of the source term, equal to analysing
    /// [`RhsSplit::nonlinear`] but without the round trip where possible.
    ///
    /// `current_grid` may carry `w` already synthesised on the model grid.
    pub fn nonlinear_coefficients(
        &self,
        t: f64,
        w: &SpectralField,
        current_grid: Option<&DiskField>,
        lagged: &SpectralField,
    ) -> Result<SpectralField> {
        self.check_basis(w)?;
        self.check_basis(lagged)?;
        let s = &self.spec;
        let lagged_time = t - s.tau;
        match s.variant {
            Variant::FullDirichlet | Variant::FullZeroFlux => {
                let field = self.transform.synthesize(lagged);
                kernel::maturation_coefficients(&field, lagged_time, &s.birth, s.eps, s.alpha, &self.transform)
            }
            Variant::RadialReduced => {
                let field = self.transform.synthesize(lagged);
                kernel::radial_maturation_coefficients(
                    &field,
                    lagged_time,
                    &s.birth,
                    s.eps,
                    s.alpha,
                    &self.transform,
                )
            }
            Variant::ModeForced => Ok(self.forcing_coefficients_at(lagged_time)),
            Variant::ModeForcedWithBirth => {
                let mut out = self.forcing_coefficients_at(lagged_time);
                let synthesized;
                let current = match current_grid {
                    Some(f) => f,
                    None => {
                        synthesized = self.transform.synthesize(w);
                        &synthesized
                    }
                };
                let births = current.map(|v| s.birth.eval(v));
                out.axpy(1.0, &self.transform.analyze(&births)?);
                Ok(out)
            }
        }
    }

    fn forcing_coefficients_at(&self, lagged_time: f64) -> SpectralField {
        let mut c = self
            .forcing_coeffs
            .clone()
            .expect("forcing is cached for mode-forced variants");
        let f = self.spec.forcing.eval(lagged_time);
        c.a_mut().mapv_inplace(|v| v * f);
        c.b_mut().mapv_inplace(|v| v * f);
        c
    }
}

impl RhsSplit {
    /// Full time derivative in coefficient space.
    pub fn derivative(&self, w: &SpectralField, transform: &Transform) -> Result<SpectralField> {
        let mut out = transform.analyze(&self.nonlinear)?;
        let mut linear = w.clone();
        linear.scale_modes(&self.linear);
        out.axpy(1.0, &linear);
        Ok(out)
    }
}

/// Nonnegative roots of `b(w) = d_m w`, always including `w = 0`.
///
/// Scans `[0, 10 / c2]` (Ricker) or `[0, 2 kcap]` (logistic) for sign
/// changes and bisects each bracket to `1e-10`.
pub fn homogeneous_equilibria(spec: &ModelSpec) -> Result<Vec<f64>> {
    let upper = match spec.birth {
        BirthFunction::RickerQuadratic { c2, .. } => 10.0 / c2,
        BirthFunction::Logistic { kcap, .. } => 2.0 * kcap,
        other => {
            return Err(invalid(
                "birth",
                format!("equilibria need a logistic or ricker_quadratic birth, got {}", other.name()),
            ))
        }
    };
    spec.birth.validate()?;
    let birth = spec.birth;
    let death = spec.death;
    let g = |w: f64| birth.eval(w) - death * w;

    const SCAN: usize = 20_000;
    let mut roots = vec![0.0];
    let h = upper / SCAN as f64;
    let mut lo = h * 1e-6;
    let mut g_lo = g(lo);
    for i in 1..=SCAN {
        let hi = i as f64 * h;
        let g_hi = g(hi);
        if g_hi == 0.0 {
            roots.push(hi);
        } else if g_lo != 0.0 && g_lo.signum() != g_hi.signum() {
            let (mut a, mut b, mut ga) = (lo, hi, g_lo);
            while b - a > 1e-10 {
                let m = 0.5 * (a + b);
                let gm = g(m);
                if gm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if gm.signum() == ga.signum() {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        lo = hi;
        g_lo = g_hi;
    }
    Ok(roots)
}

/// Area of the disk, `π R²`.
pub fn disk_area(radius: f64) -> f64 {
    PI * radius * radius
}
