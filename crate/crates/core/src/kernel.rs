//! The delayed maturation operator.
//!
//! Individuals born at time `t - τ` anywhere on the disk diffuse and die
//! while immature; those reaching maturity at time `t` contribute
//!
//! ```text
//! ε Σ_n Σ_j J_n(k_{nj} r) (a_{nj} cos nθ + b_{nj} sin nθ) e^{-k_{nj}² α}
//! ```
//!
//! where `a`, `b` are the Fourier–Bessel coefficients of the birth field
//! `b(w(t - τ, ·))`. In the eigenbasis the operator is diagonal.

use ndarray::Array2;

use crate::bessel::bessel_j;
use crate::error::{invalid, Result};
use crate::model::BirthFunction;
use crate::quadrature::adaptive_simpson;
use crate::transform::{DiskField, DiskGrid, SpectralBasis, SpectralField, Transform};

type AgeRate = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Age-dependent death and diffusion rates of the immature stage.
pub struct LifeHistory {
    immature_death: AgeRate,
    immature_diffusion: AgeRate,
    tau: f64,
}

impl std::fmt::Debug for LifeHistory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LifeHistory").field("tau", &self.tau).finish_non_exhaustive()
    }
}

impl LifeHistory {
    /// Rates are checked for nonnegativity on a uniform sample of `[0, τ]`.
    pub fn new<D, K>(immature_death: D, immature_diffusion: K, tau: f64) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        K: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(invalid("tau", format!("must be finite and >= 0, got {tau}")));
        }
        for i in 0..=256 {
            let a = tau * i as f64 / 256.0;
            let d = immature_death(a);
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid("immature_death", format!("rate {d} at age {a}")));
            }
            let k = immature_diffusion(a);
            if !(k >= 0.0 && k.is_finite()) {
                return Err(invalid("immature_diffusion", format!("rate {k} at age {a}")));
            }
        }
        Ok(LifeHistory {
            immature_death: Box::new(immature_death),
            immature_diffusion: Box::new(immature_diffusion),
            tau,
        })
    }

    pub fn constant(death: f64, diffusion: f64, tau: f64) -> Result<Self> {
        Self::new(move |_| death, move |_| diffusion, tau)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Survival fraction `exp(-∫₀^τ d_I(a) da)`.
pub fn epsilon_of(lh: &LifeHistory) -> f64 {
    (-adaptive_simpson(&lh.immature_death, 0.0, lh.tau, 1e-13)).exp()
}

/// Accumulated immature diffusivity `∫₀^τ D_I(a) da`.
pub fn alpha_of(lh: &LifeHistory) -> f64 {
    adaptive_simpson(&lh.immature_diffusion, 0.0, lh.tau, 1e-13)
}

fn check_life_params(eps: f64, alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid("eps", format!("must lie in [0, 1], got {eps}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

/// Per-mode factors `ε e^{-k_{nj}² α}`, shape `[n_max + 1, j_max]`.
pub fn damping_factors(basis: &SpectralBasis, eps: f64, alpha: f64) -> Array2<f64> {
    basis.mode_map(|_, _, k| eps * (-k * k * alpha).exp())
}

/// Coefficients of the maturation term for a lagged field.
pub fn maturation_coefficients(
    lagged: &DiskField,
    lagged_time: f64,
    birth: &BirthFunction,
    eps: f64,
    alpha: f64,
    transform: &Transform,
) -> Result<SpectralField> {
    check_life_params(eps, alpha)?;
    let births = birth.birth_field(lagged, lagged_time);
    let mut coeffs = transform.analyze(&births)?;
    coeffs.scale_modes(&damping_factors(transform.basis(), eps, alpha));
    Ok(coeffs)
}

/// Nonlocal delayed maturation term on the grid of `lagged`.
///
/// `lagged_time` is `t - τ`; only the mode-seed birth profile depends on it.
pub fn maturation_term(
    lagged: &DiskField,
    lagged_time: f64,
    birth: &BirthFunction,
    eps: f64,
    alpha: f64,
    transform: &Transform,
) -> Result<DiskField> {
    let coeffs = maturation_coefficients(lagged, lagged_time, birth, eps, alpha, transform)?;
    Ok(transform.synthesize(&coeffs))
}

/// Order-zero maturation coefficients of the azimuthally averaged birth field.
pub fn radial_maturation_coefficients(
    lagged: &DiskField,
    lagged_time: f64,
    birth: &BirthFunction,
    eps: f64,
    alpha: f64,
    transform: &Transform,
) -> Result<SpectralField> {
    check_life_params(eps, alpha)?;
    let births = birth.birth_field(lagged, lagged_time);
    let profile = births.azimuthal_mean();
    let c = transform.analyze_radial(&profile)?;
    let basis = transform.basis();
    let mut out = SpectralField::zeros(basis.clone());
    for (j, cj) in c.iter().enumerate() {
        let k = basis.eigenvalue(0, j);
        out.a_mut()[[0, j]] = eps * (-k * k * alpha).exp() * cj;
    }
    Ok(out)
}

/// Radially symmetric maturation term, order-zero path only.
pub fn radial_maturation_term(
    lagged: &DiskField,
    lagged_time: f64,
    birth: &BirthFunction,
    eps: f64,
    alpha: f64,
    transform: &Transform,
) -> Result<DiskField> {
    let coeffs = radial_maturation_coefficients(lagged, lagged_time, birth, eps, alpha, transform)?;
    Ok(transform.synthesize(&coeffs))
}

/// Damping applied to the single seeded mode `J_1(k₂ r) cos θ`.
///
/// With `exponent_as_printed` the exponent is `-k₂ α` instead of `-k₂² α`.
pub fn mode_seed_damping(k2: f64, eps: f64, alpha: f64, exponent_as_printed: bool) -> f64 {
    let exponent = if exponent_as_printed { k2 * alpha } else { k2 * k2 * alpha };
    eps * (-exponent).exp()
}

/// Maturation response `damping · f · J_1(k₂ r) cos θ` of a mode-seed birth
/// profile with amplitude `f`, evaluated on any grid.
pub fn mode_seed_response(grid: &std::sync::Arc<DiskGrid>, k2: f64, amplitude: f64, damping: f64) -> DiskField {
    let scale = damping * amplitude;
    DiskField::from_polar(grid.clone(), |r, th| scale * bessel_j(1, k2 * r) * th.cos())
}
