//! Bessel functions of the first kind and the radial eigenvalue problem on a disk.
//!
//! The radial factor of every separable mode on a disk of radius `R` is
//! `J_n(k r)`; the boundary condition at `r = R` selects the admissible
//! wavenumbers `k`. This module evaluates `J_n`, `J_n'`, locates those
//! wavenumbers and supplies the weighted norms `∫₀ᴿ r J_n(kr)² dr`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest number of eigenvalues a single search may request.
pub const MAX_EIGEN_COUNT: usize = 256;

/// Below this argument the power series is used; above it, Miller's
/// backward recurrence.
const SERIES_CUTOFF: f64 = 5.0;

/// Boundary condition imposed at `r = R`.
///
/// `Mixed { a, b }` stands for `a ∂w/∂r + b w = 0`. Dirichlet is the `a = 0`
/// limit and zero flux the `b = 0` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BoundaryCondition {
    Dirichlet,
    ZeroFlux,
    Mixed { a: f64, b: f64 },
}

impl BoundaryCondition {
    pub fn mixed(a: f64, b: f64) -> Result<Self> {
        let bc = BoundaryCondition::Mixed { a, b };
        bc.validate()?;
        Ok(bc)
    }

    pub fn validate(&self) -> Result<()> {
        if let BoundaryCondition::Mixed { a, b } = *self {
            if !a.is_finite() || !b.is_finite() {
                return Err(invalid("bc_b", "coefficients must be finite"));
            }
            if a == 0.0 && b == 0.0 {
                return Err(invalid("bc_b", "(A, B) = (0, 0) imposes nothing"));
            }
            // a ∂w/∂r = -b w with b/a < 0 admits a growing modified-Bessel mode
            if a * b < 0.0 {
                return Err(invalid(
                    "bc_b",
                    "A and B must share a sign (outflow proportional to density)",
                ));
            }
        }
        Ok(())
    }

    /// Whether the spectrum contains the constant (`k = 0`) mode of order zero.
    pub fn has_constant_mode(&self) -> bool {
        match *self {
            BoundaryCondition::ZeroFlux => true,
            BoundaryCondition::Mixed { b, .. } => b == 0.0,
            BoundaryCondition::Dirichlet => false,
        }
    }

    /// Eigencondition residual at wavenumber `k` for order `n`.
    pub fn residual(&self, n: usize, k: f64, radius: f64) -> f64 {
        let x = k * radius;
        match *self {
            BoundaryCondition::Dirichlet => bessel_j(n, x),
            BoundaryCondition::ZeroFlux => bessel_j_prime(n, x),
            BoundaryCondition::Mixed { a, b } => a * k * bessel_j_prime(n, x) + b * bessel_j(n, x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::ZeroFlux => "zero_flux",
            BoundaryCondition::Mixed { .. } => "mixed",
        }
    }
}

/// Eigenvalues and norms of one angular order.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselBasis {
    order: usize,
    radius: f64,
    bc: BoundaryCondition,
    eigenvalues: Vec<f64>,
    norms: Vec<f64>,
}

impl BesselBasis {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Wavenumbers `k_{n1} < k_{n2} < …`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `∫₀ᴿ r J_n(k r)² dr` for each stored eigenvalue.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Radial profile `J_n(k_j r)` of mode `j` (zero-based).
    pub fn radial(&self, j: usize, r: f64) -> f64 {
        bessel_j(self.order, self.eigenvalues[j] * r)
    }
}

/// Bessel function of the first kind `J_n(x)` for `x ≥ 0`.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    debug_assert!(x.is_finite() && x >= 0.0, "bessel_j needs finite x >= 0, got {x}");
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_CUTOFF {
        series(n, x)
    } else {
        miller(n, x)
    }
}

/// Derivative `dJ_n/dx`.
pub fn bessel_j_prime(n: usize, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

fn series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let h2 = half * half;
    let mut sum = term;
    let mut q = 1.0;
    loop {
        term *= -h2 / (q * (q + n as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        q += 1.0;
    }
    sum
}

/// Miller's backward recurrence normalised by `J_0 + 2 Σ J_{2k} = 1`.
fn miller(n: usize, x: f64) -> f64 {
    let top = n.max(x.ceil() as usize);
    let start = 2 * ((top + 20 + (40.0 * top as f64).sqrt() as usize) / 2);
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut sum = 0.0;
    let mut value = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx == n {
            value = current;
        }
        if idx > 0 && idx % 2 == 0 {
            sum += 2.0 * current;
        }
        if current.abs() > 1e200 {
            current *= 1e-200;
            above *= 1e-200;
            sum *= 1e-200;
            value *= 1e-200;
        }
    }
    sum += current;
    value / sum
}

/// First `count` wavenumbers of order `n` on a disk of radius `radius`.
///
/// Sign changes of the eigencondition are bracketed on a scan of step
/// `π/(4R)` up to `(count + n + 2)π/R`, then bisected to a `1e-12` wide
/// interval. Zero-flux order zero starts with the constant mode `k = 0`.
pub fn find_eigenvalues(
    n: usize,
    radius: f64,
    bc: BoundaryCondition,
    count: usize,
) -> Result<BesselBasis> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    if count == 0 || count > MAX_EIGEN_COUNT {
        return Err(invalid(
            "count",
            format!("must lie in 1..={MAX_EIGEN_COUNT}, got {count}"),
        ));
    }
    bc.validate()?;

    let mut eigenvalues = Vec::with_capacity(count);
    if n == 0 && bc.has_constant_mode() {
        eigenvalues.push(0.0);
    }

    let step = PI / (4.0 * radius);
    let ceiling = (count + n + 2) as f64 * PI / radius;
    let g = |k: f64| bc.residual(n, k, radius);

    let mut lo = step * 1e-6;
    let mut g_lo = g(lo);
    let mut i = 1usize;
    while eigenvalues.len() < count {
        let hi = i as f64 * step;
        if hi > ceiling + 0.5 * step {
            return Err(Error::EigenSearch {
                order: n,
                requested: count,
                found: eigenvalues.len(),
                ceiling,
            });
        }
        let g_hi = g(hi);
        if g_hi == 0.0 {
            eigenvalues.push(hi);
        } else if g_lo != 0.0 && g_lo.signum() != g_hi.signum() {
            eigenvalues.push(bisect(&g, lo, hi, g_lo));
        }
        lo = hi;
        g_lo = g_hi;
        i += 1;
    }

    let norms = eigenvalues
        .iter()
        .map(|&k| mode_norm(n, k, radius, bc))
        .collect::<Result<Vec<_>>>()?;

    Ok(BesselBasis {
        order: n,
        radius,
        bc,
        eigenvalues,
        norms,
    })
}

fn bisect<F: Fn(f64) -> f64>(g: &F, mut lo: f64, mut hi: f64, mut g_lo: f64) -> f64 {
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Weighted norm `∫₀ᴿ r J_n(k r)² dr` in closed form.
pub fn mode_norm(n: usize, k: f64, radius: f64, bc: BoundaryCondition) -> Result<f64> {
    if k.is_nan() || k < 0.0 {
        return Err(invalid("k", format!("must be nonnegative, got {k}")));
    }
    if k == 0.0 {
        if n != 0 || !bc.has_constant_mode() {
            return Err(invalid(
                "k",
                "k = 0 is an eigenvalue only for order 0 under zero flux",
            ));
        }
        return Ok(0.5 * radius * radius);
    }
    let x = k * radius;
    let r2 = radius * radius;
    Ok(match bc {
        BoundaryCondition::Dirichlet => {
            let j = bessel_j(n + 1, x);
            0.5 * r2 * j * j
        }
        _ => {
            let j = bessel_j(n, x);
            let jp = bessel_j_prime(n, x);
            let nn = (n * n) as f64;
            0.5 * (r2 - nn / (k * k)) * j * j + 0.5 * r2 * jp * jp
        }
    })
}
