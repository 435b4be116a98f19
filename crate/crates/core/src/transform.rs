//! Polar grids, grid fields and the truncated Fourier–Bessel transform.
//!
//! A field on the disk is expanded as
//!
//! ```text
//! w(r, θ) = Σ_{n=0}^{n_max} Σ_{j=1}^{j_max} J_n(k_{nj} r) (a_{nj} cos nθ + b_{nj} sin nθ)
//! ```
//!
//! Coefficients are stored already normalised, so synthesis is a plain sum.
//! Analysis integrates against `r J_n(k_{nj} r) {cos, sin}(nθ)` with the
//! trapezoid rule in θ (periodic, spectrally accurate) and the grid's radial
//! rule in r, then divides by `c_n · ∫₀ᴿ r J_n² dr` with `c_0 = 2π`,
//! `c_n = π` otherwise.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array1, Array2, Axis};

use crate::bessel::{bessel_j, find_eigenvalues, BesselBasis, BoundaryCondition};
use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_legendre;

/// Which radial quadrature a grid carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialRule {
    /// Gauss–Legendre nodes mapped to `(0, R)`.
    GaussLegendre,
    /// Cell centres `(i + ½)Δr` with midpoint weights, used by the
    /// finite-difference reference integrator.
    CellCentered,
}

/// Tensor-product polar grid. No node sits on `r = 0` or `r = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskGrid {
    radius: f64,
    rule: RadialRule,
    r_nodes: Vec<f64>,
    r_weights: Vec<f64>,
    theta_nodes: Vec<f64>,
}

impl DiskGrid {
    /// Gauss–Legendre radial nodes, uniform periodic θ nodes.
    pub fn new(radius: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        Self::check(radius, n_r, n_theta)?;
        let (r_nodes, r_weights) = gauss_legendre(n_r, 0.0, radius);
        Ok(Self::assemble(radius, RadialRule::GaussLegendre, r_nodes, r_weights, n_theta))
    }

    /// Cell-centred radial nodes `(i + ½)R/n_r` with weights `R/n_r`.
    pub fn cell_centered(radius: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        Self::check(radius, n_r, n_theta)?;
        let dr = radius / n_r as f64;
        let r_nodes = (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect();
        let r_weights = vec![dr; n_r];
        Ok(Self::assemble(radius, RadialRule::CellCentered, r_nodes, r_weights, n_theta))
    }

    fn check(radius: f64, n_r: usize, n_theta: usize) -> Result<()> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("must be positive, got {radius}")));
        }
        if n_r == 0 {
            return Err(invalid("n_r", "need at least one radial node"));
        }
        if n_theta == 0 {
            return Err(invalid("n_theta", "need at least one angular node"));
        }
        Ok(())
    }

    fn assemble(
        radius: f64,
        rule: RadialRule,
        r_nodes: Vec<f64>,
        r_weights: Vec<f64>,
        n_theta: usize,
    ) -> Self {
        let theta_nodes = (0..n_theta)
            .map(|j| 2.0 * PI * j as f64 / n_theta as f64)
            .collect();
        DiskGrid {
            radius,
            rule,
            r_nodes,
            r_weights,
            theta_nodes,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rule(&self) -> RadialRule {
        self.rule
    }

    pub fn n_r(&self) -> usize {
        self.r_nodes.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta_nodes.len()
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }

    pub fn r_weights(&self) -> &[f64] {
        &self.r_weights
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta() as f64
    }

    /// Quadrature of `∫₀ᴿ∫₀^{2π} f r dθ dr` for grid samples `f`.
    pub fn integrate(&self, values: &Array2<f64>) -> f64 {
        let dtheta = self.dtheta();
        values
            .axis_iter(Axis(0))
            .zip(self.r_nodes.iter().zip(&self.r_weights))
            .map(|(row, (r, w))| w * r * dtheta * row.sum())
            .sum()
    }
}

/// Real samples of a field on a [`DiskGrid`], shape `[n_r, n_theta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskField {
    grid: Arc<DiskGrid>,
    values: Array2<f64>,
}

impl DiskField {
    pub fn zeros(grid: Arc<DiskGrid>) -> Self {
        let values = Array2::zeros((grid.n_r(), grid.n_theta()));
        DiskField { grid, values }
    }

    pub fn from_values(grid: Arc<DiskGrid>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n_r(), grid.n_theta()) {
            return Err(invalid(
                "values",
                format!(
                    "shape {:?} does not match grid {}x{}",
                    values.dim(),
                    grid.n_r(),
                    grid.n_theta()
                ),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "field samples must be finite"));
        }
        Ok(DiskField { grid, values })
    }

    /// Samples `f(r, θ)` at every node.
    pub fn from_polar<F: Fn(f64, f64) -> f64>(grid: Arc<DiskGrid>, f: F) -> Self {
        let values = Array2::from_shape_fn((grid.n_r(), grid.n_theta()), |(i, j)| {
            f(grid.r_nodes[i], grid.theta_nodes[j])
        });
        DiskField { grid, values }
    }

    /// Samples `f(x, y)` with `x = r cos θ`, `y = r sin θ`.
    pub fn from_cartesian<F: Fn(f64, f64) -> f64>(grid: Arc<DiskGrid>, f: F) -> Self {
        Self::from_polar(grid, |r, th| f(r * th.cos(), r * th.sin()))
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> DiskField {
        DiskField {
            grid: self.grid.clone(),
            values: self.values.mapv(f),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫∫ w r dr dθ`.
    pub fn total(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Area-weighted mean.
    pub fn mean(&self) -> f64 {
        self.total() / (PI * self.grid.radius * self.grid.radius)
    }

    /// Azimuthal average at each radial node.
    pub fn azimuthal_mean(&self) -> Vec<f64> {
        self.values
            .mean_axis(Axis(1))
            .expect("grid has at least one angular node")
            .to_vec()
    }

    /// Sqrt of `∫∫ w² r dr dθ`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.integrate(&self.values.mapv(|v| v * v)).sqrt()
    }

    /// Rotates by `shift` angular cells: `out(θ_j) = self(θ_{j - shift})`.
    pub fn rotate(&self, shift: usize) -> DiskField {
        let nt = self.grid.n_theta();
        let values = Array2::from_shape_fn(self.values.dim(), |(i, j)| {
            self.values[[i, (j + nt - shift % nt) % nt]]
        });
        DiskField {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// Radial bases for orders `0..=n_max`, `j_max` modes each, on one disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    radius: f64,
    bc: BoundaryCondition,
    j_max: usize,
    orders: Vec<BesselBasis>,
}

impl SpectralBasis {
    pub fn new(radius: f64, bc: BoundaryCondition, n_max: usize, j_max: usize) -> Result<Self> {
        let orders = (0..=n_max)
            .map(|n| find_eigenvalues(n, radius, bc, j_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralBasis {
            radius,
            bc,
            j_max,
            orders,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn n_max(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn order(&self, n: usize) -> &BesselBasis {
        &self.orders[n]
    }

    pub fn orders(&self) -> &[BesselBasis] {
        &self.orders
    }

    /// `k_{nj}` with zero-based `j`.
    pub fn eigenvalue(&self, n: usize, j: usize) -> f64 {
        self.orders[n].eigenvalues()[j]
    }

    pub fn norm(&self, n: usize, j: usize) -> f64 {
        self.orders[n].norms()[j]
    }

    /// Per-mode array `f(n, j, k_{nj})`, shape `[n_max + 1, j_max]`.
    pub fn mode_map<F: Fn(usize, usize, f64) -> f64>(&self, f: F) -> Array2<f64> {
        Array2::from_shape_fn((self.n_max() + 1, self.j_max), |(n, j)| {
            f(n, j, self.eigenvalue(n, j))
        })
    }
}

/// Truncated coefficient arrays: `a` is `[n_max + 1, j_max]` (cosine),
/// `b` is `[n_max, j_max]` (sine, orders `1..=n_max`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    basis: Arc<SpectralBasis>,
    a: Array2<f64>,
    b: Array2<f64>,
}

impl SpectralField {
    pub fn zeros(basis: Arc<SpectralBasis>) -> Self {
        let (n, j) = (basis.n_max(), basis.j_max());
        SpectralField {
            a: Array2::zeros((n + 1, j)),
            b: Array2::zeros((n, j)),
            basis,
        }
    }

    pub fn from_parts(basis: Arc<SpectralBasis>, a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        let (n, j) = (basis.n_max(), basis.j_max());
        if a.dim() != (n + 1, j) || b.dim() != (n, j) {
            return Err(invalid(
                "coefficients",
                format!("expected a {:?} and b {:?}", (n + 1, j), (n, j)),
            ));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("coefficients", "must be finite"));
        }
        Ok(SpectralField { basis, a, b })
    }

    /// A single unit-amplitude mode; `sine` selects the `sin nθ` partner.
    pub fn unit_mode(basis: Arc<SpectralBasis>, n: usize, j: usize, sine: bool) -> Self {
        let mut f = SpectralField::zeros(basis);
        if sine {
            assert!(n >= 1, "order 0 has no sine mode");
            f.b[[n - 1, j]] = 1.0;
        } else {
            f.a[[n, j]] = 1.0;
        }
        f
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn a_mut(&mut self) -> &mut Array2<f64> {
        &mut self.a
    }

    pub fn b_mut(&mut self) -> &mut Array2<f64> {
        &mut self.b
    }

    /// Multiplies each `(n, j)` pair of coefficients by `factors[[n, j]]`.
    pub fn scale_modes(&mut self, factors: &Array2<f64>) {
        self.a *= factors;
        let sine_factors = factors.slice(s![1.., ..]);
        self.b *= &sine_factors;
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) {
        self.a.scaled_add(alpha, &other.a);
        self.b.scaled_add(alpha, &other.b);
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().chain(self.b.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest coefficient magnitude outside order 0.
    pub fn angular_content(&self) -> f64 {
        let a = self
            .a
            .slice(s![1.., ..])
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        self.b.iter().fold(a, |m, v| m.max(v.abs()))
    }

    pub fn is_radially_symmetric(&self, tol: f64) -> bool {
        self.angular_content() < tol
    }

    /// `∫∫ w² r dr dθ` from coefficients: `Σ c_n N_{nj} (a² + b²)`.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for n in 0..=self.basis.n_max() {
            let c = if n == 0 { 2.0 * PI } else { PI };
            for j in 0..self.basis.j_max() {
                let mut sq = self.a[[n, j]].powi(2);
                if n > 0 {
                    sq += self.b[[n - 1, j]].powi(2);
                }
                e += c * self.basis.norm(n, j) * sq;
            }
        }
        e
    }

    /// Sqrt of [`energy`](Self::energy).
    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// `∫∫ w r dr dθ`, carried only by order-0 modes.
    pub fn total(&self) -> f64 {
        let order0 = self.basis.order(0);
        let radius = self.basis.radius();
        (0..self.basis.j_max())
            .map(|j| {
                let k = order0.eigenvalues()[j];
                let integral = if k == 0.0 {
                    0.5 * radius * radius
                } else {
                    // ∫₀ᴿ r J0(kr) dr = R J1(kR) / k
                    radius * bessel_j(1, k * radius) / k
                };
                2.0 * PI * integral * self.a[[0, j]]
            })
            .sum()
    }
}

/// Precomputed tables binding one [`SpectralBasis`] to one [`DiskGrid`].
#[derive(Debug, Clone)]
pub struct Transform {
    basis: Arc<SpectralBasis>,
    grid: Arc<DiskGrid>,
    /// `J_n(k_{nj} r_i)` per order, shape `[n_r, j_max]`.
    radial: Vec<Array2<f64>>,
    /// Analysis weights per order, shape `[j_max, n_r]`.
    analysis: Vec<Array2<f64>>,
    /// `cos nθ_j`, shape `[n_max + 1, n_theta]`.
    cos: Array2<f64>,
    /// `sin nθ_j` for `n ≥ 1`, shape `[n_max, n_theta]`.
    sin: Array2<f64>,
    /// Whether the grid resolves the basis well enough for analysis.
    resolved: bool,
}

impl Transform {
    pub fn new(basis: Arc<SpectralBasis>, grid: Arc<DiskGrid>) -> Result<Self> {
        Self::check_resolution(&basis, &grid)?;
        Self::build(basis, grid, true)
    }

    /// Tables for evaluating coefficients on an arbitrary grid. Analysis on
    /// the result fails unless the grid also passes the resolution check.
    pub fn synthesis_only(basis: Arc<SpectralBasis>, grid: Arc<DiskGrid>) -> Result<Self> {
        let resolved = Self::check_resolution(&basis, &grid).is_ok();
        Self::build(basis, grid, resolved)
    }

    fn check_resolution(basis: &SpectralBasis, grid: &DiskGrid) -> Result<()> {
        if (basis.radius() - grid.radius()).abs() > 1e-12 * basis.radius() {
            return Err(Error::RadiusMismatch {
                grid: grid.radius(),
                basis: basis.radius(),
            });
        }
        let (n_max, j_max) = (basis.n_max(), basis.j_max());
        if grid.n_theta() < 2 * n_max + 2 {
            return Err(Error::Resolution(format!(
                "n_theta = {} cannot resolve angular order {n_max}; need at least {}",
                grid.n_theta(),
                2 * n_max + 2
            )));
        }
        if grid.n_r() < j_max + 2 {
            return Err(Error::Resolution(format!(
                "n_r = {} cannot resolve {j_max} radial modes; need at least {}",
                grid.n_r(),
                j_max + 2
            )));
        }
        Ok(())
    }

    fn build(basis: Arc<SpectralBasis>, grid: Arc<DiskGrid>, resolved: bool) -> Result<Self> {
        if (basis.radius() - grid.radius()).abs() > 1e-12 * basis.radius() {
            return Err(Error::RadiusMismatch {
                grid: grid.radius(),
                basis: basis.radius(),
            });
        }
        let (n_max, j_max) = (basis.n_max(), basis.j_max());
        let n_r = grid.n_r();
        let mut radial = Vec::with_capacity(n_max + 1);
        let mut analysis = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let order = basis.order(n);
            let table = Array2::from_shape_fn((n_r, j_max), |(i, j)| {
                bessel_j(n, order.eigenvalues()[j] * grid.r_nodes()[i])
            });
            let c = if n == 0 { 2.0 * PI } else { PI };
            let weights = Array2::from_shape_fn((j_max, n_r), |(j, i)| {
                grid.r_weights()[i] * grid.r_nodes()[i] * table[[i, j]] / (c * order.norms()[j])
            });
            radial.push(table);
            analysis.push(weights);
        }
        let thetas = grid.theta_nodes();
        let cos = Array2::from_shape_fn((n_max + 1, thetas.len()), |(n, j)| {
            (n as f64 * thetas[j]).cos()
        });
        let sin = Array2::from_shape_fn((n_max, thetas.len()), |(n, j)| {
            ((n + 1) as f64 * thetas[j]).sin()
        });
        Ok(Transform {
            basis,
            grid,
            radial,
            analysis,
            cos,
            sin,
            resolved,
        })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        &self.grid
    }

    fn check_grid(&self, grid: &Arc<DiskGrid>) -> Result<()> {
        if Arc::ptr_eq(grid, &self.grid) || **grid == *self.grid {
            Ok(())
        } else if (grid.radius() - self.grid.radius()).abs() > 1e-12 * self.grid.radius() {
            Err(Error::RadiusMismatch {
                grid: grid.radius(),
                basis: self.basis.radius(),
            })
        } else {
            Err(invalid("grid", "field lives on a different grid than the transform"))
        }
    }

    /// Grid samples to normalised Fourier–Bessel coefficients.
    pub fn analyze(&self, field: &DiskField) -> Result<SpectralField> {
        self.check_grid(field.grid())?;
        if !self.resolved {
            Self::check_resolution(&self.basis, &self.grid)?;
        }
        let dtheta = self.grid.dtheta();
        // angular Fourier integrals at every radial node: [n_r, n_max + 1]
        let cos_part = field.values().dot(&self.cos.t()) * dtheta;
        let sin_part = field.values().dot(&self.sin.t()) * dtheta;

        let n_max = self.basis.n_max();
        let mut out = SpectralField::zeros(self.basis.clone());
        for n in 0..=n_max {
            let row = self.analysis[n].dot(&cos_part.column(n));
            out.a.row_mut(n).assign(&row);
            if n > 0 {
                let row = self.analysis[n].dot(&sin_part.column(n - 1));
                out.b.row_mut(n - 1).assign(&row);
            }
        }
        Ok(out)
    }

    /// Coefficients to grid samples.
    pub fn synthesize(&self, spec: &SpectralField) -> DiskField {
        let n_max = self.basis.n_max();
        let n_r = self.grid.n_r();
        let mut cos_profiles = Array2::zeros((n_r, n_max + 1));
        let mut sin_profiles = Array2::zeros((n_r, n_max));
        for n in 0..=n_max {
            cos_profiles
                .column_mut(n)
                .assign(&self.radial[n].dot(&spec.a.row(n)));
            if n > 0 {
                sin_profiles
                    .column_mut(n - 1)
                    .assign(&self.radial[n].dot(&spec.b.row(n - 1)));
            }
        }
        let values = cos_profiles.dot(&self.cos) + sin_profiles.dot(&self.sin);
        DiskField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Order-zero coefficients `c_j` of a radial profile sampled on `r_nodes`.
    pub fn analyze_radial(&self, profile: &[f64]) -> Result<Array1<f64>> {
        if !self.resolved {
            Self::check_resolution(&self.basis, &self.grid)?;
        }
        if profile.len() != self.grid.n_r() {
            return Err(invalid(
                "profile",
                format!("expected {} radial samples, got {}", self.grid.n_r(), profile.len()),
            ));
        }
        // analysis weights for order 0 carry 1/(2π N); undo the 2π
        let p = Array1::from_vec(profile.to_vec());
        Ok(self.analysis[0].dot(&p) * (2.0 * PI))
    }

    /// Radial profile `Σ_j c_j J_0(k_j r_i)`.
    pub fn synthesize_radial(&self, coeffs: &Array1<f64>) -> Vec<f64> {
        self.radial[0].dot(coeffs).to_vec()
    }
}

/// One-shot analysis of `field` in `basis`.
pub fn analyze(field: &DiskField, basis: Arc<SpectralBasis>) -> Result<SpectralField> {
    Transform::new(basis, field.grid().clone())?.analyze(field)
}

/// One-shot synthesis of `spec` on `grid`.
pub fn synthesize(spec: &SpectralField, grid: Arc<DiskGrid>) -> Result<DiskField> {
    Ok(Transform::new(spec.basis().clone(), grid)?.synthesize(spec))
}

/// Order-zero expansion `c_j = ∫₀ᴿ r J_0(k_j r) f(r) dr / ∫₀ᴿ r J_0(k_j r)² dr`
/// of a profile sampled on the grid's radial nodes.
pub fn analyze_radial(profile: &[f64], grid: &DiskGrid, order0: &BesselBasis) -> Result<Vec<f64>> {
    if order0.order() != 0 {
        return Err(invalid("basis", "radial analysis needs the order-0 basis"));
    }
    if profile.len() != grid.n_r() {
        return Err(invalid("profile", "length must equal the number of radial nodes"));
    }
    Ok(order0
        .eigenvalues()
        .iter()
        .zip(order0.norms())
        .map(|(&k, &norm)| {
            let integral: f64 = grid
                .r_nodes()
                .iter()
                .zip(grid.r_weights())
                .zip(profile)
                .map(|((&r, &w), &f)| w * r * bessel_j(0, k * r) * f)
                .sum();
            integral / norm
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(bc: BoundaryCondition, n_max: usize, j_max: usize) -> Transform {
        let basis = Arc::new(SpectralBasis::new(1.0, bc, n_max, j_max).unwrap());
        let grid = Arc::new(DiskGrid::new(1.0, 2 * j_max + 2 * n_max + 16, 2 * n_max + 4).unwrap());
        Transform::new(basis, grid).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let grid = DiskGrid::new(2.5, 40, 12).unwrap();
        assert!(grid.r_nodes().iter().all(|&r| r > 0.0 && r < 2.5));
        let s: f64 = grid.r_nodes().iter().zip(grid.r_weights()).map(|(r, w)| r * w).sum();
        assert!((s / (0.5 * 2.5 * 2.5) - 1.0).abs() < 1e-12);
        assert!((grid.theta_nodes()[3] - 2.0 * PI * 3.0 / 12.0).abs() < 1e-15);
        let cc = DiskGrid::cell_centered(1.0, 8, 4).unwrap();
        assert_eq!(cc.r_nodes()[0], 1.0 / 16.0);
    }

    #[test]
    fn zero_field_has_zero_coefficients() {
        let t = setup(BoundaryCondition::Dirichlet, 4, 6);
        let c = t.analyze(&DiskField::zeros(t.grid().clone())).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn single_mode_analysis() {
        let t = setup(BoundaryCondition::Dirichlet, 4, 8);
        let k01 = t.basis().eigenvalue(0, 0);
        let f = DiskField::from_polar(t.grid().clone(), |r, _| bessel_j(0, k01 * r));
        let mut c = t.analyze(&f).unwrap();
        assert!((c.a()[[0, 0]] - 1.0).abs() < 1e-8);
        c.a_mut()[[0, 0]] = 0.0;
        assert!(c.max_abs() < 1e-8);

        let k11 = t.basis().eigenvalue(1, 0);
        let f = DiskField::from_polar(t.grid().clone(), |r, th| bessel_j(1, k11 * r) * th.cos());
        let mut c = t.analyze(&f).unwrap();
        assert!((c.a()[[1, 0]] - 1.0).abs() < 1e-8);
        c.a_mut()[[1, 0]] = 0.0;
        assert!(c.max_abs() < 1e-8);
    }

    #[test]
    fn single_mode_synthesis() {
        let t = setup(BoundaryCondition::ZeroFlux, 3, 5);
        let mut c = SpectralField::zeros(t.basis().clone());
        c.a_mut()[[0, 1]] = 2.0;
        let k = t.basis().eigenvalue(0, 1);
        let f = t.synthesize(&c);
        for (i, &r) in t.grid().r_nodes().iter().enumerate() {
            for j in 0..t.grid().n_theta() {
                assert!((f.values()[[i, j]] - 2.0 * bessel_j(0, k * r)).abs() < 1e-13);
            }
        }
        assert_eq!(t.synthesize(&SpectralField::zeros(t.basis().clone())).max_abs(), 0.0);
    }

    #[test]
    fn rejects_underresolved_grids() {
        let basis = Arc::new(SpectralBasis::new(1.0, BoundaryCondition::Dirichlet, 4, 6).unwrap());
        let coarse_theta = Arc::new(DiskGrid::new(1.0, 30, 9).unwrap());
        assert!(matches!(
            Transform::new(basis.clone(), coarse_theta),
            Err(Error::Resolution(_))
        ));
        let coarse_r = Arc::new(DiskGrid::new(1.0, 7, 16).unwrap());
        assert!(Transform::new(basis.clone(), coarse_r).is_err());
        let wrong_radius = Arc::new(DiskGrid::new(2.0, 30, 16).unwrap());
        assert!(matches!(
            Transform::new(basis, wrong_radius),
            Err(Error::RadiusMismatch { .. })
        ));
    }

    #[test]
    fn expansion_of_unity() {
        let t = setup(BoundaryCondition::Dirichlet, 0, 10);
        let ones = vec![1.0; t.grid().n_r()];
        let c = analyze_radial(&ones, t.grid(), t.basis().order(0)).unwrap();
        let fast = t.analyze_radial(&ones).unwrap();
        for j in 0..10 {
            let k = t.basis().eigenvalue(0, j);
            // oracle: direct quadrature of ∫ r J0(kr) dr / ∫ r J0(kr)² dr
            let num = crate::quadrature::adaptive_simpson(|r| r * bessel_j(0, k * r), 0.0, 1.0, 1e-14);
            let den =
                crate::quadrature::adaptive_simpson(|r| r * bessel_j(0, k * r).powi(2), 0.0, 1.0, 1e-14);
            assert!((c[j] - num / den).abs() < 1e-8);
            assert!((c[j] - 2.0 / (k * bessel_j(1, k))).abs() < 1e-8);
            assert!((fast[j] - c[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_shifts_theta_index() {
        let grid = Arc::new(DiskGrid::new(1.0, 4, 8).unwrap());
        let f = DiskField::from_polar(grid.clone(), |_, th| th);
        let g = f.rotate(1);
        assert_eq!(g.values()[[0, 1]], f.values()[[0, 0]]);
        assert_eq!(g.values()[[0, 0]], f.values()[[0, 7]]);
    }

    #[test]
    fn spectral_total_matches_quadrature() {
        let t = setup(BoundaryCondition::Dirichlet, 2, 6);
        let mut c = SpectralField::zeros(t.basis().clone());
        c.a_mut()[[0, 0]] = 1.0;
        c.a_mut()[[0, 3]] = -0.4;
        c.a_mut()[[2, 1]] = 0.7;
        let f = t.synthesize(&c);
        assert!((f.total() - c.total()).abs() < 1e-12);
    }
}
