use std::sync::Arc;

use ndarray::Array2;
use proptest::prelude::*;

use diskdelay::bessel::{bessel_j, BoundaryCondition};
use diskdelay::kernel::{maturation_term, radial_maturation_term};
use diskdelay::model::{BirthFunction, Model, ModelSpec, TimeProfile, Variant};
use diskdelay::transform::{DiskField, DiskGrid, SpectralBasis, SpectralField, Transform};
use diskdelay::Error;

const N_MAX: usize = 5;
const J_MAX: usize = 10;

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::Dirichlet),
        Just(BoundaryCondition::ZeroFlux),
        (0.1f64..4.0, 0.1f64..4.0).prop_map(|(a, b)| BoundaryCondition::Mixed { a, b }),
    ]
}

fn transform(bc: BoundaryCondition, radius: f64) -> Transform {
    let basis = Arc::new(SpectralBasis::new(radius, bc, N_MAX, J_MAX).unwrap());
    let grid = Arc::new(DiskGrid::new(radius, 40, 16).unwrap());
    Transform::new(basis, grid).unwrap()
}

fn coefficients(seed: Vec<f64>, basis: &Arc<SpectralBasis>) -> SpectralField {
    let rows = N_MAX + 1;
    let a = Array2::from_shape_fn((rows, J_MAX), |(n, j)| seed[n * J_MAX + j]);
    let b = Array2::from_shape_fn((N_MAX, J_MAX), |(n, j)| seed[rows * J_MAX + n * J_MAX + j]);
    SpectralField::from_parts(basis.clone(), a, b).unwrap()
}

fn seed() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, (2 * N_MAX + 1) * J_MAX)
}

fn max_diff(a: &DiskField, b: &DiskField) -> f64 {
    (a.values() - b.values()).iter().fold(0.0, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip(bc in bc_strategy(), radius in 0.5f64..3.0, s in seed()) {
        let t = transform(bc, radius);
        let c = coefficients(s, t.basis());
        let back = t.analyze(&t.synthesize(&c)).unwrap();
        let mut diff = back;
        diff.axpy(-1.0, &c);
        prop_assert!(diff.max_abs() < 1e-8, "{}", diff.max_abs());
    }

    #[test]
    fn parseval(bc in bc_strategy(), radius in 0.5f64..3.0, s in seed()) {
        let t = transform(bc, radius);
        let c = coefficients(s, t.basis());
        let field = t.synthesize(&c);
        let quad = t.grid().integrate(&field.values().mapv(|v| v * v));
        prop_assert!(((quad - c.energy()) / c.energy()).abs() < 1e-6);
    }

    #[test]
    fn kernel_diagonal_on_modes(
        bc in bc_strategy(),
        n in 0..=N_MAX,
        j in 0..J_MAX,
        sine in any::<bool>(),
        eps in 0.0f64..=1.0,
        alpha in 0.0f64..0.05,
    ) {
        let sine = sine && n > 0;
        let t = transform(bc, 1.0);
        let mode = SpectralField::unit_mode(t.basis().clone(), n, j, sine);
        let field = t.synthesize(&mode);
        let out = maturation_term(&field, 0.0, &BirthFunction::Identity, eps, alpha, &t).unwrap();
        let k = t.basis().eigenvalue(n, j);
        let expected = field.map(|v| v * eps * (-k * k * alpha).exp());
        prop_assert!(max_diff(&out, &expected) < 1e-8);
    }

    #[test]
    fn kernel_damping_is_bounded_by_eps(
        bc in bc_strategy(),
        s in seed(),
        eps in 0.0f64..=1.0,
        alpha in 0.0f64..0.2,
    ) {
        let t = transform(bc, 1.0);
        let c = coefficients(s, t.basis());
        let field = t.synthesize(&c);
        let out = maturation_term(&field, 0.0, &BirthFunction::Identity, eps, alpha, &t).unwrap();
        let got = t.analyze(&out).unwrap();
        for (o, i) in got.a().iter().zip(c.a()).chain(got.b().iter().zip(c.b())) {
            prop_assert!(o.abs() <= eps * i.abs() + 1e-10);
        }
    }

    #[test]
    fn kernel_rotation_equivariance(
        bc in bc_strategy(),
        s in seed(),
        shift in 0usize..16,
        birth in prop_oneof![
            Just(BirthFunction::Identity),
            Just(BirthFunction::Logistic { p: 1.0, kcap: 2.0 }),
            Just(BirthFunction::RickerQuadratic { c1: 0.25, c2: 0.1 }),
        ],
    ) {
        let t = transform(bc, 1.0);
        let field = t.synthesize(&coefficients(s, t.basis()));
        let direct = maturation_term(&field.rotate(shift), 0.0, &birth, 0.3, 0.01, &t).unwrap();
        let rotated = maturation_term(&field, 0.0, &birth, 0.3, 0.01, &t).unwrap().rotate(shift);
        prop_assert!(max_diff(&direct, &rotated) < 1e-8);
    }

    #[test]
    fn radial_path_matches_full_disk(
        bc in bc_strategy(),
        profile in prop::collection::vec(-1.0f64..1.0, J_MAX),
        birth in prop_oneof![
            Just(BirthFunction::Identity),
            Just(BirthFunction::Logistic { p: 1.0, kcap: 2.0 }),
        ],
        alpha in 0.0f64..0.1,
    ) {
        let t = transform(bc, 1.0);
        let mut c = SpectralField::zeros(t.basis().clone());
        for (j, v) in profile.iter().enumerate() {
            c.a_mut()[[0, j]] = *v * 0.3;
        }
        let field = t.synthesize(&c);
        let full = maturation_term(&field, 0.0, &birth, 0.4, alpha, &t).unwrap();
        let radial = radial_maturation_term(&field, 0.0, &birth, 0.4, alpha, &t).unwrap();
        prop_assert!(max_diff(&full, &radial) < 1e-8);
    }

    #[test]
    fn rhs_is_additive_for_identity_birth(
        s1 in seed(),
        s2 in seed(),
        variant in prop_oneof![Just(Variant::FullDirichlet), Just(Variant::FullZeroFlux)],
    ) {
        let mut spec = ModelSpec::new(variant);
        spec.birth = BirthFunction::Identity;
        spec.forcing = TimeProfile::Constant { value: 0.0 };
        spec.n_max = N_MAX;
        spec.j_max = J_MAX;
        let grid = Arc::new(DiskGrid::new(1.0, 40, 16).unwrap());
        let model = Model::new(spec, grid).unwrap();
        let t = model.transform();
        let (u, v) = (coefficients(s1, model.basis()), coefficients(s2, model.basis()));
        let mut sum = u.clone();
        sum.axpy(1.0, &v);
        let rhs = |w: &SpectralField| {
            let split = model.rhs(0.0, w, &t.synthesize(w)).unwrap();
            split.derivative(w, t).unwrap()
        };
        let mut diff = rhs(&sum);
        diff.axpy(-1.0, &rhs(&u));
        diff.axpy(-1.0, &rhs(&v));
        let scale = rhs(&sum).max_abs().max(1.0);
        prop_assert!(diff.max_abs() < 1e-8 * scale, "{}", diff.max_abs());
    }
}

#[test]
fn aliased_order_is_rejected() {
    let basis = Arc::new(SpectralBasis::new(1.0, BoundaryCondition::Dirichlet, N_MAX, J_MAX).unwrap());
    let coarse = Arc::new(DiskGrid::new(1.0, 40, 2 * N_MAX + 1).unwrap());
    assert!(matches!(Transform::new(basis.clone(), coarse.clone()), Err(Error::Resolution(_))));
    let synth = Transform::synthesis_only(basis.clone(), coarse.clone()).unwrap();
    let k = basis.eigenvalue(1, 0);
    let field = DiskField::from_polar(coarse, |r, th| bessel_j(1, k * r) * ((N_MAX + 1) as f64 * th).cos());
    assert!(matches!(synth.analyze(&field), Err(Error::Resolution(_))));
}
