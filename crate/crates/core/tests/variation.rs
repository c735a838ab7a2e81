mod common;

use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use caliblab::decomposition::{g2_metric_velocity_3form, g2_metric_velocity_4form};
use caliblab::exterior::{KForm, Vector};
use caliblab::structure::{standard_kit, Case};
use caliblab::submanifold::catalog::{patch_by_id, AffinePatch, ReversedPatch};
use caliblab::submanifold::{fd_derivative, normal_projector, BoxDomain, Patch, QuadratureRule};
use caliblab::variation::family::{
    assoc_family_from_beta, cayley_family_from_gamma, coassoc_family_from_gamma, family_for_case,
    um_family_from_alpha, UmBackground, VariationFamily,
};
use caliblab::variation::fields::{TrigFormField, TrigScalarField};
use caliblab::variation::suite::{
    calibrated_torus, generator_degree, random_generator, theorem_rule,
};
use caliblab::variation::test_variation::{
    canonical_selectors, closed_form_trace, test_variation, Selectors,
};
use caliblab::variation::theorem::{
    analytic_first_variation, fd_first_variation, theorem_a_experiment, theorem_b_defect,
    theorem_b_experiment, Tolerances,
};

use common::{
    calibrated_planes, gaussian, non_calibrated_planes, orthonormal, random_form, theorem_cases,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_family(case: Case, background: UmBackground, keep: bool, seed: u64) -> VariationFamily {
    let patch = calibrated_torus(case).unwrap();
    let g = random_generator(case, patch.as_ref(), 2, &mut rng(seed)).unwrap();
    family_for_case(case, Arc::new(g), background, keep).unwrap()
}

fn conformal(n: usize, axes: &[usize]) -> UmBackground {
    UmBackground::Conformal(TrigScalarField::axis_waves(n, axes, 0.05))
}

fn plane(e: &[Vector]) -> AffinePatch {
    AffinePatch::new(
        "plane",
        Vector::zeros(e[0].len()),
        e.to_vec(),
        BoxDomain::unit(e.len()),
    )
    .unwrap()
}

#[test]
fn constant_generators_change_nothing() {
    let mut r = rng(1);
    for case in [
        Case::AlmostComplex { m: 2, k: 1 },
        Case::Associative,
        Case::Coassociative,
        Case::Cayley,
    ] {
        let n = case.ambient_dim();
        let g = TrigFormField::constant(random_form(n, generator_degree(case), &mut r)).unwrap();
        let fam = family_for_case(case, Arc::new(g), UmBackground::Flat, false).unwrap();
        let p = gaussian(n, &mut r);
        assert!(fam.h_at(&p).matrix().amax() < 1e-14, "{case}");
        assert!(fam.mu_dot_at(&p).unwrap().max_abs() < 1e-14, "{case}");
    }
}

#[test]
fn generators_of_the_wrong_shape_are_rejected() {
    let two = Arc::new(TrigFormField::constant(KForm::zero(7, 2).unwrap()).unwrap());
    assert!(coassoc_family_from_gamma(two.clone()).is_err());
    assert!(cayley_family_from_gamma(two.clone(), false).is_err());
    assert!(um_family_from_alpha(two.clone(), 2, 1, UmBackground::Flat).is_err());
    assert!(assoc_family_from_beta(two).is_ok());
    let one = Arc::new(TrigFormField::constant(KForm::zero(4, 1).unwrap()).unwrap());
    assert!(um_family_from_alpha(one, 2, 3, UmBackground::Flat).is_err());
}

#[test]
fn um_velocity_matches_the_metric_family() {
    for (case, bg) in [
        (Case::AlmostComplex { m: 2, k: 1 }, UmBackground::Flat),
        (Case::AlmostComplex { m: 3, k: 2 }, UmBackground::Flat),
        (Case::AlmostComplex { m: 2, k: 1 }, conformal(4, &[0, 1])),
    ] {
        let fam = random_family(case, bg, false, 3);
        let j = fam.kit().j().unwrap().clone();
        let mut r = rng(4);
        for _ in 0..3 {
            let p = gaussian(case.ambient_dim(), &mut r);
            let h = fam.h_at(&p);
            let n = p.len();
            let fd = DMatrix::from_fn(n, n, |i, k| {
                fd_derivative(|t| Ok(fam.gbar_at(&p, t)?.get(i, k)), 0.0, 1e-3, 1)
                    .unwrap()
                    .value
            });
            assert!((&fd - h.matrix()).amax() < 1e-8, "{case}");
            // h is J-invariant
            assert!((j.transpose() * h.matrix() * &j - h.matrix()).amax() < 1e-12);
            assert!((fam.h_direct(&p).unwrap().matrix() - h.matrix()).amax() < 1e-12);
        }
    }
}

#[test]
fn associative_velocity_matches_the_nonlinear_metric() {
    let fam = random_family(Case::Associative, UmBackground::Flat, false, 5);
    let mut r = rng(6);
    for _ in 0..2 {
        let p = gaussian(7, &mut r);
        let h = fam.h_at(&p);
        let fd = DMatrix::from_fn(7, 7, |i, k| {
            fd_derivative(|t| Ok(fam.gbar_at(&p, t)?.get(i, k)), 0.0, 1e-3, 2)
                .unwrap()
                .value
        });
        assert!((&fd - h.matrix()).amax() < 1e-7);
    }
    assert!(!random_family(Case::Cayley, UmBackground::Flat, false, 1).has_gbar());
}

#[test]
fn velocities_of_the_structure_forms() {
    let fam = |case| random_family(case, UmBackground::Flat, false, 7);
    let g2 = standard_kit(Case::Associative).unwrap();
    let sp7 = standard_kit(Case::Cayley).unwrap();
    let id7 = DMatrix::<f64>::identity(7, 7);
    let h = fam(Case::Associative)
        .velocity_of(g2.phi().unwrap())
        .unwrap();
    assert!((h.matrix() - &id7 * (2.0 / 3.0)).amax() < 1e-14);
    let h = fam(Case::Coassociative)
        .velocity_of(g2.psi().unwrap())
        .unwrap();
    assert!((h.matrix() - &id7 * 0.5).amax() < 1e-14);
    // the trace-free Cayley family ignores Ω⁴_1, the kept one does not
    let big_phi = sp7.spin7().unwrap();
    assert!(
        fam(Case::Cayley)
            .velocity_of(big_phi)
            .unwrap()
            .matrix()
            .amax()
            < 1e-14
    );
    let kept = random_family(Case::Cayley, UmBackground::Flat, true, 7);
    assert!(kept.keeps_omega4_1());
    assert!(
        (kept.velocity_of(big_phi).unwrap().matrix() - DMatrix::<f64>::identity(8, 8) * 0.5).amax()
            < 1e-14
    );
}

#[test]
fn h_by_modes_agrees_with_direct_assembly() {
    let mut r = rng(8);
    for (i, case) in theorem_cases().into_iter().enumerate() {
        let fam = random_family(case, UmBackground::Flat, false, 10 + i as u64);
        for _ in 0..3 {
            let p = gaussian(case.ambient_dim(), &mut r);
            assert!(
                (fam.h_at(&p).matrix() - fam.h_direct(&p).unwrap().matrix()).amax() < 1e-12,
                "{case}"
            );
        }
    }
}

#[test]
fn theorem_a_on_calibrated_tori() {
    for (i, case) in [
        Case::AlmostComplex { m: 2, k: 1 },
        Case::Associative,
        Case::Coassociative,
        Case::Cayley,
    ]
    .into_iter()
    .enumerate()
    {
        let patch = calibrated_torus(case).unwrap();
        let rule = theorem_rule(patch.as_ref(), 8).unwrap();
        let fam = random_family(case, UmBackground::Flat, false, 20 + i as u64);
        let v = theorem_a_experiment(patch.as_ref(), &fam, &rule, Tolerances::default()).unwrap();
        assert!(v.calibrated && v.closed, "{case}");
        assert!(v.passed(), "{case}: {:?}", v.claims);
        assert!(v.analytic_first_variation.abs() < 1e-6, "{case}");
        assert!(v.integrand_max_error < 1e-8, "{case}");
        assert!(v.defect_integral.abs() < 1e-10, "{case}");
    }
}

#[test]
fn lower_order_term_carries_the_first_variation() {
    let case = Case::AlmostComplex { m: 3, k: 2 };
    let patch = calibrated_torus(case).unwrap();
    let rule = theorem_rule(patch.as_ref(), 8).unwrap();
    let mut seen: f64 = 0.0;
    for seed in 0..2 {
        let fam = random_family(case, conformal(6, &[0, 1, 2, 3]), false, 30 + seed);
        let v = theorem_a_experiment(patch.as_ref(), &fam, &rule, Tolerances::default()).unwrap();
        assert!(v.passed(), "{:?}", v.claims);
        let lower = v.lower_order_integral.unwrap();
        assert!((v.analytic_first_variation - lower).abs() < 1e-6);
        assert!(v.stokes_integral.abs() < 1e-6);
        seen = seen.max(lower.abs());
    }
    assert!(seen > 1e-4, "{seen}");
}

#[test]
fn reversed_orientation_still_stationary() {
    let inner = AffinePatch::torus(7, &[0, 1, 2]).unwrap();
    let rev = ReversedPatch { inner };
    let kit = standard_kit(Case::Associative).unwrap();
    let x = [0.1, 0.2, 0.3];
    assert!((kit.calibration().evaluate(&rev.tangents(&x)).unwrap() + 1.0).abs() < 1e-14);
    let fam = random_family(Case::Associative, UmBackground::Flat, false, 40);
    let v = theorem_a_experiment(
        &rev,
        &fam,
        &theorem_rule(&rev, 8).unwrap(),
        Tolerances::default(),
    )
    .unwrap();
    assert!(v.calibrated);
    assert!(v.passed(), "{:?}", v.claims);
    assert!(v.analytic_first_variation.abs() < 1e-6);
}

#[test]
fn analytic_and_fd_first_variation_agree_off_the_calibrated_locus() {
    let patch = patch_by_id("graph-trig-r4").unwrap();
    let rule = QuadratureRule::new(6, 1).unwrap();
    let case = Case::AlmostComplex { m: 2, k: 1 };
    let g = random_generator(case, patch.as_ref(), 2, &mut rng(50)).unwrap();
    let fam = family_for_case(case, Arc::new(g), UmBackground::Flat, false).unwrap();
    let an = analytic_first_variation(patch.as_ref(), &fam, &rule).unwrap();
    let fd = fd_first_variation(patch.as_ref(), &fam, &rule, 1e-4, 2).unwrap();
    assert!(an.abs() > 1e-3);
    assert!((fd.value - an).abs() < 1e-7 * an.abs().max(1.0));
    let v = theorem_a_experiment(patch.as_ref(), &fam, &rule, Tolerances::default()).unwrap();
    assert!(!v.calibrated);
    assert!(v.defect_integral > 1e-3);
}

#[test]
fn theorem_b_on_a_non_calibrated_graph() {
    let kit = standard_kit(Case::AlmostComplex { m: 2, k: 1 }).unwrap();
    let patch = patch_by_id("graph-trig-r4").unwrap();
    let b = theorem_b_experiment(
        &kit,
        patch.as_ref(),
        &QuadratureRule::new(6, 1).unwrap(),
        Tolerances::default(),
    )
    .unwrap();
    assert!(b.passed(), "{:?}", b.claims);
    assert_eq!(b.ratio, -2.0);
    assert!(b.defect_integral > 1e-3);
    assert!((b.defect_integral + 2.0 * b.first_variation_sum).abs() < 1e-8);
}

#[test]
fn keeping_omega4_1_breaks_the_cayley_relation() {
    let kit = standard_kit(Case::Cayley).unwrap();
    let mut r = rng(60);
    let e = non_calibrated_planes(&kit, 0, 1, &mut r).remove(0);
    let b = theorem_b_experiment(
        &kit,
        &plane(&e),
        &QuadratureRule::new(2, 1).unwrap(),
        Tolerances::default(),
    )
    .unwrap();
    assert!(b.passed());
    let kept = b
        .claims
        .iter()
        .find(|c| c.name == "omega4-1-kept-relation")
        .unwrap();
    assert!(!kept.expected_pass && !kept.passed, "{kept:?}");
    assert!(b.kept_first_variation_sum.is_some());
}

#[test]
fn defect_vanishes_exactly_on_calibrated_tori() {
    for case in theorem_cases() {
        let kit = standard_kit(case).unwrap();
        let patch = calibrated_torus(case).unwrap();
        let d =
            theorem_b_defect(&kit, patch.as_ref(), &QuadratureRule::new(2, 1).unwrap()).unwrap();
        assert!(d.abs() < 1e-12, "{case}: {d}");
    }
}

#[test]
fn test_variations_on_calibrated_planes() {
    let mut r = rng(70);
    for case in theorem_cases() {
        let kit = standard_kit(case).unwrap();
        for e in calibrated_planes(&kit, 2, &mut r) {
            let e = orthonormal(&e);
            let p = plane(&e);
            let pperp = normal_projector(&p, &[0.5; 4][..p.k()]).unwrap();
            for sel in canonical_selectors(case, &e) {
                assert!(
                    closed_form_trace(&kit, &e, &pperp, &sel).unwrap().abs() < 1e-12,
                    "{case}"
                );
            }
        }
    }
}

#[test]
fn test_variation_needs_tangent_selectors() {
    let kit = standard_kit(Case::Associative).unwrap();
    let patch = calibrated_torus(Case::Associative).unwrap();
    let x = [0.5, 0.5, 0.5];
    assert!(test_variation(&kit, patch.as_ref(), &x, &Selectors::none()).is_err());
    let normal = Vector::from_fn(7, |i, _| if i == 4 { 1.0 } else { 0.0 });
    assert!(test_variation(&kit, patch.as_ref(), &x, &Selectors::v(normal)).is_err());
    let tangent = Vector::from_fn(7, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let d = test_variation(&kit, patch.as_ref(), &x, &Selectors::v(tangent)).unwrap();
    assert_eq!(d.degree(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn g2_velocity_traces(seed in any::<u64>()) {
        let mut r = rng(seed);
        let kit = standard_kit(Case::Associative).unwrap();
        let eta = random_form(7, 3, &mut r);
        let rho = random_form(7, 4, &mut r);
        let t3 = g2_metric_velocity_3form(&eta, &kit).unwrap().trace();
        let t4 = g2_metric_velocity_4form(&rho, &kit).unwrap().trace();
        prop_assert!((t3 - 2.0 / 3.0 * eta.dot(kit.phi().unwrap()).unwrap()).abs() < 1e-12);
        prop_assert!((t4 - 0.5 * rho.dot(kit.psi().unwrap()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn non_calibrated_planes_have_positive_defect(seed in any::<u64>()) {
        let mut r = rng(seed);
        for case in theorem_cases() {
            let kit = standard_kit(case).unwrap();
            let e = non_calibrated_planes(&kit, 0, 1, &mut r).remove(0);
            let d = theorem_b_defect(&kit, &plane(&e), &QuadratureRule::new(1, 1).unwrap()).unwrap();
            prop_assert!(d > 0.0, "{}: {}", case, d);
        }
    }
}
