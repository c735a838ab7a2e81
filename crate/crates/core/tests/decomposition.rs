mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use caliblab::decomposition::{
    g2_split_3form, g2_split_4form, metric_from_3form, project_35_7, sp7_4form_from,
    sp7_metric_velocity, sp7_metric_velocity_trace_free, sp7_split_4form,
};
use caliblab::exterior::{KForm, SymTensor2};
use caliblab::structure::{standard_kit, Case, StructureKit};
use caliblab::submanifold::fd_derivative;

use common::{random_form, random_sym};

fn g2() -> StructureKit {
    standard_kit(Case::Associative).unwrap()
}

fn sp7() -> StructureKit {
    standard_kit(Case::Cayley).unwrap()
}

fn id(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

fn basis_forms(n: usize, k: usize) -> Vec<KForm> {
    common::subsets(n, k)
        .iter()
        .map(|axes| KForm::basis(n, axes).unwrap())
        .collect()
}

fn rank_of_images(images: &[KForm]) -> usize {
    let cols: Vec<_> = images
        .iter()
        .map(|f| nalgebra::DVector::from_column_slice(f.coeffs()))
        .collect();
    DMatrix::from_columns(&cols).rank(1e-9)
}

#[test]
fn velocities_of_the_structure_forms() {
    // d/dt g(φ + tφ) = d/dt (1 + t)^{2/3} Id
    let s = g2_split_3form(g2().phi().unwrap(), &g2()).unwrap();
    assert!((s.h.matrix() - id(7) * (2.0 / 3.0)).amax() < 1e-14);
    assert_eq!(s.hat, id(7) * 6.0);
    let s = g2_split_4form(g2().psi().unwrap(), &g2()).unwrap();
    assert!((s.h.matrix() - id(7) * 0.5).amax() < 1e-14);
    assert_eq!(s.hat, id(7) * 24.0);
    let s = sp7_split_4form(sp7().spin7().unwrap(), &sp7()).unwrap();
    assert!((s.h.matrix() - id(8) * 0.5).amax() < 1e-14);
    assert!(s.h0.matrix().amax() < 1e-14);
    assert_eq!(s.hat, id(8) * 42.0);
}

#[test]
fn phi_velocity_matches_the_nonlinear_metric() {
    let phi = g2().phi().unwrap().clone();
    let fd = fd_derivative(
        |t| Ok(metric_from_3form(&phi.scale(1.0 + t))?.0.get(2, 2)),
        0.0,
        1e-4,
        2,
    )
    .unwrap();
    assert!((fd.value - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn zero_forms_split_to_zero() {
    let s = g2_split_3form(&KForm::zero(7, 3).unwrap(), &g2()).unwrap();
    assert!(s.h.matrix().amax() == 0.0 && s.x.amax() == 0.0 && s.eta_7.is_zero());
    let s = g2_split_4form(&KForm::zero(7, 4).unwrap(), &g2()).unwrap();
    assert!(s.h.matrix().amax() == 0.0 && s.x.amax() == 0.0);
    let s = sp7_split_4form(&KForm::zero(8, 4).unwrap(), &sp7()).unwrap();
    assert!(s.sigma_27.is_zero() && s.beta.amax() == 0.0);
}

#[test]
fn wrong_degrees_are_rejected() {
    assert!(g2_split_3form(&KForm::zero(7, 2).unwrap(), &g2()).is_err());
    assert!(g2_split_4form(&KForm::zero(8, 4).unwrap(), &g2()).is_err());
    assert!(sp7_split_4form(&KForm::zero(8, 3).unwrap(), &sp7()).is_err());
    assert!(metric_from_3form(&KForm::zero(7, 3).unwrap()).is_err());
    assert!(metric_from_3form(&KForm::parse(7, "e123").unwrap()).is_err());
}

#[test]
fn metric_anchor_and_homogeneity() {
    let phi = g2().phi().unwrap().clone();
    assert_eq!(metric_from_3form(&phi).unwrap().0, SymTensor2::identity(7));
    for c in [0.5, 0.9, 1.3, 2.0] {
        let (g, _) = metric_from_3form(&phi.scale(c * c * c)).unwrap();
        assert!((g.matrix() - id(7) * (c * c)).amax() < 1e-12, "c = {c}");
    }
}

#[test]
fn split_ranks() {
    let g = g2();
    let three = basis_forms(7, 3);
    let s3: Vec<_> = three
        .iter()
        .map(|f| g2_split_3form(f, &g).unwrap())
        .collect();
    assert_eq!(
        rank_of_images(&s3.iter().map(|s| s.eta_1_27.clone()).collect::<Vec<_>>()),
        28
    );
    assert_eq!(
        rank_of_images(&s3.iter().map(|s| s.eta_7.clone()).collect::<Vec<_>>()),
        7
    );
    let four = basis_forms(7, 4);
    let s4: Vec<_> = four
        .iter()
        .map(|f| g2_split_4form(f, &g).unwrap())
        .collect();
    assert_eq!(
        rank_of_images(&s4.iter().map(|s| s.rho_1_27.clone()).collect::<Vec<_>>()),
        28
    );
    assert_eq!(
        rank_of_images(&s4.iter().map(|s| s.rho_7.clone()).collect::<Vec<_>>()),
        7
    );
    let s = sp7();
    let eight = basis_forms(8, 4);
    let s8: Vec<_> = eight
        .iter()
        .map(|f| sp7_split_4form(f, &s).unwrap())
        .collect();
    assert_eq!(
        rank_of_images(&s8.iter().map(|x| x.sigma_1_35()).collect::<Vec<_>>()),
        36
    );
    assert_eq!(
        rank_of_images(&s8.iter().map(|x| x.sigma_7.clone()).collect::<Vec<_>>()),
        7
    );
    assert_eq!(
        rank_of_images(&s8.iter().map(|x| x.sigma_27.clone()).collect::<Vec<_>>()),
        27
    );
}

#[test]
fn projection_kills_the_invariant_form() {
    let s = sp7();
    assert!(project_35_7(s.spin7().unwrap(), &s).unwrap().max_abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g2_parts_are_orthogonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = g2_split_3form(&random_form(7, 3, &mut rng), &g2()).unwrap();
        prop_assert!(s.eta_1_27.dot(&s.eta_7).unwrap().abs() < 1e-12);
        let s = g2_split_4form(&random_form(7, 4, &mut rng), &g2()).unwrap();
        prop_assert!(s.rho_1_27.dot(&s.rho_7).unwrap().abs() < 1e-12);
    }

    #[test]
    fn spin7_parts_are_orthogonal_and_typed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = sp7();
        let s = sp7_split_4form(&random_form(8, 4, &mut rng), &k).unwrap();
        let parts = [&s.sigma_1, &s.sigma_35, &s.sigma_7, &s.sigma_27];
        for a in 0..4 {
            for b in a + 1..4 {
                prop_assert!(parts[a].dot(parts[b]).unwrap().abs() < 1e-12);
            }
        }
        // Ω⁴_35 is anti-self-dual, Ω⁴_{1+7+27} self-dual
        prop_assert!((&s.sigma_35.hodge_star_euclidean() + &s.sigma_35).max_abs() < 1e-12);
        for part in [&s.sigma_1, &s.sigma_7, &s.sigma_27] {
            prop_assert!((&part.hodge_star_euclidean() - part).max_abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_annihilates_omega4_7(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = sp7();
        let s = sp7_split_4form(&random_form(8, 4, &mut rng), &k).unwrap();
        prop_assert!(sp7_metric_velocity(&s.sigma_7, &k).unwrap().matrix().amax() < 1e-12);
        // with σ₁ removed the full and trace-free velocities agree
        let no_one = &s.sigma_35 + &s.sigma_7;
        let h = sp7_metric_velocity(&no_one, &k).unwrap();
        let h0 = sp7_metric_velocity_trace_free(&no_one, &k).unwrap();
        prop_assert!((h.matrix() - h0.matrix()).amax() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = sp7();
        let p = project_35_7(&random_form(8, 4, &mut rng), &k).unwrap();
        prop_assert!((&project_35_7(&p, &k).unwrap() - &p).max_abs() < 1e-12);
    }

    #[test]
    fn omega4_35_is_the_anti_self_dual_part(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = sp7();
        let sigma = sp7_4form_from(&random_sym(8, &mut rng), &DMatrix::zeros(8, 8), None, &k).unwrap();
        let s = sp7_split_4form(&sigma, &k).unwrap();
        let anti = &sigma - &sigma.hodge_star_euclidean();
        prop_assert!((&s.sigma_35.scale(2.0) - &anti).max_abs() < 1e-12);
    }

    #[test]
    fn anti_self_dual_forms_are_trace_free(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = sp7();
        let f = random_form(8, 4, &mut rng);
        let asd = &f - &f.hodge_star_euclidean();
        let s = sp7_split_4form(&asd, &k).unwrap();
        prop_assert!(s.h.trace().abs() < 1e-12);
        prop_assert!(s.sigma_7.max_abs() < 1e-12 && s.sigma_27.max_abs() < 1e-12);
    }

    #[test]
    fn splits_are_linear(seed in any::<u64>(), c in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_form(7, 3, &mut rng), random_form(7, 3, &mut rng));
        let mut sum = a.clone();
        sum.axpy(c, &b);
        let (sa, sb, ss) = (g2_split_3form(&a, &g2()).unwrap(), g2_split_3form(&b, &g2()).unwrap(), g2_split_3form(&sum, &g2()).unwrap());
        prop_assert!((ss.h.matrix() - (sa.h.matrix() + sb.h.matrix() * c)).amax() < 1e-12);
        prop_assert!((ss.x - (sa.x + sb.x * c)).amax() < 1e-12);
    }
}
