//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the summary is printed by a plain
//! `cargo test`. Exits non-zero if any criterion fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use caliblab::decomposition::{
    g2_3form_from, g2_4form_from, g2_metric_velocity_3form, g2_split_3form, g2_split_4form,
    metric_from_3form, sp7_4form_from, sp7_split_4form,
};
use caliblab::error::Result;
use caliblab::exterior::{SymTensor2, Vector};
use caliblab::smith::{self, ConformalDomain, ConstantTensor, DomainMetric, MapTriple};
use caliblab::structure::{
    assoc_equality_residual, coassoc_equality_residual, contraction_identity_check, plane_defect,
    standard_kit, Case,
};
use caliblab::submanifold::catalog::{patch_by_id, AffinePatch};
use caliblab::submanifold::{
    fd_derivative, flow_first_variation, jet_of_f, minimality_terms, normal_projector, volume,
    BoxDomain, DistanceExtension, Euclidean, Patch, QuadratureRule, TrigVectorField,
};
use caliblab::variation::{
    analytic_first_variation, calibrated_torus, family_for_case, fd_first_variation,
    first_variation_integral, random_generator, theorem_a_experiment, theorem_b_experiment,
    theorem_rule, Tolerances, TrigScalarField, UmBackground,
};

use common::{
    calibrated_planes, gaussian, non_calibrated_planes, random_form, random_sym, theorem_cases,
};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn criterion_1() -> Result<Outcome> {
    let started = Instant::now();
    let mut families = 0;
    let mut worst = 0;
    for case in [Case::Associative, Case::Cayley] {
        let report = contraction_identity_check(&standard_kit(case)?)?;
        families += report.families.len();
        worst = worst.max(report.max_violation());
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(Outcome::new(
        families == 8 && worst == 0 && secs < 1.0,
        format!("{families} families, max violation {worst}, {secs:.3} s"),
    ))
}

fn criterion_2() -> Result<Outcome> {
    let kit = standard_kit(Case::Associative)?;
    let mut r = rng(2);
    let (mut assoc, mut coassoc): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let v: Vec<Vector> = (0..4).map(|_| gaussian(7, &mut r)).collect();
        assoc = assoc.max(assoc_equality_residual(&kit, &v[0], &v[1], &v[2])?.abs());
    }
    for _ in 0..10_000 {
        let v: Vec<Vector> = (0..4).map(|_| gaussian(7, &mut r)).collect();
        coassoc = coassoc.max(coassoc_equality_residual(&kit, &v[0], &v[1], &v[2], &v[3])?.abs());
    }
    Ok(Outcome::new(
        assoc < 1e-10 && coassoc < 1e-10,
        format!("associative max residual {assoc:.2e}, coassociative {coassoc:.2e}"),
    ))
}

fn criterion_3() -> Result<Outcome> {
    let g2 = standard_kit(Case::Associative)?;
    let sp7 = standard_kit(Case::Cayley)?;
    let mut r = rng(3);
    let mut round: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut free: f64 = 0.0;
    for _ in 0..1000 {
        // η → parts → η, and (h, X) → η → (h, X)
        let eta = random_form(7, 3, &mut r);
        let s = g2_split_3form(&eta, &g2)?;
        round = round.max((&(&s.eta_1_27 + &s.eta_7) - &eta).max_abs());
        round = round.max((&g2_3form_from(&s.h, &s.x, &g2)? - &eta).max_abs());
        trace = trace.max((2.0 * s.hat.trace() - 18.0 * s.h.trace()).abs());
        let (h, x) = (random_sym(7, &mut r), gaussian(7, &mut r));
        let back = g2_split_3form(&g2_3form_from(&h, &x, &g2)?, &g2)?;
        round = round
            .max((back.h.matrix() - h.matrix()).amax())
            .max((back.x - &x).amax());

        let rho = random_form(7, 4, &mut r);
        let s = g2_split_4form(&rho, &g2)?;
        round = round.max((&(&s.rho_1_27 + &s.rho_7) - &rho).max_abs());
        round = round.max((&g2_4form_from(&s.h, &s.x, &g2)? - &rho).max_abs());
        trace = trace.max((2.0 * s.hat.trace() - 96.0 * s.h.trace()).abs());
        let back = g2_split_4form(&g2_4form_from(&h, &x, &g2)?, &g2)?;
        round = round
            .max((back.h.matrix() - h.matrix()).amax())
            .max((back.x - &x).amax());

        let sigma = random_form(8, 4, &mut r);
        let s = sp7_split_4form(&sigma, &sp7)?;
        round = round
            .max((&sp7_4form_from(&s.h, &s.beta, Some(&s.sigma_27), &sp7)? - &sigma).max_abs());
        trace = trace.max((2.0 * s.hat.trace() - 168.0 * s.h.trace()).abs());
        free = free.max(s.h0.trace().abs());
        // Ω⁴_27 carries no 1, 7 or 35 content
        let s27 = sp7_split_4form(&s.sigma_27, &sp7)?;
        round = round.max(s27.h.matrix().amax()).max(s27.beta.amax());
        let h8 = random_sym(8, &mut r);
        let back = sp7_split_4form(&sp7_4form_from(&h8, &s.beta, None, &sp7)?, &sp7)?;
        round = round
            .max((back.h.matrix() - h8.matrix()).amax())
            .max((&back.beta - &s.beta).amax());
        round = round.max(back.sigma_27.max_abs());
    }
    let tol = 1e-12;
    Ok(Outcome::new(
        round < tol && trace < tol && free < tol,
        format!("round trip {round:.2e}, trace relations {trace:.2e}, Tr h⁰ {free:.2e}"),
    ))
}

fn criterion_4() -> Result<Outcome> {
    let started = Instant::now();
    let kit = standard_kit(Case::Associative)?;
    let phi = kit.phi()?.clone();
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let eta = random_form(7, 3, &mut r);
        let h = g2_metric_velocity_3form(&eta, &kit)?;
        let mut fd = DMatrix::zeros(7, 7);
        for i in 0..7 {
            for j in i..7 {
                let est = fd_derivative(
                    |t| {
                        let mut f = phi.clone();
                        f.axpy(t, &eta);
                        Ok(metric_from_3form(&f)?.0.get(i, j))
                    },
                    0.0,
                    1e-4,
                    2,
                )?;
                fd[(i, j)] = est.value;
                fd[(j, i)] = est.value;
            }
        }
        worst = worst.max((&fd - h.matrix()).norm() / h.matrix().norm());
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(Outcome::new(
        worst < 1e-5 && secs < 10.0,
        format!("max relative error {worst:.2e}, {secs:.2} s"),
    ))
}

/// U(2), k = 1 on its torus with the conformal background e^{2f} ω₀.
fn um_background(patch: &dyn Patch) -> UmBackground {
    let axes: Vec<usize> = (0..patch.k()).collect();
    UmBackground::Conformal(TrigScalarField::axis_waves(patch.n(), &axes, 0.05))
}

fn criterion_5() -> Result<Outcome> {
    let tol = Tolerances::default();
    let mut parts = Vec::new();
    let mut passed = true;
    let cases = [
        Case::AlmostComplex { m: 2, k: 1 },
        Case::Associative,
        Case::Coassociative,
        Case::Cayley,
    ];
    for (c, case) in cases.into_iter().enumerate() {
        let patch = calibrated_torus(case)?;
        let rule = theorem_rule(patch.as_ref(), 8)?;
        let background = um_background(patch.as_ref());
        let mut r = rng(50 + c as u64);
        let (mut fv, mut err): (f64, f64) = (0.0, 0.0);
        for _ in 0..20 {
            let generator = random_generator(case, patch.as_ref(), 2, &mut r)?;
            let family = family_for_case(case, Arc::new(generator), background.clone(), false)?;
            let v = theorem_a_experiment(patch.as_ref(), &family, &rule, tol)?;
            fv = fv.max(v.analytic_first_variation.abs());
            err = err.max(v.integrand_max_error);
            passed &= v.passed();
        }
        passed &= fv < 1e-6 && err < 1e-8;
        parts.push(format!(
            "{}: |FV| {fv:.1e}, integrand {err:.1e}",
            case.tag()
        ));
    }
    Ok(Outcome::new(passed, parts.join("; ")))
}

fn plane_patch(e: &[Vector]) -> Result<AffinePatch> {
    let n = e[0].len();
    AffinePatch::new(
        "plane",
        Vector::zeros(n),
        e.to_vec(),
        BoxDomain::unit(e.len()),
    )
}

fn criterion_6() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut passed = true;
    let rule = QuadratureRule::new(2, 1)?;
    let tol = Tolerances::default();
    for (c, case) in theorem_cases().into_iter().enumerate() {
        let kit = standard_kit(case)?;
        let mut r = rng(60 + c as u64);
        let cal = calibrated_planes(&kit, 3, &mut r);
        let non = non_calibrated_planes(&kit, 3, 6, &mut r);
        let mut cal_max: f64 = 0.0;
        let mut non_min = f64::INFINITY;
        let mut chain: f64 = 0.0;
        for (planes, calibrated) in [(&cal, true), (&non, false)] {
            for e in planes.iter() {
                let b = theorem_b_experiment(&kit, &plane_patch(e)?, &rule, tol)?;
                let d = plane_defect(&kit, e)?;
                chain = chain.max(b.chain_max_error);
                passed &= b.passed();
                if calibrated {
                    cal_max = cal_max.max(d).max(b.defect_integral.abs());
                } else {
                    non_min = non_min.min(d).min(b.defect_integral);
                }
            }
        }
        passed &=
            cal.len() >= 6 && non.len() >= 6 && cal_max < 1e-10 && non_min > 1e-3 && chain < 1e-8;
        parts.push(format!(
            "{}: {} calibrated (max {cal_max:.1e}), {} not (min {non_min:.2e}), chain {chain:.1e}",
            case.tag(),
            cal.len(),
            non.len()
        ));
    }
    Ok(Outcome::new(passed, parts.join("; ")))
}

fn criterion_7() -> Result<Outcome> {
    let kit = standard_kit(Case::Cayley)?;
    let tol = Tolerances::default();
    let mut r = rng(7);
    let mut patches: Vec<Arc<dyn Patch>> = vec![patch_by_id("t4-in-r8")?];
    for e in calibrated_planes(&kit, 3, &mut r).into_iter().rev().take(3) {
        patches.push(Arc::new(plane_patch(&e)?));
    }
    let (mut anomaly, mut projected, mut star): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for p in &patches {
        let rule = QuadratureRule::new(if p.domain().is_closed() { 4 } else { 2 }, 1)?;
        let b = theorem_b_experiment(&kit, p.as_ref(), &rule, tol)?;
        anomaly = anomaly.max(b.anomaly_max_error.unwrap_or(f64::INFINITY));
        projected = projected.max(b.projected_anomaly_max.unwrap_or(f64::INFINITY));
        star = star.max(b.star_restriction_max.unwrap_or(f64::INFINITY));
    }
    Ok(Outcome::new(
        anomaly < 1e-8 && projected < 1e-8 && star < 1e-10,
        format!(
            "anomaly vs (2/7)|V∧W|² {anomaly:.1e}, projected {projected:.1e}, ⋆dγ̇|_M {star:.1e}"
        ),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut passed = true;
    let rule = QuadratureRule::new(6, 1)?;
    let routes: [(Case, Arc<dyn Patch>, bool); 3] = [
        (
            Case::AlmostComplex { m: 2, k: 1 },
            patch_by_id("graph-trig-r4")?,
            false,
        ),
        (
            Case::AlmostComplex { m: 2, k: 1 },
            patch_by_id("graph-trig-r4")?,
            true,
        ),
        (
            Case::Associative,
            Arc::new(AffinePatch::torus(7, &[0, 1, 3])?),
            false,
        ),
    ];
    for (i, (case, patch, conformal)) in routes.into_iter().enumerate() {
        let background = if conformal {
            um_background(patch.as_ref())
        } else {
            UmBackground::Flat
        };
        let mut r = rng(80 + i as u64);
        let mut worst: f64 = 0.0;
        let mut largest: f64 = 0.0;
        for _ in 0..20 {
            let generator = random_generator(case, patch.as_ref(), 2, &mut r)?;
            let family = family_for_case(case, Arc::new(generator), background.clone(), false)?;
            let an = analytic_first_variation(patch.as_ref(), &family, &rule)?;
            let fd = fd_first_variation(patch.as_ref(), &family, &rule, 1e-4, 2)?;
            worst = worst.max(rel(fd.value, an));
            largest = largest.max(an.abs());
        }
        passed &= worst < 1e-6;
        let label = if conformal { "conformal" } else { "flat" };
        parts.push(format!(
            "{} {label} on {}: {worst:.1e} (|FV| up to {largest:.2})",
            case.tag(),
            patch.id()
        ));
    }
    // ḡ_t = e^t ḡ scales the k-volume by e^{kt/2}
    let mut scaling: f64 = 0.0;
    for id in [
        "circle",
        "sphere",
        "torus",
        "graph-quadratic-r3",
        "t3-in-r7",
    ] {
        let patch = patch_by_id(id)?;
        let n = patch.n();
        let rule = theorem_rule(patch.as_ref(), 8)?;
        let vol = volume(patch.as_ref(), &Euclidean(n), &rule)?;
        let dv = fd_derivative(
            |t| {
                let metric = move |_: &Vector| Ok(SymTensor2::identity(n).scaled(t.exp()));
                volume(patch.as_ref(), &metric, &rule)
            },
            0.0,
            1e-4,
            2,
        )?;
        scaling = scaling.max(rel(dv.value, 0.5 * patch.k() as f64 * vol));
    }
    passed &= scaling < 1e-8;
    parts.push(format!("scaling {scaling:.1e}"));
    Ok(Outcome::new(passed, parts.join("; ")))
}

fn criterion_9() -> Result<Outcome> {
    let mut grad: f64 = 0.0;
    let mut hess: f64 = 0.0;
    let mut exact: f64 = 0.0;
    let mut samples = 0;
    for id in [
        "circle",
        "sphere",
        "torus",
        "graph-quadratic-r3",
        "graph-trig-r4",
    ] {
        let patch = patch_by_id(id)?;
        let ext = DistanceExtension::new(patch.as_ref());
        for x in patch.domain().grid(3) {
            let jet = jet_of_f(patch.as_ref(), &x)?;
            let p = normal_projector(patch.as_ref(), &x)?;
            // the jet's Hessian must be an orthogonal projector killing the tangents
            let t = patch.tangents(&x);
            let mut e = (&p * &p - &p)
                .amax()
                .max((p.trace() - (patch.n() - patch.k()) as f64).abs());
            for v in &t {
                e = e.max((&p * v).amax());
            }
            exact = exact
                .max(e)
                .max(jet.gradient.amax())
                .max((jet.hessian.matrix() - &p).amax());
            let (g, h) = ext.numeric_jet(&jet.point, 2e-4)?;
            grad = grad.max(g.norm());
            hess = hess.max((h.matrix() - &p).norm());
            samples += 1;
        }
    }
    Ok(Outcome::new(
        grad < 1e-6 && hess < 1e-6 && exact < 1e-12,
        format!("{samples} samples: |∇F| {grad:.1e}, ‖∇²F − P⊥‖ {hess:.1e}, jet path {exact:.1e}"),
    ))
}

fn criterion_10() -> Result<Outcome> {
    let mut r = rng(10);
    let kits = smith::smith_kits()?;
    let rule4 = QuadratureRule::new(4, 1)?;
    let (mut chain, mut invariance): (f64, f64) = (0.0, 0.0);
    for i in 0..1000 {
        let kit = kits[i % kits.len()].clone();
        let k = kit.calibrated_dim();
        let triple = MapTriple::flat(
            Arc::new(smith::random_polynomial_map(kit.n(), k, &mut r)?),
            kit,
        )?;
        let c = smith::smith_chain(&triple, &rule4)?;
        let scale = c.energy.abs().max(1.0);
        let violation = (c.volume - c.energy)
            .max(c.calibration - c.volume)
            .max(c.energy_volume_violation);
        chain = chain.max(violation.max(c.volume_calibration_violation) / scale);
        let shift = 0.2 * (i % 7) as f64 - 0.6;
        let lambda = move |x: &[f64]| (shift * x.iter().sum::<f64>() + 0.1 * x[0] * x[0]).exp();
        let scaled = triple.with_domain_metric(Arc::new(ConformalDomain {
            base: triple.domain_metric.clone(),
            lambda: Arc::new(lambda),
        }));
        invariance = invariance.max((smith::k_energy(&scaled, &rule4)? - c.energy).abs() / scale);
    }
    // catalog: zero domain variation and target = image on conformal maps
    let rule = QuadratureRule::new(8, 1)?;
    let (mut domain, mut target): (f64, f64) = (0.0, 0.0);
    let mut conformal_maps = 0;
    for id in smith::map_ids() {
        let triple = smith::map_by_id(id)?;
        if smith::conformality_residual(&triple, &rule)? > 1e-8 {
            continue;
        }
        conformal_maps += 1;
        let n = triple.kit.n();
        for _ in 0..3 {
            if triple.k() >= 2 {
                let h = ConstantTensor(smith::random_symmetric(triple.k(), &mut r));
                domain = domain.max(
                    smith::energy_first_variation_domain(&triple, &h as &dyn DomainMetric, &rule)?
                        .abs(),
                );
            }
            let hbar = ConstantTensor(smith::random_symmetric(n, &mut r));
            let tv = smith::energy_first_variation_target(&triple, &hbar, &rule)?;
            let image = first_variation_integral(triple.map.as_ref(), &Euclidean(n), &hbar, &rule)?;
            target = target.max(rel(tv, image));
        }
    }
    Ok(Outcome::new(
        chain < 1e-12 && invariance < 1e-10 && domain < 1e-8 && target < 1e-6 && conformal_maps >= 4,
        format!(
            "chain violation {chain:.1e}, invariance {invariance:.1e}; {conformal_maps} conformal maps: domain {domain:.1e}, target−image {target:.1e}"
        ),
    ))
}

fn criterion_11() -> Result<Outcome> {
    let mut r = rng(11);
    let mut curved: f64 = 0.0;
    for id in ["sphere", "torus", "graph-quadratic-r3"] {
        let patch = patch_by_id(id)?;
        let rule = theorem_rule(patch.as_ref(), 8)?;
        for _ in 0..2 {
            let x = TrigVectorField::random(patch.n(), 3, 0.5, &mut r);
            let fd = flow_first_variation(patch.as_ref(), &x, &rule, 1e-3, 2)?;
            let terms = minimality_terms(patch.as_ref(), &x, &rule)?;
            curved = curved.max(rel(fd.value, terms.first_variation()));
        }
    }
    let mut flat: f64 = 0.0;
    let tori = [patch_by_id("t2-in-r4")?, patch_by_id("t3-in-r7")?];
    for i in 0..20 {
        let patch = &tori[usize::from(i % 4 == 3)];
        let rule = theorem_rule(patch.as_ref(), 8)?;
        let x = TrigVectorField::random(patch.n(), 3, 0.5, &mut r);
        flat = flat.max(
            flow_first_variation(patch.as_ref(), &x, &rule, 1e-3, 2)?
                .value
                .abs(),
        );
    }
    Ok(Outcome::new(
        curved < 1e-6 && flat < 1e-8,
        format!("flow vs ∫(div X^T − ⟨X^⊥,H⟩) {curved:.1e}; flat tori max |FV| {flat:.1e}"),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("exact identity suite", criterion_1),
        ("associative and coassociative equalities", criterion_2),
        ("decomposition lemmas", criterion_3),
        ("linearization oracle", criterion_4),
        ("Theorem A on calibrated tori", criterion_5),
        ("Theorem B plane catalog", criterion_6),
        ("Cayley anomaly", criterion_7),
        ("first-variation formula", criterion_8),
        ("distance-function jet", criterion_9),
        ("Smith suite", criterion_10),
        ("minimality comparison", criterion_11),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "{verdict} criterion {} ({name}): {} [{:.2} s]",
            i + 1,
            outcome.detail,
            t.elapsed().as_secs_f64()
        );
    }
    let total = started.elapsed().as_secs_f64();
    let within = total < 120.0;
    println!(
        "{} total runtime {total:.1} s (target 120 s)",
        if within { "PASS" } else { "FAIL" }
    );
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 || !within {
        std::process::exit(1);
    }
}
