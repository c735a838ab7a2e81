//! Standard inputs for the theorem experiments: calibrated tori, random
//! generators and quadrature rules.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exterior::Vector;
use crate::structure::Case;
use crate::submanifold::catalog::{patch_by_id, AffinePatch};
use crate::submanifold::{Patch, QuadratureRule};
use crate::variation::fields::TrigFormField;

/// Degree of the generator form: α̇, β̇, γ̇ for U(m), associative, coassociative and Cayley.
pub fn generator_degree(case: Case) -> usize {
    match case {
        Case::AlmostComplex { .. } => 1,
        Case::Associative => 2,
        Case::Coassociative | Case::Cayley => 3,
    }
}

/// The flat calibrated torus of each case: the first 2k coordinates for U(m),
/// e123, e4567 and e1234 otherwise.
pub fn calibrated_torus(case: Case) -> Result<Arc<dyn Patch>> {
    case.validate()?;
    match case {
        Case::AlmostComplex { m, k } => {
            let id = format!("t{}-in-r{}", 2 * k, 2 * m);
            match patch_by_id(&id) {
                Ok(p) => Ok(p),
                Err(_) => {
                    let axes: Vec<usize> = (0..2 * k).collect();
                    Ok(Arc::new(AffinePatch::torus(2 * m, &axes)?.with_id(id)))
                }
            }
        }
        Case::Associative => patch_by_id("t3-in-r7"),
        Case::Coassociative => patch_by_id("t4-coassoc-in-r7"),
        Case::Cayley => patch_by_id("t4-in-r8"),
    }
}

/// Resolve a patch id, with "auto" meaning the calibrated torus of the case.
pub fn resolve_patch(case: Case, id: &str) -> Result<Arc<dyn Patch>> {
    let p = if id == "auto" {
        calibrated_torus(case)?
    } else {
        patch_by_id(id)?
    };
    if p.n() != case.ambient_dim() || p.k() != case.calibrated_dim() {
        return Err(Error::Config(format!(
            "patch {id:?} is {}-dimensional in R^{}, case {case} needs {} in R^{}",
            p.k(),
            p.n(),
            case.calibrated_dim(),
            case.ambient_dim()
        )));
    }
    Ok(p)
}

/// Gauss–Legendre rule of the given order; closed patches get two cells per axis.
pub fn theorem_rule(patch: &dyn Patch, order: usize) -> Result<QuadratureRule> {
    QuadratureRule::new(order, if patch.domain().is_closed() { 2 } else { 1 })
}

/// Random trigonometric generator for Theorem A on `patch`. For Cayley, wave
/// vectors normal to the patch are redrawn, which keeps the Cayley condition
/// ∫ (⋆dγ̇)|_M = 0 on flat calibrated tori.
pub fn random_generator<R: Rng + ?Sized>(
    case: Case,
    patch: &dyn Patch,
    modes: usize,
    rng: &mut R,
) -> Result<TrigFormField> {
    let n = case.ambient_dim();
    let deg = generator_degree(case);
    if case != Case::Cayley {
        return TrigFormField::random(n, deg, modes, rng, &|_| true);
    }
    let x = patch.domain().grid(1).remove(0);
    let pperp = crate::submanifold::normal_projector(patch, &x)?;
    let accept = move |w: &Vector| {
        let normal = (&pperp * w).norm();
        let tangential = (w - &pperp * w).norm();
        tangential > 1e-12 || normal <= 1e-12
    };
    TrigFormField::random(n, deg, modes, rng, &accept)
}
