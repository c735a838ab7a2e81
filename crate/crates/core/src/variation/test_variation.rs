//! The Theorem B test variations, evaluated along the patch from the 2-jet of F.
//!
//! Along M the gradient of F vanishes and its Hessian is the normal projector
//! P⊥, so every term linear in ∇F drops and only P⊥ survives.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{unit, KForm, Vector};
use crate::structure::{Case, StructureKit};
use crate::submanifold::{jet_of_f, Patch};
use crate::variation::two_form_from_matrix;

/// Relative tolerance for "V is tangent".
pub const TOL_FRAME: f64 = 1e-8;

/// Tangent fields feeding a test variation. U(m) uses none, the associative
/// case uses V, the coassociative and Cayley cases use V and W.
#[derive(Debug, Clone, PartialEq)]
pub struct Selectors {
    pub v: Option<Vector>,
    pub w: Option<Vector>,
}

impl Selectors {
    pub fn none() -> Self {
        Self { v: None, w: None }
    }

    pub fn v(v: Vector) -> Self {
        Self {
            v: Some(v),
            w: None,
        }
    }

    pub fn vw(v: Vector, w: Vector) -> Self {
        Self {
            v: Some(v),
            w: Some(w),
        }
    }
}

fn need<'a>(x: &'a Option<Vector>, what: &str) -> Result<&'a Vector> {
    x.as_ref()
        .ok_or_else(|| Error::Config(format!("test variation needs tangent field {what}")))
}

fn check_tangent(pperp: &DMatrix<f64>, v: &Vector) -> Result<()> {
    let residual = (pperp * v).norm();
    if residual > TOL_FRAME * v.norm().max(1.0) {
        return Err(Error::NotTangent { residual });
    }
    Ok(())
}

fn covector(v: &Vector) -> KForm {
    KForm::covector(v).expect("nonempty vector")
}

/// d of the test generator along M, given P⊥ at the point:
/// U(m): dα̇_ij = J^p_j H_ip − J^p_i H_jp;
/// associative: Σ e_i ∧ V ∧ (V × P⊥e_i);
/// coassociative: Σ e_i ∧ V ∧ W ∧ χ(V, W, P⊥e_i); Cayley the same with P.
pub fn test_derivative(kit: &StructureKit, pperp: &DMatrix<f64>, sel: &Selectors) -> Result<KForm> {
    let n = kit.n();
    if pperp.nrows() != n || pperp.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pperp.nrows(),
        });
    }
    match kit.case() {
        Case::AlmostComplex { .. } => {
            let hj = pperp * kit.j()?;
            two_form_from_matrix(&(&hj - hj.transpose()))
        }
        Case::Associative => {
            let v = need(&sel.v, "V")?;
            check_tangent(pperp, v)?;
            let mut out = KForm::zero(n, 3)?;
            let cv = covector(v);
            for i in 0..n {
                let col = pperp.column(i).into_owned();
                if col.norm() == 0.0 {
                    continue;
                }
                let x = kit.cross(v, &col)?;
                out += &covector(&unit(n, i)).wedge(&cv)?.wedge(&covector(&x))?;
            }
            Ok(out)
        }
        Case::Coassociative | Case::Cayley => {
            let v = need(&sel.v, "V")?;
            let w = need(&sel.w, "W")?;
            check_tangent(pperp, v)?;
            check_tangent(pperp, w)?;
            let mut out = KForm::zero(n, 4)?;
            let vw = covector(v).wedge(&covector(w))?;
            for i in 0..n {
                let col = pperp.column(i).into_owned();
                if col.norm() == 0.0 {
                    continue;
                }
                let x = if kit.case() == Case::Cayley {
                    kit.cayley_cross(v, w, &col)?
                } else {
                    kit.chi(v, w, &col)?
                };
                out += &covector(&unit(n, i)).wedge(&vw)?.wedge(&covector(&x))?;
            }
            Ok(out)
        }
    }
}

/// The test variation's exterior derivative at parameter point x of the patch.
pub fn test_variation(
    kit: &StructureKit,
    patch: &dyn Patch,
    x: &[f64],
    sel: &Selectors,
) -> Result<KForm> {
    if patch.n() != kit.n() {
        return Err(Error::DimensionMismatch {
            expected: kit.n(),
            found: patch.n(),
        });
    }
    let jet = jet_of_f(patch, x)?;
    test_derivative(kit, jet.hessian.matrix(), sel)
}

/// The proof's closed-form value of Tr_g h for the test variation, given an
/// orthonormal tangent frame e:
/// −Σ|(Je_a)^⊥|², −Σ|(V×e_a)^⊥|², +Σ|χ(V,W,e_a)^⊥|², +½Σ|P(V,W,e_a)^⊥|².
pub fn closed_form_trace(
    kit: &StructureKit,
    e: &[Vector],
    pperp: &DMatrix<f64>,
    sel: &Selectors,
) -> Result<f64> {
    let perp_sq = |x: &Vector| (pperp * x).norm_squared();
    let mut total = 0.0;
    match kit.case() {
        Case::AlmostComplex { .. } => {
            for a in e {
                total -= perp_sq(&kit.apply_j(a)?);
            }
        }
        Case::Associative => {
            let v = need(&sel.v, "V")?;
            for a in e {
                total -= perp_sq(&kit.cross(v, a)?);
            }
        }
        Case::Coassociative => {
            let (v, w) = (need(&sel.v, "V")?, need(&sel.w, "W")?);
            for a in e {
                total += perp_sq(&kit.chi(v, w, a)?);
            }
        }
        Case::Cayley => {
            let (v, w) = (need(&sel.v, "V")?, need(&sel.w, "W")?);
            for a in e {
                total += 0.5 * perp_sq(&kit.cayley_cross(v, w, a)?);
            }
        }
    }
    Ok(total)
}

/// The canonical choices of V (and W) from an orthonormal tangent frame, as in
/// the closing argument of each proof: none, V = e_b, or (V, W) = (e_b, e_c) with b < c.
pub fn canonical_selectors(case: Case, e: &[Vector]) -> Vec<Selectors> {
    match case {
        Case::AlmostComplex { .. } => vec![Selectors::none()],
        Case::Associative => e.iter().map(|v| Selectors::v(v.clone())).collect(),
        Case::Coassociative | Case::Cayley => {
            let mut out = Vec::new();
            for b in 0..e.len() {
                for c in b + 1..e.len() {
                    out.push(Selectors::vw(e[b].clone(), e[c].clone()));
                }
            }
            out
        }
    }
}

/// Ratio defect / Σ(first variation) for the canonical selectors: the defect is
/// the sum of the closed-form squares, the first variation ½ ∫ Tr_g h.
pub fn defect_to_first_variation_ratio(case: Case) -> f64 {
    match case {
        Case::AlmostComplex { .. } | Case::Associative => -2.0,
        Case::Coassociative => 2.0,
        Case::Cayley => 4.0,
    }
}
