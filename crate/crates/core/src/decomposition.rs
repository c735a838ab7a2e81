//! Type decompositions of 3- and 4-forms for G2 and Spin(7) structures and
//! the linearized metric maps h(η), h(ρ), h(σ).
//!
//! All maps assume the kit's (Euclidean) metric and work with lowered indices.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{KForm, SymTensor2, Vector};
use crate::structure::{g2_phi, StructureKit};

/// ½ Σ A_ij e_i ∧ (e_j ⌟ form) for an arbitrary (not necessarily symmetric) A.
pub fn build_from_tensor(a: &DMatrix<f64>, form: &KForm) -> Result<KForm> {
    let n = form.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    let mut out = KForm::zero(n, form.degree())?;
    for j in 0..n {
        let col = a.column(j);
        if col.iter().all(|&x| x == 0.0) {
            continue;
        }
        let inner = form.interior_basis(j)?;
        let covec = KForm::covector(&Vector::from_iterator(n, col.iter().copied()))?;
        out.axpy(0.5, &covec.wedge(&inner)?);
    }
    Ok(out)
}

fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2ThreeFormSplit {
    pub eta_1_27: KForm,
    pub eta_7: KForm,
    pub h: SymTensor2,
    pub x: Vector,
    /// η̂_pq = η_pij φ_qij.
    pub hat: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2FourFormSplit {
    pub rho_1_27: KForm,
    pub rho_7: KForm,
    pub h: SymTensor2,
    pub x: Vector,
    /// ρ̂_pq = ρ_pijk ψ_qijk.
    pub hat: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sp7FourFormSplit {
    pub sigma_1: KForm,
    pub sigma_35: KForm,
    pub sigma_7: KForm,
    pub sigma_27: KForm,
    pub h: SymTensor2,
    pub h0: SymTensor2,
    /// Skew 2-tensor of type Ω²_7.
    pub beta: DMatrix<f64>,
    /// σ̂_pq = σ_pijk Φ_qijk.
    pub hat: DMatrix<f64>,
}

impl Sp7FourFormSplit {
    pub fn sigma_1_35(&self) -> KForm {
        &self.sigma_1 + &self.sigma_35
    }
}

fn check_form(form: &KForm, n: usize, k: usize) -> Result<()> {
    if form.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: form.n(),
        });
    }
    if form.degree() != k {
        return Err(Error::InvalidDegree {
            degree: form.degree(),
            n,
        });
    }
    Ok(())
}

/// η = ½ h_ij e_i ∧ (e_j ⌟ φ) + ½ X ⌟ ψ.
pub fn g2_3form_from(h: &SymTensor2, x: &Vector, kit: &StructureKit) -> Result<KForm> {
    let mut out = build_from_tensor(h.matrix(), kit.phi()?)?;
    out.axpy(0.5, &kit.psi()?.interior(x)?);
    Ok(out)
}

/// ρ = ½ h_ij e_i ∧ (e_j ⌟ ψ) + ½ X ∧ φ.
pub fn g2_4form_from(h: &SymTensor2, x: &Vector, kit: &StructureKit) -> Result<KForm> {
    let mut out = build_from_tensor(h.matrix(), kit.psi()?)?;
    out.axpy(0.5, &KForm::covector(x)?.wedge(kit.phi()?)?);
    Ok(out)
}

/// σ = ½ A_ij e_i ∧ (e_j ⌟ Φ) + σ_27 with A = h + β.
pub fn sp7_4form_from(
    h: &SymTensor2,
    beta: &DMatrix<f64>,
    sigma_27: Option<&KForm>,
    kit: &StructureKit,
) -> Result<KForm> {
    let a = h.matrix() + beta;
    let mut out = build_from_tensor(&a, kit.spin7()?)?;
    if let Some(s) = sigma_27 {
        out += s;
    }
    Ok(out)
}

pub fn g2_split_3form(eta: &KForm, kit: &StructureKit) -> Result<G2ThreeFormSplit> {
    check_form(eta, 7, 3)?;
    let phi = kit.phi()?;
    let psi = kit.psi()?;
    let hat = eta.hat_contraction(phi)?;
    let h = SymTensor2::from_matrix_unchecked(
        sym_part(&hat) * 0.5 - DMatrix::identity(7, 7) * (hat.trace() / 18.0),
    );
    let eta_1_27 = build_from_tensor(h.matrix(), phi)?;
    let residual = eta - &eta_1_27;
    // X_q = (1/12) r_ijk ψ_qijk
    let x = Vector::from_fn(7, |q, _| {
        0.5 * psi
            .interior_basis(q)
            .and_then(|f| f.dot(&residual))
            .unwrap_or(0.0)
    });
    let eta_7 = psi.interior(&x)?.scale(0.5);
    Ok(G2ThreeFormSplit {
        eta_1_27,
        eta_7,
        h,
        x,
        hat,
    })
}

/// h(η) only, skipping the Ω³_7 part.
pub fn g2_metric_velocity_3form(eta: &KForm, kit: &StructureKit) -> Result<SymTensor2> {
    check_form(eta, 7, 3)?;
    let hat = eta.hat_contraction(kit.phi()?)?;
    Ok(SymTensor2::from_matrix_unchecked(
        sym_part(&hat) * 0.5 - DMatrix::identity(7, 7) * (hat.trace() / 18.0),
    ))
}

pub fn g2_split_4form(rho: &KForm, kit: &StructureKit) -> Result<G2FourFormSplit> {
    check_form(rho, 7, 4)?;
    let phi = kit.phi()?;
    let psi = kit.psi()?;
    let hat = rho.hat_contraction(psi)?;
    let h = SymTensor2::from_matrix_unchecked(
        sym_part(&hat) / 6.0 - DMatrix::identity(7, 7) * (hat.trace() / 48.0),
    );
    let rho_1_27 = build_from_tensor(h.matrix(), psi)?;
    let residual = rho - &rho_1_27;
    // X_i = (1/12) r_ijkl φ_jkl
    let x = Vector::from_fn(7, |i, _| {
        0.5 * residual
            .interior_basis(i)
            .and_then(|f| f.dot(phi))
            .unwrap_or(0.0)
    });
    let rho_7 = KForm::covector(&x)?.wedge(phi)?.scale(0.5);
    Ok(G2FourFormSplit {
        rho_1_27,
        rho_7,
        h,
        x,
        hat,
    })
}

pub fn g2_metric_velocity_4form(rho: &KForm, kit: &StructureKit) -> Result<SymTensor2> {
    check_form(rho, 7, 4)?;
    let hat = rho.hat_contraction(kit.psi()?)?;
    Ok(SymTensor2::from_matrix_unchecked(
        sym_part(&hat) / 6.0 - DMatrix::identity(7, 7) * (hat.trace() / 48.0),
    ))
}

fn sp7_h(hat: &DMatrix<f64>) -> SymTensor2 {
    SymTensor2::from_matrix_unchecked(
        sym_part(hat) / 12.0 - DMatrix::identity(8, 8) * (hat.trace() / 112.0),
    )
}

fn sp7_h0(hat: &DMatrix<f64>) -> SymTensor2 {
    SymTensor2::from_matrix_unchecked(
        sym_part(hat) / 12.0 - DMatrix::identity(8, 8) * (hat.trace() / 96.0),
    )
}

pub fn sp7_split_4form(sigma: &KForm, kit: &StructureKit) -> Result<Sp7FourFormSplit> {
    check_form(sigma, 8, 4)?;
    let big_phi = kit.spin7()?;
    let hat = sigma.hat_contraction(big_phi)?;
    let h = sp7_h(&hat);
    let h0 = sp7_h0(&hat);
    let beta = (&hat - hat.transpose()) / 96.0;
    let sigma_1 = big_phi.scale(h.trace() / 4.0);
    let sigma_35 = build_from_tensor(h0.matrix(), big_phi)?;
    let sigma_7 = build_from_tensor(&beta, big_phi)?;
    let mut sigma_27 = sigma.clone();
    sigma_27 -= &sigma_1;
    sigma_27 -= &sigma_35;
    sigma_27 -= &sigma_7;
    Ok(Sp7FourFormSplit {
        sigma_1,
        sigma_35,
        sigma_7,
        sigma_27,
        h,
        h0,
        beta,
        hat,
    })
}

/// h(σ) with the Ω⁴_1 part kept.
pub fn sp7_metric_velocity(sigma: &KForm, kit: &StructureKit) -> Result<SymTensor2> {
    check_form(sigma, 8, 4)?;
    Ok(sp7_h(&sigma.hat_contraction(kit.spin7()?)?))
}

/// h⁰(σ), which equals h(π_{35+7} σ).
pub fn sp7_metric_velocity_trace_free(sigma: &KForm, kit: &StructureKit) -> Result<SymTensor2> {
    check_form(sigma, 8, 4)?;
    Ok(sp7_h0(&sigma.hat_contraction(kit.spin7()?)?))
}

/// σ ↦ σ_35 + σ_7.
pub fn project_35_7(sigma: &KForm, kit: &StructureKit) -> Result<KForm> {
    let split = sp7_split_4form(sigma, kit)?;
    Ok(&split.sigma_35 + &split.sigma_7)
}

fn standard_b_scale() -> f64 {
    static SCALE: OnceLock<f64> = OnceLock::new();
    *SCALE.get_or_init(|| raw_b(&g2_phi()).expect("standard φ")[(0, 0)])
}

/// B_ij = coefficient of e_{1…7} in (e_i ⌟ φ) ∧ (e_j ⌟ φ) ∧ φ.
fn raw_b(phi: &KForm) -> Result<DMatrix<f64>> {
    let contracted: Vec<KForm> = (0..7)
        .map(|i| phi.interior_basis(i))
        .collect::<Result<_>>()?;
    let mut b = DMatrix::zeros(7, 7);
    for i in 0..7 {
        for j in i..7 {
            let top = contracted[i].wedge(&contracted[j])?.wedge(phi)?;
            b[(i, j)] = top.coeffs()[0];
            b[(j, i)] = top.coeffs()[0];
        }
    }
    Ok(b)
}

/// The metric determined by a G2 3-form, normalized so the standard φ gives
/// the identity, together with the volume scale √det g.
pub fn metric_from_3form(phi_t: &KForm) -> Result<(SymTensor2, f64)> {
    check_form(phi_t, 7, 3)?;
    let b = raw_b(phi_t)? / standard_b_scale();
    let det = b.determinant();
    if !(det > 0.0) {
        return Err(Error::Degenerate(format!(
            "det B = {det:e} is not positive"
        )));
    }
    if b.clone().cholesky().is_none() {
        return Err(Error::Degenerate("B is not positive definite".into()));
    }
    let scale = det.powf(1.0 / 9.0);
    Ok((SymTensor2::from_matrix_unchecked(b / scale), scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{standard_kit, Case};

    #[test]
    fn standard_anchor() {
        let (g, s) = metric_from_3form(&g2_phi()).unwrap();
        assert_eq!(g, SymTensor2::identity(7));
        assert_eq!(s, 1.0);
        assert_eq!(standard_b_scale().abs(), 6.0);
    }

    #[test]
    fn sp7_of_spin7_form() {
        let kit = standard_kit(Case::Cayley).unwrap();
        let split = sp7_split_4form(kit.spin7().unwrap(), &kit).unwrap();
        assert!((split.h.matrix() - DMatrix::<f64>::identity(8, 8) * 0.5).norm() < 1e-14);
        assert!(split.h0.matrix().norm() < 1e-14);
        assert!(split.sigma_27.max_abs() < 1e-14);
    }
}
