//! Metric variations induced by the structure forms, the Theorem B test
//! variations, and the Theorem A/B experiments in all four cases.

pub mod family;
pub mod fields;
pub mod suite;
pub mod test_variation;
pub mod theorem;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::KForm;

pub use family::{
    assoc_family_from_beta, cayley_family_from_gamma, coassoc_family_from_gamma, family_for_case,
    um_family_from_alpha, Restricted, UmBackground, VariationFamily,
};
pub use fields::{FormField, TrigFormField, TrigMode, TrigScalarField};
pub use suite::{
    calibrated_torus, generator_degree, random_generator, resolve_patch, theorem_rule,
};
pub use test_variation::{
    canonical_selectors, closed_form_trace, test_derivative, test_variation, Selectors,
};
pub use theorem::{
    analytic_first_variation, fd_first_variation, first_variation_integral, theorem_a_experiment,
    theorem_b_defect, theorem_b_experiment, Claim, TheoremBReport, TheoremVerdict, Tolerances,
};

/// A_ij = a(e_i, e_j) for a 2-form a.
pub fn two_form_matrix(a: &KForm) -> Result<DMatrix<f64>> {
    if a.degree() != 2 {
        return Err(Error::InvalidDegree {
            degree: a.degree(),
            n: a.n(),
        });
    }
    let n = a.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let c = a.component(&[i, j]);
            m[(i, j)] = c;
            m[(j, i)] = -c;
        }
    }
    Ok(m)
}

/// The 2-form with a(e_i, e_j) = A_ij, using the skew part of A.
pub fn two_form_from_matrix(m: &DMatrix<f64>) -> Result<KForm> {
    let n = m.nrows();
    let mut coeffs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in i + 1..n {
            coeffs.push(0.5 * (m[(i, j)] - m[(j, i)]));
        }
    }
    KForm::from_coeffs(n, 2, coeffs)
}
