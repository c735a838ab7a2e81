//! One-parameter families of ambient metrics induced by exact changes of the
//! structure forms.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::decomposition::{
    g2_metric_velocity_3form, g2_metric_velocity_4form, metric_from_3form, project_35_7,
    sp7_metric_velocity, sp7_metric_velocity_trace_free, sp7_split_4form,
};
use crate::error::{Error, Result};
use crate::exterior::{KForm, SymTensor2, Vector};
use crate::structure::{kahler_power, standard_kit, Case, StructureKit};
use crate::variation::fields::{FormField, TrigScalarField};
use crate::variation::{two_form_from_matrix, two_form_matrix};

/// Background U(m) structure: the flat one, or ω = e^{2f} ω₀, ḡ = e^{2f} I with
/// the standard J. The conformal one has dω = 2 e^{2f} df ∧ ω₀ ≠ 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum UmBackground {
    #[default]
    Flat,
    Conformal(TrigScalarField),
}

impl UmBackground {
    pub fn is_closed(&self) -> bool {
        matches!(self, UmBackground::Flat)
    }

    /// e^{2f(p)}.
    pub fn factor(&self, p: &Vector) -> f64 {
        match self {
            UmBackground::Flat => 1.0,
            UmBackground::Conformal(f) => (2.0 * f.value(p)).exp(),
        }
    }

    pub fn metric_at(&self, p: &Vector) -> SymTensor2 {
        SymTensor2::identity(p.len()).scaled(self.factor(p))
    }

    pub fn omega_at(&self, p: &Vector, omega0: &KForm) -> KForm {
        omega0.scale(self.factor(p))
    }

    pub fn d_omega_at(&self, p: &Vector, omega0: &KForm) -> Result<KForm> {
        match self {
            UmBackground::Flat => KForm::zero(p.len(), 3),
            UmBackground::Conformal(f) => {
                let df = KForm::covector(&f.gradient(p))?;
                Ok(df.wedge(omega0)?.scale(2.0 * self.factor(p)))
            }
        }
    }
}

/// A family ḡ_t with analytic velocity h along the patch and, where the
/// structure determines the metric nonlinearly, a black-box evaluator ḡ_t(p).
#[derive(Clone)]
pub struct VariationFamily {
    case: Case,
    kit: StructureKit,
    generator: Arc<dyn FormField>,
    background: UmBackground,
    keep_omega4_1: bool,
    // per derivative mode D_m: h(D_m) and the calibration-form velocity
    h_modes: Vec<SymTensor2>,
    mu_modes: Vec<KForm>,
    exact_modes: Vec<KForm>,
    star_modes: Vec<KForm>,
}

/// Restrictions to a tangent k-vector of the forms entering Theorem A.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Restricted {
    /// μ̇(t)
    pub mu_dot: f64,
    /// the exact velocity d(ξ)(t)
    pub exact: f64,
    /// (⋆dγ̇)(t), Cayley only
    pub star: f64,
    /// (α̇ ∧ dω ∧ ω^{k−2}/(k−2)!)(t), U(m) only
    pub lower_order: f64,
}

impl std::fmt::Debug for VariationFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariationFamily")
            .field("case", &self.case)
            .field("background", &self.background)
            .field("keep_omega4_1", &self.keep_omega4_1)
            .field("modes", &self.h_modes.len())
            .finish()
    }
}

fn check_generator(generator: &dyn FormField, n: usize, degree: usize) -> Result<()> {
    if generator.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: generator.n(),
        });
    }
    if generator.degree() != degree {
        return Err(Error::InvalidDegree {
            degree: generator.degree(),
            n,
        });
    }
    Ok(())
}

/// h(X, Y) = ½(A(X, JY) + A(Y, JX)) for the 2-form A; as matrices sym(A J).
pub fn um_velocity(d_alpha: &KForm, j: &DMatrix<f64>) -> Result<SymTensor2> {
    let a = two_form_matrix(d_alpha)?;
    SymTensor2::from_matrix(a * j)
}

/// The J-invariant part ½(A + JᵀAJ) of a 2-form.
pub fn um_part_11(d_alpha: &KForm, j: &DMatrix<f64>) -> Result<KForm> {
    let a = two_form_matrix(d_alpha)?;
    two_form_from_matrix(&((&a + j.transpose() * &a * j) * 0.5))
}

impl VariationFamily {
    fn build(
        case: Case,
        generator: Arc<dyn FormField>,
        background: UmBackground,
        keep_omega4_1: bool,
    ) -> Result<Self> {
        let kit = standard_kit(case)?;
        let mut fam = Self {
            case,
            kit,
            generator,
            background,
            keep_omega4_1,
            h_modes: Vec::new(),
            mu_modes: Vec::new(),
            exact_modes: Vec::new(),
            star_modes: Vec::new(),
        };
        let basis: Vec<KForm> = fam.generator.derivative_basis().to_vec();
        for d in &basis {
            fam.h_modes.push(fam.velocity_of(d)?);
            fam.mu_modes.push(fam.structure_velocity_of(d)?);
            fam.exact_modes.push(match case {
                Case::AlmostComplex { k, .. } => {
                    d.wedge(&kahler_power(fam.kit.omega()?, k - 1)?)?
                }
                _ => d.clone(),
            });
            if case == Case::Cayley {
                fam.star_modes.push(d.hodge_star_euclidean());
            }
        }
        Ok(fam)
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn kit(&self) -> &StructureKit {
        &self.kit
    }

    pub fn generator(&self) -> &dyn FormField {
        self.generator.as_ref()
    }

    pub fn background(&self) -> &UmBackground {
        &self.background
    }

    pub fn keeps_omega4_1(&self) -> bool {
        self.keep_omega4_1
    }

    /// h as a linear function of the velocity form of the structure.
    pub fn velocity_of(&self, d: &KForm) -> Result<SymTensor2> {
        match self.case {
            Case::AlmostComplex { .. } => um_velocity(d, self.kit.j()?),
            Case::Associative => g2_metric_velocity_3form(d, &self.kit),
            Case::Coassociative => g2_metric_velocity_4form(d, &self.kit),
            // the Ω⁴_27 part of dγ̇ never reaches σ̂, so h(π_{1+35+7} dγ̇) = h(dγ̇)
            Case::Cayley if self.keep_omega4_1 => sp7_metric_velocity(d, &self.kit),
            Case::Cayley => sp7_metric_velocity_trace_free(d, &self.kit),
        }
    }

    /// Flat-background velocity of the calibration form for one derivative mode.
    fn structure_velocity_of(&self, d: &KForm) -> Result<KForm> {
        match self.case {
            Case::AlmostComplex { k, .. } => d.wedge(&kahler_power(self.kit.omega()?, k - 1)?),
            Case::Associative | Case::Coassociative => Ok(d.clone()),
            Case::Cayley if self.keep_omega4_1 => {
                let split = sp7_split_4form(d, &self.kit)?;
                Ok(d - &split.sigma_27)
            }
            Case::Cayley => project_35_7(d, &self.kit),
        }
    }

    /// ḡ at t = 0.
    pub fn background_metric_at(&self, p: &Vector) -> SymTensor2 {
        match self.case {
            Case::AlmostComplex { .. } => self.background.metric_at(p),
            _ => self.kit.metric().clone(),
        }
    }

    /// h(p) by linearity over the generator's derivative modes.
    pub fn h_at(&self, p: &Vector) -> SymTensor2 {
        let mut acc = DMatrix::zeros(self.kit.n(), self.kit.n());
        for (c, h) in self
            .generator
            .derivative_weights(p)
            .into_iter()
            .zip(&self.h_modes)
        {
            acc += h.matrix() * c;
        }
        SymTensor2::from_matrix_unchecked(acc)
    }

    /// h(p) computed from the assembled exterior derivative.
    pub fn h_direct(&self, p: &Vector) -> Result<SymTensor2> {
        self.velocity_of(&self.generator.exterior_derivative(p)?)
    }

    /// μ̇(p): dα̇ ∧ ω^{k−1}/(k−1)!, dβ̇, dγ̇, or π_{35+7} dγ̇ (π_{1+35+7} when Ω⁴_1 is kept).
    pub fn mu_dot_at(&self, p: &Vector) -> Result<KForm> {
        if let Case::AlmostComplex { k, .. } = self.case {
            if !self.background.is_closed() {
                let omega = self.background.omega_at(p, self.kit.omega()?);
                return self
                    .generator
                    .exterior_derivative(p)?
                    .wedge(&kahler_power(&omega, k - 1)?);
            }
        }
        let mut acc = KForm::zero(self.kit.n(), self.kit.calibrated_dim())?;
        for (c, m) in self
            .generator
            .derivative_weights(p)
            .into_iter()
            .zip(&self.mu_modes)
        {
            acc.axpy(c, m);
        }
        Ok(acc)
    }

    /// The exact form d(ξ) whose restriction integrates to zero on closed patches:
    /// d(α̇ ∧ ω^{k−1}/(k−1)!) for U(m), dβ̇ or dγ̇ otherwise.
    pub fn exact_velocity_at(&self, p: &Vector) -> Result<KForm> {
        match self.case {
            Case::AlmostComplex { k, .. } => {
                let omega0 = self.kit.omega()?;
                let omega = self.background.omega_at(p, omega0);
                let mut out = self
                    .generator
                    .exterior_derivative(p)?
                    .wedge(&kahler_power(&omega, k - 1)?)?;
                if k >= 2 && !self.background.is_closed() {
                    out -= &self.lower_order_term_at(p)?;
                }
                Ok(out)
            }
            _ => self.generator.exterior_derivative(p),
        }
    }

    /// α̇ ∧ dω ∧ ω^{k−2}/(k−2)! (U(m), k ≥ 2).
    pub fn lower_order_term_at(&self, p: &Vector) -> Result<KForm> {
        let Case::AlmostComplex { k, .. } = self.case else {
            return Err(Error::WrongCase {
                expected: "almost complex",
            });
        };
        if k < 2 {
            return KForm::zero(self.kit.n(), self.kit.calibrated_dim());
        }
        let omega0 = self.kit.omega()?;
        let omega = self.background.omega_at(p, omega0);
        self.generator
            .value(p)?
            .wedge(&self.background.d_omega_at(p, omega0)?)?
            .wedge(&kahler_power(&omega, k - 2)?)
    }

    /// All Theorem A restrictions at p against the tangent k-vector `tangent`
    /// (see [`crate::exterior::decomposable`]).
    pub fn restricted_at(&self, p: &Vector, tangent: &KForm) -> Result<Restricted> {
        if !self.background.is_closed() {
            return Ok(Restricted {
                mu_dot: self.mu_dot_at(p)?.dot(tangent)?,
                exact: self.exact_velocity_at(p)?.dot(tangent)?,
                star: 0.0,
                lower_order: self.lower_order_term_at(p)?.dot(tangent)?,
            });
        }
        let mut r = Restricted::default();
        let weights = self.generator.derivative_weights(p);
        for (m, c) in weights.iter().enumerate() {
            r.mu_dot += c * self.mu_modes[m].dot(tangent)?;
            r.exact += c * self.exact_modes[m].dot(tangent)?;
            if let Some(s) = self.star_modes.get(m) {
                r.star += c * s.dot(tangent)?;
            }
        }
        Ok(r)
    }

    /// Whether a nonlinear evaluator ḡ_t exists for this case.
    pub fn has_gbar(&self) -> bool {
        matches!(self.case, Case::AlmostComplex { .. } | Case::Associative)
    }

    /// ḡ_t(p). U(m): ḡ_t(X, Y) = ω_t(X, JY) with ω_t = ω + t (dα̇)^{(1,1)};
    /// associative: the metric of φ + t dβ̇.
    pub fn gbar_at(&self, p: &Vector, t: f64) -> Result<SymTensor2> {
        match self.case {
            Case::AlmostComplex { .. } => {
                let j = self.kit.j()?;
                let omega = self.background.omega_at(p, self.kit.omega()?);
                let mut omega_t = two_form_matrix(&omega)?;
                if t != 0.0 {
                    let a11 = um_part_11(&self.generator.exterior_derivative(p)?, j)?;
                    omega_t += two_form_matrix(&a11)? * t;
                }
                SymTensor2::from_matrix(omega_t * j)
            }
            Case::Associative => {
                let mut phi_t = self.kit.phi()?.clone();
                if t != 0.0 {
                    phi_t.axpy(t, &self.generator.exterior_derivative(p)?);
                }
                Ok(metric_from_3form(&phi_t)?.0)
            }
            _ => Err(Error::WrongCase {
                expected: "almost complex or associative",
            }),
        }
    }
}

/// U(m): ω_t = ω + t (dα̇)^{(1,1)} and ḡ_t = ω_t(·, J·).
pub fn um_family_from_alpha(
    alphadot: Arc<dyn FormField>,
    m: usize,
    k: usize,
    background: UmBackground,
) -> Result<VariationFamily> {
    let case = Case::AlmostComplex { m, k };
    case.validate()?;
    check_generator(alphadot.as_ref(), 2 * m, 1)?;
    VariationFamily::build(case, alphadot, background, false)
}

/// Associative: φ_t = φ + t dβ̇.
pub fn assoc_family_from_beta(betadot: Arc<dyn FormField>) -> Result<VariationFamily> {
    check_generator(betadot.as_ref(), 7, 2)?;
    VariationFamily::build(Case::Associative, betadot, UmBackground::Flat, false)
}

/// Coassociative: ψ_t = ψ + t dγ̇, linearized only.
pub fn coassoc_family_from_gamma(gammadot: Arc<dyn FormField>) -> Result<VariationFamily> {
    check_generator(gammadot.as_ref(), 7, 3)?;
    VariationFamily::build(Case::Coassociative, gammadot, UmBackground::Flat, false)
}

/// Cayley: Φ̇ = π_{35+7} dγ̇, or π_{1+35+7} dγ̇ when `keep_omega4_1` is set.
pub fn cayley_family_from_gamma(
    gammadot: Arc<dyn FormField>,
    keep_omega4_1: bool,
) -> Result<VariationFamily> {
    check_generator(gammadot.as_ref(), 8, 3)?;
    VariationFamily::build(Case::Cayley, gammadot, UmBackground::Flat, keep_omega4_1)
}

/// The family matching `case` for a generator of the right degree.
pub fn family_for_case(
    case: Case,
    generator: Arc<dyn FormField>,
    background: UmBackground,
    keep_omega4_1: bool,
) -> Result<VariationFamily> {
    match case {
        Case::AlmostComplex { m, k } => um_family_from_alpha(generator, m, k, background),
        Case::Associative => assoc_family_from_beta(generator),
        Case::Coassociative => coassoc_family_from_gamma(generator),
        Case::Cayley => cayley_family_from_gamma(generator, keep_omega4_1),
    }
}
