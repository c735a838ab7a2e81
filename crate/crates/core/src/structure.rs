//! Standard U(m), G2 and Spin(7) structure data, cross products and the
//! exact contraction identities.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{gram_schmidt_adapt, unit, KForm, Orientation, SymTensor2, Vector};

/// Default tolerance for calibration predicates.
pub const TOL_CALIB: f64 = 1e-8;

pub const G2_PHI: &str = "e123 + e145 - e167 + e246 - e275 + e347 - e356";
pub const G2_PSI: &str = "e4567 - e2345 + e2367 - e3146 + e3175 - e1247 + e1256";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// U(m) on R^{2m}, calibrating complex k-dimensional submanifolds with ω^k/k!.
    AlmostComplex {
        m: usize,
        k: usize,
    },
    Associative,
    Coassociative,
    Cayley,
}

impl Case {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Case::AlmostComplex { m, .. } => 2 * m,
            Case::Associative | Case::Coassociative => 7,
            Case::Cayley => 8,
        }
    }

    /// Real dimension of calibrated submanifolds.
    pub fn calibrated_dim(&self) -> usize {
        match self {
            Case::AlmostComplex { k, .. } => 2 * k,
            Case::Associative => 3,
            Case::Coassociative | Case::Cayley => 4,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Case::AlmostComplex { .. } => "um",
            Case::Associative => "associative",
            Case::Coassociative => "coassociative",
            Case::Cayley => "cayley",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Case::AlmostComplex { m, k } = *self {
            if m < 1 || 2 * m > crate::exterior::MAX_DIM {
                return Err(Error::InvalidStructure(format!(
                    "U(m) needs 1 ≤ m ≤ 4, got m = {m}"
                )));
            }
            if k < 1 || k >= m {
                return Err(Error::InvalidStructure(format!(
                    "U({m}) needs 1 ≤ k < m, got k = {k}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::AlmostComplex { m, k } => write!(f, "um(m={m},k={k})"),
            other => write!(f, "{}", other.tag()),
        }
    }
}

impl FromStr for Case {
    type Err = Error;

    /// Accepts "associative", "coassociative", "cayley"; U(m) needs m and k,
    /// so "um" parses to U(2) with k = 1 and can be adjusted afterwards.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "um" | "u(m)" | "almost-complex" => Ok(Case::AlmostComplex { m: 2, k: 1 }),
            "associative" | "assoc" => Ok(Case::Associative),
            "coassociative" | "coassoc" => Ok(Case::Coassociative),
            "cayley" | "spin7" => Ok(Case::Cayley),
            other => Err(Error::Config(format!("unknown case {other:?}"))),
        }
    }
}

/// Standard U(m) Kähler form Σ e_{2a−1} ∧ e_{2a}.
pub fn kahler_form(m: usize) -> Result<KForm> {
    let n = 2 * m;
    let mut w = KForm::zero(n, 2)?;
    for a in 0..m {
        w += &KForm::basis(n, &[2 * a, 2 * a + 1])?;
    }
    Ok(w)
}

/// J with ω(X, Y) = ⟨JX, Y⟩, so J e1 = e2.
pub fn complex_structure(m: usize) -> DMatrix<f64> {
    let n = 2 * m;
    let mut j = DMatrix::zeros(n, n);
    for a in 0..m {
        j[(2 * a + 1, 2 * a)] = 1.0;
        j[(2 * a, 2 * a + 1)] = -1.0;
    }
    j
}

pub fn g2_phi() -> KForm {
    KForm::parse(7, G2_PHI).expect("static form")
}

pub fn g2_psi() -> KForm {
    KForm::parse(7, G2_PSI).expect("static form")
}

pub fn spin7_form() -> KForm {
    let p = |s: &str| KForm::parse(8, s).expect("static form");
    let w = |a: &KForm, b: &KForm| a.wedge(b).expect("degree 4");
    let mut f = p("e1234");
    f += &w(&p("e12 - e34"), &p("e56 - e78"));
    f += &w(&p("e13 - e42"), &p("e57 - e86"));
    f += &w(&p("e14 - e23"), &p("e58 - e67"));
    f += &p("e5678");
    f
}

/// ω^k / k!; the constant 1 for k = 0.
pub fn kahler_power(omega: &KForm, k: usize) -> Result<KForm> {
    if k == 0 {
        return KForm::scalar(omega.n(), 1.0);
    }
    let mut acc = omega.clone();
    for j in 2..=k {
        acc = acc.wedge(omega)?.scale(1.0 / j as f64);
    }
    Ok(acc)
}

/// Structure data for one calibration case.
#[derive(Debug, Clone)]
pub struct StructureKit {
    case: Case,
    metric: SymTensor2,
    orientation: Orientation,
    omega: Option<KForm>,
    j: Option<DMatrix<f64>>,
    phi: Option<KForm>,
    psi: Option<KForm>,
    spin7: Option<KForm>,
    mu: KForm,
}

/// Standard-frame structure data with the Euclidean metric.
pub fn standard_kit(case: Case) -> Result<StructureKit> {
    case.validate()?;
    let n = case.ambient_dim();
    let mut kit = StructureKit {
        case,
        metric: SymTensor2::identity(n),
        orientation: Orientation::Positive,
        omega: None,
        j: None,
        phi: None,
        psi: None,
        spin7: None,
        mu: KForm::zero(n, 0)?,
    };
    match case {
        Case::AlmostComplex { m, k } => {
            let omega = kahler_form(m)?;
            kit.mu = kahler_power(&omega, k)?;
            kit.omega = Some(omega);
            kit.j = Some(complex_structure(m));
        }
        Case::Associative | Case::Coassociative => {
            let phi = g2_phi();
            let psi = g2_psi();
            kit.mu = if case == Case::Associative {
                phi.clone()
            } else {
                psi.clone()
            };
            kit.phi = Some(phi);
            kit.psi = Some(psi);
        }
        Case::Cayley => {
            let f = spin7_form();
            kit.mu = f.clone();
            kit.spin7 = Some(f);
        }
    }
    Ok(kit)
}

impl StructureKit {
    pub fn case(&self) -> Case {
        self.case
    }

    pub fn n(&self) -> usize {
        self.case.ambient_dim()
    }

    pub fn metric(&self) -> &SymTensor2 {
        &self.metric
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The calibration form μ.
    pub fn calibration(&self) -> &KForm {
        &self.mu
    }

    pub fn calibrated_dim(&self) -> usize {
        self.case.calibrated_dim()
    }

    pub fn omega(&self) -> Result<&KForm> {
        self.omega
            .as_ref()
            .ok_or(Error::WrongCase { expected: "U(m)" })
    }

    pub fn j(&self) -> Result<&DMatrix<f64>> {
        self.j.as_ref().ok_or(Error::WrongCase { expected: "U(m)" })
    }

    pub fn phi(&self) -> Result<&KForm> {
        self.phi.as_ref().ok_or(Error::WrongCase { expected: "G2" })
    }

    pub fn psi(&self) -> Result<&KForm> {
        self.psi.as_ref().ok_or(Error::WrongCase { expected: "G2" })
    }

    pub fn spin7(&self) -> Result<&KForm> {
        self.spin7.as_ref().ok_or(Error::WrongCase {
            expected: "Spin(7)",
        })
    }

    /// Same case with the orientation reversed: μ changes sign.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.orientation = self.orientation.reversed();
        out.mu = self.mu.scale(-1.0);
        out
    }

    fn raise(&self, covector: &KForm) -> Result<Vector> {
        let v = Vector::from_column_slice(covector.coeffs());
        let ch = self
            .metric
            .matrix()
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(ch.solve(&v))
    }

    fn contract_into(&self, form: &KForm, args: &[&Vector]) -> Result<Vector> {
        let mut f = form.clone();
        for v in args {
            if v.len() != self.n() {
                return Err(Error::DimensionMismatch {
                    expected: self.n(),
                    found: v.len(),
                });
            }
            f = f.interior(v)?;
        }
        self.raise(&f)
    }

    /// X × Y with φ(X, Y, Z) = ⟨X × Y, Z⟩.
    pub fn cross(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.contract_into(self.phi()?, &[x, y])
    }

    /// χ(X, Y, Z) with ψ(X, Y, Z, W) = ⟨χ(X, Y, Z), W⟩.
    pub fn chi(&self, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
        self.contract_into(self.psi()?, &[x, y, z])
    }

    /// P(X, Y, Z) with Φ(X, Y, Z, W) = ⟨P(X, Y, Z), W⟩.
    pub fn cayley_cross(&self, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
        self.contract_into(self.spin7()?, &[x, y, z])
    }

    pub fn apply_j(&self, x: &Vector) -> Result<Vector> {
        Ok(self.j()? * x)
    }
}

pub fn cross_2fold(kit: &StructureKit, x: &Vector, y: &Vector) -> Result<Vector> {
    kit.cross(x, y)
}

pub fn chi_3fold(kit: &StructureKit, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
    kit.chi(x, y, z)
}

pub fn cayley_cross(kit: &StructureKit, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
    kit.cayley_cross(x, y, z)
}

/// |χ(X,Y,Z)|² + φ(X,Y,Z)² − |X∧Y∧Z|².
pub fn assoc_equality_residual(
    kit: &StructureKit,
    x: &Vector,
    y: &Vector,
    z: &Vector,
) -> Result<f64> {
    let chi = kit.chi(x, y, z)?;
    let phi = kit.phi()?.evaluate(&[x.clone(), y.clone(), z.clone()])?;
    let vol = crate::exterior::wedge_norm_sq(&[x.clone(), y.clone(), z.clone()], kit.metric());
    Ok(kit.metric().bilinear(&chi, &chi) + phi * phi - vol)
}

/// ψ(X,Y,Z,W)² + |A(X,Y,Z,W)|² − |X∧Y∧Z∧W|², A as in [`coassociator`].
pub fn coassoc_equality_residual(
    kit: &StructureKit,
    x: &Vector,
    y: &Vector,
    z: &Vector,
    w: &Vector,
) -> Result<f64> {
    let vs = [x.clone(), y.clone(), z.clone(), w.clone()];
    let psi = kit.psi()?.evaluate(&vs)?;
    let a = coassociator(kit, x, y, z, w)?;
    let vol = crate::exterior::wedge_norm_sq(&vs, kit.metric());
    Ok(psi * psi + kit.metric().bilinear(&a, &a) - vol)
}

/// φ(Y,Z,W) X − φ(X,Z,W) Y + φ(X,Y,W) Z − φ(X,Y,Z) W.
pub fn coassociator(
    kit: &StructureKit,
    x: &Vector,
    y: &Vector,
    z: &Vector,
    w: &Vector,
) -> Result<Vector> {
    let phi = kit.phi()?;
    let ev = |a: &Vector, b: &Vector, c: &Vector| phi.evaluate(&[a.clone(), b.clone(), c.clone()]);
    Ok(x * ev(y, z, w)? - y * ev(x, z, w)? + z * ev(x, y, w)? - w * ev(x, y, z)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Orthonormalized tangent frame, oriented as the input basis.
    pub tangent: Vec<Vec<f64>>,
    pub value: f64,
    pub defect: f64,
    pub is_calibrated: bool,
}

pub fn calibration_report(
    kit: &StructureKit,
    tangent_basis: &[Vector],
) -> Result<CalibrationReport> {
    calibration_report_with_tol(kit, tangent_basis, TOL_CALIB)
}

pub fn calibration_report_with_tol(
    kit: &StructureKit,
    tangent_basis: &[Vector],
    tol: f64,
) -> Result<CalibrationReport> {
    let k = kit.calibrated_dim();
    if tangent_basis.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: tangent_basis.len(),
        });
    }
    let frame = gram_schmidt_adapt(tangent_basis, kit.metric())?;
    let e = frame.tangent();
    let value = kit.calibration().evaluate(e)?;
    let defect = plane_defect(kit, e)?;
    Ok(CalibrationReport {
        tangent: e.iter().map(|v| v.iter().copied().collect()).collect(),
        value,
        defect,
        is_calibrated: defect < tol,
    })
}

/// Invariance defect of the plane spanned by an orthonormal tangent frame.
pub fn plane_defect(kit: &StructureKit, e: &[Vector]) -> Result<f64> {
    let g = kit.metric();
    let perp_sq = |v: &Vector| -> f64 {
        let mut w = v.clone();
        for t in e {
            let c = g.bilinear(&w, t);
            w.axpy(-c, t, 1.0);
        }
        g.bilinear(&w, &w)
    };
    let k = e.len();
    let mut total = 0.0;
    match kit.case() {
        Case::AlmostComplex { .. } => {
            for a in e {
                total += perp_sq(&kit.apply_j(a)?);
            }
        }
        Case::Associative => {
            for a in 0..k {
                for b in a + 1..k {
                    total += perp_sq(&kit.cross(&e[a], &e[b])?);
                }
            }
        }
        Case::Coassociative | Case::Cayley => {
            for a in 0..k {
                for b in a + 1..k {
                    for c in b + 1..k {
                        let v = if kit.case() == Case::Cayley {
                            kit.cayley_cross(&e[a], &e[b], &e[c])?
                        } else {
                            kit.chi(&e[a], &e[b], &e[c])?
                        };
                        total += perp_sq(&v);
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Largest |μ| found over random oriented calibrated-dimension planes,
/// refined by projected gradient ascent from the best sample.
pub fn comass_sample(kit: &StructureKit, trials: usize, seed: u64) -> Result<f64> {
    comass_sample_with(kit, trials, seed, &[])
}

pub fn comass_sample_with(
    kit: &StructureKit,
    trials: usize,
    seed: u64,
    extra_planes: &[Vec<Vector>],
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config(
            "comass_sample needs at least one trial".into(),
        ));
    }
    let n = kit.n();
    let k = kit.calibrated_dim();
    let mu = kit.calibration();
    let g = kit.metric();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orthonormal = |vs: &[Vector]| -> Result<Vec<Vector>> {
        Ok(gram_schmidt_adapt(vs, g)?.tangent().to_vec())
    };

    let mut best_val = f64::NEG_INFINITY;
    let mut best_frame: Vec<Vector> = Vec::new();
    let consider =
        |frame: Vec<Vector>, best_val: &mut f64, best_frame: &mut Vec<Vector>| -> Result<()> {
            let v = mu.evaluate(&frame)?.abs();
            if v > *best_val {
                *best_val = v;
                *best_frame = frame;
            }
            Ok(())
        };
    for plane in extra_planes {
        consider(orthonormal(plane)?, &mut best_val, &mut best_frame)?;
    }
    for _ in 0..trials {
        let vs: Vec<Vector> = (0..k)
            .map(|_| Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        match orthonormal(&vs) {
            Ok(frame) => consider(frame, &mut best_val, &mut best_frame)?,
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }

    // projected gradient ascent on the Stiefel manifold
    let mut frame = best_frame;
    let mut step = 0.25;
    for _ in 0..40 {
        let sign = mu.evaluate(&frame)?.signum();
        let mut moved = frame.clone();
        for a in 0..k {
            let grad = Vector::from_fn(n, |i, _| {
                let mut args = frame.clone();
                args[a] = unit(n, i);
                mu.evaluate(&args).unwrap_or(0.0)
            });
            moved[a].axpy(sign * step, &grad, 1.0);
        }
        let candidate = orthonormal(&moved)?;
        let v = mu.evaluate(&candidate)?.abs();
        if v > best_val {
            best_val = v;
            frame = candidate;
        } else {
            step *= 0.5;
        }
    }
    Ok(best_val)
}

/// Full integer tensor of a structure form, entries in {−1, 0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntTensor {
    n: usize,
    rank: usize,
    data: Vec<i64>,
}

impl IntTensor {
    pub fn from_form(form: &KForm) -> Result<Self> {
        let n = form.n();
        let rank = form.degree();
        let mut data = vec![0i64; n.pow(rank as u32)];
        for (flat, slot) in data.iter_mut().enumerate() {
            let axes = unflatten(flat, n, rank);
            let c = form.component(&axes);
            if c.fract() != 0.0 {
                return Err(Error::InvalidStructure(format!(
                    "structure constant {c} at {axes:?} is not an integer"
                )));
            }
            *slot = c as i64;
        }
        Ok(Self { n, rank, data })
    }

    #[inline]
    pub fn at(&self, idx: &[usize]) -> i64 {
        let mut flat = 0;
        for &i in idx {
            flat = flat * self.n + i;
        }
        self.data[flat]
    }

    /// Flip one entry. Used only to exercise the failure path of the checks.
    pub fn corrupt(&mut self) {
        let target = self.data.iter().position(|&x| x != 0).unwrap_or(0);
        self.data[target] = -self.data[target] + 1;
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

fn unflatten(mut flat: usize, n: usize, rank: usize) -> Vec<usize> {
    let mut axes = vec![0; rank];
    for slot in (0..rank).rev() {
        axes[slot] = flat % n;
        flat /= n;
    }
    axes
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityFamily {
    pub name: String,
    pub statement: String,
    pub tuples_checked: usize,
    pub max_violation: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub families: Vec<IdentityFamily>,
}

impl IdentityReport {
    pub fn max_violation(&self) -> i64 {
        self.families
            .iter()
            .map(|f| f.max_violation)
            .max()
            .unwrap_or(0)
    }

    pub fn all_hold(&self) -> bool {
        self.max_violation() == 0
    }
}

#[inline]
fn delta(i: usize, j: usize) -> i64 {
    (i == j) as i64
}

fn check_family(
    name: &str,
    statement: &str,
    n: usize,
    free: usize,
    f: impl Fn(&[usize]) -> i64,
) -> IdentityFamily {
    let mut max_violation = 0;
    let count = n.pow(free as u32);
    for flat in 0..count {
        let idx = unflatten(flat, n, free);
        max_violation = max_violation.max(f(&idx).abs());
    }
    IdentityFamily {
        name: name.into(),
        statement: statement.into(),
        tuples_checked: count,
        max_violation,
    }
}

/// The six G2 contraction identities in exact integer arithmetic.
pub fn g2_identities(phi: &IntTensor, psi: &IntTensor) -> Vec<IdentityFamily> {
    let n = phi.n;
    let sum2 = |f: &dyn Fn(usize, usize) -> i64| -> i64 {
        let mut s = 0;
        for p in 0..n {
            for q in 0..n {
                s += f(p, q);
            }
        }
        s
    };
    vec![
        check_family(
            "g2-phi-phi-4",
            "phi_ijp phi_klp = g_ik g_jl - g_il g_jk - psi_ijkl",
            n,
            4,
            |x| {
                let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
                let lhs: i64 = (0..n)
                    .map(|p| phi.at(&[i, j, p]) * phi.at(&[k, l, p]))
                    .sum();
                lhs - (delta(i, k) * delta(j, l)
                    - delta(i, l) * delta(j, k)
                    - psi.at(&[i, j, k, l]))
            },
        ),
        check_family("g2-phi-phi-2", "phi_ipq phi_jpq = 6 g_ij", n, 2, |x| {
            let (i, j) = (x[0], x[1]);
            sum2(&|p, q| phi.at(&[i, p, q]) * phi.at(&[j, p, q])) - 6 * delta(i, j)
        }),
        check_family("g2-phi-psi-3", "phi_ipq psi_jkpq = -4 phi_ijk", n, 3, |x| {
            let (i, j, k) = (x[0], x[1], x[2]);
            sum2(&|p, q| phi.at(&[i, p, q]) * psi.at(&[j, k, p, q])) + 4 * phi.at(&[i, j, k])
        }),
        check_family("g2-phi-psi-1", "phi_mpq psi_jmpq = 0", n, 1, |x| {
            let j = x[0];
            (0..n)
                .map(|m| sum2(&|p, q| phi.at(&[m, p, q]) * psi.at(&[j, m, p, q])))
                .sum()
        }),
        check_family(
            "g2-psi-psi-4",
            "psi_ijpq psi_klpq = 4 g_ik g_jl - 4 g_il g_jk - 2 psi_ijkl",
            n,
            4,
            |x| {
                let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
                sum2(&|p, q| psi.at(&[i, j, p, q]) * psi.at(&[k, l, p, q]))
                    - (4 * delta(i, k) * delta(j, l)
                        - 4 * delta(i, l) * delta(j, k)
                        - 2 * psi.at(&[i, j, k, l]))
            },
        ),
        check_family("g2-psi-psi-2", "psi_impq psi_jmpq = 24 g_ij", n, 2, |x| {
            let (i, j) = (x[0], x[1]);
            let s: i64 = (0..n)
                .map(|m| sum2(&|p, q| psi.at(&[i, m, p, q]) * psi.at(&[j, m, p, q])))
                .sum();
            s - 24 * delta(i, j)
        }),
    ]
}

/// The two Spin(7) contraction identities in exact integer arithmetic.
pub fn spin7_identities(big_phi: &IntTensor) -> Vec<IdentityFamily> {
    let n = big_phi.n;
    let f = big_phi;
    vec![
        check_family(
            "spin7-4",
            "Phi_ijpq Phi_klpq = 6 g_ik g_jl - 6 g_il g_jk - 4 Phi_ijkl",
            n,
            4,
            |x| {
                let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
                let mut s = 0;
                for p in 0..n {
                    for q in 0..n {
                        s += f.at(&[i, j, p, q]) * f.at(&[k, l, p, q]);
                    }
                }
                s - (6 * delta(i, k) * delta(j, l)
                    - 6 * delta(i, l) * delta(j, k)
                    - 4 * f.at(&[i, j, k, l]))
            },
        ),
        check_family("spin7-2", "Phi_impq Phi_jmpq = 42 g_ij", n, 2, |x| {
            let (i, j) = (x[0], x[1]);
            let mut s = 0;
            for m in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        s += f.at(&[i, m, p, q]) * f.at(&[j, m, p, q]);
                    }
                }
            }
            s - 42 * delta(i, j)
        }),
    ]
}

/// Exact identity check for a G2 or Spin(7) kit.
pub fn contraction_identity_check(kit: &StructureKit) -> Result<IdentityReport> {
    contraction_identity_check_impl(kit, false)
}

/// Same as `contraction_identity_check` but with one structure constant flipped first.
pub fn contraction_identity_check_corrupted(kit: &StructureKit) -> Result<IdentityReport> {
    contraction_identity_check_impl(kit, true)
}

fn contraction_identity_check_impl(kit: &StructureKit, corrupt: bool) -> Result<IdentityReport> {
    let families = match kit.case() {
        Case::Associative | Case::Coassociative => {
            let mut phi = IntTensor::from_form(kit.phi()?)?;
            let psi = IntTensor::from_form(kit.psi()?)?;
            if corrupt {
                phi.corrupt();
            }
            g2_identities(&phi, &psi)
        }
        Case::Cayley => {
            let mut f = IntTensor::from_form(kit.spin7()?)?;
            if corrupt {
                f.corrupt();
            }
            spin7_identities(&f)
        }
        Case::AlmostComplex { .. } => {
            return Err(Error::WrongCase {
                expected: "G2 or Spin(7)",
            })
        }
    };
    Ok(IdentityReport { families })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_literal_is_star_phi() {
        assert_eq!(g2_phi().hodge_star_euclidean(), g2_psi());
    }

    #[test]
    fn spin7_is_self_dual() {
        let f = spin7_form();
        assert_eq!(f.hodge_star_euclidean(), f);
        assert_eq!(f.terms().count(), 14);
    }

    #[test]
    fn j_matches_omega() {
        let kit = standard_kit(Case::AlmostComplex { m: 3, k: 2 }).unwrap();
        let j = kit.j().unwrap();
        let omega = kit.omega().unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let jx = j * unit(6, a);
                assert_eq!(omega.component(&[a, b]), jx[b]);
            }
        }
        assert_eq!(j * j, -DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn corrupted_tensor_fails() {
        let kit = standard_kit(Case::Cayley).unwrap();
        assert!(
            contraction_identity_check_corrupted(&kit)
                .unwrap()
                .max_violation()
                > 0
        );
    }
}
