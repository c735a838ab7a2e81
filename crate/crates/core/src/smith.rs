//! k-energy, k-volume and calibration integral of maps, the comparison chain
//! between them, conformality and Smith-map residuals, and the first
//! variations of the energy in the domain and target metrics.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{decomposable, KForm, SymTensor2, Vector};
use crate::structure::{standard_kit, Case, StructureKit};
use crate::submanifold::catalog::{Profile, ProfileMap};
use crate::submanifold::{BoxDomain, Euclidean, MetricField, Patch, QuadratureRule};

/// Metric g on the parameter box of a map.
pub trait DomainMetric: Send + Sync {
    fn metric_at(&self, x: &[f64]) -> Result<SymTensor2>;
}

impl<F> DomainMetric for F
where
    F: Fn(&[f64]) -> Result<SymTensor2> + Send + Sync,
{
    fn metric_at(&self, x: &[f64]) -> Result<SymTensor2> {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatDomain(pub usize);

impl DomainMetric for FlatDomain {
    fn metric_at(&self, _x: &[f64]) -> Result<SymTensor2> {
        Ok(SymTensor2::identity(self.0))
    }
}

/// λ(x)² g for a positive function λ.
pub struct ConformalDomain {
    pub base: Arc<dyn DomainMetric>,
    pub lambda: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl DomainMetric for ConformalDomain {
    fn metric_at(&self, x: &[f64]) -> Result<SymTensor2> {
        let l = (self.lambda)(x);
        if !(l > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(self.base.metric_at(x)?.scaled(l * l))
    }
}

/// A map u from (box, g) into (R^n, ḡ, μ). ḡ defaults to the kit's Euclidean metric.
#[derive(Clone)]
pub struct MapTriple {
    pub map: Arc<dyn Patch>,
    pub domain_metric: Arc<dyn DomainMetric>,
    pub target_metric: Arc<dyn MetricField>,
    pub kit: StructureKit,
}

impl std::fmt::Debug for MapTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapTriple")
            .field("map", &self.map.id())
            .field("case", &self.kit.case())
            .finish()
    }
}

/// Pointwise data at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct MapJet {
    /// g
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// u*ḡ
    pub pullback: DMatrix<f64>,
    /// |du|² = Tr_g u*ḡ
    pub du_sq: f64,
    /// √det g
    pub vol_g: f64,
    pub tangents: Vec<Vector>,
}

impl MapTriple {
    pub fn new(
        map: Arc<dyn Patch>,
        domain_metric: Arc<dyn DomainMetric>,
        kit: StructureKit,
    ) -> Result<Self> {
        if map.n() != kit.n() {
            return Err(Error::DimensionMismatch {
                expected: kit.n(),
                found: map.n(),
            });
        }
        let n = kit.n();
        Ok(Self {
            map,
            domain_metric,
            target_metric: Arc::new(Euclidean(n)),
            kit,
        })
    }

    /// Flat domain metric.
    pub fn flat(map: Arc<dyn Patch>, kit: StructureKit) -> Result<Self> {
        let k = map.k();
        Self::new(map, Arc::new(FlatDomain(k)), kit)
    }

    pub fn with_domain_metric(&self, g: Arc<dyn DomainMetric>) -> Self {
        Self {
            domain_metric: g,
            ..self.clone()
        }
    }

    pub fn with_target_metric(&self, gbar: Arc<dyn MetricField>) -> Self {
        Self {
            target_metric: gbar,
            ..self.clone()
        }
    }

    pub fn k(&self) -> usize {
        self.map.k()
    }

    pub fn jet(&self, x: &[f64]) -> Result<MapJet> {
        let k = self.k();
        let g = self.domain_metric.metric_at(x)?;
        if g.n() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: g.n(),
            });
        }
        let ch = g
            .matrix()
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let vol_g = ch.l().diagonal().product();
        let g_inv = ch.inverse();
        let t = self.map.tangents(x);
        let gbar = self.target_metric.metric_at(&self.map.point(x))?;
        let pullback = DMatrix::from_fn(k, k, |a, b| gbar.bilinear(&t[a], &t[b]));
        let du_sq = (&g_inv * &pullback).trace();
        Ok(MapJet {
            g: g.matrix().clone(),
            g_inv,
            pullback,
            du_sq,
            vol_g,
            tangents: t,
        })
    }

    /// (1/√k^k) |du|^k vol_g, as a density in dx.
    pub fn energy_density(&self, x: &[f64]) -> Result<f64> {
        let j = self.jet(x)?;
        Ok(energy_integrand(self.k(), &j))
    }

    /// |∂₁u ∧ … ∧ ∂_k u|_ḡ, zero at non-immersion points.
    pub fn volume_density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(x)?.pullback.determinant().max(0.0).sqrt())
    }

    /// μ(∂₁u, …, ∂_k u).
    pub fn calibration_density(&self, x: &[f64]) -> Result<f64> {
        let mu = self.kit.calibration();
        if mu.degree() != self.k() {
            return Err(Error::InvalidDegree {
                degree: mu.degree(),
                n: self.k(),
            });
        }
        mu.dot(&decomposable(&self.map.tangents(x))?)
    }

    /// ‖u*ḡ − (1/k)|du|² g‖ in g-orthonormal coordinates.
    pub fn conformality_defect_at(&self, x: &[f64]) -> Result<f64> {
        let j = self.jet(x)?;
        let k = self.k() as f64;
        let d = &j.pullback - &j.g * (j.du_sq / k);
        // ‖A‖_g² = Tr(g⁻¹ A g⁻¹ A)
        let m = &j.g_inv * &d;
        Ok((&m * &m).trace().max(0.0).sqrt())
    }
}

fn energy_integrand(k: usize, j: &MapJet) -> f64 {
    let kf = k as f64;
    (j.du_sq / kf).max(0.0).powf(kf / 2.0) * j.vol_g
}

/// |du|^{k−2}, with the convention |du|^0 = 1.
fn du_pow_km2(k: usize, du_sq: f64) -> f64 {
    if k == 2 {
        1.0
    } else {
        du_sq.max(0.0).powf((k as f64 - 2.0) / 2.0)
    }
}

fn sqrt_k_pow_k(k: usize) -> f64 {
    (k as f64).powf(k as f64 / 2.0)
}

pub fn k_energy(triple: &MapTriple, rule: &QuadratureRule) -> Result<f64> {
    if triple.k() == 0 {
        return Err(Error::InvalidDegree {
            degree: 0,
            n: triple.kit.n(),
        });
    }
    rule.integrate(triple.map.domain(), |x| triple.energy_density(x))
}

pub fn k_volume(triple: &MapTriple, rule: &QuadratureRule) -> Result<f64> {
    rule.integrate(triple.map.domain(), |x| triple.volume_density(x))
}

pub fn calibration_integral(triple: &MapTriple, rule: &QuadratureRule) -> Result<f64> {
    rule.integrate(triple.map.domain(), |x| triple.calibration_density(x))
}

/// The three functionals plus pointwise inequality checks at the quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmithChain {
    pub energy: f64,
    pub volume: f64,
    pub calibration: f64,
    /// max over nodes of (vol − energy density)⁺
    pub energy_volume_violation: f64,
    /// max over nodes of (μ density − vol)⁺
    pub volume_calibration_violation: f64,
}

impl SmithChain {
    /// E ≥ V ≥ ∫u*μ up to `slack`, integrated and pointwise.
    pub fn holds(&self, slack: f64) -> bool {
        self.energy >= self.volume - slack
            && self.volume >= self.calibration - slack
            && self.energy_volume_violation <= slack
            && self.volume_calibration_violation <= slack
    }
}

pub fn smith_chain(triple: &MapTriple, rule: &QuadratureRule) -> Result<SmithChain> {
    let k = triple.k();
    let rows = rule.map_nodes(triple.map.domain(), |x, w| {
        let j = triple.jet(x)?;
        let e = energy_integrand(k, &j);
        let v = j.pullback.determinant().max(0.0).sqrt();
        let c = triple.calibration_density(x)?;
        Ok([w * e, w * v, w * c, v - e, c - v])
    })?;
    let mut out = SmithChain {
        energy: 0.0,
        volume: 0.0,
        calibration: 0.0,
        energy_volume_violation: 0.0,
        volume_calibration_violation: 0.0,
    };
    for r in rows {
        out.energy += r[0];
        out.volume += r[1];
        out.calibration += r[2];
        out.energy_volume_violation = out.energy_volume_violation.max(r[3]);
        out.volume_calibration_violation = out.volume_calibration_violation.max(r[4]);
    }
    Ok(out)
}

/// Sample points for residuals: quadrature nodes plus a fixed interior grid.
pub fn sample_points(domain: &BoxDomain, rule: &QuadratureRule) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = rule.nodes(domain).into_iter().map(|(x, _)| x).collect();
    let per_axis = 5;
    let mut grid = vec![vec![]];
    for a in 0..domain.dim() {
        let (lo, hi) = (domain.lower[a], domain.upper[a]);
        let mut next = Vec::new();
        for g in &grid {
            for i in 0..per_axis {
                let mut v: Vec<f64> = g.clone();
                v.push(lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64);
                next.push(v);
            }
        }
        grid = next;
    }
    pts.extend(grid);
    pts
}

/// sup over samples of ‖u*ḡ − (1/k)|du|² g‖_g.
pub fn conformality_residual(triple: &MapTriple, rule: &QuadratureRule) -> Result<f64> {
    let mut r: f64 = 0.0;
    for x in sample_points(triple.map.domain(), rule) {
        r = r.max(triple.conformality_defect_at(&x)?);
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmithResidual {
    pub conformality: f64,
    /// sup |u*μ − (1/√k^k)|du|^k vol_g|
    pub calibration: f64,
}

impl SmithResidual {
    pub fn is_smith(&self, tol: f64) -> bool {
        self.conformality <= tol && self.calibration <= tol
    }
}

pub fn smith_residual(triple: &MapTriple, rule: &QuadratureRule) -> Result<SmithResidual> {
    let mut out = SmithResidual {
        conformality: 0.0,
        calibration: 0.0,
    };
    for x in sample_points(triple.map.domain(), rule) {
        out.conformality = out.conformality.max(triple.conformality_defect_at(&x)?);
        let gap = triple.calibration_density(&x)? - triple.energy_density(&x)?;
        out.calibration = out.calibration.max(gap.abs());
    }
    Ok(out)
}

/// d/dt E(u, g + t h, ḡ) at t = 0:
/// (1/(2√k^k)) ∫ ⟨h, −k|du|^{k−2} u*ḡ + |du|^k g⟩_g vol_g.
pub fn energy_first_variation_domain(
    triple: &MapTriple,
    h: &dyn DomainMetric,
    rule: &QuadratureRule,
) -> Result<f64> {
    let k = triple.k();
    if k < 2 {
        return Err(Error::Config(
            "domain variation of the energy needs k ≥ 2".into(),
        ));
    }
    let c = 1.0 / (2.0 * sqrt_k_pow_k(k));
    let kf = k as f64;
    rule.integrate(triple.map.domain(), |x| {
        let j = triple.jet(x)?;
        let hx = h.metric_at(x)?;
        let p = du_pow_km2(k, j.du_sq);
        let b = &j.pullback * (-kf * p) + &j.g * (p * j.du_sq);
        let inner = (&j.g_inv * hx.matrix() * &j.g_inv * b).trace();
        Ok(c * inner * j.vol_g)
    })
}

/// d/dt E(u, g, ḡ + t h̄) at t = 0: (k/(2√k^k)) ∫ |du|^{k−2} ⟨u*h̄, g⟩_g vol_g.
pub fn energy_first_variation_target(
    triple: &MapTriple,
    hbar: &dyn MetricField,
    rule: &QuadratureRule,
) -> Result<f64> {
    let k = triple.k();
    let c = k as f64 / (2.0 * sqrt_k_pow_k(k));
    rule.integrate(triple.map.domain(), |x| {
        let j = triple.jet(x)?;
        let hb = hbar.metric_at(&triple.map.point(x))?;
        let t = &j.tangents;
        let uh = DMatrix::from_fn(k, k, |a, b| hb.bilinear(&t[a], &t[b]));
        Ok(c * du_pow_km2(k, j.du_sq) * (&j.g_inv * uh).trace() * j.vol_g)
    })
}

/// g + t h as a domain metric.
pub fn shifted_domain_metric(
    triple: &MapTriple,
    h: Arc<dyn DomainMetric>,
    t: f64,
) -> Arc<dyn DomainMetric> {
    let base = triple.domain_metric.clone();
    Arc::new(move |x: &[f64]| -> Result<SymTensor2> {
        SymTensor2::from_matrix(base.metric_at(x)?.matrix() + h.metric_at(x)?.matrix() * t)
    })
}

/// ḡ + t h̄ as an ambient metric.
pub fn shifted_target_metric(
    triple: &MapTriple,
    hbar: Arc<dyn MetricField>,
    t: f64,
) -> Arc<dyn MetricField> {
    let base = triple.target_metric.clone();
    Arc::new(move |p: &Vector| -> Result<SymTensor2> {
        SymTensor2::from_matrix(base.metric_at(p)?.matrix() + hbar.metric_at(p)?.matrix() * t)
    })
}

/// A constant symmetric tensor, usable as domain or ambient field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTensor(pub SymTensor2);

impl DomainMetric for ConstantTensor {
    fn metric_at(&self, _x: &[f64]) -> Result<SymTensor2> {
        Ok(self.0.clone())
    }
}

impl MetricField for ConstantTensor {
    fn metric_at(&self, _p: &Vector) -> Result<SymTensor2> {
        Ok(self.0.clone())
    }
}

/// Random symmetric matrix with standard normal entries.
pub fn random_symmetric<R: Rng + ?Sized>(k: usize, rng: &mut R) -> SymTensor2 {
    let a = DMatrix::from_fn(k, k, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    });
    SymTensor2::from_matrix((&a + a.transpose()) * 0.5).expect("symmetric by construction")
}

/// x ↦ c x/|x|² on the first k coordinates of R^n. Conformal away from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionMap {
    id: String,
    n: usize,
    scale: f64,
    domain: BoxDomain,
}

impl InversionMap {
    pub fn new(id: impl Into<String>, n: usize, scale: f64, domain: BoxDomain) -> Result<Self> {
        let k = domain.dim();
        if k > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: k,
            });
        }
        Ok(Self {
            id: id.into(),
            n,
            scale,
            domain,
        })
    }
}

impl Patch for InversionMap {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn k(&self) -> usize {
        self.domain.dim()
    }

    fn n(&self) -> usize {
        self.n
    }

    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn point(&self, x: &[f64]) -> Vector {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Vector::from_fn(self.n, |i, _| {
            if i < x.len() {
                self.scale * x[i] / r2
            } else {
                0.0
            }
        })
    }

    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (0..x.len())
            .map(|a| {
                Vector::from_fn(self.n, |i, _| {
                    if i >= x.len() {
                        return 0.0;
                    }
                    let delta = if i == a { 1.0 } else { 0.0 };
                    self.scale * (delta / r2 - 2.0 * x[i] * x[a] / (r2 * r2))
                })
            })
            .collect()
    }
}

/// Built-in maps with their structure case. Every map uses the flat domain metric.
pub fn map_ids() -> Vec<&'static str> {
    vec![
        "identity-square",
        "dilation-square",
        "antiholomorphic-square",
        "stretch-square",
        "wrong-plane-square",
        "holomorphic-quadratic",
        "similarity-assoc",
        "inversion-r7",
        "inversion-r8",
    ]
}

fn um2() -> Result<StructureKit> {
    standard_kit(Case::AlmostComplex { m: 2, k: 1 })
}

fn plane_map(id: &str, comps: [(usize, f64); 2], c: f64) -> Result<ProfileMap> {
    let mut p = vec![Profile::zero(); 4];
    p[comps[0].0] = Profile::linear(2, 0, c * comps[0].1);
    p[comps[1].0] = Profile::linear(2, 1, c * comps[1].1);
    ProfileMap::new(id, p, BoxDomain::unit(2))
}

/// Look up a built-in map.
pub fn map_by_id(id: &str) -> Result<MapTriple> {
    let (map, kit): (Arc<dyn Patch>, StructureKit) = match id {
        "identity-square" => (Arc::new(plane_map(id, [(0, 1.0), (1, 1.0)], 1.0)?), um2()?),
        "dilation-square" => (Arc::new(plane_map(id, [(0, 1.0), (1, 1.0)], 1.7)?), um2()?),
        "antiholomorphic-square" => (Arc::new(plane_map(id, [(0, 1.0), (1, -1.0)], 1.0)?), um2()?),
        "stretch-square" => (Arc::new(plane_map(id, [(0, 1.0), (1, 2.0)], 1.0)?), um2()?),
        "wrong-plane-square" => (Arc::new(plane_map(id, [(0, 1.0), (2, 1.0)], 1.0)?), um2()?),
        "holomorphic-quadratic" => {
            // z ↦ (z, ε z²) in C² with J e1 = e2
            let eps = 0.4;
            let p = vec![
                Profile::linear(2, 0, 1.0),
                Profile::linear(2, 1, 1.0),
                Profile::zero()
                    .monomial(eps, vec![2, 0])
                    .monomial(-eps, vec![0, 2]),
                Profile::zero().monomial(2.0 * eps, vec![1, 1]),
            ];
            let d = BoxDomain::new(vec![-0.5, -0.5], vec![0.5, 0.5])?;
            (Arc::new(ProfileMap::new(id, p, d)?), um2()?)
        }
        "similarity-assoc" => {
            let mut p = vec![Profile::zero(); 7];
            for a in 0..3 {
                p[a] = Profile::linear(3, a, 1.3);
            }
            (
                Arc::new(ProfileMap::new(id, p, BoxDomain::unit(3))?),
                standard_kit(Case::Associative)?,
            )
        }
        "inversion-r7" => {
            let d = BoxDomain::new(vec![1.0; 3], vec![1.5; 3])?;
            (
                Arc::new(InversionMap::new(id, 7, 2.0, d)?),
                standard_kit(Case::Associative)?,
            )
        }
        "inversion-r8" => {
            let d = BoxDomain::new(vec![1.0; 4], vec![1.4; 4])?;
            (
                Arc::new(InversionMap::new(id, 8, 2.0, d)?),
                standard_kit(Case::Cayley)?,
            )
        }
        other => return Err(Error::Config(format!("unknown map id {other:?}"))),
    };
    MapTriple::flat(map, kit)
}

/// A random polynomial map of the unit k-box into R^n: random linear part
/// plus small quadratic terms.
pub fn random_polynomial_map<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<ProfileMap> {
    let mut comps = Vec::with_capacity(n);
    let mut normal = || <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    for _ in 0..n {
        let mut p = Profile::zero();
        for a in 0..k {
            let mut e = vec![0u32; k];
            e[a] = 1;
            p = p.monomial(normal(), e);
            for b in a..k {
                let mut e2 = vec![0u32; k];
                e2[a] += 1;
                e2[b] += 1;
                p = p.monomial(0.3 * normal(), e2);
            }
        }
        comps.push(p);
    }
    ProfileMap::new("random-polynomial", comps, BoxDomain::unit(k))
}

/// Kits used for random maps, cycled by index.
pub fn smith_kits() -> Result<Vec<StructureKit>> {
    Ok(vec![
        um2()?,
        standard_kit(Case::AlmostComplex { m: 3, k: 2 })?,
        standard_kit(Case::Associative)?,
        standard_kit(Case::Coassociative)?,
        standard_kit(Case::Cayley)?,
    ])
}

/// The calibration form of a triple, for reporting.
pub fn calibration_form(triple: &MapTriple) -> &KForm {
    triple.kit.calibration()
}
