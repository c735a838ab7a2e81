//! Embedded patches, induced metrics, volume, the distance-squared jet and
//! mean curvature.

pub mod catalog;
mod fd;
pub mod flow;
mod quadrature;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{SymTensor2, Vector};

pub use fd::{fd_derivative, FdEstimate};
pub use flow::{
    flow_first_variation, flow_with_frame, minimality_terms, FlowedPatch, LinearVectorField,
    MinimalityTerms, TrigVectorField, VectorField,
};
pub use quadrature::{gauss_legendre, QuadratureRule};

/// Step for internal central differences of patch parametrizations.
pub const H_GEOM: f64 = 1e-5;

/// Axis-aligned parameter box; periodic axes are identified end to end.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(Error::Config(
                "box domain needs lower < upper on every axis".into(),
            ));
        }
        let periodic = vec![false; lower.len()];
        Ok(Self {
            lower,
            upper,
            periodic,
        })
    }

    pub fn unit(k: usize) -> Self {
        Self {
            lower: vec![0.0; k],
            upper: vec![1.0; k],
            periodic: vec![false; k],
        }
    }

    /// [0, 2π]^k with every axis periodic.
    pub fn torus(k: usize) -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            lower: vec![0.0; k],
            upper: vec![tau; k],
            periodic: vec![true; k],
        }
    }

    pub fn with_periodic(mut self, periodic: Vec<bool>) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_closed(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(a, &xa)| {
                let slack = 1e-9 * (self.upper[a] - self.lower[a]);
                self.periodic[a] || (xa >= self.lower[a] - slack && xa <= self.upper[a] + slack)
            })
    }

    /// Reduce periodic coordinates into the box.
    pub fn wrap(&self, x: &mut [f64]) {
        for a in 0..self.dim() {
            if self.periodic[a] {
                let len = self.upper[a] - self.lower[a];
                x[a] = self.lower[a] + (x[a] - self.lower[a]).rem_euclid(len);
            }
        }
    }

    /// Uniform grid with `per_axis` points per axis (cell centres).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let k = self.dim();
        let total = per_axis.pow(k as u32);
        (0..total)
            .map(|mut flat| {
                let mut x = vec![0.0; k];
                for a in (0..k).rev() {
                    let i = flat % per_axis;
                    flat /= per_axis;
                    let t = (i as f64 + 0.5) / per_axis as f64;
                    x[a] = self.lower[a] + t * (self.upper[a] - self.lower[a]);
                }
                x
            })
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| b - a)
            .product()
    }
}

/// A parametrized k-dimensional piece of submanifold in R^n.
pub trait Patch: Send + Sync {
    fn id(&self) -> String;
    fn k(&self) -> usize;
    fn n(&self) -> usize;
    fn domain(&self) -> &BoxDomain;
    fn point(&self, x: &[f64]) -> Vector;

    /// ∂u/∂x^a; central differences unless overridden.
    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        (0..self.k())
            .map(|a| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[a] += H_GEOM;
                xm[a] -= H_GEOM;
                (self.point(&xp) - self.point(&xm)) / (2.0 * H_GEOM)
            })
            .collect()
    }

    /// ∂²u/∂x^a∂x^b as `[a][b]`; central differences of `tangents` unless overridden.
    fn second_derivatives(&self, x: &[f64]) -> Vec<Vec<Vector>> {
        let k = self.k();
        let h = 1e-4;
        let diffs: Vec<Vec<Vector>> = (0..k)
            .map(|b| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[b] += h;
                xm[b] -= h;
                let tp = self.tangents(&xp);
                let tm = self.tangents(&xm);
                (0..k).map(|a| (&tp[a] - &tm[a]) / (2.0 * h)).collect()
            })
            .collect();
        (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| (&diffs[b][a] + &diffs[a][b]) * 0.5)
                    .collect()
            })
            .collect()
    }

    /// Parameter points used to seed closest-point iterations.
    fn seeds(&self) -> Vec<Vec<f64>> {
        self.domain().grid(if self.k() > 2 { 5 } else { 9 })
    }
}

/// Ambient metric as a function of position.
pub trait MetricField: Send + Sync {
    fn metric_at(&self, p: &Vector) -> Result<SymTensor2>;
}

impl<F> MetricField for F
where
    F: Fn(&Vector) -> Result<SymTensor2> + Send + Sync,
{
    fn metric_at(&self, p: &Vector) -> Result<SymTensor2> {
        self(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean(pub usize);

impl MetricField for Euclidean {
    fn metric_at(&self, _p: &Vector) -> Result<SymTensor2> {
        Ok(SymTensor2::identity(self.0))
    }
}

fn check_domain(patch: &dyn Patch, x: &[f64]) -> Result<()> {
    if !patch.domain().contains(x) {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    Ok(())
}

/// Gram matrix of the given vectors under `metric`.
pub fn gram(vectors: &[Vector], metric: &SymTensor2) -> DMatrix<f64> {
    let k = vectors.len();
    DMatrix::from_fn(k, k, |a, b| metric.bilinear(&vectors[a], &vectors[b]))
}

/// g_ab = ḡ(∂_a u, ∂_b u).
pub fn induced_metric(
    patch: &dyn Patch,
    metric: &dyn MetricField,
    x: &[f64],
) -> Result<SymTensor2> {
    check_domain(patch, x)?;
    let gbar = metric.metric_at(&patch.point(x))?;
    SymTensor2::from_matrix(gram(&patch.tangents(x), &gbar))
}

/// √det g at a parameter point, failing if g is not positive definite.
pub fn volume_density(patch: &dyn Patch, metric: &dyn MetricField, x: &[f64]) -> Result<f64> {
    let g = induced_metric(patch, metric, x)?;
    let ch = g
        .matrix()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(ch.l().diagonal().product())
}

pub fn volume(patch: &dyn Patch, metric: &dyn MetricField, rule: &QuadratureRule) -> Result<f64> {
    rule.integrate(patch.domain(), |x| volume_density(patch, metric, x))
}

/// (v^T, v^⊥) with respect to the ambient metric at u(x).
pub fn tangent_normal_split(
    patch: &dyn Patch,
    metric: &dyn MetricField,
    x: &[f64],
    v: &Vector,
) -> Result<(Vector, Vector)> {
    check_domain(patch, x)?;
    if v.len() != patch.n() {
        return Err(Error::DimensionMismatch {
            expected: patch.n(),
            found: v.len(),
        });
    }
    let gbar = metric.metric_at(&patch.point(x))?;
    let t = patch.tangents(x);
    let g = gram(&t, &gbar);
    let rhs = Vector::from_fn(t.len(), |a, _| gbar.bilinear(&t[a], v));
    let coef = g.cholesky().ok_or(Error::NotPositiveDefinite)?.solve(&rhs);
    let mut vt = Vector::zeros(v.len());
    for (a, ta) in t.iter().enumerate() {
        vt.axpy(coef[a], ta, 1.0);
    }
    let vp = v - &vt;
    Ok((vt, vp))
}

/// Euclidean orthogonal projector onto the normal space at u(x).
pub fn normal_projector(patch: &dyn Patch, x: &[f64]) -> Result<DMatrix<f64>> {
    let t = DMatrix::from_columns(&patch.tangents(x));
    let g = t.transpose() * &t;
    let ginv = g.try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let n = patch.n();
    Ok(DMatrix::identity(n, n) - &t * ginv * t.transpose())
}

/// H = g^{ab} (∂_a∂_b u)^⊥ for the Euclidean ambient metric.
pub fn mean_curvature(patch: &dyn Patch, x: &[f64]) -> Result<Vector> {
    check_domain(patch, x)?;
    let t = patch.tangents(x);
    let g = gram(&t, &SymTensor2::identity(patch.n()));
    let ginv = g.try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let p = normal_projector(patch, x)?;
    let second = patch.second_derivatives(x);
    let mut acc = Vector::zeros(patch.n());
    for a in 0..patch.k() {
        for b in 0..patch.k() {
            acc.axpy(ginv[(a, b)], &second[a][b], 1.0);
        }
    }
    Ok(p * acc)
}

/// 2-jet of F = ½ dist² at a point of the patch.
#[derive(Debug, Clone, PartialEq)]
pub struct JetOfF {
    pub point: Vector,
    pub value: f64,
    pub gradient: Vector,
    pub hessian: SymTensor2,
}

/// On-patch jet: (0, 0, normal projector). Euclidean background.
pub fn jet_of_f(patch: &dyn Patch, x: &[f64]) -> Result<JetOfF> {
    check_domain(patch, x)?;
    let n = patch.n();
    Ok(JetOfF {
        point: patch.point(x),
        value: 0.0,
        gradient: Vector::zeros(n),
        hessian: SymTensor2::from_matrix(normal_projector(patch, x)?)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosestPoint {
    pub param: Vec<f64>,
    pub point: Vector,
    pub distance: f64,
    pub iterations: usize,
}

pub const CLOSEST_TOL: f64 = 1e-12;
pub const CLOSEST_MAX_ITER: usize = 50;

/// Gauss–Newton on ½|u(x) − y|² from the nearest seed.
pub fn closest_point(patch: &dyn Patch, y: &Vector) -> Result<ClosestPoint> {
    if y.len() != patch.n() {
        return Err(Error::DimensionMismatch {
            expected: patch.n(),
            found: y.len(),
        });
    }
    let seeds = patch.seeds();
    let mut x = seeds
        .iter()
        .min_by(|a, b| {
            let da = (patch.point(a) - y).norm_squared();
            let db = (patch.point(b) - y).norm_squared();
            da.total_cmp(&db)
        })
        .cloned()
        .ok_or(Error::Config("patch provides no seeds".into()))?;
    let k = patch.k();
    let mut last_grad = f64::INFINITY;
    for it in 1..=CLOSEST_MAX_ITER {
        let r = patch.point(&x) - y;
        let t = DMatrix::from_columns(&patch.tangents(&x));
        let jtr = t.transpose() * &r;
        let jtj = t.transpose() * &t;
        last_grad = jtr.norm();
        let step = jtj
            .cholesky()
            .ok_or(Error::NoConvergence {
                iterations: it,
                residual: last_grad,
            })?
            .solve(&(-&jtr));
        for a in 0..k {
            x[a] += step[a];
        }
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if step.norm() <= CLOSEST_TOL * scale {
            patch.domain().wrap(&mut x);
            let point = patch.point(&x);
            let distance = (&point - y).norm();
            return Ok(ClosestPoint {
                param: x,
                point,
                distance,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: CLOSEST_MAX_ITER,
        residual: last_grad,
    })
}

/// Off-patch evaluator of F(y) = ½|y − closest(y)|².
pub struct DistanceExtension<'a> {
    pub patch: &'a dyn Patch,
}

impl<'a> DistanceExtension<'a> {
    pub fn new(patch: &'a dyn Patch) -> Self {
        Self { patch }
    }

    pub fn value(&self, y: &Vector) -> Result<f64> {
        let c = closest_point(self.patch, y)?;
        Ok(0.5 * c.distance * c.distance)
    }

    /// Central-difference gradient and Hessian of F at y.
    pub fn numeric_jet(&self, y: &Vector, step: f64) -> Result<(Vector, SymTensor2)> {
        let n = y.len();
        let f0 = self.value(y)?;
        let shifted = |d: &[(usize, f64)]| -> Result<f64> {
            let mut z = y.clone();
            for &(i, s) in d {
                z[i] += s;
            }
            self.value(&z)
        };
        let mut grad = Vector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let fp = shifted(&[(i, step)])?;
            let fm = shifted(&[(i, -step)])?;
            grad[i] = (fp - fm) / (2.0 * step);
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (step * step);
            for j in 0..i {
                let fpp = shifted(&[(i, step), (j, step)])?;
                let fpm = shifted(&[(i, step), (j, -step)])?;
                let fmp = shifted(&[(i, -step), (j, step)])?;
                let fmm = shifted(&[(i, -step), (j, -step)])?;
                let v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        Ok((grad, SymTensor2::from_matrix(hess)?))
    }
}
