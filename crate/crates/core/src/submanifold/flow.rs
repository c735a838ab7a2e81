//! Ambient flows and the first variation of volume for minimal submanifolds.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{SymTensor2, Vector};
use crate::submanifold::{
    fd_derivative, gram, mean_curvature, volume, BoxDomain, Euclidean, FdEstimate, Patch,
    QuadratureRule, H_GEOM,
};

pub trait VectorField: Send + Sync {
    fn n(&self) -> usize;
    fn value(&self, p: &Vector) -> Vector;
    /// ∂X^i/∂p^j.
    fn jacobian(&self, p: &Vector) -> DMatrix<f64>;
}

/// X(p) = A p + b.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearVectorField {
    pub a: DMatrix<f64>,
    pub b: Vector,
}

impl VectorField for LinearVectorField {
    fn n(&self) -> usize {
        self.b.len()
    }

    fn value(&self, p: &Vector) -> Vector {
        &self.a * p + &self.b
    }

    fn jacobian(&self, _p: &Vector) -> DMatrix<f64> {
        self.a.clone()
    }
}

/// X(p) = Σ cos(w·p + θ) v.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigVectorField {
    n: usize,
    terms: Vec<(Vector, Vector, f64)>,
}

impl TrigVectorField {
    pub fn new(n: usize, terms: Vec<(Vector, Vector, f64)>) -> Result<Self> {
        if let Some((v, _, _)) = terms.iter().find(|(v, w, _)| v.len() != n || w.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        Ok(Self { n, terms })
    }

    /// Gaussian amplitudes, integer wave entries in {−1, 0, 1}.
    pub fn random<R: Rng + ?Sized>(n: usize, count: usize, amplitude: f64, rng: &mut R) -> Self {
        let terms = (0..count)
            .map(|_| {
                let v = Vector::from_fn(n, |_, _| {
                    amplitude * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
                });
                let w = Vector::from_fn(n, |_, _| rng.random_range(-1i32..=1) as f64);
                (v, w, rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Self { n, terms }
    }
}

impl VectorField for TrigVectorField {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, p: &Vector) -> Vector {
        let mut x = Vector::zeros(self.n);
        for (v, w, th) in &self.terms {
            x.axpy((w.dot(p) + th).cos(), v, 1.0);
        }
        x
    }

    fn jacobian(&self, p: &Vector) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n, self.n);
        for (v, w, th) in &self.terms {
            j -= v * w.transpose() * (w.dot(p) + th).sin();
        }
        j
    }
}

/// Flow the point p and the vectors `frame` by time t: ẏ = X(y), Ẏ = DX(y) Y, with RK4.
pub fn flow_with_frame(
    field: &dyn VectorField,
    p: &Vector,
    frame: &[Vector],
    t: f64,
    steps: usize,
) -> (Vector, Vec<Vector>) {
    let k = frame.len();
    let mut y = p.clone();
    let mut f = if k == 0 {
        DMatrix::zeros(p.len(), 0)
    } else {
        DMatrix::from_columns(frame)
    };
    let h = t / steps.max(1) as f64;
    let rhs = |y: &Vector, f: &DMatrix<f64>| (field.value(y), field.jacobian(y) * f);
    for _ in 0..steps.max(1) {
        let (k1, l1) = rhs(&y, &f);
        let (k2, l2) = rhs(&(&y + &k1 * (h / 2.0)), &(&f + &l1 * (h / 2.0)));
        let (k3, l3) = rhs(&(&y + &k2 * (h / 2.0)), &(&f + &l2 * (h / 2.0)));
        let (k4, l4) = rhs(&(&y + &k3 * h), &(&f + &l3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        f += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
    }
    let cols = (0..k).map(|a| f.column(a).into_owned()).collect();
    (y, cols)
}

/// The image of a patch under the time-t flow of X.
pub struct FlowedPatch<'a> {
    pub patch: &'a dyn Patch,
    pub field: &'a dyn VectorField,
    pub t: f64,
    pub steps: usize,
}

impl Patch for FlowedPatch<'_> {
    fn id(&self) -> String {
        format!("{}@flow({})", self.patch.id(), self.t)
    }

    fn k(&self) -> usize {
        self.patch.k()
    }

    fn n(&self) -> usize {
        self.patch.n()
    }

    fn domain(&self) -> &BoxDomain {
        self.patch.domain()
    }

    fn point(&self, x: &[f64]) -> Vector {
        flow_with_frame(self.field, &self.patch.point(x), &[], self.t, self.steps).0
    }

    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        flow_with_frame(
            self.field,
            &self.patch.point(x),
            &self.patch.tangents(x),
            self.t,
            self.steps,
        )
        .1
    }
}

/// d/dt of the Euclidean volume of the flowed patch at t = 0.
pub fn flow_first_variation(
    patch: &dyn Patch,
    field: &dyn VectorField,
    rule: &QuadratureRule,
    step: f64,
    levels: usize,
) -> Result<FdEstimate> {
    if field.n() != patch.n() {
        return Err(Error::DimensionMismatch {
            expected: patch.n(),
            found: field.n(),
        });
    }
    fd_derivative(
        |t| {
            volume(
                &FlowedPatch {
                    patch,
                    field,
                    t,
                    steps: 4,
                },
                &Euclidean(patch.n()),
                rule,
            )
        },
        0.0,
        step,
        levels,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimalityTerms {
    /// ∫ div_g X^T vol
    pub tangential_divergence: f64,
    /// ∫ ⟨X^⊥, H⟩ vol
    pub mean_curvature_term: f64,
}

impl MinimalityTerms {
    /// ∫ (div_g X^T − ⟨X^⊥, H⟩) vol.
    pub fn first_variation(&self) -> f64 {
        self.tangential_divergence - self.mean_curvature_term
    }
}

fn tangential_coefficients(
    patch: &dyn Patch,
    field: &dyn VectorField,
    x: &[f64],
) -> Result<(Vector, f64)> {
    let t = patch.tangents(x);
    let g = gram(&t, &SymTensor2::identity(patch.n()));
    let ch = g.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let sqrt_g = ch.l().diagonal().product();
    let xv = field.value(&patch.point(x));
    let rhs = Vector::from_fn(t.len(), |a, _| t[a].dot(&xv));
    Ok((ch.solve(&rhs), sqrt_g))
}

/// The two terms of the first-variation identity, with div_g X^T = (1/√g) ∂_a(√g c^a)
/// from central differences of X^T = c^a ∂_a u.
pub fn minimality_terms(
    patch: &dyn Patch,
    field: &dyn VectorField,
    rule: &QuadratureRule,
) -> Result<MinimalityTerms> {
    if field.n() != patch.n() {
        return Err(Error::DimensionMismatch {
            expected: patch.n(),
            found: field.n(),
        });
    }
    let k = patch.k();
    let v = rule.integrate_many(patch.domain(), 2, |x| {
        let (_, sqrt_g) = tangential_coefficients(patch, field, x)?;
        let mut div = 0.0;
        for a in 0..k {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[a] += H_GEOM;
            xm[a] -= H_GEOM;
            let (cp, gp) = tangential_coefficients(patch, field, &xp)?;
            let (cm, gm) = tangential_coefficients(patch, field, &xm)?;
            div += (gp * cp[a] - gm * cm[a]) / (2.0 * H_GEOM);
        }
        let p = patch.point(x);
        let h = mean_curvature(patch, x)?;
        // H is normal, so ⟨X^⊥, H⟩ = ⟨X, H⟩
        Ok(vec![div, field.value(&p).dot(&h) * sqrt_g])
    })?;
    Ok(MinimalityTerms {
        tangential_divergence: v[0],
        mean_curvature_term: v[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_flow_matches_exponential() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let f = LinearVectorField {
            a,
            b: Vector::zeros(2),
        };
        let (y, _) = flow_with_frame(&f, &Vector::from_vec(vec![1.0, 0.0]), &[], 0.5, 64);
        assert!((y[0] - 0.5f64.cos()).abs() < 1e-8);
        assert!((y[1] - 0.5f64.sin()).abs() < 1e-8);
    }
}
