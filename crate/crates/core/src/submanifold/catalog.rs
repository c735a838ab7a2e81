//! Built-in patches: affine planes and tori, polynomial/trigonometric maps
//! (graphs, holomorphic curves), circles, spheres and tori of revolution.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exterior::{unit, Vector};
use crate::submanifold::{BoxDomain, Patch};

/// u(x) = origin + Σ x_a b_a.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePatch {
    id: String,
    origin: Vector,
    basis: Vec<Vector>,
    domain: BoxDomain,
}

impl AffinePatch {
    pub fn new(
        id: impl Into<String>,
        origin: Vector,
        basis: Vec<Vector>,
        domain: BoxDomain,
    ) -> Result<Self> {
        let n = origin.len();
        if basis.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: basis.len(),
            });
        }
        if let Some(b) = basis.iter().find(|b| b.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        Ok(Self {
            id: id.into(),
            origin,
            basis,
            domain,
        })
    }

    /// Coordinate plane through the origin spanned by the given (0-based) axes.
    pub fn axes(n: usize, axes: &[usize], domain: BoxDomain) -> Result<Self> {
        if axes.iter().any(|&a| a >= n) {
            return Err(Error::InvalidIndex(axes.to_vec()));
        }
        let labels: String = axes.iter().map(|a| (a + 1).to_string()).collect();
        let basis = axes.iter().map(|&a| unit(n, a)).collect();
        Self::new(
            format!("plane-e{labels}-in-r{n}"),
            Vector::zeros(n),
            basis,
            domain,
        )
    }

    /// Flat torus: the coordinate plane with domain [0, 2π]^k identified.
    pub fn torus(n: usize, axes: &[usize]) -> Result<Self> {
        let mut p = Self::axes(n, axes, BoxDomain::torus(axes.len()))?;
        let labels: String = axes.iter().map(|a| (a + 1).to_string()).collect();
        p.id = format!("t{}-e{labels}-in-r{n}", axes.len());
        Ok(p)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }
}

impl Patch for AffinePatch {
    fn id(&self) -> String {
        self.id.clone()
    }
    fn k(&self) -> usize {
        self.basis.len()
    }
    fn n(&self) -> usize {
        self.origin.len()
    }
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    fn point(&self, x: &[f64]) -> Vector {
        let mut p = self.origin.clone();
        for (xa, b) in x.iter().zip(&self.basis) {
            p.axpy(*xa, b, 1.0);
        }
        p
    }
    fn tangents(&self, _x: &[f64]) -> Vec<Vector> {
        self.basis.clone()
    }
    fn second_derivatives(&self, _x: &[f64]) -> Vec<Vec<Vector>> {
        let k = self.k();
        vec![vec![Vector::zeros(self.n()); k]; k]
    }
}

/// Scalar function of the parameters: polynomial plus trigonometric terms.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Profile {
    /// (coefficient, exponents per parameter)
    pub monomials: Vec<(f64, Vec<u32>)>,
    /// (amplitude, frequency vector, phase): A cos(ω·x + θ)
    pub waves: Vec<(f64, Vec<f64>, f64)>,
}

impl Profile {
    pub fn zero() -> Self {
        Self::default()
    }

    /// c·x_a.
    pub fn linear(k: usize, a: usize, c: f64) -> Self {
        let mut e = vec![0; k];
        e[a] = 1;
        Self {
            monomials: vec![(c, e)],
            waves: vec![],
        }
    }

    pub fn monomial(mut self, c: f64, exps: Vec<u32>) -> Self {
        self.monomials.push((c, exps));
        self
    }

    pub fn wave(mut self, amp: f64, freq: Vec<f64>, phase: f64) -> Self {
        self.waves.push((amp, freq, phase));
        self
    }

    fn mono_value(exps: &[u32], x: &[f64]) -> f64 {
        exps.iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }

    /// x^e differentiated along the given axes.
    fn mono_deriv(exps: &[u32], x: &[f64], along: &[usize]) -> f64 {
        let mut e: Vec<i64> = exps.iter().map(|&v| v as i64).collect();
        let mut factor = 1.0;
        for &a in along {
            if e[a] == 0 {
                return 0.0;
            }
            factor *= e[a] as f64;
            e[a] -= 1;
        }
        factor
            * e.iter()
                .zip(x)
                .map(|(&ei, &xi)| xi.powi(ei as i32))
                .product::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let p: f64 = self
            .monomials
            .iter()
            .map(|(c, e)| c * Self::mono_value(e, x))
            .sum();
        let w: f64 = self
            .waves
            .iter()
            .map(|(a, f, t)| a * (dot(f, x) + t).cos())
            .sum();
        p + w
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|a| {
                let p: f64 = self
                    .monomials
                    .iter()
                    .map(|(c, e)| c * Self::mono_deriv(e, x, &[a]))
                    .sum();
                let w: f64 = self
                    .waves
                    .iter()
                    .map(|(amp, f, t)| -amp * f[a] * (dot(f, x) + t).sin())
                    .sum();
                p + w
            })
            .collect()
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let k = x.len();
        (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        let p: f64 = self
                            .monomials
                            .iter()
                            .map(|(c, e)| c * Self::mono_deriv(e, x, &[a, b]))
                            .sum();
                        let w: f64 = self
                            .waves
                            .iter()
                            .map(|(amp, f, t)| -amp * f[a] * f[b] * (dot(f, x) + t).cos())
                            .sum();
                        p + w
                    })
                    .collect()
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// u^α(x) = profile_α(x) with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMap {
    id: String,
    k: usize,
    components: Vec<Profile>,
    domain: BoxDomain,
}

impl ProfileMap {
    pub fn new(id: impl Into<String>, components: Vec<Profile>, domain: BoxDomain) -> Result<Self> {
        let k = domain.dim();
        for p in &components {
            let bad = p.monomials.iter().any(|(_, e)| e.len() != k)
                || p.waves.iter().any(|(_, f, _)| f.len() != k);
            if bad {
                return Err(Error::Config(
                    "profile arity does not match the domain dimension".into(),
                ));
            }
        }
        Ok(Self {
            id: id.into(),
            k,
            components,
            domain,
        })
    }

    /// Graph u(x) = Σ x_a e_{axes[a]} + Σ f_ν(x) e_ν over a coordinate plane.
    pub fn graph(
        id: impl Into<String>,
        n: usize,
        axes: &[usize],
        normals: Vec<(usize, Profile)>,
        domain: BoxDomain,
    ) -> Result<Self> {
        let k = axes.len();
        let mut comps = vec![Profile::zero(); n];
        for (a, &ax) in axes.iter().enumerate() {
            comps[ax] = Profile::linear(k, a, 1.0);
        }
        for (ax, prof) in normals {
            if ax >= n || axes.contains(&ax) {
                return Err(Error::InvalidIndex(vec![ax]));
            }
            comps[ax] = prof;
        }
        Self::new(id, comps, domain)
    }

    pub fn components(&self) -> &[Profile] {
        &self.components
    }
}

impl Patch for ProfileMap {
    fn id(&self) -> String {
        self.id.clone()
    }
    fn k(&self) -> usize {
        self.k
    }
    fn n(&self) -> usize {
        self.components.len()
    }
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    fn point(&self, x: &[f64]) -> Vector {
        Vector::from_iterator(self.n(), self.components.iter().map(|p| p.value(x)))
    }
    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        let grads: Vec<Vec<f64>> = self.components.iter().map(|p| p.gradient(x)).collect();
        (0..self.k)
            .map(|a| Vector::from_fn(self.n(), |al, _| grads[al][a]))
            .collect()
    }
    fn second_derivatives(&self, x: &[f64]) -> Vec<Vec<Vector>> {
        let hs: Vec<Vec<Vec<f64>>> = self.components.iter().map(|p| p.hessian(x)).collect();
        (0..self.k)
            .map(|a| {
                (0..self.k)
                    .map(|b| Vector::from_fn(self.n(), |al, _| hs[al][a][b]))
                    .collect()
            })
            .collect()
    }
}

/// Circle of radius r in the plane, angle parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub radius: f64,
    domain: BoxDomain,
}

impl Circle {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            domain: BoxDomain::torus(1),
        }
    }
}

impl Patch for Circle {
    fn id(&self) -> String {
        format!("circle-r{}", self.radius)
    }
    fn k(&self) -> usize {
        1
    }
    fn n(&self) -> usize {
        2
    }
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    fn point(&self, x: &[f64]) -> Vector {
        Vector::from_vec(vec![self.radius * x[0].cos(), self.radius * x[0].sin()])
    }
    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        vec![Vector::from_vec(vec![
            -self.radius * x[0].sin(),
            self.radius * x[0].cos(),
        ])]
    }
    fn second_derivatives(&self, x: &[f64]) -> Vec<Vec<Vector>> {
        vec![vec![-self.point(x)]]
    }
}

/// Round 2-sphere of radius r in R³ with polar angle θ ∈ [0, π] and azimuth ϕ.
#[derive(Debug, Clone, PartialEq)]
pub struct Sphere {
    pub radius: f64,
    domain: BoxDomain,
}

impl Sphere {
    pub fn new(radius: f64) -> Self {
        let domain = BoxDomain {
            lower: vec![0.0, 0.0],
            upper: vec![PI, TAU],
            periodic: vec![false, true],
        };
        Self { radius, domain }
    }
}

impl Patch for Sphere {
    fn id(&self) -> String {
        format!("sphere-r{}", self.radius)
    }
    fn k(&self) -> usize {
        2
    }
    fn n(&self) -> usize {
        3
    }
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    fn point(&self, x: &[f64]) -> Vector {
        let (st, ct) = x[0].sin_cos();
        let (sp, cp) = x[1].sin_cos();
        Vector::from_vec(vec![st * cp, st * sp, ct]) * self.radius
    }
    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        let r = self.radius;
        let (st, ct) = x[0].sin_cos();
        let (sp, cp) = x[1].sin_cos();
        vec![
            Vector::from_vec(vec![ct * cp, ct * sp, -st]) * r,
            Vector::from_vec(vec![-st * sp, st * cp, 0.0]) * r,
        ]
    }
    fn second_derivatives(&self, x: &[f64]) -> Vec<Vec<Vector>> {
        let r = self.radius;
        let (st, ct) = x[0].sin_cos();
        let (sp, cp) = x[1].sin_cos();
        let tt = Vector::from_vec(vec![-st * cp, -st * sp, -ct]) * r;
        let tp = Vector::from_vec(vec![-ct * sp, ct * cp, 0.0]) * r;
        let pp = Vector::from_vec(vec![-st * cp, -st * sp, 0.0]) * r;
        vec![vec![tt, tp.clone()], vec![tp, pp]]
    }
    fn seeds(&self) -> Vec<Vec<f64>> {
        // keep seeds away from the coordinate singularities at the poles
        let d = BoxDomain {
            lower: vec![0.2, 0.0],
            upper: vec![PI - 0.2, TAU],
            periodic: vec![false, true],
        };
        d.grid(12)
    }
}

/// Torus of revolution with radii (R, r) in R³.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusOfRevolution {
    pub major: f64,
    pub minor: f64,
    domain: BoxDomain,
}

impl TorusOfRevolution {
    pub fn new(major: f64, minor: f64) -> Self {
        Self {
            major,
            minor,
            domain: BoxDomain::torus(2),
        }
    }
}

impl Patch for TorusOfRevolution {
    fn id(&self) -> String {
        format!("torus-R{}-r{}", self.major, self.minor)
    }
    fn k(&self) -> usize {
        2
    }
    fn n(&self) -> usize {
        3
    }
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    fn point(&self, x: &[f64]) -> Vector {
        let (sa, ca) = x[0].sin_cos();
        let (sb, cb) = x[1].sin_cos();
        let w = self.major + self.minor * cb;
        Vector::from_vec(vec![w * ca, w * sa, self.minor * sb])
    }
    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        let (sa, ca) = x[0].sin_cos();
        let (sb, cb) = x[1].sin_cos();
        let w = self.major + self.minor * cb;
        let r = self.minor;
        vec![
            Vector::from_vec(vec![-w * sa, w * ca, 0.0]),
            Vector::from_vec(vec![-r * sb * ca, -r * sb * sa, r * cb]),
        ]
    }
    fn second_derivatives(&self, x: &[f64]) -> Vec<Vec<Vector>> {
        let (sa, ca) = x[0].sin_cos();
        let (sb, cb) = x[1].sin_cos();
        let w = self.major + self.minor * cb;
        let r = self.minor;
        let aa = Vector::from_vec(vec![-w * ca, -w * sa, 0.0]);
        let ab = Vector::from_vec(vec![r * sb * sa, -r * sb * ca, 0.0]);
        let bb = Vector::from_vec(vec![-r * cb * ca, -r * cb * sa, -r * sb]);
        vec![vec![aa, ab.clone()], vec![ab, bb]]
    }
}

/// Names of the built-in patches accepted by [`patch_by_id`].
pub fn patch_ids() -> Vec<&'static str> {
    vec![
        "t3-in-r7",
        "t4-coassoc-in-r7",
        "t4-in-r8",
        "t2-in-r4",
        "t4-in-r6",
        "unit-square",
        "graph-quadratic-r3",
        "graph-trig-r4",
        "circle",
        "sphere",
        "torus",
    ]
}

/// Built-in patch lookup.
pub fn patch_by_id(id: &str) -> Result<Arc<dyn Patch>> {
    let p: Arc<dyn Patch> = match id {
        "t3-in-r7" => Arc::new(AffinePatch::torus(7, &[0, 1, 2])?.with_id("t3-in-r7")),
        "t4-coassoc-in-r7" => {
            Arc::new(AffinePatch::torus(7, &[3, 4, 5, 6])?.with_id("t4-coassoc-in-r7"))
        }
        "t4-in-r8" => Arc::new(AffinePatch::torus(8, &[0, 1, 2, 3])?.with_id("t4-in-r8")),
        "t2-in-r4" => Arc::new(AffinePatch::torus(4, &[0, 1])?.with_id("t2-in-r4")),
        "t4-in-r6" => Arc::new(AffinePatch::torus(6, &[0, 1, 2, 3])?.with_id("t4-in-r6")),
        "unit-square" => {
            Arc::new(AffinePatch::axes(3, &[0, 1], BoxDomain::unit(2))?.with_id("unit-square"))
        }
        "graph-quadratic-r3" => Arc::new(ProfileMap::graph(
            "graph-quadratic-r3",
            3,
            &[0, 1],
            vec![(
                2,
                Profile::zero()
                    .monomial(0.3, vec![2, 0])
                    .monomial(-0.2, vec![1, 1])
                    .monomial(0.1, vec![0, 2]),
            )],
            BoxDomain::new(vec![-0.5, -0.5], vec![0.5, 0.5])?,
        )?),
        "graph-trig-r4" => Arc::new(ProfileMap::graph(
            "graph-trig-r4",
            4,
            &[0, 1],
            vec![
                (2, Profile::zero().wave(0.2, vec![1.0, 0.0], 0.3)),
                (3, Profile::zero().wave(0.15, vec![1.0, 1.0], -0.7)),
            ],
            BoxDomain::torus(2),
        )?),
        "circle" => Arc::new(Circle::new(1.5)),
        "sphere" => Arc::new(Sphere::new(1.3)),
        "torus" => Arc::new(TorusOfRevolution::new(2.0, 0.6)),
        other => return Err(Error::Config(format!("unknown patch id {other:?}"))),
    };
    Ok(p)
}

/// The same patch with the first parameter axis reversed, so the induced orientation flips.
pub struct ReversedPatch<P> {
    pub inner: P,
}

impl<P: Patch> ReversedPatch<P> {
    fn flip(&self, x: &[f64]) -> Vec<f64> {
        let d = self.inner.domain();
        let mut y = x.to_vec();
        y[0] = d.lower[0] + d.upper[0] - x[0];
        y
    }
}

impl<P: Patch> Patch for ReversedPatch<P> {
    fn id(&self) -> String {
        format!("{}-reversed", self.inner.id())
    }

    fn k(&self) -> usize {
        self.inner.k()
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn domain(&self) -> &BoxDomain {
        self.inner.domain()
    }

    fn point(&self, x: &[f64]) -> Vector {
        self.inner.point(&self.flip(x))
    }

    fn tangents(&self, x: &[f64]) -> Vec<Vector> {
        let mut t = self.inner.tangents(&self.flip(x));
        t[0] = -&t[0];
        t
    }

    fn second_derivatives(&self, x: &[f64]) -> Vec<Vec<Vector>> {
        let mut s = self.inner.second_derivatives(&self.flip(x));
        let k = s.len();
        for a in 0..k {
            for b in 0..k {
                if (a == 0) != (b == 0) {
                    s[a][b] = -&s[a][b];
                }
            }
        }
        s
    }
}
