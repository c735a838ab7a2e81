//! Shared fixtures: random vectors and the plane catalog.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use caliblab::exterior::{gram_schmidt_adapt, KForm, SymTensor2, Vector};
use caliblab::structure::{Case, StructureKit};

pub fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn random_form<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> KForm {
    let len = KForm::zero(n, k).unwrap().coeffs().len();
    KForm::from_coeffs(n, k, (0..len).map(|_| StandardNormal.sample(rng)).collect()).unwrap()
}

pub fn random_sym<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymTensor2 {
    let a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    SymTensor2::from_matrix((&a + a.transpose()) * 0.5).unwrap()
}

pub fn orthonormal(vs: &[Vector]) -> Vec<Vector> {
    let n = vs[0].len();
    gram_schmidt_adapt(vs, &SymTensor2::identity(n))
        .unwrap()
        .tangent()
        .to_vec()
}

/// Orthonormal basis of the orthogonal complement of span(vs).
pub fn complement<R: Rng + ?Sized>(vs: &[Vector], rng: &mut R) -> Vec<Vector> {
    let n = vs[0].len();
    let mut all = orthonormal(vs);
    for _ in vs.len()..n {
        let mut v = gaussian(n, rng);
        for e in &all {
            let c = e.dot(&v);
            v.axpy(-c, e, 1.0);
        }
        all.push(v.normalize());
    }
    all.split_off(vs.len())
}

fn unit(n: usize, i: usize) -> Vector {
    caliblab::exterior::unit(n, i)
}

/// Coordinate planes of the calibration's terms, then random calibrated planes.
pub fn calibrated_planes<R: Rng + ?Sized>(
    kit: &StructureKit,
    random: usize,
    rng: &mut R,
) -> Vec<Vec<Vector>> {
    let n = kit.n();
    let mut out: Vec<Vec<Vector>> = Vec::new();
    match kit.case() {
        Case::AlmostComplex { m, k } => {
            // choices of k complex coordinate lines
            for mask in 0u32..(1 << m) {
                if mask.count_ones() as usize == k {
                    let lines = (0..m).filter(|i| mask & (1 << i) != 0);
                    out.push(
                        lines
                            .flat_map(|i| [unit(n, 2 * i), unit(n, 2 * i + 1)])
                            .collect(),
                    );
                }
            }
            for _ in 0..random {
                let mut vs = Vec::new();
                for _ in 0..k {
                    let v = gaussian(n, rng);
                    vs.push(kit.apply_j(&v).unwrap());
                    vs.insert(vs.len() - 1, v);
                }
                out.push(orthonormal(&vs));
            }
        }
        _ => {
            for (idx, c) in kit.calibration().terms() {
                if c != 0.0 {
                    out.push(idx.entries().iter().map(|&i| unit(n, i)).collect());
                }
            }
            for _ in 0..random {
                let plane = match kit.case() {
                    Case::Associative => {
                        let e = orthonormal(&[gaussian(7, rng), gaussian(7, rng)]);
                        let z = kit.cross(&e[0], &e[1]).unwrap();
                        vec![e[0].clone(), e[1].clone(), z]
                    }
                    Case::Coassociative => {
                        let e = orthonormal(&[gaussian(7, rng), gaussian(7, rng)]);
                        let z = kit.cross(&e[0], &e[1]).unwrap();
                        complement(&[e[0].clone(), e[1].clone(), z], rng)
                    }
                    _ => {
                        let e =
                            orthonormal(&[gaussian(8, rng), gaussian(8, rng), gaussian(8, rng)]);
                        let w = kit.cayley_cross(&e[0], &e[1], &e[2]).unwrap();
                        vec![e[0].clone(), e[1].clone(), e[2].clone(), w]
                    }
                };
                out.push(orthonormal(&plane));
            }
        }
    }
    out
}

/// Coordinate planes with zero calibration coefficient, then random planes.
pub fn non_calibrated_planes<R: Rng + ?Sized>(
    kit: &StructureKit,
    coordinate: usize,
    random: usize,
    rng: &mut R,
) -> Vec<Vec<Vector>> {
    let n = kit.n();
    let k = kit.calibrated_dim();
    let mu = kit.calibration();
    let mut out: Vec<Vec<Vector>> = subsets(n, k)
        .into_iter()
        .filter(|axes| mu.component(axes) == 0.0)
        .take(coordinate)
        .map(|axes| axes.iter().map(|&i| unit(n, i)).collect())
        .collect();
    for _ in 0..random {
        let vs: Vec<Vector> = (0..k).map(|_| gaussian(n, rng)).collect();
        out.push(orthonormal(&vs));
    }
    out
}

pub fn theorem_cases() -> Vec<Case> {
    vec![
        Case::AlmostComplex { m: 3, k: 2 },
        Case::Associative,
        Case::Coassociative,
        Case::Cayley,
    ]
}

/// Increasing k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in subsets(n, k - 1) {
            if rest.first().is_none_or(|&r| r > first) {
                let mut v = vec![first];
                v.extend(rest);
                out.push(v);
            }
        }
    }
    out
}
