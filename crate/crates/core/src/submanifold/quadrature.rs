use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::submanifold::BoxDomain;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(order, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(order, x);
        nodes[i] = -x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite tensor-product Gauss–Legendre rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureRule {
    pub order: usize,
    pub cells: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self { order: 8, cells: 1 }
    }
}

impl QuadratureRule {
    pub fn new(order: usize, cells: usize) -> Result<Self> {
        if order == 0 || cells == 0 {
            return Err(Error::Config(
                "quadrature order and cell count must be positive".into(),
            ));
        }
        Ok(Self { order, cells })
    }

    /// One axis of [lo, hi]: nodes and weights.
    pub fn axis(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.order);
        let h = (hi - lo) / self.cells as f64;
        let mut nodes = Vec::with_capacity(self.order * self.cells);
        let mut weights = Vec::with_capacity(self.order * self.cells);
        for c in 0..self.cells {
            let a = lo + c as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        (nodes, weights)
    }

    /// Tensorized nodes over a box, in row-major order (last axis fastest).
    pub fn nodes(&self, domain: &BoxDomain) -> Vec<(Vec<f64>, f64)> {
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..domain.dim())
            .map(|a| self.axis(domain.lower[a], domain.upper[a]))
            .collect();
        let per = self.order * self.cells;
        let total = per.pow(domain.dim() as u32);
        (0..total)
            .map(|mut flat| {
                let mut x = vec![0.0; domain.dim()];
                let mut w = 1.0;
                for a in (0..domain.dim()).rev() {
                    let i = flat % per;
                    flat /= per;
                    x[a] = axes[a].0[i];
                    w *= axes[a].1[i];
                }
                (x, w)
            })
            .collect()
    }

    /// ∫ f over the box. Nodes are evaluated in parallel and summed in node order.
    pub fn integrate<F>(&self, domain: &BoxDomain, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        Ok(self.integrate_many(domain, 1, |x| Ok(vec![f(x)?]))?[0])
    }

    /// Integrate several quantities at once.
    pub fn integrate_many<F>(&self, domain: &BoxDomain, count: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let nodes = self.nodes(domain);
        let values: Vec<Result<Vec<f64>>> = nodes.par_iter().map(|(x, _)| f(x)).collect();
        let mut total = vec![0.0; count];
        for ((_, w), v) in nodes.iter().zip(values) {
            let v = v?;
            for (t, vi) in total.iter_mut().zip(&v) {
                *t += w * vi;
            }
        }
        Ok(total)
    }

    /// Apply f at every node, in node order.
    pub fn map_nodes<T, F>(&self, domain: &BoxDomain, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64], f64) -> Result<T> + Sync,
    {
        let nodes = self.nodes(domain);
        nodes.par_iter().map(|(x, w)| f(x, *w)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for q in 1..12 {
            let (_, w) = gauss_legendre(q);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        }
    }
}
