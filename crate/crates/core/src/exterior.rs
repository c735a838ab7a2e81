//! Dense exterior algebra over R^n for n ≤ 8.
//!
//! Axis indices are 0-based in the API. `KForm::parse` accepts the usual
//! 1-based labels (`"e123 + e145 - e167"`) since that is how structure forms
//! are written down.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

pub const MAX_DIM: usize = 8;

/// Relative residual below which Gram–Schmidt declares linear dependence.
pub const RANK_TOL: f64 = 1e-10;

struct Table {
    by_degree: Vec<Vec<u16>>,
    rank: Vec<u32>,
}

fn build_table(n: usize) -> Table {
    fn gen(n: usize, k: usize, start: usize, mask: u16, depth: usize, out: &mut Vec<u16>) {
        if depth == k {
            out.push(mask);
            return;
        }
        for i in start..n {
            gen(n, k, i + 1, mask | (1 << i), depth + 1, out);
        }
    }
    let mut by_degree = Vec::with_capacity(n + 1);
    let mut rank = vec![0u32; 1 << n];
    for k in 0..=n {
        let mut masks = Vec::new();
        gen(n, k, 0, 0, 0, &mut masks);
        for (r, &m) in masks.iter().enumerate() {
            rank[m as usize] = r as u32;
        }
        by_degree.push(masks);
    }
    Table { by_degree, rank }
}

fn table(n: usize) -> &'static Table {
    static TABLES: OnceLock<Vec<Table>> = OnceLock::new();
    &TABLES.get_or_init(|| (0..=MAX_DIM).map(build_table).collect())[n]
}

/// Multi-indices of degree k in lexicographic order, as bit masks.
pub(crate) fn masks(n: usize, k: usize) -> &'static [u16] {
    &table(n).by_degree[k]
}

#[inline]
pub(crate) fn rank_of(n: usize, mask: u16) -> usize {
    table(n).rank[mask as usize] as usize
}

#[inline]
pub(crate) fn mask_axes(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask & (1 << i) != 0)
}

/// Sign of e_I ∧ e_J for disjoint masks.
#[inline]
pub(crate) fn wedge_sign(a: u16, b: u16) -> f64 {
    let mut swaps = 0u32;
    for j in mask_axes(b) {
        swaps += (a >> (j + 1)).count_ones();
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sort an index list, returning the mask and the permutation sign, or `None`
/// if an index repeats.
pub(crate) fn sort_sign(axes: &[usize]) -> Option<(u16, f64)> {
    let mut mask = 0u16;
    let mut inversions = 0usize;
    for (p, &i) in axes.iter().enumerate() {
        if mask & (1 << i) != 0 {
            return None;
        }
        mask |= 1 << i;
        inversions += axes[..p].iter().filter(|&&j| j > i).count();
    }
    Some((mask, if inversions % 2 == 0 { 1.0 } else { -1.0 }))
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Determinant of the leading k×k block, by Gaussian elimination with partial pivoting.
pub(crate) fn small_det(m: &mut [[f64; MAX_DIM]; MAX_DIM], k: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..k {
        let mut piv = c;
        for r in c + 1..k {
            if m[r][c].abs() > m[piv][c].abs() {
                piv = r;
            }
        }
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        let p = m[c][c];
        det *= p;
        for r in c + 1..k {
            let f = m[r][c] / p;
            if f != 0.0 {
                for cc in c + 1..k {
                    m[r][cc] -= f * m[c][cc];
                }
            }
        }
    }
    det
}

/// A strictly increasing list of axes (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(n: usize, entries: &[usize]) -> Result<Self> {
        let ok = entries.len() <= n
            && entries.iter().all(|&i| i < n)
            && entries.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidIndex(entries.to_vec()));
        }
        Ok(Self {
            entries: entries.to_vec(),
        })
    }

    /// Build from the 1-based labels used when writing forms like e_{123}.
    pub fn from_labels(n: usize, labels: &[usize]) -> Result<Self> {
        if labels.iter().any(|&l| l == 0) {
            return Err(Error::InvalidIndex(labels.to_vec()));
        }
        let zero: Vec<usize> = labels.iter().map(|l| l - 1).collect();
        Self::new(n, &zero)
    }

    fn from_mask(mask: u16) -> Self {
        Self {
            entries: mask_axes(mask).collect(),
        }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn degree(&self) -> usize {
        self.entries.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|i| i + 1).collect()
    }

    pub(crate) fn mask(&self) -> u16 {
        self.entries.iter().fold(0, |m, &i| m | (1 << i))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e")?;
        for i in &self.entries {
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Orientation::Negative
        } else {
            Orientation::Positive
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// Symmetric bilinear form on R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2 {
    m: DMatrix<f64>,
}

impl SymTensor2 {
    /// Symmetrizes the input, so the stored matrix is exactly symmetric.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let s = (&m + m.transpose()) * 0.5;
        Ok(Self { m: s })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        let s = (&m + m.transpose()) * 0.5;
        Self { m: s }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Tr_g h = g^{ij} h_ij.
    pub fn trace_with(&self, metric: &SymTensor2) -> Result<f64> {
        let ch = metric
            .m
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(ch.solve(&self.m).trace())
    }

    pub fn bilinear(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.m * v))
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.m * v
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m.clone().cholesky().is_some()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: &self.m * c }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Lower Cholesky factor L with G = L Lᵀ.
    pub(crate) fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        Ok(self
            .m
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?
            .l())
    }

    pub fn norm_of(&self, v: &Vector) -> f64 {
        self.bilinear(v, v).max(0.0).sqrt()
    }
}

impl Add for &SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: &SymTensor2) -> SymTensor2 {
        SymTensor2 {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: &SymTensor2) -> SymTensor2 {
        SymTensor2 {
            m: &self.m - &rhs.m,
        }
    }
}

/// Dense alternating k-tensor on R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct KForm {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl KForm {
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        check_dims(n, k)?;
        Ok(Self {
            n,
            k,
            coeffs: vec![0.0; binomial(n, k)],
        })
    }

    pub fn scalar(n: usize, c: f64) -> Result<Self> {
        let mut f = Self::zero(n, 0)?;
        f.coeffs[0] = c;
        Ok(f)
    }

    pub fn from_coeffs(n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dims(n, k)?;
        let len = binomial(n, k);
        if coeffs.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: coeffs.len(),
            });
        }
        Ok(Self { n, k, coeffs })
    }

    /// e_{i1} ∧ … ∧ e_{ik} for 0-based axes in any order; repeated axes give zero.
    pub fn basis(n: usize, axes: &[usize]) -> Result<Self> {
        let mut f = Self::zero(n, axes.len())?;
        if axes.iter().any(|&i| i >= n) {
            return Err(Error::InvalidIndex(axes.to_vec()));
        }
        if let Some((mask, s)) = sort_sign(axes) {
            f.coeffs[rank_of(n, mask)] = s;
        }
        Ok(f)
    }

    /// The 1-form Σ v_i e^i.
    pub fn covector(v: &Vector) -> Result<Self> {
        Self::from_coeffs(v.len(), 1, v.iter().copied().collect())
    }

    /// Parse terms like `"e123 + e145 - 2*e167"` with 1-based axis digits.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let bad = || Error::InvalidStructure(format!("cannot parse form {text:?}"));
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut terms: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let mut sign = 1.0;
            if let Some(r) = rest.strip_prefix('+') {
                rest = r;
            } else if let Some(r) = rest.strip_prefix('-') {
                sign = -1.0;
                rest = r;
            }
            let end = rest[1..]
                .find(['+', '-'])
                .map(|p| p + 1)
                .unwrap_or(rest.len());
            let term = &rest[..end];
            rest = &rest[end..];
            let (coef, label) = match term.split_once('*') {
                Some((c, l)) => (c.parse::<f64>().map_err(|_| bad())?, l),
                None => (1.0, term),
            };
            let digits = label.strip_prefix('e').ok_or_else(bad)?;
            let axes = digits
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .filter(|&d| d >= 1)
                        .map(|d| d - 1)
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(bad)?;
            terms.push((sign * coef, axes));
        }
        let k = terms.first().map(|t| t.1.len()).ok_or_else(bad)?;
        let mut f = Self::zero(n, k)?;
        for (c, axes) in terms {
            if axes.len() != k {
                return Err(bad());
            }
            f += &Self::basis(n, &axes)?.scale(c);
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, index: &MultiIndex) -> f64 {
        if index.degree() != self.k {
            return 0.0;
        }
        self.coeffs[rank_of(self.n, index.mask())]
    }

    /// Full-tensor component a_{i1…ik} for arbitrary (0-based) axes.
    pub fn component(&self, axes: &[usize]) -> f64 {
        if axes.len() != self.k || axes.iter().any(|&i| i >= self.n) {
            return 0.0;
        }
        match sort_sign(axes) {
            Some((mask, s)) => s * self.coeffs[rank_of(self.n, mask)],
            None => 0.0,
        }
    }

    /// Nonzero terms as (index, coefficient) in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        masks(self.n, self.k)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&m, &c)| (MultiIndex::from_mask(m), c))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            k: self.k,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// self += c · other, for same-shape forms.
    pub fn axpy(&mut self, c: f64, other: &KForm) {
        assert_eq!(
            (self.n, self.k),
            (other.n, other.k),
            "axpy on forms of different shape"
        );
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    fn same_shape(&self, other: &KForm) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if self.k != other.k {
            return Err(Error::InvalidDegree {
                degree: other.k,
                n: other.n,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &KForm) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.axpy(1.0, other);
        Ok(out)
    }

    pub fn wedge(&self, other: &KForm) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let n = self.n;
        let k = self.k + other.k;
        if k > n {
            return Err(Error::InvalidDegree { degree: k, n });
        }
        let mut out = Self::zero(n, k)?;
        let ma = masks(n, self.k);
        let mb = masks(n, other.k);
        for (&a, &ca) in ma.iter().zip(&self.coeffs) {
            if ca == 0.0 {
                continue;
            }
            for (&b, &cb) in mb.iter().zip(&other.coeffs) {
                if cb == 0.0 || a & b != 0 {
                    continue;
                }
                out.coeffs[rank_of(n, a | b)] += wedge_sign(a, b) * ca * cb;
            }
        }
        Ok(out)
    }

    /// e_i ⌟ a, contraction of a basis vector into the first slot.
    pub fn interior_basis(&self, i: usize) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::InvalidDegree {
                degree: 0,
                n: self.n,
            });
        }
        if i >= self.n {
            return Err(Error::InvalidIndex(vec![i]));
        }
        let mut out = Self::zero(self.n, self.k - 1)?;
        self.interior_basis_into(i, 1.0, &mut out);
        Ok(out)
    }

    fn interior_basis_into(&self, i: usize, c: f64, out: &mut KForm) {
        let bit = 1u16 << i;
        let below = bit - 1;
        for (&m, &a) in masks(self.n, self.k).iter().zip(&self.coeffs) {
            if a == 0.0 || m & bit == 0 {
                continue;
            }
            let s = if (m & below).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            out.coeffs[rank_of(self.n, m & !bit)] += c * s * a;
        }
    }

    /// v ⌟ a with (v ⌟ a)(w2,…,wk) = a(v, w2,…,wk).
    pub fn interior(&self, v: &Vector) -> Result<Self> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        if self.k == 0 {
            return Err(Error::InvalidDegree {
                degree: 0,
                n: self.n,
            });
        }
        let mut out = Self::zero(self.n, self.k - 1)?;
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                self.interior_basis_into(i, vi, &mut out);
            }
        }
        Ok(out)
    }

    /// Euclidean inner product: sum of coefficient products.
    pub fn dot(&self, other: &KForm) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Induced inner product on Λ^k for the given metric.
    pub fn inner(&self, other: &KForm, metric: &SymTensor2) -> Result<f64> {
        self.same_shape(other)?;
        check_metric(self.n, metric)?;
        let e = orthonormalizer(metric)?;
        self.pullback(&e)?.dot(&other.pullback(&e)?)
    }

    /// Hodge star for the Euclidean metric and standard orientation.
    pub fn hodge_star_euclidean(&self) -> Self {
        let n = self.n;
        let full: u16 = ((1u32 << n) - 1) as u16;
        let mut out = Self {
            n,
            k: n - self.k,
            coeffs: vec![0.0; binomial(n, n - self.k)],
        };
        for (&m, &a) in masks(n, self.k).iter().zip(&self.coeffs) {
            if a != 0.0 {
                let c = full & !m;
                out.coeffs[rank_of(n, c)] += wedge_sign(m, c) * a;
            }
        }
        out
    }

    pub fn hodge_star(&self, metric: &SymTensor2, orientation: Orientation) -> Result<Self> {
        check_metric(self.n, metric)?;
        let e = orthonormalizer(metric)?;
        let e_inv = e.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
        let framed = self.pullback(&e)?.hodge_star_euclidean();
        Ok(framed.pullback(&e_inv)?.scale(orientation.sign()))
    }

    /// a(v1, …, vk).
    pub fn evaluate(&self, vectors: &[Vector]) -> Result<f64> {
        if vectors.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: vectors.len(),
            });
        }
        for v in vectors {
            if v.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: v.len(),
                });
            }
        }
        Ok(self.evaluate_unchecked(|r, c| vectors[c][r]))
    }

    /// Evaluate on the columns of a matrix.
    pub fn evaluate_columns(&self, cols: &DMatrix<f64>) -> Result<f64> {
        if cols.ncols() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: cols.ncols(),
            });
        }
        if cols.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: cols.nrows(),
            });
        }
        Ok(self.evaluate_unchecked(|r, c| cols[(r, c)]))
    }

    fn evaluate_unchecked(&self, entry: impl Fn(usize, usize) -> f64) -> f64 {
        if self.k == 0 {
            return self.coeffs[0];
        }
        let mut total = 0.0;
        let mut buf = [[0.0; MAX_DIM]; MAX_DIM];
        for (&m, &a) in masks(self.n, self.k).iter().zip(&self.coeffs) {
            if a == 0.0 {
                continue;
            }
            for (row, axis) in mask_axes(m).enumerate() {
                for c in 0..self.k {
                    buf[row][c] = entry(axis, c);
                }
            }
            total += a * small_det(&mut buf, self.k);
        }
        total
    }

    /// Pullback along the linear map R^m → R^n given by an n×m matrix.
    pub fn pullback(&self, map: &DMatrix<f64>) -> Result<Self> {
        if map.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: map.nrows(),
            });
        }
        let m = map.ncols();
        let mut out = Self::zero(m, self.k)?;
        for (slot, &mask) in masks(m, self.k).iter().enumerate() {
            let cols: Vec<usize> = mask_axes(mask).collect();
            out.coeffs[slot] = self.evaluate_unchecked(|r, c| map[(r, cols[c])]);
        }
        Ok(out)
    }

    /// Contraction matrix M_pq = Σ a_{p i…} b_{q i…} over all (k−1)-tuples.
    pub fn hat_contraction(&self, other: &KForm) -> Result<DMatrix<f64>> {
        self.same_shape(other)?;
        let n = self.n;
        let fact: f64 = (1..self.k).map(|i| i as f64).product();
        let a: Vec<KForm> = (0..n)
            .map(|p| self.interior_basis(p))
            .collect::<Result<_>>()?;
        let b: Vec<KForm> = (0..n)
            .map(|q| other.interior_basis(q))
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(n, n, |p, q| {
            fact * a[p]
                .coeffs
                .iter()
                .zip(&b[q].coeffs)
                .map(|(x, y)| x * y)
                .sum::<f64>()
        }))
    }
}

fn check_dims(n: usize, k: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if k > n {
        return Err(Error::InvalidDegree { degree: k, n });
    }
    Ok(())
}

fn check_metric(n: usize, metric: &SymTensor2) -> Result<()> {
    if metric.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: metric.n(),
        });
    }
    Ok(())
}

/// E = L^{-T}; its columns form a positively oriented orthonormal frame for G = L Lᵀ.
fn orthonormalizer(metric: &SymTensor2) -> Result<DMatrix<f64>> {
    let l = metric.cholesky_factor()?;
    let l_inv = l.try_inverse().ok_or(Error::NotPositiveDefinite)?;
    Ok(l_inv.transpose())
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, c) in self.terms() {
            let sign = if c < 0.0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            if !first {
                write!(f, " ")?;
            }
            if (c.abs() - 1.0).abs() < 1e-15 {
                write!(f, "{sign}{idx}")?;
            } else {
                write!(f, "{sign}{}*{idx}", c.abs())?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for &KForm {
    type Output = KForm;
    fn add(self, rhs: &KForm) -> KForm {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &KForm {
    type Output = KForm;
    fn sub(self, rhs: &KForm) -> KForm {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl AddAssign<&KForm> for KForm {
    fn add_assign(&mut self, rhs: &KForm) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&KForm> for KForm {
    fn sub_assign(&mut self, rhs: &KForm) {
        self.axpy(-1.0, rhs);
    }
}

impl Neg for &KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self.scale(-1.0)
    }
}

impl Mul<&KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: &KForm) -> KForm {
        rhs.scale(self)
    }
}

/// Orthonormal frame adapted to a k-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedFrame {
    k: usize,
    vectors: Vec<Vector>,
    orientation: Orientation,
}

impl OrientedFrame {
    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn tangent(&self) -> &[Vector] {
        &self.vectors[..self.k]
    }

    pub fn normal(&self) -> &[Vector] {
        &self.vectors[self.k..]
    }

    /// Sign of det[v1 … vn] in standard coordinates.
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.vectors)
    }

    pub fn tangent_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(self.tangent())
    }
}

/// Orthonormalize `tangent_basis` in input order and complete it with
/// standard basis vectors, preferring the one with the largest residual.
pub fn gram_schmidt_adapt(tangent_basis: &[Vector], metric: &SymTensor2) -> Result<OrientedFrame> {
    let n = metric.n();
    if tangent_basis.len() > n {
        return Err(Error::InvalidDegree {
            degree: tangent_basis.len(),
            n,
        });
    }
    let project_out = |w: &mut Vector, done: &[Vector]| {
        for _ in 0..2 {
            for u in done {
                let c = metric.bilinear(w, u);
                w.axpy(-c, u, 1.0);
            }
        }
    };
    let mut out: Vec<Vector> = Vec::with_capacity(n);
    for (index, v) in tangent_basis.iter().enumerate() {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        let scale = metric.norm_of(v);
        let mut w = v.clone();
        project_out(&mut w, &out);
        let r = metric.norm_of(&w);
        if scale == 0.0 || r <= RANK_TOL * scale {
            return Err(Error::RankDeficient { index, residual: r });
        }
        out.push(w / r);
    }
    let k = out.len();
    while out.len() < n {
        let mut best: Option<(f64, Vector)> = None;
        for j in 0..n {
            let mut w = Vector::zeros(n);
            w[j] = 1.0;
            project_out(&mut w, &out);
            let r = metric.norm_of(&w);
            if best.as_ref().is_none_or(|(br, _)| r > *br) {
                best = Some((r, w));
            }
        }
        let (r, w) = best.expect("n ≥ 1");
        out.push(w / r);
    }
    let det = DMatrix::from_columns(&out).determinant();
    Ok(OrientedFrame {
        k,
        vectors: out,
        orientation: Orientation::from_sign(det),
    })
}

/// Coefficients of v1 ∧ … ∧ vk, so that a(v1, …, vk) = a · (v1 ∧ … ∧ vk).
pub fn decomposable(vectors: &[Vector]) -> Result<KForm> {
    let k = vectors.len();
    let n = vectors.first().map_or(0, |v| v.len());
    if let Some(v) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let mut out = KForm::zero(n, k)?;
    let mut buf = [[0.0; MAX_DIM]; MAX_DIM];
    for (slot, &m) in masks(n, k).iter().enumerate() {
        for (row, axis) in mask_axes(m).enumerate() {
            for (c, v) in vectors.iter().enumerate() {
                buf[row][c] = v[axis];
            }
        }
        out.coeffs[slot] = small_det(&mut buf, k);
    }
    Ok(out)
}

/// |v1 ∧ … ∧ vk|² as the Gram determinant.
pub fn wedge_norm_sq(vectors: &[Vector], metric: &SymTensor2) -> f64 {
    let k = vectors.len();
    DMatrix::from_fn(k, k, |a, b| metric.bilinear(&vectors[a], &vectors[b])).determinant()
}

/// Standard basis vector e_i (0-based) of R^n.
pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_lexicographic() {
        let m = masks(4, 2);
        let labels: Vec<Vec<usize>> = m.iter().map(|&x| mask_axes(x).collect()).collect();
        assert_eq!(
            labels,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(masks(8, 4).len(), 70);
    }

    #[test]
    fn det_of_permutation() {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        m[0][1] = 1.0;
        m[1][0] = 1.0;
        m[2][2] = 3.0;
        assert_eq!(small_det(&mut m, 3), -3.0);
    }

    #[test]
    fn parse_roundtrip() {
        let f = KForm::parse(7, "e123 + e145 - e167").unwrap();
        assert_eq!(f.to_string(), "e123 +e145 -e167");
        assert_eq!(KForm::parse(4, "e21").unwrap().component(&[0, 1]), -1.0);
        assert!(KForm::parse(4, "e12 + e3").is_err());
    }

    #[test]
    fn frame_completion_is_ordered() {
        let f = gram_schmidt_adapt(&[unit(4, 0), unit(4, 1)], &SymTensor2::identity(4)).unwrap();
        for (i, v) in f.vectors().iter().enumerate() {
            assert_eq!(v, &unit(4, i));
        }
        assert_eq!(f.orientation(), Orientation::Positive);
    }
}
