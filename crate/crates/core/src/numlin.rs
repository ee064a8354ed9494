//! Small dense linear algebra: ambient vectors, square matrices, antisymmetric
//! generators, the matrix exponential and polar re-orthonormalization.
//!
//! Dimensions in this crate stay small (n <= 16), so everything is stored
//! densely in row-major `Vec<f64>`s.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ambient vector in R^n, n >= 2, finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.len() < 2 || data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidVector);
        }
        Ok(Vector(data))
    }

    pub fn from_slice(data: &[f64]) -> Result<Self> {
        Self::new(data.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    /// Unit basis vector e_k in R^n.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Vector(v)
    }

    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Vector(data)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * s).collect())
    }

    pub fn neg(&self) -> Vector {
        self.scaled(-1.0)
    }

    pub fn normalized(&self) -> Vector {
        self.scaled(1.0 / self.norm())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        distance(&self.0, &other.0)
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Square matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from row-major data of length n*n.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix);
        }
        Ok(Matrix { n, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix);
        }
        Self::from_row_major(n, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    /// Matrix whose k-th column is `cols[k]`.
    pub fn from_columns(cols: &[Vector]) -> Result<Self> {
        let n = cols.len();
        let mut m = Self::zeros(n);
        for (k, c) in cols.iter().enumerate() {
            if c.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.dim(),
                });
            }
            for i in 0..n {
                m.data[i * n + k] = c[i];
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn column(&self, k: usize) -> Vector {
        Vector((0..self.n).map(|i| self.get(i, k)).collect())
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        mat_mul_into(n, &self.data, &other.data, &mut out.data);
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vector {
        let mut out = vec![0.0; self.n];
        mat_vec_into(self.n, &self.data, v, &mut out);
        Vector(out)
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// ‖MᵀM − I‖_max.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(self.n, &self.data)
    }

    pub fn determinant(&self) -> f64 {
        match Lu::factor(self) {
            Some(lu) => lu.determinant(),
            None => 0.0,
        }
    }

    /// Solve `self · X = rhs` for a square right-hand side.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        let lu = Lu::factor(self).ok_or(Error::RankDeficient)?;
        Ok(lu.solve(rhs))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

pub(crate) fn mat_mul_into(n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

#[inline]
pub(crate) fn mat_vec_into(n: usize, a: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = dot(&a[i * n..(i + 1) * n], v);
    }
}

pub(crate) fn orthogonality_defect(n: usize, m: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += m[k * n + i] * m[k * n + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
    }
    worst
}

/// Antisymmetric n×n matrix stored as its strict upper triangle, row by row:
/// (0,1), (0,2), …, (0,n−1), (1,2), …
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Antisym {
    n: usize,
    upper: Vec<f64>,
}

impl Antisym {
    pub fn zeros(n: usize) -> Self {
        Antisym {
            n,
            upper: vec![0.0; n * (n - 1) / 2],
        }
    }

    pub fn from_upper(n: usize, upper: Vec<f64>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if n < 2 || upper.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: upper.len(),
            });
        }
        if upper.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix);
        }
        Ok(Antisym { n, upper })
    }

    /// The planar generator [[0, −ω], [ω, 0]].
    pub fn planar(omega: f64) -> Self {
        Antisym {
            n: 2,
            upper: vec![-omega],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => 0.0,
            Less => self.upper[self.upper_index(i, j)],
            Greater => -self.upper[self.upper_index(j, i)],
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.n;
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.upper[self.upper_index(i, j)];
                m.data[i * n + j] = v;
                m.data[j * n + i] = -v;
            }
        }
        m
    }

    pub fn neg(&self) -> Antisym {
        Antisym {
            n: self.n,
            upper: self.upper.iter().map(|v| -v).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Antisym {
        Antisym {
            n: self.n,
            upper: self.upper.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Antisym) -> Antisym {
        Antisym {
            n: self.n,
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vector {
        self.to_matrix().mul_vec(v)
    }
}

/// A = X wᵀ − w Xᵀ, i.e. A_ij = X_i w_j − X_j w_i.
pub fn antisym_from_outer(x: &[f64], w: &[f64]) -> Result<Antisym> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: w.len(),
        });
    }
    let n = x.len();
    let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            upper.push(x[i] * w[j] - x[j] * w[i]);
        }
    }
    Antisym::from_upper(n, upper)
}

/// Diagonal Padé degree for the exponential.
const PADE_DEGREE: usize = 8;
/// Scaled generators are brought below this 1-norm before the Padé step.
const PADE_RADIUS: f64 = 0.5;

/// Matrix exponential of an antisymmetric generator, by scaling and squaring
/// with a [8/8] Padé approximant.
pub fn mat_exp(g: &Antisym) -> Matrix {
    expm(&g.to_matrix())
}

pub(crate) fn expm(a: &Matrix) -> Matrix {
    let n = a.dim();
    let norm = a.norm_one();
    let squarings = if norm > PADE_RADIUS {
        (norm / PADE_RADIUS).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scaled(0.5f64.powi(squarings));

    // c_k = (2m − k)! m! / ((2m)! k! (m − k)!)
    let m = PADE_DEGREE;
    let mut coeffs = vec![1.0; m + 1];
    for k in 1..=m {
        coeffs[k] = coeffs[k - 1] * (m + 1 - k) as f64 / ((2 * m + 1 - k) * k) as f64;
    }

    let mut numer = Matrix::identity(n);
    let mut denom = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        power = power.mul(&scaled);
        let term = power.scaled(*c);
        numer = numer.add(&term);
        denom = if k % 2 == 0 {
            denom.add(&term)
        } else {
            denom.sub(&term)
        };
    }
    let mut result = denom
        .solve(&numer)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// Nearest orthogonal matrix (polar factor) Q = R (RᵀR)^{-1/2}, required to
/// have positive determinant.
pub fn reorthonormalize(r: &Matrix) -> Result<Matrix> {
    let n = r.dim();
    let gram = r.transpose().mul(r);
    let (eigenvalues, vectors) = symmetric_eigen(&gram);
    let largest = eigenvalues.iter().cloned().fold(0.0, f64::max);
    let smallest = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smallest > 1e-12 * largest.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient);
    }
    // (RᵀR)^{-1/2} = V diag(λ^{-1/2}) Vᵀ
    let mut inv_sqrt = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for (k, lambda) in eigenvalues.iter().enumerate() {
                s += vectors.get(i, k) * vectors.get(j, k) / lambda.sqrt();
            }
            inv_sqrt.set(i, j, s);
        }
    }
    let q = r.mul(&inv_sqrt);
    if q.determinant() <= 0.0 {
        return Err(Error::NegativeDeterminant);
    }
    Ok(q)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues and a matrix whose columns are the matching eigenvectors.
pub(crate) fn symmetric_eigen(s: &Matrix) -> (Vec<f64>, Matrix) {
    let n = s.dim();
    let mut a = s.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum();
        let diag: f64 = (0..n).map(|i| a.get(i, i).powi(2)).sum();
        if off <= 1e-34 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| a.get(i, i)).collect(), v)
}

/// LU factorization with partial pivoting.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn factor(m: &Matrix) -> Option<Lu> {
        let n = m.dim();
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| lu[a * n + col].abs().total_cmp(&lu[b * n + col].abs()))
                .unwrap();
            if lu[pivot * n + col] == 0.0 {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    lu.swap(pivot * n + k, col * n + k);
                }
                perm.swap(pivot, col);
                sign = -sign;
            }
            let d = lu[col * n + col];
            for row in (col + 1)..n {
                let f = lu[row * n + col] / d;
                lu[row * n + col] = f;
                for k in (col + 1)..n {
                    lu[row * n + k] -= f * lu[col * n + k];
                }
            }
        }
        Some(Lu { n, lu, perm, sign })
    }

    fn determinant(&self) -> f64 {
        (0..self.n).fold(self.sign, |d, i| d * self.lu[i * self.n + i])
    }

    fn solve(&self, rhs: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for col in 0..n {
            let mut y: Vec<f64> = (0..n).map(|i| rhs.get(self.perm[i], col)).collect();
            for i in 0..n {
                for k in 0..i {
                    y[i] -= self.lu[i * n + k] * y[k];
                }
            }
            for i in (0..n).rev() {
                for k in (i + 1)..n {
                    y[i] -= self.lu[i * n + k] * y[k];
                }
                y[i] /= self.lu[i * n + i];
            }
            for i in 0..n {
                out.set(i, col, y[i]);
            }
        }
        out
    }
}
