//! Dense row-major matrices and the weighted ridge solvers.
//!
//! The output layer of every model in this crate is the minimiser of
//!
//! ```text
//! (C/2) ‖S (G W − T)‖² + (1/2) ‖W‖²
//! ```
//!
//! where `S` is a diagonal matrix of per-sample weights. The closed form can be
//! evaluated in feature space (`F × F` system, symmetric positive definite) or in
//! sample space (`N × N` system, nonsymmetric when `S ≠ I`). Both routes are
//! provided here and are algebraically identical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },
    #[error("non-finite value in {what} at ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },
    #[error("matrix data length {len} does not match shape {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("{matrix} is not numerically positive definite (pivot {pivot})")]
    NotPositiveDefinite { matrix: &'static str, pivot: usize },
    #[error("{matrix} is singular (pivot {pivot})")]
    Singular { matrix: &'static str, pivot: usize },
    #[error("regularisation parameter must be positive and finite, got {0}")]
    BadRegularization(f64),
    #[error("diagonal weight {index} = {value} outside [0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = LinalgError;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        Matrix::new(r.rows, r.cols, r.data)
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a 0×0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    op: "from_rows",
                    detail: format!("row {i} has {} entries, expected {cols}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, so zero-width matrices yield empty rows explicitly
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product. Rows of the output are computed independently, so the
    /// result does not depend on the number of worker threads.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                detail: format!(
                    "{}x{} times {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        if other.cols == 0 {
            return Ok(out);
        }
        let n = other.cols;
        out.data
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out_row)| {
                for (k, &a) in self.row(i).iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            });
        Ok(out)
    }

    /// Column-wise concatenation `[self, other]`.
    pub fn hconcat(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "hconcat",
                detail: format!("{} rows vs {} rows", self.rows, other.rows),
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Fails on the first NaN or infinite entry.
    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(p) => Err(LinalgError::NonFinite {
                what,
                row: p / self.cols.max(1),
                col: p % self.cols.max(1),
            }),
        }
    }
}

/// Diagonal of the per-sample score matrix `S`. Every value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalWeights(Vec<f64>);

impl DiagonalWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(LinalgError::WeightOutOfRange { index, value });
        }
        Ok(DiagonalWeights(values))
    }

    pub fn ones(n: usize) -> Self {
        DiagonalWeights(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn check_problem(g: &Matrix, s: &DiagonalWeights, t: &Matrix, c_reg: f64) -> Result<()> {
    if !(c_reg > 0.0 && c_reg.is_finite()) {
        return Err(LinalgError::BadRegularization(c_reg));
    }
    if g.rows() != t.rows() || g.rows() != s.len() {
        return Err(LinalgError::DimensionMismatch {
            op: "weighted ridge",
            detail: format!(
                "G has {} rows, T has {} rows, S has {} entries",
                g.rows(),
                t.rows(),
                s.len()
            ),
        });
    }
    g.ensure_finite("G")?;
    t.ensure_finite("T")?;
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Feature-space solve: `W = (Gᵗ S² G + I/C)⁻¹ Gᵗ S² T` via Cholesky.
pub fn solve_weighted_ridge_primal(
    g: &Matrix,
    s: &DiagonalWeights,
    t: &Matrix,
    c_reg: f64,
) -> Result<Matrix> {
    check_problem(g, s, t, c_reg)?;
    let f = g.cols();
    let s2: Vec<f64> = s.values().iter().map(|v| v * v).collect();

    // Gᵗ S as rows so every entry of the system is a contiguous dot product
    let gt = g.transpose();
    let gts2 = {
        let mut m = gt.clone();
        for a in 0..f {
            for (v, w) in m.row_mut(a).iter_mut().zip(&s2) {
                *v *= w;
            }
        }
        m
    };

    let inv_c = 1.0 / c_reg;
    let mut sys = Matrix::zeros(f, f);
    sys.data.par_chunks_mut(f.max(1)).enumerate().for_each(|(a, out)| {
        let wa = gts2.row(a);
        for (b, o) in out.iter_mut().enumerate().skip(a) {
            *o = dot(wa, gt.row(b));
        }
        out[a] += inv_c;
    });
    for a in 0..f {
        for b in 0..a {
            sys.data[a * f + b] = sys.data[b * f + a];
        }
    }
    let rhs = gts2.matmul(t)?;

    let chol = Cholesky::factor(sys, "G^t S^2 G + I/C")?;
    Ok(chol.solve(rhs))
}

/// Sample-space solve: `W = Gᵗ (I/C + S² G Gᵗ)⁻¹ S² T` via LU with partial pivoting.
pub fn solve_weighted_ridge_dual(
    g: &Matrix,
    s: &DiagonalWeights,
    t: &Matrix,
    c_reg: f64,
) -> Result<Matrix> {
    check_problem(g, s, t, c_reg)?;
    let n = g.rows();
    let s2: Vec<f64> = s.values().iter().map(|v| v * v).collect();
    let inv_c = 1.0 / c_reg;

    let mut gram = Matrix::zeros(n, n);
    gram.data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, out)| {
        let gi = g.row(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o = s2[i] * dot(gi, g.row(j));
        }
        out[i] += inv_c;
    });
    let mut rhs = t.clone();
    for i in 0..n {
        for v in rhs.row_mut(i) {
            *v *= s2[i];
        }
    }

    let lu = Lu::factor(gram, "I/C + S^2 G G^t")?;
    let lambda = lu.solve(rhs);
    g.transpose().matmul(&lambda)
}

/// `(C/2) ‖S (G W − T)‖² + (1/2) ‖W‖²`
pub fn weighted_ridge_objective(
    g: &Matrix,
    s: &DiagonalWeights,
    t: &Matrix,
    c_reg: f64,
    w: &Matrix,
) -> Result<f64> {
    let pred = g.matmul(w)?;
    if pred.shape() != t.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "objective",
            detail: format!("GW is {:?}, T is {:?}", pred.shape(), t.shape()),
        });
    }
    let mut loss = 0.0;
    for i in 0..t.rows() {
        let si2 = s.values()[i] * s.values()[i];
        let r: f64 = pred
            .row(i)
            .iter()
            .zip(t.row(i))
            .map(|(p, y)| (p - y) * (p - y))
            .sum();
        loss += si2 * r;
    }
    let reg: f64 = w.as_slice().iter().map(|v| v * v).sum();
    Ok(0.5 * c_reg * loss + 0.5 * reg)
}

/// Squared Euclidean distances between the rows of `a` and `b`.
pub fn pairwise_sq_dist(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "pairwise_sq_dist",
            detail: format!("{} columns vs {} columns", a.cols(), b.cols()),
        });
    }
    let m = b.rows();
    let mut out = Matrix::zeros(a.rows(), m);
    out.data.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, row)| {
        let ai = a.row(i);
        for (j, o) in row.iter_mut().enumerate() {
            *o = ai
                .iter()
                .zip(b.row(j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
        }
    });
    Ok(out)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    fn factor(mut a: Matrix, name: &'static str) -> Result<Self> {
        let n = a.rows();
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                let v = a.get(j, k);
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    matrix: name,
                    pivot: j,
                });
            }
            let d = d.sqrt();
            a.set(j, j, d);
            let (head, tail) = a.data.split_at_mut((j + 1) * n);
            let row_j = &head[j * n..j * n + j];
            tail.par_chunks_mut(n).for_each(|row_i| {
                let s = row_i[j] - dot(&row_i[..j], row_j);
                row_i[j] = s / d;
            });
        }
        // clear the strict upper triangle so `l` is a clean factor
        for i in 0..n {
            for j in i + 1..n {
                a.set(i, j, 0.0);
            }
        }
        Ok(Cholesky { l: a })
    }

    fn solve(&self, mut b: Matrix) -> Matrix {
        let n = self.l.rows();
        let nrhs = b.cols();
        for c in 0..nrhs {
            // L y = b
            for i in 0..n {
                let mut s = b.get(i, c);
                for k in 0..i {
                    s -= self.l.get(i, k) * b.get(k, c);
                }
                b.set(i, c, s / self.l.get(i, i));
            }
            // Lᵗ x = y
            for i in (0..n).rev() {
                let mut s = b.get(i, c);
                for k in i + 1..n {
                    s -= self.l.get(k, i) * b.get(k, c);
                }
                b.set(i, c, s / self.l.get(i, i));
            }
        }
        b
    }
}

/// LU factorisation with partial (row) pivoting, stored packed.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Matrix, name: &'static str) -> Result<Self> {
        let n = a.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a.get(i, k).abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(pmax > 0.0) || !pmax.is_finite() {
                return Err(LinalgError::Singular {
                    matrix: name,
                    pivot: k,
                });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..(k + 1) * n];
            let pivot = row_k[k];
            tail.par_chunks_mut(n).for_each(|row_i| {
                let f = row_i[k] / pivot;
                row_i[k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        row_i[j] -= f * row_k[j];
                    }
                }
            });
        }
        Ok(Lu { lu: a, perm })
    }

    fn solve(&self, b: Matrix) -> Matrix {
        let n = self.lu.rows();
        let nrhs = b.cols();
        let mut x = b.select_rows(&self.perm);
        for c in 0..nrhs {
            for i in 0..n {
                let mut s = x.get(i, c);
                for k in 0..i {
                    s -= self.lu.get(i, k) * x.get(k, c);
                }
                x.set(i, c, s);
            }
            for i in (0..n).rev() {
                let mut s = x.get(i, c);
                for k in i + 1..n {
                    s -= self.lu.get(i, k) * x.get(k, c);
                }
                x.set(i, c, s / self.lu.get(i, i));
            }
        }
        x
    }
}
