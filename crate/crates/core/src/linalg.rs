//! Row-wise sparse storage, small dense matrices and an LU factorization.
//!
//! Systems handled here are desk scale (a few hundred unknowns at most), so
//! the dense routines are plain `O(n^3)` elimination and the sparse matrix is
//! a list of `(column, value)` pairs per row.

use std::ops::Range;

use crate::error::{check_len, Error, Result};

/// Square sparse matrix stored as one sorted `(column, value)` list per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.rows[i].push((i, 1.0));
        }
        m
    }

    /// Builds from a dense row-major square matrix, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            check_len(n, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    m.rows[i].push((j, v));
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `value` to entry `(row, col)`, creating it if absent.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.dim() && col < self.dim(), "entry out of range");
        let entries = &mut self.rows[row];
        match entries.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(pos) => entries[pos].1 += value,
            Err(pos) => entries.insert(pos, (col, value)),
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row]
            .binary_search_by_key(&col, |&(c, _)| c)
            .map(|pos| self.rows[row][pos].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut d = DenseMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Square sub-matrix on `range × range`, re-indexed from zero.
    pub fn principal_block(&self, range: Range<usize>) -> SparseMatrix {
        let start = range.start;
        let rows = self.rows[range.clone()]
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(j, _)| range.contains(j))
                    .map(|&(j, v)| (j - start, v))
                    .collect()
            })
            .collect();
        SparseMatrix { rows }
    }

    pub fn scaled(&self, factor: f64) -> SparseMatrix {
        SparseMatrix {
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| (j, v * factor)).collect())
                .collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows.iter().enumerate().all(|(i, row)| {
            row.iter()
                .all(|&(j, v)| (self.get(j, i) - v).abs() <= tol * v.abs().max(1.0))
        })
    }
}

/// The linear problem `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
}

impl LinearSystem {
    pub fn new(a: SparseMatrix, b: Vec<f64>) -> Result<Self> {
        check_len(a.dim(), b.len())?;
        Ok(Self { a, b })
    }

    pub fn from_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        Self::new(SparseMatrix::from_dense(a)?, b.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `A x - b`.
    pub fn residual_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.a.mul_vec(x)?;
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        Ok(r)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            check_len(cols, row.len())?;
            m.data[i * cols..(i + 1) * cols].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows.len(), cols.len());
        for (bi, i) in rows.enumerate() {
            for (bj, j) in cols.clone().enumerate() {
                m[(bi, bj)] = self[(i, j)];
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        Ok(self
            .data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| dot(row, x))
            .collect())
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, x.len())?;
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                y[j] += self[(i, j)] * x[i];
            }
        }
        Ok(y)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len(self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    /// Fails when a pivot falls below `1e-14` times the largest magnitude of
    /// its original row.
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::InvalidArgument(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let row_scale: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)].abs()).fold(0.0, f64::max))
            .collect();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let threshold = 1e-14 * row_scale[perm[p]];
            if pivot <= threshold || pivot == 0.0 {
                return Err(Error::Singular { column: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let diag = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / diag;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let n = self.n;
        // A^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w.
        let mut z = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                z[i] -= self.lu[(j, i)] * z[j];
            }
            z[i] /= self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] -= self.lu[(j, i)] * z[j];
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        check_len(self.n, b.rows())?;
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve(&b.column(j))?;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Result of a symmetric power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) const POWER_MAX_ITERS: usize = 20_000;
const POWER_TOL: f64 = 1e-13;

/// Dominant eigenvalue of a symmetric positive semi-definite operator.
///
/// The start vector is fixed (not random) so the estimate is reproducible.
pub fn power_iteration<F>(n: usize, mut apply: F) -> Result<PowerEstimate>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if n == 0 {
        return Ok(PowerEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * ((i as f64 + 1.0) * 0.754_877_666).fract())
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for it in 1..=POWER_MAX_ITERS {
        let w = apply(&v)?;
        let next = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(PowerEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            });
        }
        let change = (next - lambda).abs();
        lambda = next;
        v = w.into_iter().map(|x| x / nw).collect();
        if it > 2 && change <= POWER_TOL * lambda.abs() {
            return Ok(PowerEstimate {
                value: lambda,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(PowerEstimate {
        value: lambda,
        iterations: POWER_MAX_ITERS,
        converged: false,
    })
}

/// Spectral norm of a dense matrix via power iteration on `M^T M`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<PowerEstimate> {
    let est = power_iteration(m.cols(), |v| m.transpose_mul_vec(&m.mul_vec(v)?))?;
    Ok(PowerEstimate {
        value: est.value.max(0.0).sqrt(),
        ..est
    })
}
