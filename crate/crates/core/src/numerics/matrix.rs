use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Columns (or rows) handed to one worker in the parallel kernels.
const CHUNK: usize = 256;

/// Row-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(format!(
                "matrix shape {rows}x{cols} must be at least 1x1"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_row_major(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim, dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row length",
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.cols..(p + 1) * self.cols]
    }

    pub fn get(&self, p: usize, j: usize) -> f64 {
        self.data[p * self.cols + j]
    }

    /// Copies column `j` out of the row-major storage.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|p| self.get(p, j)).collect()
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for p in 0..self.rows {
            for (acc, &a) in sq.iter_mut().zip(self.row(p)) {
                *acc += a * a;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Dense vector of `f64`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| c * x).collect())
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl AsRef<[f64]> for DenseVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Inner product over four interleaved partial sums. The summation order is
/// fixed, so results are reproducible; it differs from a left-to-right sum
/// in the last bits.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (x, y) = (&x[..n], &y[..n]);
    let mut acc = [0.0f64; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += a[l] * b[l];
        }
    }
    let tail: f64 = xr.iter().zip(yr).map(|(a, b)| a * b).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn squared_norm(x: &[f64]) -> f64 {
    dot(x, x)
}

pub fn matvec(a: &DenseMatrix, x: &[f64]) -> Result<DenseVector> {
    matvec_with(a, x, Execution::Sequential)
}

/// `A x`, splitting rows across workers under a parallel policy.
pub fn matvec_with(a: &DenseMatrix, x: &[f64], exec: Execution) -> Result<DenseVector> {
    if x.len() != a.cols {
        return Err(Error::DimensionMismatch {
            context: "matvec",
            expected: a.cols,
            found: x.len(),
        });
    }
    let mut out = vec![0.0; a.rows];
    exec.for_each_chunk(&mut out, CHUNK, |offset, chunk| {
        for (i, y) in chunk.iter_mut().enumerate() {
            *y = dot(a.row(offset + i), x);
        }
    });
    Ok(DenseVector(out))
}

pub fn matvec_transposed(a: &DenseMatrix, y: &[f64]) -> Result<DenseVector> {
    matvec_transposed_with(a, y, Execution::Sequential)
}

/// `Aᵀ y` without forming `Aᵀ`.
///
/// Accumulates `y_p · row_p` row by row so the inner loop streams contiguous
/// memory. Workers own disjoint column blocks and visit rows in the same
/// order, so the result does not depend on the policy.
pub fn matvec_transposed_with(a: &DenseMatrix, y: &[f64], exec: Execution) -> Result<DenseVector> {
    if y.len() != a.rows {
        return Err(Error::DimensionMismatch {
            context: "transposed matvec",
            expected: a.rows,
            found: y.len(),
        });
    }
    let mut out = vec![0.0; a.cols];
    exec.for_each_chunk(&mut out, CHUNK, |offset, chunk| {
        let width = chunk.len();
        for (p, &yp) in y.iter().enumerate() {
            let row = &a.row(p)[offset..offset + width];
            for (acc, &apj) in chunk.iter_mut().zip(row) {
                *acc += yp * apj;
            }
        }
    });
    Ok(DenseVector(out))
}
