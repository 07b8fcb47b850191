//! Complex sparse (CSR) and dense matrix containers.

use faer::linalg::matmul::matmul;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Accum, ColMut, ColRef, Mat, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Euclidean norm of a complex vector.
pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum modulus of a complex vector.
pub fn norm_inf(x: &[C64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// Complex sparse matrix in compressed-row form. Duplicate entries are
/// summed on construction; the sparsity structure keeps explicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from `(row, col, value)` triplets. Duplicates are summed in input
    /// order, so a fixed triplet order gives bit-identical matrices.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= nrows || *c >= ncols) {
            return Err(Error::DimensionMismatch(format!(
                "triplet ({r}, {c}) outside a {nrows}x{ncols} matrix"
            )));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, crate::linalg::ONE)).collect())
            .expect("identity triplets are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    /// `y ← y + alpha·A·x`.
    pub fn mul_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi += alpha * acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.mul_add(ONE, x, &mut y);
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)).collect(),
        )
        .expect("transposed triplets are in range")
    }

    pub fn scaled(&self, s: C64) -> SparseMatrix {
        SparseMatrix {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `self + s·other` (same shape).
    pub fn add_scaled(&self, s: C64, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{} sparse matrices",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let trips = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, v * s)))
            .collect();
        SparseMatrix::from_triplets(self.nrows, self.ncols, trips)
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn block(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> SparseMatrix {
        let trips = rows
            .clone()
            .flat_map(|i| {
                let cols = cols.clone();
                let (r0, c0) = (rows.start, cols.start);
                self.row(i)
                    .filter(move |(j, _)| cols.contains(j))
                    .map(move |(j, v)| (i - r0, j - c0, v))
                    .collect::<Vec<_>>()
            })
            .collect();
        SparseMatrix::from_triplets(rows.len(), cols.len(), trips)
            .expect("block triplets are in range")
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d.add_at(i, j, v);
        }
        d
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, C64>> {
        let trips: Vec<Triplet<usize, usize, C64>> = self
            .triplets()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::DimensionMismatch(format!("sparse conversion failed: {e:?}")))
    }
}

/// Complex dense matrix (column-major).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(Mat<C64>);

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix(Mat::zeros(nrows, ncols))
    }

    pub fn from_fn(nrows: usize, ncols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        DenseMatrix(Mat::from_fn(nrows, ncols, f))
    }

    pub fn identity(n: usize) -> Self {
        DenseMatrix::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_faer(m: Mat<C64>) -> Self {
        DenseMatrix(m)
    }

    pub fn as_faer(&self) -> &Mat<C64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] += v;
    }

    /// `y ← y + alpha·A·x`.
    pub fn mul_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        matmul(
            ColMut::from_slice_mut(y).as_mat_mut(),
            Accum::Add,
            self.0.as_ref(),
            ColRef::from_slice(x).as_mat(),
            alpha,
            Par::Seq,
        );
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows()];
        self.mul_add(ONE, x, &mut y);
        y
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix(self.0.transpose().to_owned())
    }

    pub fn scaled(&self, s: C64) -> DenseMatrix {
        DenseMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.get(i, j) * s)
    }

    /// `self + s·other` for a sparse matrix of the same shape.
    pub fn plus_sparse(&self, s: C64, other: &SparseMatrix) -> Result<DenseMatrix> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} sparse to {}x{} dense",
                other.nrows(),
                other.ncols(),
                self.nrows(),
                self.ncols()
            )));
        }
        let mut out = self.clone();
        for (i, j, v) in other.triplets() {
            out.add_at(i, j, v * s);
        }
        Ok(out)
    }

    pub fn norm_fro(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                s += self.0[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Frobenius norm of `self − other`.
    pub fn distance_fro(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.nrows(), self.ncols()), (other.nrows(), other.ncols()));
        let mut s = 0.0;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                s += (self.0[(i, j)] - other.0[(i, j)]).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        (0..self.ncols()).all(|j| (0..self.nrows()).all(|i| self.0[(i, j)].is_finite()))
    }

    /// Copy of rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.get(rows.start + i, cols.start + j)
        })
    }

    /// Write `src` into this matrix with its top-left corner at `(r0, c0)`, adding.
    pub fn add_block(&mut self, r0: usize, c0: usize, src: &DenseMatrix) {
        for j in 0..src.ncols() {
            for i in 0..src.nrows() {
                self.0[(r0 + i, c0 + j)] += src.get(i, j);
            }
        }
    }

    /// Singular values in non-increasing order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let mut s = self
            .0
            .singular_values()
            .map_err(|e| Error::DimensionMismatch(format!("SVD failed: {e:?}")))?;
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }
}
