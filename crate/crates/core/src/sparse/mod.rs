//! Sparse and dense containers.
//!
//! [`CsrMatrix`] is the canonical tile-set source: rows are tiles and
//! nonzeros are atoms. [`CooMatrix`] is the unnormalized assembly format that
//! Matrix Market files and generators produce, and [`coo_to_csr`] turns it
//! into a validated CSR matrix.

mod generate;
mod matrix_market;

pub use generate::{generate_power_law_csr, generate_random_csr};
pub use matrix_market::{
    parse_matrix_market, read_matrix_market, write_matrix_market, MatrixMarketError,
};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("entry ({row}, {col}) outside a {rows} x {cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
    #[error("dimension mismatch: {what} expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(
        "requested {requested} nonzeros but a {rows} x {cols} matrix holds at most {capacity}"
    )]
    CapacityExceeded {
        requested: usize,
        rows: usize,
        cols: usize,
        capacity: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("graph adjacency must be square, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("edge {edge} has invalid weight {weight}; weights must be non-negative")]
    InvalidWeight { edge: usize, weight: f64 },
}

/// Coordinate-format matrix. Entries may be unsorted and may repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, capacity: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        if let Some(&(row, col, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(SparseError::IndexOutOfBounds {
                row,
                col,
                rows,
                cols,
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) -> Result<(), SparseError> {
        if row >= self.rows || col >= self.cols {
            return Err(SparseError::IndexOutOfBounds {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        self.entries.push((row, col, value));
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Swaps rows and columns. Column-major (CSC) input is handled by loading
    /// the transpose as CSR.
    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        }
    }
}

/// Compressed sparse row matrix.
///
/// Invariants, checked by [`CsrMatrix::from_parts`] and [`CsrMatrix::validate`]:
/// `row_offsets` has `rows + 1` nondecreasing entries from 0 to `nnz`, column
/// indices are strictly increasing within a row, and every column index is
/// below `cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T = f64> {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self, SparseError> {
        let m = Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// An `rows x cols` matrix with no nonzeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![T::ONE; n],
        }
    }

    pub fn validate(&self) -> Result<(), SparseError> {
        let bad = |msg: String| Err(SparseError::InvalidCsr(msg));
        if self.row_offsets.len() != self.rows + 1 {
            return bad(format!(
                "row_offsets has length {}, expected {}",
                self.row_offsets.len(),
                self.rows + 1
            ));
        }
        if self.col_indices.len() != self.values.len() {
            return bad(format!(
                "{} column indices but {} values",
                self.col_indices.len(),
                self.values.len()
            ));
        }
        if self.row_offsets[0] != 0 {
            return bad("row_offsets[0] is not 0".into());
        }
        if self.row_offsets[self.rows] != self.col_indices.len() {
            return bad(format!(
                "row_offsets[rows] = {} but nnz = {}",
                self.row_offsets[self.rows],
                self.col_indices.len()
            ));
        }
        for (row, w) in self.row_offsets.windows(2).enumerate() {
            if w[0] > w[1] {
                return bad(format!("row_offsets decreases at row {row}"));
            }
            let cols = &self.col_indices[w[0]..w[1]];
            if let Some(&c) = cols.iter().find(|&&c| c >= self.cols) {
                return bad(format!("column {c} in row {row} exceeds {}", self.cols));
            }
            if cols.windows(2).any(|p| p[0] >= p[1]) {
                return bad(format!("columns of row {row} are not strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Nonzero index range of `row`.
    pub fn row_range(&self, row: usize) -> std::ops::Range<usize> {
        self.row_offsets[row]..self.row_offsets[row + 1]
    }

    pub fn row_len(&self, row: usize) -> usize {
        self.row_offsets[row + 1] - self.row_offsets[row]
    }

    /// Same structure, values transformed by `f`.
    pub fn map_values<U: Scalar>(&self, f: impl FnMut(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: self.values.iter().copied().map(f).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> CsrMatrix<U> {
        self.map_values(|v| U::from_f64(v.to_f64()))
    }

    pub fn to_coo(&self) -> CooMatrix {
        let mut entries = Vec::with_capacity(self.nnz());
        for row in 0..self.rows {
            for nz in self.row_range(row) {
                entries.push((row, self.col_indices[nz], self.values[nz].to_f64()));
            }
        }
        CooMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for row in 0..self.rows {
            for nz in self.row_range(row) {
                d.set(row, self.col_indices[nz], self.values[nz]);
            }
        }
        d
    }
}

/// Sorts entries by `(row, col)`, sums duplicates, and builds CSR.
///
/// Summed duplicates are kept even when they cancel to zero, so the output
/// has exactly one nonzero per distinct coordinate.
pub fn coo_to_csr(coo: &CooMatrix) -> CsrMatrix<f64> {
    let mut entries = coo.entries.clone();
    entries.sort_by_key(|&(r, c, _)| (r, c));

    let mut row_offsets = vec![0usize; coo.rows + 1];
    let mut col_indices = Vec::with_capacity(entries.len());
    let mut values: Vec<f64> = Vec::with_capacity(entries.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in entries {
        if last == Some((r, c)) {
            *values.last_mut().expect("duplicate follows an entry") += v;
            continue;
        }
        last = Some((r, c));
        row_offsets[r + 1] += 1;
        col_indices.push(c);
        values.push(v);
    }
    for r in 0..coo.rows {
        row_offsets[r + 1] += row_offsets[r];
    }
    CsrMatrix {
        rows: coo.rows,
        cols: coo.cols,
        row_offsets,
        col_indices,
        values,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector<T = f64> {
    data: Vec<T>,
}

impl<T: Scalar> DenseVector<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![T::ZERO; len],
        }
    }

    pub fn filled(len: usize, value: T) -> Self {
        Self {
            data: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

impl<T> From<Vec<T>> for DenseVector<T> {
    fn from(data: Vec<T>) -> Self {
        Self { data }
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, SparseError> {
        if data.len() != rows * cols {
            return Err(SparseError::DimensionMismatch {
                what: "dense data length",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: T) {
        self.data[row * self.cols + col] = v;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> DenseVector<T> {
        (0..self.rows)
            .map(|r| self.get(r, col))
            .collect::<Vec<_>>()
            .into()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// Weighted directed graph in CSR adjacency form: tile = source vertex,
/// atom = outgoing edge, `col_indices` = neighbors, `values` = weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: CsrMatrix<f64>,
}

impl Graph {
    /// Rejects non-square adjacency and negative or NaN weights.
    pub fn new(adjacency: CsrMatrix<f64>) -> Result<Self, SparseError> {
        if adjacency.rows != adjacency.cols {
            return Err(SparseError::NotSquare {
                rows: adjacency.rows,
                cols: adjacency.cols,
            });
        }
        if let Some((edge, &weight)) = adjacency
            .values
            .iter()
            .enumerate()
            .find(|(_, w)| w.is_nan() || **w < 0.0)
        {
            return Err(SparseError::InvalidWeight { edge, weight });
        }
        Ok(Self { adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.rows
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz()
    }

    pub fn adjacency(&self) -> &CsrMatrix<f64> {
        &self.adjacency
    }

    #[inline]
    pub fn neighbor(&self, edge: usize) -> usize {
        self.adjacency.col_indices[edge]
    }

    #[inline]
    pub fn weight(&self, edge: usize) -> f64 {
        self.adjacency.values[edge]
    }

    pub fn out_degree(&self, vertex: usize) -> usize {
        self.adjacency.row_len(vertex)
    }
}
