use std::path::Path;

use nalgebra::DMatrix;

use super::tsv;
use crate::error::{Error, Result};

/// Real-valued `n × p` matrix with optional row and column labels.
///
/// Every entry is finite. Storage is a column-major [`DMatrix`]; constructors
/// taking flat vectors expect row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    values: DMatrix<f64>,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::zeros(n_rows, n_cols))
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::InvalidMatrix(format!(
                "{} values supplied for a {}x{} matrix",
                values.len(),
                n_rows,
                n_cols
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(n_rows, n_cols, &values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::InvalidMatrix(format!(
                "row {} has {} entries, expected {}",
                bad,
                rows[bad].len(),
                n_cols
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), n_cols, flat)
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(n_rows, n_cols, f))
    }

    /// Square matrix with `diag` on the diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry {} at ({}, {})",
                values[idx], r, c
            )));
        }
        Ok(Self::from_matrix_unchecked(values))
    }

    /// Wraps a matrix produced by arithmetic on finite inputs.
    pub(crate) fn from_matrix_unchecked(values: DMatrix<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        DenseMatrix {
            values,
            row_labels: None,
            col_labels: None,
        }
    }

    pub fn with_row_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::InvalidMatrix(format!(
                "{} row labels for {} rows",
                labels.len(),
                self.n_rows()
            )));
        }
        self.row_labels = Some(labels);
        Ok(self)
    }

    pub fn with_col_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_cols() {
            return Err(Error::InvalidMatrix(format!(
                "{} column labels for {} columns",
                labels.len(),
                self.n_cols()
            )));
        }
        self.col_labels = Some(labels);
        Ok(self)
    }

    /// Copies the labels of `other`, which must have the same shape.
    pub(crate) fn with_labels_of(mut self, other: &DenseMatrix) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        self.row_labels = other.row_labels.clone();
        self.col_labels = other.col_labels.clone();
        self
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    /// Entries in storage (column-major) order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.values.iter()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_rows() {
            out.extend(self.values.row(i).iter());
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Result<DenseMatrix> {
        Ok(DenseMatrix::from_matrix(&self.values * c)?.with_labels_of(self))
    }

    pub(crate) fn ensure_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    /// Reads a tab-separated matrix. A header row and a leading label column
    /// are detected from non-numeric fields.
    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        tsv::parse_matrix(&text, path)
    }

    pub fn parse_tsv(text: &str, origin: impl AsRef<Path>) -> Result<Self> {
        tsv::parse_matrix(text, origin.as_ref())
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_tsv_with_corner(path, "id")
    }

    /// Writes the matrix; `corner` names the label column in the header when
    /// both label sets are present.
    pub fn write_tsv_with_corner(&self, path: impl AsRef<Path>, corner: &str) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv_string(corner)).map_err(|e| Error::io(path, e))
    }

    pub fn to_tsv_string(&self, corner: &str) -> String {
        tsv::render_matrix(self, corner)
    }
}

/// Row-major boolean matrix, used for detection calls and ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        BoolMatrix {
            n_rows,
            n_cols,
            data: vec![false; n_rows * n_cols],
        }
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                data.push(f(i, j));
            }
        }
        BoolMatrix { n_rows, n_cols, data }
    }

    /// True where the entry of `m` is nonzero.
    pub fn support_of(m: &DenseMatrix) -> Self {
        Self::from_fn(m.n_rows(), m.n_cols(), |i, j| m.get(i, j) != 0.0)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.n_cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.n_cols + col] = value;
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Entries in row-major order.
    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let m = DMatrix::from_fn(self.n_rows, self.n_cols, |i, j| {
            if self.get(i, j) {
                1.0
            } else {
                0.0
            }
        });
        DenseMatrix::from_matrix_unchecked(m)
    }

    /// Reads any numeric matrix TSV; nonzero entries become `true`.
    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::support_of(&DenseMatrix::read_tsv(path)?))
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_dense().write_tsv(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        assert!(DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_row_major(1, 2, vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn rejects_wrong_value_count() {
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn row_major_layout() {
        let m = DenseMatrix::from_row_major(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.to_row_major(), vec![1., 2., 3., 4., 5., 6.]);
    }

    #[test]
    fn label_counts_checked() {
        let m = DenseMatrix::zeros(2, 3);
        assert!(m.clone().with_row_labels(vec!["a".into()]).is_err());
        assert!(m.clone().with_col_labels(vec!["a".into(), "b".into(), "c".into()]).is_ok());
    }

    #[test]
    fn bool_matrix_support() {
        let m = DenseMatrix::from_row_major(2, 2, vec![0., 1.5, -2., 0.]).unwrap();
        let mask = BoolMatrix::support_of(&m);
        assert_eq!(mask.as_slice(), &[false, true, true, false]);
        assert_eq!(mask.count_true(), 2);
    }
}
