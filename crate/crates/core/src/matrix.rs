//! Dense matrices over any [`Field`], plus ordered index sets for
//! row/column selection.
//!
//! Matrices are row-major and carry their field value, so arithmetic
//! performed through a matrix uses that field's semantics (exact, emulated
//! at some precision, or native f64). Indices are 0-based throughout the
//! crate.

use std::fmt;

use crate::field::{ExactField, Field, SqrtField};
use crate::scalar::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from matrix shape/index misuse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("index {index} out of bounds for dimension {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("duplicate index {0} in index set")]
    DuplicateIndex(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },
}

/// An ordered set of distinct indices (0-based).
///
/// Insertion order is preserved — pivot sequences are index sets whose order
/// is the elimination order — and a sorted view is available for use as a
/// plain subset.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IndexSet {
    order: Vec<usize>,
}

impl IndexSet {
    pub fn new() -> Self {
        IndexSet { order: Vec::new() }
    }

    /// The set `{start, start+1, .., end-1}` in increasing order.
    pub fn range(start: usize, end: usize) -> Self {
        IndexSet { order: (start..end).collect() }
    }

    pub fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Result<Self, MatrixError> {
        let mut s = IndexSet::new();
        for i in iter {
            s.push(i)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, index: usize) -> Result<(), MatrixError> {
        if self.contains(index) {
            return Err(MatrixError::DuplicateIndex(index));
        }
        self.order.push(index);
        Ok(())
    }

    pub fn contains(&self, index: usize) -> bool {
        self.order.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Indices in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().copied()
    }

    /// Indices in insertion order as a slice.
    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    /// The same indices, strictly increasing.
    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.order.clone();
        v.sort_unstable();
        v
    }

    /// First `k` indices in insertion order (the prefix set).
    pub fn prefix(&self, k: usize) -> IndexSet {
        IndexSet { order: self.order[..k].to_vec() }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.order.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Dense row-major matrix over a field.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> DenseMatrix<F> {
    pub fn zeros(field: F, rows: usize, cols: usize) -> Self {
        let z = field.zero();
        DenseMatrix { data: vec![z; rows * cols], field, rows, cols }
    }

    pub fn identity(field: F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            let one = m.field.one();
            m.set(i, i, one);
        }
        m
    }

    pub fn from_fn(field: F, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F::Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { field, rows, cols, data }
    }

    /// Build from rows; all rows must have equal length.
    pub fn from_rows(field: F, rows: Vec<Vec<F::Elem>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(MatrixError::DimensionMismatch {
                    left: format!("row of length {}", row.len()),
                    right: format!("row of length {c}"),
                });
            }
            data.extend(row);
        }
        Ok(DenseMatrix { field, rows: r, cols: c, data })
    }

    /// Convenience for tests: entries from integer literals, row-major.
    pub fn from_i64_rows(field: F, rows: &[&[i64]]) -> Self {
        let f = field.clone();
        Self::from_rows(
            field,
            rows.iter().map(|r| r.iter().map(|&v| f.from_i64(v)).collect()).collect(),
        )
        .expect("ragged integer rows")
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &F::Elem {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F::Elem) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F::Elem] {
        assert!(i < self.rows);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<F::Elem> {
        assert!(j < self.cols);
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        assert!(a < self.rows && b < self.rows);
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// The submatrix with the given rows and columns, in the order the index
    /// sets list them.
    pub fn submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<DenseMatrix<F>, MatrixError> {
        for &i in rows.as_slice() {
            if i >= self.rows {
                return Err(MatrixError::IndexOutOfBounds { index: i, len: self.rows });
            }
        }
        for &j in cols.as_slice() {
            if j >= self.cols {
                return Err(MatrixError::IndexOutOfBounds { index: j, len: self.cols });
            }
        }
        let field = self.field.clone();
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows.as_slice() {
            for &j in cols.as_slice() {
                data.push(self.get(i, j).clone());
            }
        }
        Ok(DenseMatrix { field, rows: rows.len(), cols: cols.len(), data })
    }

    pub fn transpose(&self) -> DenseMatrix<F> {
        let field = self.field.clone();
        DenseMatrix::from_fn(field, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn matmul(&self, other: &DenseMatrix<F>) -> Result<DenseMatrix<F>, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::DimensionMismatch {
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let f = self.field.clone();
        let mut out = DenseMatrix::zeros(f.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = f.zero();
                for k in 0..self.cols {
                    acc = f.add(&acc, &f.mul(self.get(i, k), other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn sub_matrix(&self, other: &DenseMatrix<F>) -> Result<DenseMatrix<F>, MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::DimensionMismatch {
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let f = self.field.clone();
        Ok(DenseMatrix::from_fn(f.clone(), self.rows, self.cols, |i, j| {
            f.sub(self.get(i, j), other.get(i, j))
        }))
    }

    /// Apply a row permutation: row `i` of the result is row `perm[i]` of
    /// `self` (`perm` maps positions to source rows).
    pub fn permute_rows(&self, perm: &[usize]) -> DenseMatrix<F> {
        assert_eq!(perm.len(), self.rows);
        let f = self.field.clone();
        DenseMatrix::from_fn(f, self.rows, self.cols, |i, j| self.get(perm[i], j).clone())
    }

    /// Largest entry magnitude; `None` for an empty matrix.
    pub fn max_abs(&self) -> Option<F::Elem> {
        let f = &self.field;
        self.data
            .iter()
            .map(|v| f.abs(v))
            .reduce(|a, b| if f.cmp(&a, &b) == std::cmp::Ordering::Less { b } else { a })
    }

    /// Sum of squared entries (the squared Hilbert–Schmidt / Frobenius norm),
    /// computed in the matrix's own field.
    pub fn hs_norm_sq(&self) -> F::Elem {
        let f = &self.field;
        let mut acc = f.zero();
        for v in &self.data {
            acc = f.add(&acc, &f.mul(v, v));
        }
        acc
    }

    /// Entry-wise conversion into another field through exact rationals.
    pub fn convert<G: Field>(&self, target: &G) -> DenseMatrix<G> {
        let f = &self.field;
        DenseMatrix::from_fn(target.clone(), self.rows, self.cols, |i, j| {
            target.from_rational(&f.to_rational(self.get(i, j)))
        })
    }

    /// Exact rational image of the matrix.
    pub fn to_exact(&self) -> DenseMatrix<ExactField> {
        self.convert(&ExactField)
    }
}

impl<F: SqrtField> DenseMatrix<F> {
    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> F::Elem {
        self.field.sqrt(&self.hs_norm_sq())
    }
}

/// Euclidean norm of a vector of field elements.
pub fn vec_norm<F: SqrtField>(field: &F, v: &[F::Elem]) -> F::Elem {
    let mut acc = field.zero();
    for x in v {
        acc = field.add(&acc, &field.mul(x, x));
    }
    field.sqrt(&acc)
}

/// Dot product in the given field.
pub fn dot<F: Field>(field: &F, a: &[F::Elem], b: &[F::Elem]) -> F::Elem {
    assert_eq!(a.len(), b.len(), "dot product dimension mismatch");
    let mut acc = field.zero();
    for (x, y) in a.iter().zip(b) {
        acc = field.add(&acc, &field.mul(x, y));
    }
    acc
}

/// Exact rational matrix type used pervasively.
pub type RationalMatrix = DenseMatrix<ExactField>;

/// Build an exact matrix straight from rationals.
pub fn rational_matrix(rows: Vec<Vec<Rational>>) -> Result<RationalMatrix, MatrixError> {
    DenseMatrix::from_rows(ExactField, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ExactField, F64Field};
    use crate::scalar::{rat, rat_i64};

    #[test]
    fn index_set_preserves_insertion_order() {
        let mut s = IndexSet::new();
        for i in [4, 1, 3] {
            s.push(i).unwrap();
        }
        assert_eq!(s.as_slice(), &[4, 1, 3]);
        assert_eq!(s.sorted(), vec![1, 3, 4]);
        assert_eq!(s.prefix(2).as_slice(), &[4, 1]);
        assert!(s.contains(3));
        assert!(!s.contains(0));
        assert_eq!(s.push(1), Err(MatrixError::DuplicateIndex(1)));
        assert_eq!(IndexSet::range(2, 5).as_slice(), &[2, 3, 4]);
    }

    #[test]
    fn submatrix_follows_index_order() {
        let m = DenseMatrix::from_i64_rows(ExactField, &[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        let rows = IndexSet::from_iter([2, 0]).unwrap();
        let cols = IndexSet::from_iter([1, 2]).unwrap();
        let s = m.submatrix(&rows, &cols).unwrap();
        assert_eq!(s.rows(), 2);
        assert_eq!(*s.get(0, 0), rat_i64(8));
        assert_eq!(*s.get(0, 1), rat_i64(9));
        assert_eq!(*s.get(1, 0), rat_i64(2));
        let bad = IndexSet::from_iter([5]).unwrap();
        assert!(m.submatrix(&bad, &cols).is_err());
    }

    #[test]
    fn matmul_and_identity() {
        let a = DenseMatrix::from_i64_rows(ExactField, &[&[1, 2], &[3, 4]]);
        let i = DenseMatrix::identity(ExactField, 2);
        assert_eq!(a.matmul(&i).unwrap(), a);
        let b = DenseMatrix::from_i64_rows(ExactField, &[&[0, 1], &[1, 0]]);
        let ab = a.matmul(&b).unwrap();
        assert_eq!(*ab.get(0, 0), rat_i64(2));
        assert_eq!(*ab.get(0, 1), rat_i64(1));
    }

    #[test]
    fn norms_and_max() {
        let m = DenseMatrix::from_i64_rows(ExactField, &[&[3, -4], &[0, 12]]);
        assert_eq!(m.hs_norm_sq(), rat_i64(9 + 16 + 144));
        assert_eq!(m.max_abs().unwrap(), rat_i64(12));
        let f = DenseMatrix::from_i64_rows(F64Field, &[&[3, 4]]);
        assert_eq!(f.hs_norm(), 5.0);
    }

    #[test]
    fn permute_rows_maps_positions_to_sources() {
        let m = DenseMatrix::from_i64_rows(ExactField, &[&[1, 1], &[2, 2], &[3, 3]]);
        let p = m.permute_rows(&[2, 0, 1]);
        assert_eq!(*p.get(0, 0), rat_i64(3));
        assert_eq!(*p.get(1, 0), rat_i64(1));
        assert_eq!(*p.get(2, 0), rat_i64(2));
    }

    #[test]
    fn conversion_rounds_through_rationals() {
        let m = rational_matrix(vec![vec![rat(1, 3), rat(1, 2)]]).unwrap();
        let f = m.convert(&F64Field);
        assert_eq!(*f.get(0, 0), 1.0 / 3.0);
        assert_eq!(*f.get(0, 1), 0.5);
        let back = f.to_exact();
        assert_eq!(*back.get(0, 1), rat(1, 2));
    }
}
