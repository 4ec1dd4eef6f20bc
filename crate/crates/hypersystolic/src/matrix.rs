//! Dense row-major matrices over a pluggable element type.
//!
//! The element type only needs to behave like a semiring member (`Zero`,
//! `+`, `*`): that is enough for every algorithm in this crate, and it is
//! deliberately weaker than "number" so that whole sub-matrices can be used
//! as elements when multiplying block-wise (see the `mapping` module).
//!
//! Public element access is 1-based: `at(1, 1)` is the top-left entry.
//! That matches how the algorithms here are usually written down, and all
//! index juggling against 0-based storage happens in exactly one place.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Minimum contract for matrix elements: clonable, comparable, and a
/// semiring (`Zero` brings `+` with it).
pub trait RingScalar: Clone + PartialEq + fmt::Debug + Zero + Mul<Output = Self> {}

impl<T> RingScalar for T where T: Clone + PartialEq + fmt::Debug + Zero + Mul<Output = Self> {}

/// Elements that can report a distance to another element, so results can
/// be compared against an oracle with a tolerance. Exact types return the
/// exact difference; `approx_equal` with tolerance 0 then means bit-for-bit
/// agreement.
pub trait MetricScalar: RingScalar {
    fn abs_diff(&self, other: &Self) -> f64;
}

impl MetricScalar for i64 {
    fn abs_diff(&self, other: &Self) -> f64 {
        (self - other).unsigned_abs() as f64
    }
}

impl MetricScalar for f64 {
    fn abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl MetricScalar for Complex64 {
    fn abs_diff(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

/// Dense matrix, row-major storage.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T> Matrix<T> {
    /// Builds from a row-major element vector. `data.len()` must equal
    /// `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::WrongSize {
                expected_rows: rows,
                expected_cols: cols,
                rows: if cols == 0 { 0 } else { data.len() / cols },
                cols,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::WrongSize {
                    expected_rows: r,
                    expected_cols: c,
                    rows: r,
                    cols: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
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

    /// 1-based element access. Panics on an out-of-range index; this is a
    /// programming error, not an input error.
    pub fn at(&self, row: usize, col: usize) -> &T {
        assert!(
            (1..=self.rows).contains(&row) && (1..=self.cols).contains(&col),
            "index ({row}, {col}) out of range for a {}x{} matrix (indices are 1-based)",
            self.rows,
            self.cols
        );
        &self.data[(row - 1) * self.cols + (col - 1)]
    }

    /// 1-based element write; same panic rules as `at`.
    pub fn set_at(&mut self, row: usize, col: usize, value: T) {
        assert!(
            (1..=self.rows).contains(&row) && (1..=self.cols).contains(&col),
            "index ({row}, {col}) out of range for a {}x{} matrix (indices are 1-based)",
            self.rows,
            self.cols
        );
        self.data[(row - 1) * self.cols + (col - 1)] = value;
    }

    /// 0-based access for the index-heavy internals.
    pub(crate) fn get0(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.cols + col]
    }

    pub(crate) fn set0(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.cols + col] = value;
    }

    /// Row-major view of the raw element storage.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T: RingScalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::filled(rows, cols, T::zero())
    }

    pub fn identity(n: usize) -> Self
    where
        T: num_traits::One,
    {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set0(i, i, T::one());
        }
        m
    }

    /// Elementwise sum; shapes must agree.
    pub fn add(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::WrongSize {
                expected_rows: self.rows,
                expected_cols: self.cols,
                rows: other.rows,
                cols: other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, k: &T) -> Matrix<T> {
        let data = self.data.iter().map(|v| v.clone() * k.clone()).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

/// Schoolbook triple loop, the oracle every fancier algorithm is checked
/// against. `a` is `n x m`, `b` is `m x q`, result `n x q`.
pub fn naive_multiply<T: RingScalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols != b.rows {
        return Err(Error::ShapeMismatch {
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut c: Matrix<T> = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get0(i, k).clone();
            for j in 0..b.cols {
                let cur = c.get0(i, j).clone();
                c.set0(i, j, cur + aik.clone() * b.get0(k, j).clone());
            }
        }
    }
    Ok(c)
}

/// True when the matrices have the same shape and every pair of elements
/// is within `tol` of each other. `tol == 0.0` demands exact equality.
pub fn approx_equal<T: MetricScalar>(a: &Matrix<T>, b: &Matrix<T>, tol: f64) -> bool {
    if a.rows != b.rows || a.cols != b.cols {
        return false;
    }
    a.data
        .iter()
        .zip(&b.data)
        .all(|(x, y)| x.abs_diff(y) <= tol)
}
