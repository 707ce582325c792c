//! Small dense matrices over a [`Field`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::Field;

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch(
                "ragged rows in matrix literal".into(),
            ));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn diag(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
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

    /// Dimension of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.clone() * s.clone()).collect(),
        }
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(T::to_f64)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, x| acc + x.clone() * x.clone())
    }

    pub fn frobenius_f64(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.to_f64().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_f64(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc = acc + self[(i, k)].clone() * other[(k, i)].clone();
            }
        }
        acc
    }

    /// `Tr(selfᵀ · other)`, the entrywise dot product.
    pub fn trace_product_t(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for (a, b) in self.data.iter().zip(&other.data) {
            if !a.is_zero() {
                acc = acc + a.clone() * b.clone();
            }
        }
        acc
    }

    pub fn symmetric_part(&self) -> Self {
        let half = T::from_ratio(1, 2);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)].clone() + self[(j, i)].clone()) * half.clone()
        })
    }

    pub fn determinant(&self) -> T {
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..n {
            let Some(p) = pivot_row(&a, col, col) else {
                return T::zero();
            };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pivot = a[(col, col)].clone();
            det = det * pivot.clone();
            let inv = pivot.inv().expect("nonzero pivot");
            for r in col + 1..n {
                let factor = a[(r, col)].clone() * inv.clone();
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = a[(col, c)].clone() * factor.clone();
                    a[(r, c)] = a[(r, c)].clone() - v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Solves `self · X = rhs`; `None` when singular.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let p = pivot_row(&a, col, col)?;
            if p != col {
                a.swap_rows(p, col);
                b.swap_rows(p, col);
            }
            let inv = a[(col, col)].inv()?;
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)].clone() * inv.clone();
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = a[(col, c)].clone() * factor.clone();
                    a[(r, c)] = a[(r, c)].clone() - v;
                }
                for c in 0..m {
                    let v = b[(col, c)].clone() * factor.clone();
                    b[(r, c)] = b[(r, c)].clone() - v;
                }
            }
        }
        for r in 0..n {
            let inv = a[(r, r)].inv()?;
            for c in 0..m {
                b[(r, c)] = b[(r, c)].clone() * inv.clone();
            }
        }
        Some(b)
    }

    pub fn inverse(&self) -> Option<Self> {
        self.solve(&Self::identity(self.rows))
    }

    /// Basis of the right null space (columns of the returned vectors).
    ///
    /// Exact on exact backends; on floats, entries below `tol` are treated as zero.
    pub fn null_space(&self, tol: f64) -> Vec<Vec<T>> {
        let (rref, pivots) = self.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![T::zero(); self.cols];
                v[f] = T::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -rref[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    fn rref(&self, tol: f64) -> (Self, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let Some(p) = pivot_row_tol(&a, row, col, tol) else {
                continue;
            };
            a.swap_rows(p, row);
            let inv = a[(row, col)].inv().expect("nonzero pivot");
            for c in 0..self.cols {
                a[(row, c)] = a[(row, c)].clone() * inv.clone();
            }
            for r in 0..self.rows {
                if r == row {
                    continue;
                }
                let factor = a[(r, col)].clone();
                if factor.is_zero() {
                    continue;
                }
                for c in 0..self.cols {
                    let v = a[(row, c)].clone() * factor.clone();
                    a[(r, c)] = a[(r, c)].clone() - v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }

    /// Lower-triangular `L` with `L Lᵀ = self`, when every pivot has a
    /// square root in the field.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut s = self[(j, j)].clone();
            for k in 0..j {
                s = s - l[(j, k)].clone() * l[(j, k)].clone();
            }
            if s.signum() <= 0 {
                return None;
            }
            let root = s.sqrt()?;
            let inv = root.inv()?;
            l[(j, j)] = root;
            for i in j + 1..n {
                let mut t = self[(i, j)].clone();
                for k in 0..j {
                    t = t - l[(i, k)].clone() * l[(j, k)].clone();
                }
                l[(i, j)] = t * inv.clone();
            }
        }
        Some(l)
    }

    /// Positive definiteness of a symmetric matrix via leading principal minors.
    pub fn leading_minors_positive(&self) -> bool {
        (1..=self.rows).all(|k| {
            let minor = Self::from_fn(k, k, |i, j| self[(i, j)].clone());
            minor.determinant().signum() > 0
        })
    }

    /// Flattened (row-major) entries as a vector.
    pub fn vectorize(&self) -> Vec<T> {
        self.data.clone()
    }

    pub fn from_vector(rows: usize, cols: usize, v: Vec<T>) -> Self {
        assert_eq!(v.len(), rows * cols);
        Matrix {
            rows,
            cols,
            data: v,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.to_f64().is_finite())
    }
}

fn pivot_row<T: Field>(a: &Matrix<T>, start: usize, col: usize) -> Option<usize> {
    pivot_row_tol(a, start, col, 0.0)
}

fn pivot_row_tol<T: Field>(a: &Matrix<T>, start: usize, col: usize, tol: f64) -> Option<usize> {
    if T::is_exact() {
        (start..a.rows).find(|&r| !a[(r, col)].is_zero())
    } else {
        (start..a.rows)
            .map(|r| (r, a[(r, col)].to_f64().abs()))
            .filter(|(_, v)| *v > tol)
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(r, _)| r)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Field> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }
}

impl<T: Field> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }
}

impl<T: Field> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.map(|x| -x.clone())
    }
}

impl<T: Field> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out: Matrix<T> = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = a.clone() * rhs[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + v;
                }
            }
        }
        out
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = (0..self.rows)
            .map(|i| &self.data[i * self.cols..(i + 1) * self.cols])
            .collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix<f64>) -> Vec<f64> {
    if m.rows() == 0 {
        return Vec::new();
    }
    let sym = m.to_nalgebra();
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a general real matrix as `(re, im)` pairs.
pub fn complex_eigenvalues(m: &Matrix<f64>) -> Vec<(f64, f64)> {
    if m.rows() == 0 {
        return Vec::new();
    }
    m.to_nalgebra()
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect()
}

/// Singular values, descending.
pub fn singular_values(m: &Matrix<f64>) -> Vec<f64> {
    if m.rows() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Surd;

    fn q(n: i64, d: i64) -> Surd {
        Surd::ratio(n, d)
    }

    #[test]
    fn exact_solve_and_inverse() {
        let a = Matrix::from_rows(vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]]).unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(&a * &inv, Matrix::identity(2));
        assert_eq!(a.determinant(), q(5, 1));
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = Matrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]]).unwrap();
        let ns = a.null_space(0.0);
        assert_eq!(ns, vec![vec![q(-2, 1), q(1, 1)]]);
    }

    #[test]
    fn cholesky_exact() {
        let a = Matrix::from_rows(vec![vec![q(4, 1), q(2, 1)], vec![q(2, 1), q(3, 1)]]).unwrap();
        let l = a.cholesky().unwrap();
        assert_eq!(&l * &l.transpose(), a);
        assert!(a.leading_minors_positive());
        let neg = Matrix::diag(&[q(1, 1), q(-1, 1)]);
        assert!(!neg.leading_minors_positive());
        assert!(neg.cholesky().is_none());
    }

    #[test]
    fn singular_solve_is_none() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(a.solve(&Matrix::identity(2)).is_none());
    }
}
