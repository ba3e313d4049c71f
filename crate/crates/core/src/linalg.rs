//! Small dense complex square matrices.
//!
//! Every operator in this crate acts on a space of dimension at most a few
//! hundred, so a row-major `Vec` and textbook loops are all that is needed.
//! Hermitian diagonalization uses cyclic complex Jacobi rotations, which are
//! unconditionally stable and accurate to a few ulps for these sizes.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn diagonal(values: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Builds a matrix from row-major rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyState);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[T]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| real(x)).collect())
                .collect(),
        )
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &[Complex<T>], b: &[Complex<T>]) -> Self {
        assert_eq!(a.len(), b.len(), "outer product of unequal lengths");
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<Complex<T>>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.dim, "matrix-vector dimension mismatch");
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Kronecker product; `self` indexes the most significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let n = self.dim * other.dim;
        let mut m = Self::zeros(n);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        m[(i * other.dim + k, j * other.dim + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    /// Largest entry-wise deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.norm()))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Diagonalizes a Hermitian matrix.
    ///
    /// Returns eigenvalues in descending order together with the matching
    /// orthonormal eigenvectors.
    pub fn eigh(&self) -> Result<HermitianEigen<T>> {
        let n = self.dim;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let scale = a.max_abs().max(T::min_positive_value());
        let tol = T::epsilon() * scale;

        let mut converged = n < 2;
        for _sweep in 0..100 {
            let off = a.off_diagonal_norm();
            if off <= tol {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    a.jacobi_rotate(&mut v, p, q);
                }
            }
        }
        if !converged && a.off_diagonal_norm() > tol * T::lit(1e3) {
            return Err(Error::NoConvergence);
        }

        let mut pairs: Vec<(T, Vec<Complex<T>>)> = (0..n)
            .map(|j| (a[(j, j)].re, (0..n).map(|i| v[(i, j)]).collect()))
            .collect();
        pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
        let (values, vectors) = pairs.into_iter().unzip();
        Ok(HermitianEigen { values, vectors })
    }

    fn off_diagonal_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// One complex Jacobi rotation annihilating entry `(p, q)`.
    ///
    /// The rotation is `U = diag(1, e^{-i phi}) R`, with `R` the real rotation
    /// that diagonalizes the phase-rotated 2x2 block.
    fn jacobi_rotate(&mut self, v: &mut Self, p: usize, q: usize) {
        let apq = self[(p, q)];
        let r = apq.norm();
        if r <= T::min_positive_value() {
            return;
        }
        let phase = apq / r;
        let app = self[(p, p)].re;
        let aqq = self[(q, q)].re;
        let zeta = (aqq - app) / (r + r);
        let t = if zeta >= T::zero() {
            T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
        } else {
            -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
        };
        let c = T::one() / (T::one() + t * t).sqrt();
        let s = t * c;
        let pc = phase.conj();
        let u_pp = real(c);
        let u_pq = real(s);
        let u_qp = pc * (-s);
        let u_qq = pc * c;

        let n = self.dim;
        for k in 0..n {
            let akp = self[(k, p)];
            let akq = self[(k, q)];
            self[(k, p)] = akp * u_pp + akq * u_qp;
            self[(k, q)] = akp * u_pq + akq * u_qq;
        }
        for k in 0..n {
            let apk = self[(p, k)];
            let aqk = self[(q, k)];
            self[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
            self[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
        }
        self[(p, q)] = Complex::zero();
        self[(q, p)] = Complex::zero();
        self[(p, p)] = real(self[(p, p)].re);
        self[(q, q)] = real(self[(q, q)].re);
        for k in 0..n {
            let vkp = v[(k, p)];
            let vkq = v[(k, q)];
            v[(k, p)] = vkp * u_pp + vkq * u_qp;
            v[(k, q)] = vkp * u_pq + vkq * u_qq;
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        m
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use proptest::prelude::*;

    fn hermitian_from(entries: &[(f64, f64)], n: usize) -> Matrix<f64> {
        let mut m = Matrix::zeros(n);
        let mut it = entries.iter();
        for i in 0..n {
            for j in i..n {
                let &(re, im) = it.next().unwrap();
                if i == j {
                    m[(i, i)] = real(re);
                } else {
                    m[(i, j)] = cplx(re, im);
                    m[(j, i)] = cplx(re, -im);
                }
            }
        }
        m
    }

    #[test]
    fn eigh_of_pauli_y() {
        let m = Matrix::from_rows(vec![
            vec![cplx(0.0, 0.0), cplx(0.0, -1.0)],
            vec![cplx(0.0, 1.0), cplx(0.0, 0.0)],
        ])
        .unwrap();
        let e: HermitianEigen<f64> = m.eigh().unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_keeps_diagonal_order_descending() {
        let m = Matrix::diagonal(&[real(-1.0), real(2.0), real(0.5)]);
        let e = m.eigh().unwrap();
        assert_eq!(e.values, vec![2.0, 0.5, -1.0]);
    }

    #[test]
    fn kron_of_identities() {
        let i2 = Matrix::<f64>::identity(2);
        assert_eq!(i2.kron(&i2), Matrix::identity(4));
    }

    #[test]
    fn ragged_rows_rejected() {
        let r = Matrix::<f64>::from_rows(vec![vec![real(1.0)], vec![real(0.0), real(1.0)]]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eigh_reconstructs_random_hermitian(
            n in 1usize..7,
            entries in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 28),
        ) {
            let m = hermitian_from(&entries, n);
            let e = m.eigh().unwrap();
            let mut rebuilt = Matrix::zeros(n);
            for (lambda, vec) in e.values.iter().zip(&e.vectors) {
                rebuilt = &rebuilt + &Matrix::outer(vec, vec).scale(real(*lambda));
            }
            let diff = (&rebuilt - &m).max_abs();
            prop_assert!(diff < 1e-12, "reconstruction error {diff:e}");
            for (i, a) in e.vectors.iter().enumerate() {
                for (j, b) in e.vectors.iter().enumerate() {
                    let ip: Complex<f64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((ip - target).norm() < 1e-12);
                }
            }
        }
    }
}
