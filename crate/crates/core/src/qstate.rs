//! Finite-dimensional states and observables.
//!
//! Basis conventions:
//! * spin-`s` kets are indexed by descending `S_z` eigenvalue, so index `j`
//!   carries eigenvalue `s - j`;
//! * polarization kets use the basis `(|H>, |V>)`;
//! * tensor products put the first factor in the most significant position.
//!
//! `hbar = 1` throughout the crate.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{real, Real};

/// A state vector. Not necessarily normalized unless produced by [`Ket::normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<Complex<T>>",
    into = "Vec<Complex<T>>",
    bound = "T: Real"
)]
pub struct Ket<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> TryFrom<Vec<Complex<T>>> for Ket<T> {
    type Error = Error;

    fn try_from(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        Ket::new(amplitudes)
    }
}

impl<T: Real> From<Ket<T>> for Vec<Complex<T>> {
    fn from(k: Ket<T>) -> Self {
        k.amplitudes
    }
}

impl<T: Real> Ket<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::EmptyState);
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(invalid("amplitudes", "non-finite entry"));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_reals(amplitudes: &[T]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| real(x)).collect())
    }

    /// Builds and normalizes in one step.
    pub fn normalized(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        Self::new(amplitudes)?.normalize()
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyState);
        }
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amplitudes = vec![Complex::zero(); dim];
        amplitudes[index] = Complex::one();
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n <= T::min_positive_value() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scale(real(n.recip())))
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::NORM_TOL
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_dim(other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Self { amplitudes }
    }

    /// `|self><self|` without normalization.
    pub fn outer(&self) -> Matrix<T> {
        Matrix::outer(&self.amplitudes, &self.amplitudes)
    }

    /// Contracts the subsystems listed in `targets` with `<onto|`, leaving a
    /// ket over the remaining subsystems in their original order.
    ///
    /// `targets` must be strictly increasing; `onto` is laid out over them in
    /// the same order.
    pub fn project_subsystems(
        &self,
        dims: &[usize],
        targets: &[usize],
        onto: &Ket<T>,
    ) -> Result<Ket<T>> {
        let total: usize = dims.iter().product();
        self.check_dim(total)?;
        if targets.windows(2).any(|w| w[0] >= w[1]) || targets.iter().any(|&t| t >= dims.len()) {
            return Err(invalid(
                "targets",
                "must be strictly increasing subsystem indices",
            ));
        }
        let target_dim: usize = targets.iter().map(|&t| dims[t]).product();
        onto.check_dim(target_dim)?;
        let rest: Vec<usize> = (0..dims.len()).filter(|i| !targets.contains(i)).collect();
        let rest_dim: usize = rest.iter().map(|&r| dims[r]).product();
        if rest.is_empty() {
            return Ket::new(vec![onto.inner(self)?]);
        }

        let mut out = vec![Complex::zero(); rest_dim];
        let mut digits = vec![0usize; dims.len()];
        for amp in &self.amplitudes {
            let t_idx = targets.iter().fold(0, |acc, &t| acc * dims[t] + digits[t]);
            let r_idx = rest.iter().fold(0, |acc, &r| acc * dims[r] + digits[r]);
            out[r_idx] += onto.amplitudes[t_idx].conj() * amp;
            increment(&mut digits, dims);
        }
        Ket::new(out)
    }

    /// Reorders tensor factors: factor `j` of the result is factor `order[j]` of `self`.
    pub fn permute_subsystems(&self, dims: &[usize], order: &[usize]) -> Result<Ket<T>> {
        let total: usize = dims.iter().product();
        self.check_dim(total)?;
        let mut seen = vec![false; dims.len()];
        if order.len() != dims.len()
            || order
                .iter()
                .any(|&o| o >= dims.len() || std::mem::replace(&mut seen[o], true))
        {
            return Err(invalid(
                "order",
                "must be a permutation of the subsystem indices",
            ));
        }
        let mut out = vec![Complex::zero(); total];
        let mut digits = vec![0usize; dims.len()];
        for amp in &self.amplitudes {
            let idx = order.iter().fold(0, |acc, &o| acc * dims[o] + digits[o]);
            out[idx] = *amp;
            increment(&mut digits, dims);
        }
        Ket::new(out)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
}

/// Mixed-radix counter, least significant digit last.
fn increment(digits: &mut [usize], dims: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < dims[i] {
            return;
        }
        digits[i] = 0;
    }
}

/// `|s, m>` in the descending-eigenvalue basis of [`spin_z_operator`].
pub fn spin_ket<T: Real>(s: T, m: T) -> Result<Ket<T>> {
    let dim = spin_dim(s)?;
    let offset = s - m;
    let idx = offset.round();
    if (offset - idx).abs() > T::lit(1e-9)
        || idx < T::zero()
        || idx.to_usize().is_none_or(|i| i >= dim)
    {
        return Err(invalid("m", format!("{m} is not a projection of spin {s}")));
    }
    Ket::basis(dim, idx.to_usize().unwrap_or_default())
}

pub fn horizontal<T: Real>() -> Ket<T> {
    Ket::basis(2, 0).expect("dimension 2")
}

pub fn vertical<T: Real>() -> Ket<T> {
    Ket::basis(2, 1).expect("dimension 2")
}

fn spin_dim<T: Real>(s: T) -> Result<usize> {
    let two_s = s + s;
    if !(s >= T::zero()) || (two_s - two_s.round()).abs() > T::lit(1e-9) {
        return Err(Error::InvalidSpin(s.to_f64_lossy()));
    }
    two_s
        .round()
        .to_usize()
        .map(|n| n + 1)
        .ok_or(Error::InvalidSpin(s.to_f64_lossy()))
}

/// An observable or general linear operator on a finite space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<Vec<Complex<T>>>",
    into = "Vec<Vec<Complex<T>>>",
    bound = "T: Real"
)]
pub struct Operator<T> {
    matrix: Matrix<T>,
    hermitian: bool,
}

impl<T: Real> TryFrom<Vec<Vec<Complex<T>>>> for Operator<T> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        Ok(Operator::new(Matrix::from_rows(rows)?))
    }
}

impl<T: Real> From<Operator<T>> for Vec<Vec<Complex<T>>> {
    fn from(op: Operator<T>) -> Self {
        op.matrix.rows()
    }
}

/// One eigenvalue of a Hermitian operator with the projector onto its eigenspace.
#[derive(Debug, Clone)]
pub struct Eigenspace<T> {
    pub value: T,
    pub projector: Matrix<T>,
}

impl<T: Real> Operator<T> {
    /// Wraps a matrix, recording whether it is Hermitian.
    pub fn new(matrix: Matrix<T>) -> Self {
        let tol = T::HERMITIAN_TOL * T::one().max(matrix.max_abs());
        let hermitian = matrix.hermitian_deviation() <= tol;
        Self { matrix, hermitian }
    }

    /// Wraps a matrix that must be Hermitian.
    pub fn hermitian(matrix: Matrix<T>) -> Result<Self> {
        let op = Self::new(matrix);
        if !op.hermitian {
            return Err(Error::NotHermitian(
                op.matrix.hermitian_deviation().to_f64_lossy(),
            ));
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Matrix::identity(dim),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn apply(&self, ket: &Ket<T>) -> Result<Ket<T>> {
        self.check_dim(ket.dim())?;
        Ket::new(self.matrix.mul_vec(ket.amplitudes()))
    }

    /// `A^n`.
    pub fn pow(&self, n: u32) -> Self {
        Self {
            matrix: self.matrix.powi(n),
            hermitian: self.hermitian,
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::new(self.matrix.scale(c))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self::new(&self.matrix + &other.matrix))
    }

    /// `<psi|A|psi> / <psi|psi>`.
    pub fn expectation(&self, psi: &Ket<T>) -> Result<Complex<T>> {
        let n = psi.norm_sqr();
        if n <= T::min_positive_value() {
            return Err(Error::ZeroNorm);
        }
        Ok(psi.inner(&self.apply(psi)?)? / n)
    }

    /// Standard deviation `sqrt(<A^2> - <A>^2)` of a Hermitian observable.
    pub fn uncertainty(&self, psi: &Ket<T>) -> Result<T> {
        self.require_hermitian()?;
        let mean = self.expectation(psi)?.re;
        let second = self.pow(2).expectation(psi)?.re;
        Ok((second - mean * mean).max(T::zero()).sqrt())
    }

    /// Spectral decomposition with degenerate eigenvalues merged into a single
    /// projector. Eigenvalues are descending.
    pub fn spectrum(&self) -> Result<Vec<Eigenspace<T>>> {
        self.require_hermitian()?;
        let eig = self.matrix.eigh()?;
        let radius = eig.values.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let tol = T::DEGENERACY_TOL * radius;

        let mut spaces: Vec<(T, usize, Matrix<T>)> = Vec::new();
        for (value, vector) in eig.values.iter().zip(&eig.vectors) {
            let proj = Matrix::outer(vector, vector);
            match spaces.last_mut() {
                Some((v, count, p)) if (*v - *value).abs() <= tol => {
                    // running mean keeps the merged value centred in the cluster
                    let k = T::from_usize(*count).unwrap_or_else(T::one);
                    *v = (*v * k + *value) / (k + T::one());
                    *count += 1;
                    *p = &*p + &proj;
                }
                _ => spaces.push((*value, 1, proj)),
            }
        }
        Ok(spaces
            .into_iter()
            .map(|(value, _, projector)| Eigenspace { value, projector })
            .collect())
    }

    fn require_hermitian(&self) -> Result<()> {
        if !self.hermitian {
            return Err(Error::NotHermitian(
                self.matrix.hermitian_deviation().to_f64_lossy(),
            ));
        }
        Ok(())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
}

/// `S_z` for spin `s`, eigenvalues `s, s-1, ..., -s` down the diagonal.
pub fn spin_z_operator<T: Real>(s: T) -> Result<Operator<T>> {
    let dim = spin_dim(s)?;
    let diag: Vec<Complex<T>> = (0..dim)
        .map(|j| real(s - T::from_usize(j).unwrap_or_else(T::zero)))
        .collect();
    Ok(Operator {
        matrix: Matrix::diagonal(&diag),
        hermitian: true,
    })
}

/// Polarization operator: `+1` on `|H>`, `-1` on `|V>`.
pub fn polarization_operator<T: Real>() -> Operator<T> {
    Operator {
        matrix: Matrix::diagonal(&[Complex::one(), -Complex::<T>::one()]),
        hermitian: true,
    }
}

/// Pauli `sigma_z` in the `(|up>, |down>)` basis.
pub fn sigma_z<T: Real>() -> Operator<T> {
    polarization_operator()
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<Vec<Complex<T>>>",
    into = "Vec<Vec<Complex<T>>>",
    bound = "T: Real"
)]
pub struct DensityMatrix<T> {
    matrix: Matrix<T>,
}

impl<T: Real> TryFrom<Vec<Vec<Complex<T>>>> for DensityMatrix<T> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        DensityMatrix::new(Matrix::from_rows(rows)?)
    }
}

impl<T: Real> From<DensityMatrix<T>> for Vec<Vec<Complex<T>>> {
    fn from(rho: DensityMatrix<T>) -> Self {
        rho.matrix.rows()
    }
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if dev > T::HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {:e})",
                dev.to_f64_lossy()
            )));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > T::TRACE_TOL || tr.im.abs() > T::TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {} + {}i is not 1",
                tr.re, tr.im
            )));
        }
        let min_eig = matrix
            .eigh()?
            .values
            .last()
            .copied()
            .unwrap_or_else(T::zero);
        if min_eig < -T::PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig}"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` for the normalized `psi`.
    pub fn from_pure(psi: &Ket<T>) -> Result<Self> {
        let psi = psi.normalize()?;
        Ok(Self {
            matrix: psi.outer(),
        })
    }

    /// `sum_k p_k |psi_k><psi_k|` over normalized kets.
    pub fn mixture(components: &[(T, Ket<T>)]) -> Result<Self> {
        let (first_p, first) = components
            .first()
            .ok_or_else(|| Error::InvalidProbabilities("empty mixture".into()))?;
        check_probabilities(&components.iter().map(|c| c.0).collect::<Vec<_>>())?;
        let mut matrix = first.normalize()?.outer().scale(real(*first_p));
        for (p, psi) in &components[1..] {
            if psi.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: psi.dim(),
                });
            }
            matrix = &matrix + &psi.normalize()?.outer().scale(real(*p));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyState);
        }
        let w = T::from_usize(dim).unwrap_or_else(T::one).recip();
        Ok(Self {
            matrix: Matrix::identity(dim).scale(real(w)),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    pub fn purity(&self) -> T {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `tr(rho A)`.
    pub fn expectation(&self, op: &Operator<T>) -> Result<Complex<T>> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok((&self.matrix * op.matrix()).trace())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// Reduced state of subsystem `keep` for a composite with factor dimensions `dims`.
    pub fn partial_trace(&self, dims: &[usize], keep: usize) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: total,
            });
        }
        if keep >= dims.len() {
            return Err(invalid("keep", format!("subsystem {keep} out of range")));
        }
        let inner: usize = dims[keep + 1..].iter().product();
        let outer: usize = dims[..keep].iter().product();
        let d = dims[keep];
        let mut out = Matrix::zeros(d);
        for a in 0..d {
            for b in 0..d {
                let mut acc = Complex::<T>::zero();
                for o in 0..outer {
                    for i in 0..inner {
                        let row = (o * d + a) * inner + i;
                        let col = (o * d + b) * inner + i;
                        acc += self.matrix[(row, col)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self { matrix: out })
    }
}

pub(crate) fn check_probabilities<T: Real>(probs: &[T]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidProbabilities("empty list".into()));
    }
    if let Some(p) = probs
        .iter()
        .find(|p| !(**p >= T::zero() && **p <= T::one()))
    {
        return Err(Error::InvalidProbabilities(format!("{p} outside [0, 1]")));
    }
    let sum = probs.iter().fold(T::zero(), |a, &b| a + b);
    if (sum - T::one()).abs() > T::TRACE_TOL {
        return Err(Error::InvalidProbabilities(format!("sum {sum} is not 1")));
    }
    Ok(())
}

/// Kronecker product shared by kets, operators and density matrices.
pub trait Tensor {
    fn tensor_with(&self, other: &Self) -> Self;
}

impl<T: Real> Tensor for Ket<T> {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl<T: Real> Tensor for Operator<T> {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl<T: Real> Tensor for DensityMatrix<T> {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

pub fn tensor<X: Tensor>(a: &X, b: &X) -> X {
    a.tensor_with(b)
}
