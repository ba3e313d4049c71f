//! Scalar abstraction shared by every module.
//!
//! All algebra in the crate is written once against [`Real`] and instantiated
//! for `f64` (the default everywhere) and `f32`. Numerical tolerances are
//! associated constants so that each precision carries thresholds that make
//! sense for its own machine epsilon.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar usable by the simulation code.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Maximum entry-wise deviation tolerated for a Hermitian matrix.
    const HERMITIAN_TOL: Self;
    /// Most negative eigenvalue tolerated for a density matrix.
    const PSD_TOL: Self;
    /// Allowed deviation of a density-matrix trace (and of probability sums) from one.
    const TRACE_TOL: Self;
    /// Allowed deviation of a normalized ket from unit norm.
    const NORM_TOL: Self;
    /// Overlaps below this modulus make a weak value undefined.
    const OVERLAP_FLOOR: Self;
    /// Relative amplitude below which superposition terms are discarded.
    const PRUNE_TOL: Self;
    /// Eigenvalues closer than this (relative to the spectral radius) are merged.
    const DEGENERACY_TOL: Self;

    /// Converts an `f64` literal, panicking only if the type cannot represent finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const HERMITIAN_TOL: Self = 1e-12;
    const PSD_TOL: Self = 1e-10;
    const TRACE_TOL: Self = 1e-10;
    const NORM_TOL: Self = 1e-12;
    const OVERLAP_FLOOR: Self = 1e-12;
    const PRUNE_TOL: Self = 1e-14;
    const DEGENERACY_TOL: Self = 1e-10;
}

impl Real for f32 {
    const HERMITIAN_TOL: Self = 1e-5;
    const PSD_TOL: Self = 1e-5;
    const TRACE_TOL: Self = 1e-5;
    const NORM_TOL: Self = 1e-5;
    const OVERLAP_FLOOR: Self = 1e-6;
    const PRUNE_TOL: Self = 1e-7;
    const DEGENERACY_TOL: Self = 1e-5;
}

pub(crate) fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub(crate) fn real<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
