//! JSON shapes for observables and states accepted on the command line.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use weakval::{
    polarization_operator, sigma_z, spin_ket, spin_z_operator, AnyPointer, GaussianPointer64,
    Ket64, Operator64, SpinPointer64,
};

use crate::error::{CliError, Result};

/// `{"spin_z": s}`, `"polarization"`, `"sigma_z"` or `{"matrix": [[[re, im], ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    SpinZ(f64),
    Polarization,
    SigmaZ,
    Matrix(Operator64),
}

impl ObservableSpec {
    pub fn build(&self) -> Result<Operator64> {
        Ok(match self {
            Self::SpinZ(s) => spin_z_operator(*s)?,
            Self::Polarization => polarization_operator(),
            Self::SigmaZ => sigma_z(),
            Self::Matrix(m) => {
                if !m.is_hermitian() {
                    return Err(CliError::usage("observable matrix must be Hermitian"));
                }
                m.clone()
            }
        })
    }
}

impl Default for ObservableSpec {
    fn default() -> Self {
        Self::SpinZ(1.0)
    }
}

/// A state to compare in `bures`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gaussian(GaussianPointer64),
    Spin(SpinPointer64),
    Ket(Ket64),
    /// `[[probability, pointer], ...]`
    Ensemble(Vec<(f64, AnyPointer<f64>)>),
}

pub fn complex(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// `(|a> + |b>) / sqrt 2` for two spin-`s` eigenkets.
pub fn spin_pair(s: f64, a: f64, b: f64) -> Ket64 {
    spin_ket(s, a)
        .and_then(|x| x.add(&spin_ket(s, b)?))
        .and_then(|k| k.normalize())
        .expect("valid spin labels")
}

/// `(|H> + |V>) / sqrt 2`.
pub fn diagonal_polarization() -> Ket64 {
    Ket64::from_reals(&[1.0, 1.0])
        .and_then(|k| k.normalize())
        .expect("nonzero")
}

/// `(|H> + i|V>) / sqrt 2`.
pub fn circular_polarization() -> Ket64 {
    Ket64::normalized(vec![complex(1.0, 0.0), complex(0.0, 1.0)]).expect("nonzero")
}
