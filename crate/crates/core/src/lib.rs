//! Simulation of pre- and post-selected quantum systems coupled to pointers.
//!
//! The library covers weak values of pure, generalized and mixed two-state
//! vectors, exact evolution of Gaussian and spin pointers under an impulsive
//! `g A B` coupling, Bures-angle distances between the resulting pointer
//! states, and the three-ancilla construction of a mixed two-state vector.
//!
//! Everything is generic over the scalar type through [`Real`]; `f64` aliases
//! are provided at the crate root.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod optics;
pub mod pointer;
pub mod protocols;
pub mod qstate;
pub mod random;
pub mod scalar;
pub mod tsv;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metrics::{
    bures_from_visibility, bures_pure, bures_pure_mixed, fit_scaling_exponent,
    predicted_bures_expectation, predicted_bures_weak, visibility_from_bures, ImperfectionModel,
    PureState, ScalingFit,
};
pub use optics::{beam_separation, coupling_from_separation, CrystalSpec, EffectiveCoupling};
pub use pointer::{
    quadrature_overlap, AnyPointer, GaussianPointerState, GaussianTerm, GridSpec, PointerEnsemble,
    PointerKind, PointerState, SpinPointerState,
};
pub use protocols::{
    build_circuit_states, couple_mixed, derive_generalized_tsv, generalized_tsv_from_record,
    mixed_weak_value_via_ancillas, CircuitStates, MixedTsvCircuit,
};
pub use qstate::{
    horizontal, polarization_operator, sigma_z, spin_ket, spin_z_operator, tensor, vertical,
    DensityMatrix, Ket, Operator,
};
pub use scalar::Real;
pub use tsv::{
    weak_value, weak_value_generalized, weak_value_mixed, weak_value_moment, GeneralizedTsv,
    GtsvTerm, MixedTsv, PureTsv, TwoStateVector,
};

pub type C64 = num_complex::Complex<f64>;
pub type Ket64 = Ket<f64>;
pub type Ket32 = Ket<f32>;
pub type Operator64 = Operator<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type GaussianPointer64 = GaussianPointerState<f64>;
pub type SpinPointer64 = SpinPointerState<f64>;
pub type PureTsv64 = PureTsv<f64>;
pub type GeneralizedTsv64 = GeneralizedTsv<f64>;
pub type MixedTsv64 = MixedTsv<f64>;
pub type MixedTsvCircuit64 = MixedTsvCircuit<f64>;
