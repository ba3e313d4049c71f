//! Random instances for property checks and oracle sweeps.
//!
//! Kets are Haar-distributed (normalized complex Gaussian vectors); Hermitian
//! operators are drawn from the Gaussian unitary ensemble.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::pointer::{GaussianPointerState, GaussianTerm, PointerState};
use crate::protocols::MixedTsvCircuit;
use crate::qstate::{DensityMatrix, Ket, Operator};
use crate::scalar::Real;
use crate::tsv::{GeneralizedTsv, GtsvTerm};

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(T::lit(re), T::lit(im))
}

pub fn random_ket<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Ket<T>> {
    Ket::normalized((0..dim).map(|_| gaussian(rng)).collect())
}

pub fn random_hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Operator<T>> {
    let mut m = Matrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let z: Complex<T> = gaussian(rng);
            if i == j {
                m[(i, i)] = Complex::new(z.re, T::zero());
            } else {
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
    }
    Operator::hermitian(m)
}

/// Probability vector of length `n`, bounded away from zero.
pub fn random_probabilities<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<T> = raw.iter().map(|x| T::lit(x / total)).collect();
    // absorb rounding so the sum is 1 to the last bit where possible
    let sum = p.iter().fold(T::zero(), |a, &b| a + b);
    if let Some(last) = p.last_mut() {
        *last += T::one() - sum;
    }
    p
}

/// Mixture of `rank` random pure states.
pub fn random_density<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
) -> Result<DensityMatrix<T>> {
    let probs = random_probabilities::<T, R>(rng, rank);
    let comps = probs
        .into_iter()
        .map(|p| Ok((p, random_ket(rng, dim)?)))
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture(&comps)
}

/// Circuit on a `dim`-level system with `n_pre` pre-selected and `n_post`
/// post-selected components.
pub fn random_circuit<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_pre: usize,
    n_post: usize,
) -> Result<MixedTsvCircuit<T>> {
    let p = random_probabilities(rng, n_pre);
    let psi = (0..n_pre)
        .map(|_| random_ket(rng, dim))
        .collect::<Result<Vec<_>>>()?;
    let p_tilde = random_probabilities(rng, n_post);
    let phi = (0..n_post)
        .map(|_| random_ket(rng, dim))
        .collect::<Result<Vec<_>>>()?;
    MixedTsvCircuit::new(p, psi, p_tilde, phi, n_post)
}

/// `n_terms` terms with complex Gaussian weights and random kets.
pub fn random_generalized_tsv<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_terms: usize,
) -> Result<GeneralizedTsv<T>> {
    let terms = (0..n_terms)
        .map(|_| {
            Ok(GtsvTerm {
                alpha: gaussian(rng),
                post: random_ket(rng, dim)?,
                pre: random_ket(rng, dim)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GeneralizedTsv::new(terms)
}

/// Normalized superposition of `n_terms` width-`delta` Gaussians with real
/// centers in `[-3 delta, 3 delta]` and imaginary parts in `[-delta, delta]`.
pub fn random_gaussian_pointer<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    delta: T,
    n_terms: usize,
) -> Result<GaussianPointerState<T>> {
    let terms = (0..n_terms)
        .map(|_| {
            let re = T::lit(rng.random_range(-3.0..3.0)) * delta;
            let im = T::lit(rng.random_range(-1.0..1.0)) * delta;
            GaussianTerm {
                amp: gaussian(rng),
                center: Complex::new(re, im),
            }
        })
        .collect();
    GaussianPointerState::from_terms(delta, terms)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_draws_repeat() {
        let a: Ket<f64> = random_ket(&mut ChaCha8Rng::seed_from_u64(7), 3).unwrap();
        let b: Ket<f64> = random_ket(&mut ChaCha8Rng::seed_from_u64(7), 3).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            let p: Vec<f64> = random_probabilities(&mut rng, n);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(p.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn hermitian_and_density_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h: Operator<f64> = random_hermitian(&mut rng, 4).unwrap();
        assert!(h.is_hermitian());
        let rho: DensityMatrix<f64> = random_density(&mut rng, 3, 2).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_pointer_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: GaussianPointerState<f64> = random_gaussian_pointer(&mut rng, 0.7, 3).unwrap();
        assert_eq!(p.terms().len(), 3);
        assert!(p.is_normalized());
        let g: GeneralizedTsv<f64> = random_generalized_tsv(&mut rng, 3, 2).unwrap();
        assert_eq!(g.terms().len(), 2);
    }
}
