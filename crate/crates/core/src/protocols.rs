//! Three-ancilla preparation of a mixed two-state vector, and extraction of a
//! generalized two-state vector from a finite-strength coupling.
//!
//! Tensor ordering throughout is `(S, A1, A2, A3)`: the system, the ancilla
//! purifying the pre-selection, and the Bell pair `A2, A3` whose first half
//! takes part in the post-selection.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::coupling::{
    CouplingOutcome, CouplingSpec, FiniteStrengthRecord, FiniteStrengthSetup, PointerOutcome,
    PROBABILITY_FLOOR,
};
use crate::error::{invalid, Error, Result};
use crate::pointer::{PointerEnsemble, PointerState};
use crate::qstate::{check_probabilities, DensityMatrix, Ket, Operator};
use crate::scalar::{real, Real};
use crate::tsv::{weak_value, GeneralizedTsv, GtsvTerm, MixedTsv, PureTsv};

/// Pre-selection `{p_k, psi_k}`, post-selection `{p~_i, phi_i}` and the
/// dimension `N` of each half of the Bell pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "CircuitRepr<T>",
    into = "CircuitRepr<T>",
    bound = "T: Real"
)]
pub struct MixedTsvCircuit<T> {
    p: Vec<T>,
    psi: Vec<Ket<T>>,
    p_tilde: Vec<T>,
    phi: Vec<Ket<T>>,
    ancilla_dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct CircuitRepr<T> {
    p: Vec<T>,
    psi: Vec<Ket<T>>,
    p_tilde: Vec<T>,
    phi: Vec<Ket<T>>,
    #[serde(default)]
    ancilla_dim: Option<usize>,
}

impl<T: Real> TryFrom<CircuitRepr<T>> for MixedTsvCircuit<T> {
    type Error = Error;
    fn try_from(r: CircuitRepr<T>) -> Result<Self> {
        let n = r.ancilla_dim.unwrap_or(r.phi.len());
        Self::new(r.p, r.psi, r.p_tilde, r.phi, n)
    }
}

impl<T: Real> From<MixedTsvCircuit<T>> for CircuitRepr<T> {
    fn from(c: MixedTsvCircuit<T>) -> Self {
        Self {
            p: c.p,
            psi: c.psi,
            p_tilde: c.p_tilde,
            phi: c.phi,
            ancilla_dim: Some(c.ancilla_dim),
        }
    }
}

impl<T: Real> MixedTsvCircuit<T> {
    /// The kets are normalized here; their norms carry no meaning.
    pub fn new(
        p: Vec<T>,
        psi: Vec<Ket<T>>,
        p_tilde: Vec<T>,
        phi: Vec<Ket<T>>,
        ancilla_dim: usize,
    ) -> Result<Self> {
        check_probabilities(&p)?;
        check_probabilities(&p_tilde)?;
        if p.len() != psi.len() {
            return Err(invalid(
                "psi",
                format!("{} states for {} probabilities", psi.len(), p.len()),
            ));
        }
        if p_tilde.len() != phi.len() {
            return Err(invalid(
                "phi",
                format!("{} states for {} probabilities", phi.len(), p_tilde.len()),
            ));
        }
        if ancilla_dim < phi.len() {
            return Err(invalid(
                "ancilla_dim",
                format!(
                    "{ancilla_dim} is smaller than the {} post states",
                    phi.len()
                ),
            ));
        }
        let dim = psi[0].dim();
        if let Some(k) = psi.iter().chain(&phi).find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: k.dim(),
            });
        }
        let psi = psi.iter().map(Ket::normalize).collect::<Result<_>>()?;
        let phi = phi.iter().map(Ket::normalize).collect::<Result<_>>()?;
        Ok(Self {
            p,
            psi,
            p_tilde,
            phi,
            ancilla_dim,
        })
    }

    /// `N` equal to the number of post states.
    pub fn minimal(p: Vec<T>, psi: Vec<Ket<T>>, p_tilde: Vec<T>, phi: Vec<Ket<T>>) -> Result<Self> {
        let n = phi.len();
        Self::new(p, psi, p_tilde, phi, n)
    }

    pub fn system_dim(&self) -> usize {
        self.psi[0].dim()
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    pub fn psi(&self) -> &[Ket<T>] {
        &self.psi
    }

    pub fn p_tilde(&self) -> &[T] {
        &self.p_tilde
    }

    pub fn phi(&self) -> &[Ket<T>] {
        &self.phi
    }

    /// Dimensions of `(S, A1, A2, A3)`.
    pub fn dims(&self) -> [usize; 4] {
        [
            self.system_dim(),
            self.psi.len(),
            self.ancilla_dim,
            self.ancilla_dim,
        ]
    }

    pub fn rho_pre(&self) -> Result<DensityMatrix<T>> {
        mixture(&self.p, &self.psi)
    }

    pub fn rho_post(&self) -> Result<DensityMatrix<T>> {
        mixture(&self.p_tilde, &self.phi)
    }

    pub fn mixed_tsv(&self) -> Result<MixedTsv<T>> {
        MixedTsv::new(self.rho_pre()?, self.rho_post()?)
    }
}

fn mixture<T: Real>(p: &[T], kets: &[Ket<T>]) -> Result<DensityMatrix<T>> {
    let comps: Vec<(T, Ket<T>)> = p.iter().copied().zip(kets.iter().cloned()).collect();
    DensityMatrix::mixture(&comps)
}

/// `sum_k sqrt(w_k) |v_k>|k>` with the label on an `n`-dimensional ancilla.
fn purification<T: Real>(w: &[T], kets: &[Ket<T>], n: usize) -> Result<Ket<T>> {
    let mut out: Option<Ket<T>> = None;
    for (k, (wk, v)) in w.iter().zip(kets).enumerate() {
        let term = v.tensor(&Ket::basis(n, k)?).scale(real(wk.sqrt()));
        out = Some(match out {
            Some(o) => o.add(&term)?,
            None => term,
        });
    }
    out.ok_or(Error::EmptyState)
}

/// All states of the three-ancilla construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct CircuitStates<T> {
    /// `|Psi>` on `(S, A1)`.
    pub pre_entangled: Ket<T>,
    /// `|Xi>` on `(A2, A3)`.
    pub bell_pair: Ket<T>,
    /// `|Phi>` on `(S, A2)`, the post-selected state.
    pub post_entangled: Ket<T>,
    /// `|Upsilon>` on `(A1, A3)`, left behind by the post-selection. Normalized.
    pub upsilon: Ket<T>,
    /// Ket whose adjoint is the backward state `<Omega|` on `(S, A1)`. Normalized.
    pub omega_bra: Ket<T>,
}

pub fn build_circuit_states<T: Real>(c: &MixedTsvCircuit<T>) -> Result<CircuitStates<T>> {
    let [ds, d1, n, _] = c.dims();
    let pre_entangled = purification(&c.p, &c.psi, d1)?;
    let uniform = vec![T::one() / T::lit(n as f64); n];
    let labels = (0..n)
        .map(|i| Ket::basis(n, i))
        .collect::<Result<Vec<_>>>()?;
    let bell_pair = purification(&uniform, &labels, n)?;
    let post_entangled = purification(&c.p_tilde, &c.phi, n)?;

    // <Phi|_{S,A2} applied to |Psi>_{S,A1} |Xi>_{A2,A3}
    let full = pre_entangled.tensor(&bell_pair);
    let residue = full.project_subsystems(&[ds, d1, n, n], &[0, 2], &post_entangled)?;
    let norm = residue.norm();
    if !(norm > T::OVERLAP_FLOOR) {
        return Err(Error::UndefinedWeakValue(norm.to_f64_lossy()));
    }
    let upsilon = residue.scale(real(norm.recip()));

    // <Phi|_{S,A2} <Upsilon|_{A1,A3} |Xi>_{A2,A3}, written as a ket on (S, A1)
    let backward = post_entangled
        .tensor(&upsilon)
        .permute_subsystems(&[ds, n, d1, n], &[0, 2, 1, 3])?;
    let omega_bra = backward
        .project_subsystems(&[ds, d1, n, n], &[2, 3], &bell_pair)?
        .normalize()?;

    Ok(CircuitStates {
        pre_entangled,
        bell_pair,
        post_entangled,
        upsilon,
        omega_bra,
    })
}

/// `(A x I_1)_w` on the pure two-state vector `<Omega| |Psi>` of `(S, A1)`.
pub fn mixed_weak_value_via_ancillas<T: Real>(
    c: &MixedTsvCircuit<T>,
    a: &Operator<T>,
) -> Result<Complex<T>> {
    if a.dim() != c.system_dim() {
        return Err(Error::DimensionMismatch {
            expected: c.system_dim(),
            found: a.dim(),
        });
    }
    let states = build_circuit_states(c)?;
    let tsv = PureTsv::new(states.pre_entangled, states.omega_bra)?;
    weak_value(&tsv, &a.tensor(&Operator::identity(c.psi.len())))
}

/// Pointer left after coupling to the system of a three-ancilla circuit and
/// post-selecting `|Phi>`, with `A1` and `A3` traced out.
///
/// Each ancilla outcome `(k, i)` contributes the pure branch
/// `sum_m sqrt(p_k p~_i / N) <phi_i|P_m|psi_k> exp(-i g eps a_m B)|p0>`.
pub fn couple_mixed<T: Real, P: PointerState<T>>(
    c: &MixedTsvCircuit<T>,
    spec: &CouplingSpec<T>,
    p0: &P,
) -> Result<CouplingOutcome<T, P>> {
    spec.pointer.check(&p0.kind())?;
    if spec.observable.dim() != c.system_dim() {
        return Err(Error::DimensionMismatch {
            expected: c.system_dim(),
            found: spec.observable.dim(),
        });
    }
    let spectrum = spec.observable.spectrum()?;
    let moved: Vec<P> = spectrum
        .iter()
        .map(|s| p0.evolve(real(s.value * spec.g_epsilon())))
        .collect();
    let projected: Vec<Vec<Ket<T>>> = c
        .psi
        .iter()
        .map(|psi| {
            spectrum
                .iter()
                .map(|s| Ket::new(s.projector.mul_vec(psi.amplitudes())))
                .collect()
        })
        .collect::<Result<_>>()?;

    let n = T::lit(c.ancilla_dim as f64);
    let p0_norm = p0.norm_sqr();
    let mut branches = Vec::new();
    let mut total = T::zero();
    for (pk, proj_k) in c.p.iter().zip(&projected) {
        for (pi, phi) in c.p_tilde.iter().zip(&c.phi) {
            let weight = (*pk * *pi / n).sqrt();
            let mut chi: Option<P> = None;
            for (branch, pointer) in proj_k.iter().zip(&moved) {
                let w = phi.inner(branch)? * weight;
                if w == Complex::zero() {
                    continue;
                }
                let term = pointer.scale(w);
                chi = Some(match chi {
                    Some(x) => x.superpose(&term)?,
                    None => term,
                });
            }
            let Some(chi) = chi else { continue };
            let prob = chi.norm_sqr() / p0_norm;
            if prob < T::lit(PROBABILITY_FLOOR) {
                continue;
            }
            total += prob;
            branches.push((prob, chi.normalize()?));
        }
    }
    if !(total >= T::lit(PROBABILITY_FLOOR)) {
        return Err(Error::PostselectionUnderflow(total.to_f64_lossy()));
    }
    Ok(CouplingOutcome {
        pointer: PointerOutcome::Mixed(PointerEnsemble::from_weights(branches)?),
        postselect_probability: Some(total.min(T::one())),
    })
}

/// Generalized two-state vector of the system at the end of a finite-strength
/// run, obtained by adding a verification of the final pointer state.
///
/// With the composite post-selection `<post| <Phi_tau|` and the joint state
/// `|J>`, term `s` is `conj(Phi_tau[s]) <post| (<s|_pointer |J>)`.
pub fn generalized_tsv_from_record<T: Real>(
    record: &FiniteStrengthRecord<T>,
) -> Result<GeneralizedTsv<T>> {
    let pointer = record.pointer_after.ket();
    let dp = pointer.dim();
    let ds = record.joint_state.dim() / dp;
    let mut terms = Vec::with_capacity(dp);
    for (s, amp) in pointer.amplitudes().iter().enumerate() {
        let pre = record
            .joint_state
            .project_subsystems(&[ds, dp], &[1], &Ket::basis(dp, s)?)?;
        if *amp == Complex::zero() || pre.norm_sqr() == T::zero() {
            continue;
        }
        terms.push(GtsvTerm {
            alpha: amp.conj(),
            post: record.post.clone(),
            pre,
        });
    }
    GeneralizedTsv::new(terms)
}

/// [`generalized_tsv_from_record`] for a fresh run of `setup` at `g_tau`.
pub fn derive_generalized_tsv<T: Real>(
    setup: &FiniteStrengthSetup<T>,
    g_tau: T,
) -> Result<GeneralizedTsv<T>> {
    generalized_tsv_from_record(&crate::coupling::finite_strength_run(setup, g_tau)?)
}
