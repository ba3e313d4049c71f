//! Pointer evolution under the impulsive interaction `H = g A B`.
//!
//! `exp(-i g eps A B)` is applied exactly through the spectral decomposition
//! of `A`: each eigenspace moves the pointer by `exp(-i g eps a_m B)` and the
//! branches are recombined with the appropriate selection amplitudes.

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::pointer::{PointerEnsemble, PointerKind, PointerState, SpinPointerState};
use crate::qstate::{spin_ket, spin_z_operator, DensityMatrix, Eigenspace, Ket, Operator};
use crate::scalar::{real, Real};
use crate::tsv::{GeneralizedTsv, MixedTsv, PureTsv, TwoStateVector};

/// Post-selection probabilities below this are treated as impossible events.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// Observable, coupling constant, duration and pointer for one interaction.
#[derive(Debug, Clone)]
pub struct CouplingSpec<T> {
    pub observable: Operator<T>,
    pub g: T,
    pub epsilon: T,
    pub pointer: PointerKind<T>,
}

impl<T: Real> CouplingSpec<T> {
    pub fn new(observable: Operator<T>, g: T, epsilon: T, pointer: PointerKind<T>) -> Result<Self> {
        if !(epsilon >= T::zero()) || !epsilon.is_finite() {
            return Err(invalid(
                "epsilon",
                format!("must be finite and non-negative, got {epsilon}"),
            ));
        }
        if !g.is_finite() {
            return Err(invalid("g", "must be finite"));
        }
        if let PointerKind::Gaussian { delta } = pointer {
            if !(delta > T::zero()) {
                return Err(invalid("delta", format!("must be positive, got {delta}")));
            }
        }
        Ok(Self {
            observable,
            g,
            epsilon,
            pointer,
        })
    }

    pub fn g_epsilon(&self) -> T {
        self.g * self.epsilon
    }
}

/// Pointer after a coupling: pure unless the system was left unselected.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", bound = "T: Real, P: Serialize")]
pub enum PointerOutcome<T, P> {
    Pure(P),
    Mixed(PointerEnsemble<T, P>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real, P: Serialize")]
pub struct CouplingOutcome<T, P> {
    pub pointer: PointerOutcome<T, P>,
    /// Present exactly when a post-selection took place.
    pub postselect_probability: Option<T>,
}

impl<T: Real, P: PointerState<T>> CouplingOutcome<T, P> {
    pub fn pure(&self) -> Option<&P> {
        match &self.pointer {
            PointerOutcome::Pure(p) => Some(p),
            PointerOutcome::Mixed(_) => None,
        }
    }

    pub fn ensemble(&self) -> Option<&PointerEnsemble<T, P>> {
        match &self.pointer {
            PointerOutcome::Mixed(e) => Some(e),
            PointerOutcome::Pure(_) => None,
        }
    }
}

/// `exp(-i g eps a B)|p0>` for a system in an eigenstate with eigenvalue `a`.
/// Complex `a` is allowed; the result is then renormalized.
pub fn couple_eigenvalue<T: Real, P: PointerState<T>>(
    a: Complex<T>,
    spec: &CouplingSpec<T>,
    p0: &P,
) -> Result<CouplingOutcome<T, P>> {
    spec.pointer.check(&p0.kind())?;
    let lambda = a * spec.g_epsilon();
    let moved = p0.evolve(lambda);
    let pointer = if lambda.im == T::zero() {
        moved
    } else {
        moved.normalize()?
    };
    Ok(CouplingOutcome {
        pointer: PointerOutcome::Pure(pointer),
        postselect_probability: None,
    })
}

/// Pointer mixture left by a pre-selected system that is not post-selected:
/// eigenvalue `a_m` moves the pointer with probability `|P_m psi|^2`.
pub fn couple_preselected<T: Real, P: PointerState<T>>(
    psi: &Ket<T>,
    spec: &CouplingSpec<T>,
    p0: &P,
) -> Result<CouplingOutcome<T, P>> {
    spec.pointer.check(&p0.kind())?;
    check_dim(&spec.observable, psi.dim())?;
    let norm = psi.norm_sqr();
    if !(norm > T::zero()) {
        return Err(Error::ZeroNorm);
    }
    let mut weighted = Vec::new();
    for space in spec.observable.spectrum()? {
        let branch = Ket::new(space.projector.mul_vec(psi.amplitudes()))?;
        let w = branch.norm_sqr() / norm;
        if w < T::lit(PROBABILITY_FLOOR) {
            continue;
        }
        weighted.push((w, p0.evolve(real(space.value * spec.g_epsilon()))));
    }
    Ok(CouplingOutcome {
        pointer: PointerOutcome::Mixed(PointerEnsemble::from_weights(weighted)?),
        postselect_probability: None,
    })
}

/// A post-selection that can be pushed through the spectral decomposition of `A`.
pub trait Selection<T: Real>: TwoStateVector<T> {
    /// `sum_k alpha_k <phi_k|P_m|psi_k>` for projector `P_m`.
    fn branch_amplitude(&self, space: &Eigenspace<T>) -> Result<Complex<T>>;

    /// Squared norm of the composite pre- and post-selected states; dividing
    /// by it turns `|chi|^2` into a probability.
    fn probability_scale(&self) -> T;

    /// `sum_k alpha_k <phi_k|psi_k>`.
    fn total_overlap(&self) -> Complex<T>;
}

impl<T: Real> Selection<T> for PureTsv<T> {
    fn branch_amplitude(&self, space: &Eigenspace<T>) -> Result<Complex<T>> {
        let projected = Ket::new(space.projector.mul_vec(self.pre().amplitudes()))?;
        self.post().inner(&projected)
    }

    fn probability_scale(&self) -> T {
        self.pre().norm_sqr() * self.post().norm_sqr()
    }

    fn total_overlap(&self) -> Complex<T> {
        self.overlap()
    }
}

impl<T: Real> Selection<T> for GeneralizedTsv<T> {
    fn branch_amplitude(&self, space: &Eigenspace<T>) -> Result<Complex<T>> {
        let mut acc = Complex::<T>::zero();
        for t in self.terms() {
            let projected = Ket::new(space.projector.mul_vec(t.pre.amplitudes()))?;
            acc += t.alpha * t.post.inner(&projected)?;
        }
        Ok(acc)
    }

    /// `(sum_k |psi_k|^2) (sum_k |alpha_k|^2 |phi_k|^2)`, the norms of the
    /// system-plus-ancilla pair from [`GeneralizedTsv::composite`].
    fn probability_scale(&self) -> T {
        let pre = self
            .terms()
            .iter()
            .fold(T::zero(), |a, t| a + t.pre.norm_sqr());
        let post = self
            .terms()
            .iter()
            .fold(T::zero(), |a, t| a + t.alpha.norm_sqr() * t.post.norm_sqr());
        pre * post
    }

    fn total_overlap(&self) -> Complex<T> {
        self.denominator()
    }
}

/// Pointer conditioned on a successful post-selection:
/// `N <phi| exp(-i g eps A B) |psi> |p0>`.
///
/// The returned pointer is normalized and carries the global phase of the
/// undisturbed overlap removed, so `eps = 0` returns `p0` itself. The
/// probability is `|chi|^2 / scale` with `chi` the unnormalized pointer and
/// `scale` from [`Selection::probability_scale`].
pub fn couple_postselected<T: Real, P: PointerState<T>, S: Selection<T>>(
    selection: &S,
    spec: &CouplingSpec<T>,
    p0: &P,
) -> Result<CouplingOutcome<T, P>> {
    spec.pointer.check(&p0.kind())?;
    check_dim(&spec.observable, selection.dim())?;
    let phase = {
        let ov = selection.total_overlap();
        ov.conj() / ov.norm()
    };
    let mut chi: Option<P> = None;
    for space in spec.observable.spectrum()? {
        let w = selection.branch_amplitude(&space)? * phase;
        if w == Complex::zero() {
            continue;
        }
        let branch = p0.evolve(real(space.value * spec.g_epsilon())).scale(w);
        chi = Some(match chi {
            Some(c) => c.superpose(&branch)?,
            None => branch,
        });
    }
    let chi = chi.ok_or(Error::PostselectionUnderflow(0.0))?;
    let probability = chi.norm_sqr() / (selection.probability_scale() * p0.norm_sqr());
    if !(probability >= T::lit(PROBABILITY_FLOOR)) {
        return Err(Error::PostselectionUnderflow(probability.to_f64_lossy()));
    }
    Ok(CouplingOutcome {
        pointer: PointerOutcome::Pure(chi.normalize()?),
        postselect_probability: Some(probability.min(T::one())),
    })
}

/// The pointer a system with eigenvalue `a_w` would produce: `p0` moved by
/// `g eps A_w` (complex allowed) and renormalized.
pub fn shift_rule_prediction<T: Real, P: PointerState<T>>(
    p0: &P,
    a_w: Complex<T>,
    g_epsilon: T,
) -> Result<P> {
    p0.evolve(a_w * g_epsilon).normalize()
}

fn check_dim<T: Real>(op: &Operator<T>, dim: usize) -> Result<()> {
    if op.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: dim,
        });
    }
    Ok(())
}

/// A spin-1 system coupled to a spin pointer for a finite `g tau`, then post-selected.
#[derive(Debug, Clone)]
pub struct FiniteStrengthSetup<T> {
    pub pre: Ket<T>,
    pub post: Ket<T>,
    pub observable: Operator<T>,
}

impl<T: Real> FiniteStrengthSetup<T> {
    /// Pre-selection `(|-1> + |0>)/sqrt 2`, post-selection `100|-1> - 101|0>`,
    /// `A = S_z`: weak value 100 in the weak limit.
    pub fn anomalous_spin_one() -> Self {
        let m1 = spin_ket(T::one(), -T::one()).expect("spin 1");
        let z = spin_ket(T::one(), T::zero()).expect("spin 1");
        let pre = m1.add(&z).and_then(|k| k.normalize()).expect("nonzero");
        let post = m1
            .scale(real(T::lit(100.0)))
            .add(&z.scale(real(T::lit(-101.0))))
            .expect("same dimension");
        Self {
            pre,
            post,
            observable: spin_z_operator(T::one()).expect("spin 1"),
        }
    }
}

/// Everything produced by one finite-strength run.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Real")]
pub struct FiniteStrengthRecord<T> {
    pub g_tau: T,
    /// Post-selection ket as supplied (not normalized).
    pub post: Ket<T>,
    /// System (first factor) and pointer just before post-selection.
    pub joint_state: Ket<T>,
    pub pointer_after: SpinPointerState<T>,
    pub postselect_probability: T,
    /// Half the relative phase of the pointer's down and up amplitudes.
    pub rotation_angle: T,
    /// `rotation_angle / g_tau`; absent at `g_tau = 0`.
    pub pointer_reading: Option<T>,
    pub weak_value: Complex<T>,
}

/// Couples `setup` to a `|up_x>` pointer for strength `g_tau`, post-selects,
/// and evaluates the resulting pointer and the weak value of the observable.
pub fn finite_strength_run<T: Real>(
    setup: &FiniteStrengthSetup<T>,
    g_tau: T,
) -> Result<FiniteStrengthRecord<T>> {
    if !g_tau.is_finite() || g_tau < T::zero() {
        return Err(invalid(
            "g_tau",
            format!("must be finite and non-negative, got {g_tau}"),
        ));
    }
    let p0 = SpinPointerState::initial();
    let sys_dim = setup.pre.dim();
    let mut joint: Option<Ket<T>> = None;
    for space in setup.observable.spectrum()? {
        let branch = Ket::new(space.projector.mul_vec(setup.pre.amplitudes()))?;
        let term = branch.tensor(p0.evolve(real(space.value * g_tau)).ket());
        joint = Some(match joint {
            Some(j) => j.add(&term)?,
            None => term,
        });
    }
    let joint = joint.ok_or(Error::EmptyState)?;

    let post = setup.post.normalize()?;
    let projected = joint.project_subsystems(&[sys_dim, 2], &[0], &post)?;
    let probability = projected.norm_sqr();
    if !(probability >= T::lit(PROBABILITY_FLOOR)) {
        return Err(Error::PostselectionUnderflow(probability.to_f64_lossy()));
    }
    let pointer_after = SpinPointerState::from_ket(projected.normalize()?)?;
    let rotation_angle = pointer_after.azimuth();
    let pointer_reading = (g_tau > T::zero()).then(|| rotation_angle / g_tau);

    let rho_pre = DensityMatrix::from_pure(&joint)?.partial_trace(&[sys_dim, 2], 0)?;
    let rho_post = DensityMatrix::from_pure(&post)?;
    let weak_value = MixedTsv::new(rho_pre, rho_post)?.weak_value(&setup.observable)?;

    Ok(FiniteStrengthRecord {
        g_tau,
        post: setup.post.clone(),
        joint_state: joint,
        pointer_after,
        postselect_probability: probability,
        rotation_angle,
        pointer_reading,
        weak_value,
    })
}

/// [`finite_strength_run`] on [`FiniteStrengthSetup::anomalous_spin_one`].
pub fn finite_strength_scenario<T: Real>(g_tau: T) -> Result<FiniteStrengthRecord<T>> {
    finite_strength_run(&FiniteStrengthSetup::anomalous_spin_one(), g_tau)
}

/// Closed-form post-selected pointer for the anomalous spin-1 setup:
/// `((100 e^{i g tau} - 101)|up> + (100 e^{-i g tau} - 101)|down>) / sqrt(40402 - 40400 cos g tau)`.
pub fn finite_strength_pointer_closed_form<T: Real>(g_tau: T) -> Result<SpinPointerState<T>> {
    let hundred = T::lit(100.0);
    let e = Complex::new(T::zero(), g_tau).exp();
    let up = e * hundred - T::lit(101.0);
    let down = e.conj() * hundred - T::lit(101.0);
    let norm = (T::lit(40402.0) - T::lit(40400.0) * g_tau.cos()).sqrt();
    if !(norm > T::zero()) {
        return Err(Error::ZeroNorm);
    }
    SpinPointerState::from_amplitudes(up / norm, down / norm)
}

/// Closed-form weak value `201 / (40402 - 40400 cos g tau) - 1/2` for the anomalous spin-1 setup.
pub fn finite_strength_weak_value_closed_form<T: Real>(g_tau: T) -> T {
    T::lit(201.0) / (T::lit(40402.0) - T::lit(40400.0) * g_tau.cos()) - T::lit(0.5)
}

impl<T: Real> Default for FiniteStrengthSetup<T> {
    fn default() -> Self {
        Self::anomalous_spin_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{bures_pure, bures_pure_mixed};
    use crate::pointer::{AnyPointer, GaussianPointerState};
    use crate::qstate::{polarization_operator, sigma_z};
    use crate::scalar::cplx;
    use crate::tsv::examples;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};

    fn gauss_spec(op: Operator<f64>, ge: f64) -> CouplingSpec<f64> {
        CouplingSpec::new(op, 1.0, ge, PointerKind::Gaussian { delta: 1.0 }).unwrap()
    }

    fn sz() -> Operator<f64> {
        spin_z_operator(1.0).unwrap()
    }

    #[test]
    fn eigenvalue_coupling_gaussian() {
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let out = couple_eigenvalue(real(1.0), &gauss_spec(sz(), 0.5), &p0).unwrap();
        let p = out.pure().unwrap();
        assert_eq!(p.terms()[0].center, real(0.5));
        assert_abs_diff_eq!(p.mean_position().unwrap(), 0.5, epsilon = 1e-15);
        let same = couple_eigenvalue(real(0.0), &gauss_spec(sz(), 0.5), &p0).unwrap();
        assert_eq!(same.pure().unwrap(), &p0);
        assert!(out.postselect_probability.is_none());
    }

    #[test]
    fn eigenvalue_coupling_spin_distance() {
        let spec = CouplingSpec::new(sz(), 1.0, 0.3, PointerKind::Spin).unwrap();
        let p0 = SpinPointerState::initial();
        let out = couple_eigenvalue(real(1.0), &spec, &p0).unwrap();
        assert_abs_diff_eq!(
            bures_pure(&p0, out.pure().unwrap()).unwrap(),
            0.3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn kind_mismatch() {
        let spec = CouplingSpec::new(sz(), 1.0, 0.3, PointerKind::Spin).unwrap();
        let p0 = AnyPointer::initial(PointerKind::Gaussian { delta: 1.0 }).unwrap();
        assert!(matches!(
            couple_eigenvalue(real(1.0), &spec, &p0),
            Err(Error::KindMismatch)
        ));
        assert!(CouplingSpec::new(sz(), 1.0, -0.1, PointerKind::Spin).is_err());
    }

    #[test]
    fn preselected_mixtures() {
        let s2 = spin_z_operator(2.0).unwrap();
        let psi = spin_ket(2.0, 0.0)
            .unwrap()
            .add(&spin_ket(2.0, 2.0).unwrap())
            .unwrap();
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let out = couple_preselected(&psi, &gauss_spec(s2, 0.02), &p0).unwrap();
        let ens = out.ensemble().unwrap();
        assert_eq!(ens.len(), 2);
        let mut centers: Vec<f64> = ens
            .components()
            .iter()
            .map(|(_, s)| s.terms()[0].center.re)
            .collect();
        centers.sort_by(f64::total_cmp);
        assert_eq!(centers, vec![0.0, 0.04]);
        for (p, _) in ens.components() {
            assert_abs_diff_eq!(*p, 0.5, epsilon = 1e-15);
        }

        let hv = Ket::from_reals(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let out = couple_preselected(&hv, &gauss_spec(polarization_operator(), 0.1), &p0).unwrap();
        let mut centers: Vec<f64> = out
            .ensemble()
            .unwrap()
            .components()
            .iter()
            .map(|(_, s)| s.terms()[0].center.re)
            .collect();
        centers.sort_by(f64::total_cmp);
        assert_eq!(centers, vec![-0.1, 0.1]);

        let eig = spin_ket(1.0, 1.0).unwrap();
        let out = couple_preselected(&eig, &gauss_spec(sz(), 0.1), &p0).unwrap();
        let ens = out.ensemble().unwrap();
        assert_eq!(ens.len(), 1);
        let direct = couple_eigenvalue(real(1.0), &gauss_spec(sz(), 0.1), &p0).unwrap();
        assert_eq!(&ens.components()[0].1, direct.pure().unwrap());
    }

    #[test]
    fn preselected_rejects_non_hermitian() {
        let m = crate::linalg::Matrix::from_rows(vec![
            vec![real(0.0), real(1.0)],
            vec![real(0.0), real(0.0)],
        ])
        .unwrap();
        let op = Operator::new(m);
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let r = couple_preselected(&Ket::basis(2, 0).unwrap(), &gauss_spec(op, 0.1), &p0);
        assert!(matches!(r, Err(Error::NotHermitian(_))));
    }

    #[test]
    fn postselected_weak_one_two_terms() {
        let tsv = examples::weak_one::<f64>();
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let spec = gauss_spec(sz(), 0.02);
        let out = couple_postselected(&tsv, &spec, &p0).unwrap();
        let pw = out.pure().unwrap();
        let mut terms = pw.terms().to_vec();
        terms.sort_by(|a, b| a.center.re.total_cmp(&b.center.re));
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].center, real(-0.02));
        let ratio = terms[1].amp / terms[0].amp;
        assert!((ratio + 2.0).norm() < 1e-14);
        let pe = couple_eigenvalue(real(1.0), &spec, &p0).unwrap();
        let d = bures_pure(pw, pe.pure().unwrap()).unwrap();
        assert!((d / (0.02f64.powi(2) / (2.0 * SQRT_2)) - 1.0).abs() < 0.02);
    }

    #[test]
    fn postselected_zero_weak_value_symmetric() {
        let hv = Ket::from_reals(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let tsv = PureTsv::new(hv.clone(), hv).unwrap();
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let out =
            couple_postselected(&tsv, &gauss_spec(polarization_operator(), 0.1), &p0).unwrap();
        let terms = out.pure().unwrap().terms();
        assert_eq!(terms.len(), 2);
        assert!((terms[0].amp - terms[1].amp).norm() < 1e-15);
        assert_abs_diff_eq!(terms[0].center.re, -terms[1].center.re, epsilon = 0.0);
    }

    #[test]
    fn postselected_imaginary_weak_value() {
        let pre = Ket::from_reals(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let post = Ket::normalized(vec![real(1.0), cplx(0.0, 1.0)]).unwrap();
        let tsv = PureTsv::new(pre, post).unwrap();
        let a_w = tsv.weak_value(&polarization_operator()).unwrap();
        assert!((a_w - cplx(0.0, 1.0)).norm() < 1e-15);
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let spec = gauss_spec(polarization_operator(), 0.1);
        let pw = couple_postselected(&tsv, &spec, &p0).unwrap();
        let pe = couple_eigenvalue(a_w, &spec, &p0).unwrap();
        let d = bures_pure(pw.pure().unwrap(), pe.pure().unwrap()).unwrap();
        assert!((d / (0.01 / (2.0 * SQRT_2)) - 1.0).abs() < 0.01, "{d}");
        let pred = shift_rule_prediction(&p0, a_w, 0.1).unwrap();
        assert!(bures_pure(&pred, &p0.shift(cplx(0.0, 0.1)).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn postselected_spin_pointer_cubic() {
        let tsv = examples::weak_one::<f64>();
        let p0 = SpinPointerState::initial();
        let ge = 1e-2;
        let spec = CouplingSpec::new(sz(), 1.0, ge, PointerKind::Spin).unwrap();
        let pw = couple_postselected(&tsv, &spec, &p0).unwrap();
        let pe = couple_eigenvalue(real(1.0), &spec, &p0).unwrap();
        let d = bures_pure(pw.pure().unwrap(), pe.pure().unwrap()).unwrap();
        assert!((d / ge.powi(3) - 1.0).abs() < 1e-3, "{}", d / ge.powi(3));
        let e = Complex::new(0.0, ge).exp();
        let closed = SpinPointerState::from_amplitudes(-e + 2.0, -e.conj() + 2.0).unwrap();
        assert!(bures_pure(&closed, pw.pure().unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn eigen_pre_and_post_reproduce_eigen_coupling() {
        let k = spin_ket(1.0, -1.0).unwrap();
        let tsv = PureTsv::new(k.clone(), k).unwrap();
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let spec = gauss_spec(sz(), 0.3);
        let a = couple_postselected(&tsv, &spec, &p0).unwrap();
        let b = couple_eigenvalue(real(-1.0), &spec, &p0).unwrap();
        assert_eq!(a.pure(), b.pure());
        assert_eq!(a.postselect_probability, Some(1.0));
    }

    #[test]
    fn zero_duration_returns_initial_pointer() {
        let tsv = examples::weak_hundred::<f64>();
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let out = couple_postselected(&tsv, &gauss_spec(sz(), 0.0), &p0).unwrap();
        assert!((out.pure().unwrap().overlap(&p0).unwrap() - 1.0).norm() < 1e-12);
        let pre = couple_preselected(tsv.pre(), &gauss_spec(sz(), 0.0), &p0).unwrap();
        assert_eq!(bures_pure_mixed(&p0, pre.ensemble().unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn probability_matches_unnormalized_norm() {
        let tsv = examples::weak_one::<f64>();
        let p0 = GaussianPointerState::initial(1.0).unwrap();
        let out = couple_postselected(&tsv, &gauss_spec(sz(), 0.0), &p0).unwrap();
        // at eps = 0 the probability is |<phi|psi>|^2
        let expect = tsv.overlap().norm_sqr() / (tsv.pre().norm_sqr() * tsv.post().norm_sqr());
        assert_abs_diff_eq!(out.postselect_probability.unwrap(), expect, epsilon = 1e-15);
    }

    #[test]
    fn postselection_underflow() {
        // overlap 1e-8 clears the weak-value floor, probability 1e-16 does not
        let pre = Ket::from_reals(&[1.0, 1.0]).unwrap();
        let post = Ket::from_reals(&[1.0, -0.999_999_98]).unwrap();
        let tsv = PureTsv::new(pre, post).unwrap();
        let p0 = SpinPointerState::initial();
        let spec = CouplingSpec::new(sigma_z(), 1.0, 0.0, PointerKind::Spin).unwrap();
        assert!(matches!(
            couple_postselected(&tsv, &spec, &p0),
            Err(Error::PostselectionUnderflow(_))
        ));
    }

    #[test]
    fn finite_strength_known_points() {
        let r = finite_strength_scenario(PI).unwrap();
        assert!((r.weak_value - (201.0 / 80802.0 - 0.5)).norm() <= 1e-12);
        let r = finite_strength_scenario(FRAC_PI_2).unwrap();
        assert!((r.weak_value.re - (201.0 / 40402.0 - 0.5)).abs() <= 1e-12);
        let closed = finite_strength_pointer_closed_form(FRAC_PI_2).unwrap();
        let up = (cplx(0.0, 100.0) - 101.0) / 40402f64.sqrt();
        assert!((closed.up() - up).norm() < 1e-15);
        assert!((closed.ket().amplitudes()[0] - r.pointer_after.up()).norm() < 1e-10);
        let r = finite_strength_scenario(0.5).unwrap();
        assert_abs_diff_eq!(r.weak_value.re, -0.459374771669527, epsilon = 1e-12);
        assert_abs_diff_eq!(r.pointer_reading.unwrap(), 2.6026289, epsilon = 1e-6);
    }

    #[test]
    fn finite_strength_weak_limit() {
        let r = finite_strength_scenario::<f64>(1e-4).unwrap();
        assert!((r.weak_value.re / 100.0 - 1.0).abs() < 1e-3);
        assert!((r.pointer_reading.unwrap() / 100.0 - 1.0).abs() < 1e-2);
        let r = finite_strength_scenario::<f64>(0.0).unwrap();
        assert!(r.pointer_reading.is_none());
        assert!((r.weak_value.re - 100.0).abs() < 1e-9);
    }

    #[test]
    fn finite_strength_reduced_matrix() {
        let gt = 0.7;
        let r = finite_strength_scenario(gt).unwrap();
        let rho = DensityMatrix::from_pure(&r.joint_state)
            .unwrap()
            .partial_trace(&[3, 2], 0)
            .unwrap();
        let m = rho.matrix();
        assert_abs_diff_eq!(m[(1, 2)].re, 0.5 * f64::cos(gt), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 0)].re, 0.0, epsilon = 0.0);
    }

    proptest! {
        #[test]
        fn preselected_mean_is_expectation(
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
            ge in 0.0f64..0.5,
        ) {
            let psi = Ket::new(amps.iter().map(|&(a, b)| cplx(a, b)).collect()).unwrap();
            prop_assume!(psi.norm() > 1e-3);
            let p0 = GaussianPointerState::initial(1.0).unwrap();
            let out = couple_preselected(&psi, &gauss_spec(sz(), ge), &p0).unwrap();
            let mean = out.ensemble().unwrap().mean_position().unwrap();
            let expect = ge * sz().expectation(&psi).unwrap().re;
            prop_assert!((mean - expect).abs() < 1e-10);
        }

        #[test]
        fn finite_strength_paths_agree(gt in 0.0f64..(2.0 * PI)) {
            let r = finite_strength_scenario(gt).unwrap();
            let closed = finite_strength_pointer_closed_form(gt).unwrap();
            for (a, b) in r.pointer_after.ket().amplitudes().iter().zip(closed.ket().amplitudes()) {
                prop_assert!((a - b).norm() < 1e-10);
            }
            // the 100|-1> - 101|0> post-selection costs a few digits near A_w = 100
            let expected = finite_strength_weak_value_closed_form(gt);
            prop_assert!((r.weak_value.re - expected).abs() < 5e-12 * (1.0 + expected.abs()));
        }

        #[test]
        fn postselection_probability_in_unit_interval(ge in 0.0f64..2.0) {
            let tsv = examples::weak_hundred::<f64>();
            let p0 = GaussianPointerState::initial(1.0).unwrap();
            let p = couple_postselected(&tsv, &gauss_spec(sz(), ge), &p0).unwrap().postselect_probability.unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
