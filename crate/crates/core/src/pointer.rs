//! Pointer states.
//!
//! The continuous pointer is kept as a finite superposition of width-`delta`
//! Gaussians
//!
//! ```text
//! G_c(Q) = (2 pi delta^2)^(-1/4) exp(-(Q - c)^2 / (4 delta^2))
//! ```
//!
//! with complex centers `c`. A momentum kick `exp(ikQ)` is absorbed into the
//! center (`c -> c + 2i delta^2 k`) so every state met in practice stays in
//! this family and all overlaps have closed forms. The momentum operator `P`
//! generates translations, so `exp(-i lambda P)` adds `lambda` to each center,
//! for complex `lambda` as well.
//!
//! The spin pointer is a qubit coupled through `sigma_z`.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::PureState;
use crate::qstate::{check_probabilities, Ket};
use crate::scalar::{cplx, real, Real};

/// Which pointer a coupling drives, together with the pointer variable `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum PointerKind<T> {
    /// Continuous pointer of width `delta`, `B = P`.
    Gaussian { delta: T },
    /// Qubit pointer, `B = sigma_z`.
    Spin,
}

impl<T: Real> PointerKind<T> {
    /// `(<B^2>, <B^4>)` in the initial pointer state.
    pub fn b_moments(&self) -> (T, T) {
        match *self {
            PointerKind::Gaussian { delta } => {
                let d2 = delta * delta;
                (T::lit(0.25) / d2, T::lit(3.0 / 16.0) / (d2 * d2))
            }
            PointerKind::Spin => (T::one(), T::one()),
        }
    }

    /// Spread `Delta B` of the pointer variable in the initial state.
    pub fn b_uncertainty(&self) -> T {
        let (b2, _) = self.b_moments();
        b2.sqrt()
    }

    fn matches(&self, other: &Self) -> bool {
        match (self, other) {
            (PointerKind::Gaussian { delta: a }, PointerKind::Gaussian { delta: b }) => {
                same_width(*a, *b)
            }
            (PointerKind::Spin, PointerKind::Spin) => true,
            _ => false,
        }
    }

    pub(crate) fn check(&self, other: &Self) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::KindMismatch)
        }
    }
}

fn same_width<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-12) * a.abs().max(b.abs())
}

/// A pure pointer state on which `exp(-i lambda B)` can act.
pub trait PointerState<T: Real>: PureState<T> + Clone + Send + Sync {
    fn kind(&self) -> PointerKind<T>;

    /// `exp(-i lambda B)` applied without renormalization.
    fn evolve(&self, lambda: Complex<T>) -> Self;

    fn scale(&self, c: Complex<T>) -> Self;

    /// Vector sum; both states must be of the same kind.
    fn superpose(&self, other: &Self) -> Result<Self>;

    fn normalize(&self) -> Result<Self>;
}

/// One Gaussian term `amp * G_center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaussianTerm<T> {
    pub amp: Complex<T>,
    pub center: Complex<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "GaussianRepr<T>",
    into = "GaussianRepr<T>",
    bound = "T: Real"
)]
pub struct GaussianPointerState<T> {
    delta: T,
    terms: Vec<GaussianTerm<T>>,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct GaussianRepr<T> {
    delta: T,
    terms: Vec<GaussianTerm<T>>,
}

impl<T: Real> TryFrom<GaussianRepr<T>> for GaussianPointerState<T> {
    type Error = Error;

    fn try_from(r: GaussianRepr<T>) -> Result<Self> {
        GaussianPointerState::from_terms(r.delta, r.terms)
    }
}

impl<T: Real> From<GaussianPointerState<T>> for GaussianRepr<T> {
    fn from(p: GaussianPointerState<T>) -> Self {
        GaussianRepr {
            delta: p.delta,
            terms: p.terms,
        }
    }
}

/// `<G_a|G_b>` for complex centers.
fn pair_overlap<T: Real>(a: Complex<T>, b: Complex<T>, delta: T) -> Complex<T> {
    let d = a.conj() - b;
    (-(d * d) / (T::lit(8.0) * delta * delta)).exp()
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    Ok(())
}

impl<T: Real> GaussianPointerState<T> {
    /// `Phi_0`: a single normalized Gaussian centred at 0.
    pub fn initial(delta: T) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self {
            delta,
            terms: vec![GaussianTerm {
                amp: Complex::one(),
                center: Complex::zero(),
            }],
            normalized: true,
        })
    }

    /// Arbitrary superposition. Equal centers are merged and negligible terms dropped.
    pub fn from_terms(delta: T, terms: Vec<GaussianTerm<T>>) -> Result<Self> {
        check_delta(delta)?;
        if terms.iter().any(|t| {
            !(t.amp.re.is_finite()
                && t.amp.im.is_finite()
                && t.center.re.is_finite()
                && t.center.im.is_finite())
        }) {
            return Err(invalid("terms", "non-finite amplitude or center"));
        }
        let mut state = Self {
            delta,
            terms,
            normalized: false,
        };
        state.tidy();
        if state.terms.is_empty() {
            return Err(Error::ZeroNorm);
        }
        state.normalized = (state.norm_sqr() - T::one()).abs() <= T::lit(1e-10);
        Ok(state)
    }

    /// The Gaussian `G_center(Q) * exp(i k Q)` scaled by `amp`, folded into one
    /// complex-centred term.
    pub fn with_momentum(delta: T, amp: Complex<T>, center: Complex<T>, k: T) -> Result<Self> {
        check_delta(delta)?;
        let shifted = center + cplx(T::zero(), (delta * delta + delta * delta) * k);
        let factor = ((shifted * shifted - center * center) / (T::lit(4.0) * delta * delta)).exp();
        Self::from_terms(
            delta,
            vec![GaussianTerm {
                amp: amp * factor,
                center: shifted,
            }],
        )
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn terms(&self) -> &[GaussianTerm<T>] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Translates every center by `c`; a complex shift is followed by renormalization.
    pub fn shift(&self, c: Complex<T>) -> Result<Self> {
        let moved = self.translate(c);
        if c.im == T::zero() {
            Ok(moved)
        } else {
            moved.normalize()
        }
    }

    fn translate(&self, c: Complex<T>) -> Self {
        Self {
            delta: self.delta,
            terms: self
                .terms
                .iter()
                .map(|t| GaussianTerm {
                    amp: t.amp,
                    center: t.center + c,
                })
                .collect(),
            normalized: self.normalized && c.im == T::zero(),
        }
    }

    /// `<self|other>` in closed form.
    pub fn overlap(&self, other: &Self) -> Result<Complex<T>> {
        self.check_width(other)?;
        let mut acc = Complex::<T>::zero();
        for a in &self.terms {
            for b in &other.terms {
                acc += a.amp.conj() * b.amp * pair_overlap(a.center, b.center, self.delta);
            }
        }
        Ok(acc)
    }

    /// `<Q>` of the normalized state.
    pub fn mean_position(&self) -> Result<T> {
        let mut num = Complex::<T>::zero();
        for a in &self.terms {
            for b in &self.terms {
                let m = (a.center.conj() + b.center) * T::lit(0.5);
                num += a.amp.conj() * b.amp * pair_overlap(a.center, b.center, self.delta) * m;
            }
        }
        let n = self.norm_sqr();
        if n <= T::min_positive_value() {
            return Err(Error::ZeroNorm);
        }
        Ok(num.re / n)
    }

    /// Wavefunction value at `q`.
    pub fn evaluate(&self, q: T) -> Complex<T> {
        let d2 = self.delta * self.delta;
        let norm = (T::TAU() * d2).powf(T::lit(-0.25));
        self.terms
            .iter()
            .map(|t| {
                let x = real(q) - t.center;
                t.amp * (-(x * x) / (T::lit(4.0) * d2)).exp() * norm
            })
            .sum()
    }

    fn check_width(&self, other: &Self) -> Result<()> {
        if !same_width(self.delta, other.delta) {
            return Err(Error::WidthMismatch(
                self.delta.to_f64_lossy(),
                other.delta.to_f64_lossy(),
            ));
        }
        Ok(())
    }

    /// Merges identical centers and drops terms far below the largest amplitude.
    fn tidy(&mut self) {
        let mut merged: Vec<GaussianTerm<T>> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match merged.iter_mut().find(|m| m.center == t.center) {
                Some(m) => m.amp += t.amp,
                None => merged.push(*t),
            }
        }
        let biggest = merged.iter().fold(T::zero(), |m, t| m.max(t.amp.norm()));
        merged.retain(|t| t.amp.norm() > T::PRUNE_TOL * biggest && t.amp.norm() > T::zero());
        self.terms = merged;
    }
}

impl<T: Real> PureState<T> for GaussianPointerState<T> {
    fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.overlap(other)
    }

    fn norm_sqr(&self) -> T {
        let mut acc = T::zero();
        for (i, a) in self.terms.iter().enumerate() {
            acc += a.amp.norm_sqr() * pair_overlap(a.center, a.center, self.delta).re;
            for b in &self.terms[i + 1..] {
                let x = a.amp.conj() * b.amp * pair_overlap(a.center, b.center, self.delta);
                acc += x.re + x.re;
            }
        }
        acc
    }

    /// `|a|^2 |b|^2 - |<a|b>|^2` summed term by term with the cancellation
    /// removed analytically: each quadruple of terms contributes a product of
    /// two cross overlaps times `expm1` of a bilinear form in the centers.
    fn gram_deficit(&self, other: &Self) -> Result<T> {
        self.check_width(other)?;
        let four_d2 = T::lit(4.0) * self.delta * self.delta;
        let mut acc = Complex::<T>::zero();
        for ai in &self.terms {
            for aj in &self.terms {
                let aa = ai.amp.conj() * aj.amp;
                for bk in &other.terms {
                    let ov_kj = pair_overlap(bk.center, aj.center, self.delta);
                    for bl in &other.terms {
                        let z = (ai.center.conj() - bk.center.conj()) * (aj.center - bl.center)
                            / four_d2;
                        acc += aa
                            * bk.amp.conj()
                            * bl.amp
                            * pair_overlap(ai.center, bl.center, self.delta)
                            * ov_kj
                            * expm1(z);
                    }
                }
            }
        }
        Ok(acc.re.max(T::zero()))
    }
}

/// `exp(z) - 1` without cancellation for small `|z|`.
fn expm1<T: Real>(z: Complex<T>) -> Complex<T> {
    // exp(x + iy) - 1 = expm1(x) cos y - 2 sin^2(y/2) + i e^x sin y
    let half = z.im * T::lit(0.5);
    let s = half.sin();
    cplx(
        z.re.exp_m1() * z.im.cos() - (s * s + s * s),
        z.re.exp() * z.im.sin(),
    )
}

impl<T: Real> PointerState<T> for GaussianPointerState<T> {
    fn kind(&self) -> PointerKind<T> {
        PointerKind::Gaussian { delta: self.delta }
    }

    fn evolve(&self, lambda: Complex<T>) -> Self {
        let mut out = self.translate(lambda);
        out.normalized = self.normalized && lambda.im == T::zero();
        out
    }

    fn scale(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.amp *= c;
        }
        out.normalized = self.normalized && (c.norm() - T::one()).abs() <= T::lit(1e-14);
        out
    }

    fn superpose(&self, other: &Self) -> Result<Self> {
        self.check_width(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(self.delta, terms)
    }

    fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > T::min_positive_value()) {
            return Err(Error::ZeroNorm);
        }
        let mut out = self.scale(real(n.sqrt().recip()));
        out.normalized = true;
        Ok(out)
    }
}

/// Qubit pointer in the `(|up>, |down>)` basis of `sigma_z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Real")]
pub struct SpinPointerState<T> {
    ket: Ket<T>,
}

impl<T: Real> SpinPointerState<T> {
    /// `|up_x> = (|up> + |down>) / sqrt 2`.
    pub fn initial() -> Self {
        let s = T::FRAC_1_SQRT_2();
        Self {
            ket: Ket::from_reals(&[s, s]).expect("two finite amplitudes"),
        }
    }

    pub fn from_amplitudes(up: Complex<T>, down: Complex<T>) -> Result<Self> {
        Ok(Self {
            ket: Ket::new(vec![up, down])?,
        })
    }

    pub fn from_ket(ket: Ket<T>) -> Result<Self> {
        if ket.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: ket.dim(),
            });
        }
        Ok(Self { ket })
    }

    pub fn ket(&self) -> &Ket<T> {
        &self.ket
    }

    pub fn up(&self) -> Complex<T> {
        self.ket.amplitudes()[0]
    }

    pub fn down(&self) -> Complex<T> {
        self.ket.amplitudes()[1]
    }

    /// Azimuthal rotation angle about `z` relative to `|up_x>`: half the
    /// relative phase of the down and up amplitudes, in `(-pi/2, pi/2]`.
    pub fn azimuth(&self) -> T {
        let rel = self.down() * self.up().conj();
        principal_arg(rel) * T::lit(0.5)
    }
}

/// `arg` mapped to `(-pi, pi]`.
pub(crate) fn principal_arg<T: Real>(z: Complex<T>) -> T {
    let a = z.im.atan2(z.re);
    if a <= -T::PI() {
        a + T::TAU()
    } else {
        a
    }
}

impl<T: Real> PureState<T> for SpinPointerState<T> {
    fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.ket.inner(&other.ket)
    }

    fn norm_sqr(&self) -> T {
        self.ket.norm_sqr()
    }

    fn gram_deficit(&self, other: &Self) -> Result<T> {
        self.ket.gram_deficit(&other.ket)
    }
}

impl<T: Real> PointerState<T> for SpinPointerState<T> {
    fn kind(&self) -> PointerKind<T> {
        PointerKind::Spin
    }

    fn evolve(&self, lambda: Complex<T>) -> Self {
        let i = Complex::<T>::i();
        Self {
            ket: Ket::new(vec![
                self.up() * (-i * lambda).exp(),
                self.down() * (i * lambda).exp(),
            ])
            .expect("finite amplitudes"),
        }
    }

    fn scale(&self, c: Complex<T>) -> Self {
        Self {
            ket: self.ket.scale(c),
        }
    }

    fn superpose(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            ket: self.ket.add(&other.ket)?,
        })
    }

    fn normalize(&self) -> Result<Self> {
        Ok(Self {
            ket: self.ket.normalize()?,
        })
    }
}

/// Either pointer, for callers that choose the kind at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum AnyPointer<T> {
    Gaussian(GaussianPointerState<T>),
    Spin(SpinPointerState<T>),
}

impl<T: Real> AnyPointer<T> {
    pub fn initial(kind: PointerKind<T>) -> Result<Self> {
        Ok(match kind {
            PointerKind::Gaussian { delta } => {
                Self::Gaussian(GaussianPointerState::initial(delta)?)
            }
            PointerKind::Spin => Self::Spin(SpinPointerState::initial()),
        })
    }
}

impl<T: Real> PureState<T> for AnyPointer<T> {
    fn inner(&self, other: &Self) -> Result<Complex<T>> {
        match (self, other) {
            (Self::Gaussian(a), Self::Gaussian(b)) => a.inner(b),
            (Self::Spin(a), Self::Spin(b)) => a.inner(b),
            _ => Err(Error::KindMismatch),
        }
    }

    fn norm_sqr(&self) -> T {
        match self {
            Self::Gaussian(a) => a.norm_sqr(),
            Self::Spin(a) => a.norm_sqr(),
        }
    }

    fn gram_deficit(&self, other: &Self) -> Result<T> {
        match (self, other) {
            (Self::Gaussian(a), Self::Gaussian(b)) => a.gram_deficit(b),
            (Self::Spin(a), Self::Spin(b)) => a.gram_deficit(b),
            _ => Err(Error::KindMismatch),
        }
    }
}

impl<T: Real> PointerState<T> for AnyPointer<T> {
    fn kind(&self) -> PointerKind<T> {
        match self {
            Self::Gaussian(a) => a.kind(),
            Self::Spin(a) => a.kind(),
        }
    }

    fn evolve(&self, lambda: Complex<T>) -> Self {
        match self {
            Self::Gaussian(a) => Self::Gaussian(a.evolve(lambda)),
            Self::Spin(a) => Self::Spin(a.evolve(lambda)),
        }
    }

    fn scale(&self, c: Complex<T>) -> Self {
        match self {
            Self::Gaussian(a) => Self::Gaussian(PointerState::scale(a, c)),
            Self::Spin(a) => Self::Spin(a.scale(c)),
        }
    }

    fn superpose(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Self::Gaussian(a), Self::Gaussian(b)) => Ok(Self::Gaussian(a.superpose(b)?)),
            (Self::Spin(a), Self::Spin(b)) => Ok(Self::Spin(a.superpose(b)?)),
            _ => Err(Error::KindMismatch),
        }
    }

    fn normalize(&self) -> Result<Self> {
        Ok(match self {
            Self::Gaussian(a) => Self::Gaussian(PointerState::normalize(a)?),
            Self::Spin(a) => Self::Spin(a.normalize()?),
        })
    }
}

/// Probabilistic mixture of normalized pointer states.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real, P: Serialize")]
pub struct PointerEnsemble<T, P> {
    components: Vec<(T, P)>,
}

impl<T: Real, P: PointerState<T>> PointerEnsemble<T, P> {
    /// Components must carry probabilities in `(0, 1]` summing to one.
    pub fn new(components: Vec<(T, P)>) -> Result<Self> {
        let probs: Vec<T> = components.iter().map(|c| c.0).collect();
        check_probabilities(&probs)?;
        if probs.iter().any(|p| !(*p > T::zero())) {
            return Err(Error::InvalidProbabilities(
                "zero-probability component".into(),
            ));
        }
        if let Some((_, first)) = components.first() {
            let kind = first.kind();
            for (_, c) in &components[1..] {
                kind.check(&c.kind())?;
            }
        }
        let components = components
            .into_iter()
            .map(|(p, s)| Ok((p, s.normalize()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    /// Normalizes non-negative weights, dropping zero-weight components.
    pub fn from_weights(weighted: Vec<(T, P)>) -> Result<Self> {
        if weighted
            .iter()
            .any(|(w, _)| !(*w >= T::zero()) || !w.is_finite())
        {
            return Err(Error::InvalidProbabilities(
                "negative or non-finite weight".into(),
            ));
        }
        let total = weighted.iter().fold(T::zero(), |a, (w, _)| a + *w);
        if !(total > T::zero()) {
            return Err(Error::InvalidProbabilities("all weights vanish".into()));
        }
        Self::new(
            weighted
                .into_iter()
                .filter(|(w, _)| *w > T::zero())
                .map(|(w, s)| (w / total, s))
                .collect(),
        )
    }

    pub fn components(&self) -> &[(T, P)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl<T: Real> PointerEnsemble<T, GaussianPointerState<T>> {
    /// Probability-weighted `<Q>`.
    pub fn mean_position(&self) -> Result<T> {
        self.components
            .iter()
            .try_fold(T::zero(), |acc, (p, s)| Ok(acc + *p * s.mean_position()?))
    }
}

/// Uniform grid for [`quadrature_overlap`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of nodes; at least 4096.
    pub nodes: usize,
    /// Extent beyond the outermost real center, in units of `delta`; at least 12.
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes: 8193,
            half_width: 12.0,
        }
    }
}

/// Numerical overlap and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: Complex<T>,
    /// `|T_n - T_{n/2}|`: the difference to the same rule on every other node.
    pub error_estimate: T,
}

/// Trapezoid-rule `<p1|p2>` on a uniform grid. Independent of the closed forms
/// and meant as their oracle.
pub fn quadrature_overlap<T: Real>(
    p1: &GaussianPointerState<T>,
    p2: &GaussianPointerState<T>,
    grid: GridSpec,
) -> Result<Quadrature<T>> {
    p1.check_width(p2)?;
    if grid.nodes < 4096 {
        return Err(Error::InsufficientGrid(format!(
            "{} nodes, need at least 4096",
            grid.nodes
        )));
    }
    if !(grid.half_width >= 12.0) {
        return Err(Error::InsufficientGrid(format!(
            "half width {} delta, need at least 12",
            grid.half_width
        )));
    }
    // odd node count so the coarse rule reuses every other node
    let n = grid.nodes | 1;
    let delta = p1.delta;
    let centers = p1.terms.iter().chain(&p2.terms).map(|t| t.center.re);
    let lo = centers.clone().fold(T::infinity(), T::min) - T::lit(grid.half_width) * delta;
    let hi = centers.fold(T::neg_infinity(), T::max) + T::lit(grid.half_width) * delta;
    let h = (hi - lo) / T::from_usize(n - 1).unwrap_or_else(T::one);

    let mut fine = Complex::zero();
    let mut coarse = Complex::zero();
    for j in 0..n {
        let q = lo + h * T::from_usize(j).unwrap_or_else(T::zero);
        let f = p1.evaluate(q).conj() * p2.evaluate(q);
        let end = j == 0 || j == n - 1;
        let w = if end { T::lit(0.5) } else { T::one() };
        fine += f * w;
        if j % 2 == 0 {
            coarse += f * w;
        }
    }
    let fine = fine * h;
    let coarse = coarse * (h + h);
    Ok(Quadrature {
        value: fine,
        error_estimate: (fine - coarse).norm(),
    })
}
