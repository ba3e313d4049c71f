//! Pre- and post-selected systems and their weak values.
//!
//! Post-selected states are stored as kets `|phi>`; the bra entering the weak
//! value is their conjugate transpose.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::qstate::{DensityMatrix, Ket, Operator};
use crate::scalar::Real;

/// Anything that assigns weak values to operators.
pub trait TwoStateVector<T: Real> {
    fn dim(&self) -> usize;

    fn weak_value(&self, op: &Operator<T>) -> Result<Complex<T>>;

    /// Weak value of `A^n`, which in general differs from `(A_w)^n`.
    fn weak_value_moment(&self, op: &Operator<T>, n: u32) -> Result<Complex<T>> {
        if n == 0 {
            return Err(invalid("n", "moment order must be positive"));
        }
        self.weak_value(&op.pow(n))
    }
}

fn check_op_dim<T: Real>(dim: usize, op: &Operator<T>) -> Result<()> {
    if op.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: op.dim(),
        });
    }
    Ok(())
}

/// `<phi| |psi>`. Kets are stored as given; the weak value does not depend on
/// their scale, and keeping exact inputs avoids rounding from normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureRepr<T>", into = "PureRepr<T>", bound = "T: Real")]
pub struct PureTsv<T> {
    pre: Ket<T>,
    post: Ket<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct PureRepr<T> {
    pre: Ket<T>,
    post: Ket<T>,
}

impl<T: Real> TryFrom<PureRepr<T>> for PureTsv<T> {
    type Error = Error;

    fn try_from(r: PureRepr<T>) -> Result<Self> {
        PureTsv::new(r.pre, r.post)
    }
}

impl<T: Real> From<PureTsv<T>> for PureRepr<T> {
    fn from(t: PureTsv<T>) -> Self {
        PureRepr {
            pre: t.pre,
            post: t.post,
        }
    }
}

impl<T: Real> PureTsv<T> {
    /// Rejects zero kets and pairs whose normalized overlap is below the floor.
    pub fn new(pre: Ket<T>, post: Ket<T>) -> Result<Self> {
        let scale = pre.norm() * post.norm();
        if !(scale > T::zero()) {
            return Err(Error::ZeroNorm);
        }
        let ov = post.inner(&pre)?.norm() / scale;
        if ov <= T::OVERLAP_FLOOR {
            return Err(Error::UndefinedWeakValue(ov.to_f64_lossy()));
        }
        Ok(Self { pre, post })
    }

    pub fn pre(&self) -> &Ket<T> {
        &self.pre
    }

    pub fn post(&self) -> &Ket<T> {
        &self.post
    }

    /// `<phi|psi>` of the stored (possibly unnormalized) kets.
    pub fn overlap(&self) -> Complex<T> {
        self.post
            .inner(&self.pre)
            .expect("dimensions checked at construction")
    }

    pub fn to_mixed(&self) -> MixedTsv<T> {
        MixedTsv {
            rho_pre: DensityMatrix::from_pure(&self.pre).expect("normalized"),
            rho_post: DensityMatrix::from_pure(&self.post).expect("normalized"),
        }
    }

    pub fn to_generalized(&self) -> GeneralizedTsv<T> {
        GeneralizedTsv {
            terms: vec![GtsvTerm {
                alpha: Complex::new(T::one(), T::zero()),
                post: self.post.clone(),
                pre: self.pre.clone(),
            }],
        }
    }
}

impl<T: Real> TwoStateVector<T> for PureTsv<T> {
    fn dim(&self) -> usize {
        self.pre.dim()
    }

    fn weak_value(&self, op: &Operator<T>) -> Result<Complex<T>> {
        check_op_dim(self.dim(), op)?;
        let num = self.post.inner(&op.apply(&self.pre)?)?;
        Ok(num / self.overlap())
    }
}

/// One term `alpha <phi| |psi>` of a generalized two-state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct GtsvTerm<T> {
    pub alpha: Complex<T>,
    pub post: Ket<T>,
    pub pre: Ket<T>,
}

/// `sum_k alpha_k <phi_k| |psi_k>`. Kets are kept as given: their norms are
/// part of the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GenRepr<T>", into = "GenRepr<T>", bound = "T: Real")]
pub struct GeneralizedTsv<T> {
    terms: Vec<GtsvTerm<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct GenRepr<T> {
    terms: Vec<GtsvTerm<T>>,
}

impl<T: Real> TryFrom<GenRepr<T>> for GeneralizedTsv<T> {
    type Error = Error;

    fn try_from(r: GenRepr<T>) -> Result<Self> {
        GeneralizedTsv::new(r.terms)
    }
}

impl<T: Real> From<GeneralizedTsv<T>> for GenRepr<T> {
    fn from(g: GeneralizedTsv<T>) -> Self {
        GenRepr { terms: g.terms }
    }
}

impl<T: Real> GeneralizedTsv<T> {
    pub fn new(terms: Vec<GtsvTerm<T>>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyState)?;
        let dim = first.pre.dim();
        for t in &terms {
            for k in [&t.pre, &t.post] {
                if k.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: k.dim(),
                    });
                }
            }
        }
        let g = Self { terms };
        let scale = g.terms.iter().fold(T::zero(), |acc, t| {
            acc + t.alpha.norm() * t.pre.norm() * t.post.norm()
        });
        let den = g.denominator();
        if den.norm() <= T::OVERLAP_FLOOR * scale.max(T::min_positive_value()) {
            return Err(Error::UndefinedWeakValue(den.norm().to_f64_lossy()));
        }
        Ok(g)
    }

    pub fn terms(&self) -> &[GtsvTerm<T>] {
        &self.terms
    }

    /// `sum_k alpha_k <phi_k|psi_k>`.
    pub fn denominator(&self) -> Complex<T> {
        self.terms
            .iter()
            .map(|t| t.alpha * t.post.inner(&t.pre).expect("dimensions checked"))
            .sum()
    }

    /// System-plus-ancilla pure pair realizing this vector: pre
    /// `sum_k |psi_k>|k>`, post `sum_k conj(alpha_k) |phi_k>|k>`, so that
    /// `(A x I)_w` of the pair equals the generalized weak value. The ancilla is
    /// the second tensor factor with dimension `terms().len()`.
    pub fn composite(&self) -> Result<PureTsv<T>> {
        let n = self.terms.len();
        let mut pre: Option<Ket<T>> = None;
        let mut post: Option<Ket<T>> = None;
        for (k, t) in self.terms.iter().enumerate() {
            let label = Ket::basis(n, k)?;
            let a = t.pre.tensor(&label);
            let b = t.post.tensor(&label).scale(t.alpha.conj());
            pre = Some(match pre {
                Some(p) => p.add(&a)?,
                None => a,
            });
            post = Some(match post {
                Some(p) => p.add(&b)?,
                None => b,
            });
        }
        PureTsv::new(
            pre.ok_or(Error::EmptyState)?,
            post.ok_or(Error::EmptyState)?,
        )
    }

    /// Reduced density matrices of the composite pre- and post-selected
    /// states. Feeding them to the mixed formula does not in general reproduce
    /// the generalized weak value; this exists to exhibit that difference.
    pub fn naive_mixed(&self) -> Result<MixedTsv<T>> {
        let comp = self.composite()?;
        let dims = [self.dim(), self.terms.len()];
        let rho_pre = DensityMatrix::from_pure(comp.pre())?.partial_trace(&dims, 0)?;
        let rho_post = DensityMatrix::from_pure(comp.post())?.partial_trace(&dims, 0)?;
        MixedTsv::new(rho_pre, rho_post)
    }
}

impl<T: Real> TwoStateVector<T> for GeneralizedTsv<T> {
    fn dim(&self) -> usize {
        self.terms[0].pre.dim()
    }

    fn weak_value(&self, op: &Operator<T>) -> Result<Complex<T>> {
        check_op_dim(self.dim(), op)?;
        let mut num = Complex::<T>::zero();
        for t in &self.terms {
            num += t.alpha * t.post.inner(&op.apply(&t.pre)?)?;
        }
        Ok(num / self.denominator())
    }
}

/// `(rho_post, rho_pre)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixedRepr<T>", into = "MixedRepr<T>", bound = "T: Real")]
pub struct MixedTsv<T> {
    rho_pre: DensityMatrix<T>,
    rho_post: DensityMatrix<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct MixedRepr<T> {
    rho_pre: DensityMatrix<T>,
    rho_post: DensityMatrix<T>,
}

impl<T: Real> TryFrom<MixedRepr<T>> for MixedTsv<T> {
    type Error = Error;

    fn try_from(r: MixedRepr<T>) -> Result<Self> {
        MixedTsv::new(r.rho_pre, r.rho_post)
    }
}

impl<T: Real> From<MixedTsv<T>> for MixedRepr<T> {
    fn from(m: MixedTsv<T>) -> Self {
        MixedRepr {
            rho_pre: m.rho_pre,
            rho_post: m.rho_post,
        }
    }
}

impl<T: Real> MixedTsv<T> {
    pub fn new(rho_pre: DensityMatrix<T>, rho_post: DensityMatrix<T>) -> Result<Self> {
        if rho_pre.dim() != rho_post.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho_pre.dim(),
                found: rho_post.dim(),
            });
        }
        let ov = trace_product(rho_post.matrix(), rho_pre.matrix());
        if ov.re <= T::OVERLAP_FLOOR {
            return Err(Error::UndefinedWeakValue(ov.re.to_f64_lossy()));
        }
        Ok(Self { rho_pre, rho_post })
    }

    pub fn rho_pre(&self) -> &DensityMatrix<T> {
        &self.rho_pre
    }

    pub fn rho_post(&self) -> &DensityMatrix<T> {
        &self.rho_post
    }
}

/// `tr(a b)` without forming the product.
fn trace_product<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Complex<T> {
    let n = a.dim();
    let mut acc = Complex::<T>::zero();
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

impl<T: Real> TwoStateVector<T> for MixedTsv<T> {
    fn dim(&self) -> usize {
        self.rho_pre.dim()
    }

    fn weak_value(&self, op: &Operator<T>) -> Result<Complex<T>> {
        check_op_dim(self.dim(), op)?;
        let a_rho = op.matrix() * self.rho_pre.matrix();
        let num = trace_product(self.rho_post.matrix(), &a_rho);
        let den = trace_product(self.rho_post.matrix(), self.rho_pre.matrix());
        Ok(num / den)
    }
}

/// `<phi|A|psi> / <phi|psi>`.
pub fn weak_value<T: Real>(tsv: &PureTsv<T>, op: &Operator<T>) -> Result<Complex<T>> {
    tsv.weak_value(op)
}

/// `sum alpha_k <phi_k|A|psi_k> / sum alpha_k <phi_k|psi_k>`.
pub fn weak_value_generalized<T: Real>(
    g: &GeneralizedTsv<T>,
    op: &Operator<T>,
) -> Result<Complex<T>> {
    g.weak_value(op)
}

/// `tr(rho_post A rho_pre) / tr(rho_post rho_pre)`.
pub fn weak_value_mixed<T: Real>(m: &MixedTsv<T>, op: &Operator<T>) -> Result<Complex<T>> {
    m.weak_value(op)
}

pub fn weak_value_moment<T: Real>(
    tsv: &PureTsv<T>,
    op: &Operator<T>,
    n: u32,
) -> Result<Complex<T>> {
    tsv.weak_value_moment(op, n)
}

/// Two-state vectors used throughout the examples, on spin 1 with `S_z`.
pub mod examples {
    use super::*;
    use crate::qstate::spin_ket;
    use crate::scalar::real;

    /// `|-1> + |0>`, unnormalized so that the weak values below come out exact.
    pub fn pre_ket<T: Real>() -> Ket<T> {
        post_ket(T::one(), -T::one())
    }

    /// `x |-1> - y |0>`, unnormalized.
    pub fn post_ket<T: Real>(x: T, y: T) -> Ket<T> {
        let a = spin_ket(T::one(), -T::one())
            .expect("spin 1")
            .scale(real(x));
        let b = spin_ket(T::one(), T::zero())
            .expect("spin 1")
            .scale(real(-y));
        a.add(&b).expect("same dimension")
    }

    /// `S_z` weak value 1, `(S_z^2)_w = -1`.
    pub fn weak_one<T: Real>() -> PureTsv<T> {
        PureTsv::new(pre_ket(), post_ket(T::one(), T::lit(2.0))).expect("non-orthogonal")
    }

    /// `S_z` weak value 100, `(S_z^2)_w = -100`.
    pub fn weak_hundred<T: Real>() -> PureTsv<T> {
        PureTsv::new(pre_ket(), post_ket(T::lit(100.0), T::lit(101.0))).expect("non-orthogonal")
    }

    /// `0.8 <+| |0> + 0.6 <0| |+>` on a qubit. Its `sigma_z` weak value is 1,
    /// while the mixed formula on the reduced matrices of
    /// [`GeneralizedTsv::naive_mixed`] gives 43/75.
    pub fn naive_counterexample<T: Real>() -> GeneralizedTsv<T> {
        let zero = Ket::basis(2, 0).expect("qubit");
        let plus = Ket::from_reals(&[T::one(), T::one()])
            .and_then(|k| k.normalize())
            .expect("nonzero");
        GeneralizedTsv::new(vec![
            GtsvTerm {
                alpha: real(T::lit(0.8)),
                post: plus.clone(),
                pre: zero.clone(),
            },
            GtsvTerm {
                alpha: real(T::lit(0.6)),
                post: zero,
                pre: plus,
            },
        ])
        .expect("non-vanishing denominator")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{spin_ket, spin_z_operator};
    use crate::scalar::{cplx, real};
    use proptest::prelude::*;

    fn sz() -> Operator<f64> {
        spin_z_operator(1.0).unwrap()
    }

    #[test]
    fn anomalous_values_are_exact() {
        let one = examples::weak_one::<f64>();
        assert!((weak_value(&one, &sz()).unwrap() - 1.0).norm() <= 1e-12);
        assert!((weak_value_moment(&one, &sz(), 2).unwrap() + 1.0).norm() <= 1e-12);
        let hundred = examples::weak_hundred::<f64>();
        assert!((weak_value(&hundred, &sz()).unwrap() - 100.0).norm() <= 1e-12);
        assert!((weak_value_moment(&hundred, &sz(), 2).unwrap() + 100.0).norm() <= 1e-12);
    }

    #[test]
    fn eigenstate_weak_values() {
        let up = spin_ket(1.0, 1.0).unwrap();
        let t = PureTsv::new(up.clone(), up).unwrap();
        assert_eq!(weak_value(&t, &sz()).unwrap(), real(1.0));
        for n in 1..5 {
            assert_eq!(weak_value_moment(&t, &sz(), n).unwrap(), real(1.0));
        }
    }

    #[test]
    fn eigen_pre_with_arbitrary_post() {
        let pre = spin_ket(1.0, -1.0).unwrap();
        let post = Ket::normalized(vec![cplx(0.2, 0.1), cplx(-0.3, 0.5), cplx(0.7, 0.0)]).unwrap();
        let t = PureTsv::new(pre, post).unwrap();
        assert!((weak_value(&t, &sz()).unwrap() + 1.0).norm() <= 1e-12);
    }

    #[test]
    fn orthogonal_pair_is_undefined() {
        let r = PureTsv::new(Ket::<f64>::basis(2, 0).unwrap(), Ket::basis(2, 1).unwrap());
        assert!(matches!(r, Err(Error::UndefinedWeakValue(_))));
    }

    #[test]
    fn mixed_reductions() {
        let psi = Ket::normalized(vec![cplx(0.3, 0.2), cplx(-0.5, 0.1), cplx(0.4, 0.6)]).unwrap();
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let m = MixedTsv::new(rho.clone(), rho.clone()).unwrap();
        let expect = sz().expectation(&psi).unwrap();
        assert!((weak_value_mixed(&m, &sz()).unwrap() - expect).norm() < 1e-14);

        let flat = MixedTsv::new(rho.clone(), DensityMatrix::maximally_mixed(3).unwrap()).unwrap();
        assert!(
            (weak_value_mixed(&flat, &sz()).unwrap() - rho.expectation(&sz()).unwrap()).norm()
                < 1e-14
        );

        let pure = examples::weak_hundred::<f64>();
        let a = weak_value(&pure, &sz()).unwrap();
        let b = weak_value_mixed(&pure.to_mixed(), &sz()).unwrap();
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn naive_reduction_differs() {
        let g = examples::naive_counterexample::<f64>();
        let sigma_z = crate::qstate::sigma_z();
        let correct = weak_value_generalized(&g, &sigma_z).unwrap();
        let naive = weak_value_mixed(&g.naive_mixed().unwrap(), &sigma_z).unwrap();
        assert!((correct - 1.0).norm() < 1e-14);
        assert!((naive - 43.0 / 75.0).norm() < 1e-12);
    }

    #[test]
    fn single_term_generalized_equals_pure() {
        let t = examples::weak_one::<f64>();
        let g = t.to_generalized();
        assert_eq!(
            weak_value_generalized(&g, &sz()).unwrap(),
            weak_value(&t, &sz()).unwrap()
        );
    }

    #[test]
    fn json_shapes() {
        let t = examples::weak_one::<f64>();
        let v = serde_json::to_value(&t).unwrap();
        assert!(v.get("pre").is_some() && v.get("post").is_some());
        let back: PureTsv<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
        let m = t.to_mixed();
        let v = serde_json::to_value(&m).unwrap();
        assert!(v.get("rho_pre").is_some());
        let g = t.to_generalized();
        let v = serde_json::to_value(&g).unwrap();
        assert!(v["terms"][0].get("alpha").is_some());
    }

    fn ket3() -> impl Strategy<Value = Ket<f64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3).prop_filter_map("zero", |v| {
            Ket::normalized(v.into_iter().map(|(a, b)| cplx(a, b)).collect()).ok()
        })
    }

    fn herm3() -> impl Strategy<Value = Operator<f64>> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 9).prop_map(|e| {
            let mut m = Matrix::zeros(3);
            for i in 0..3 {
                for j in 0..3 {
                    let (re, im) = e[3 * i + j];
                    m[(i, j)] += cplx(re, im) * 0.5;
                    m[(j, i)] += cplx(re, -im) * 0.5;
                }
            }
            Operator::hermitian(m).unwrap()
        })
    }

    fn check_linear<X: TwoStateVector<f64>>(
        t: &X,
        a: &Operator<f64>,
        b: &Operator<f64>,
        x: Complex<f64>,
        y: Complex<f64>,
    ) -> bool {
        let lhs = t.weak_value(&a.scale(x).add(&b.scale(y)).unwrap()).unwrap();
        let rhs = x * t.weak_value(a).unwrap() + y * t.weak_value(b).unwrap();
        (lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm())
    }

    proptest! {
        #[test]
        fn weak_value_is_linear(
            pre in ket3(), post in ket3(), pre2 in ket3(), post2 in ket3(),
            a in herm3(), b in herm3(),
            x in (-2.0f64..2.0, -2.0f64..2.0), y in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let (x, y) = (cplx(x.0, x.1), cplx(y.0, y.1));
            prop_assume!(post.inner(&pre).unwrap().norm() > 0.05);
            let t = PureTsv::new(pre.clone(), post.clone()).unwrap();
            prop_assert!(check_linear(&t, &a, &b, x, y));

            let g = GeneralizedTsv::new(vec![
                GtsvTerm { alpha: cplx(0.7, 0.2), post: post.clone(), pre: pre.clone() },
                GtsvTerm { alpha: cplx(-0.3, 0.4), post: post2.clone(), pre: pre2.clone() },
            ]);
            if let Ok(g) = g {
                prop_assume!(g.denominator().norm() > 0.05);
                prop_assert!(check_linear(&g, &a, &b, x, y));
            }

            let rp = DensityMatrix::mixture(&[(0.6, pre), (0.4, pre2)]).unwrap();
            let rq = DensityMatrix::mixture(&[(0.3, post), (0.7, post2)]).unwrap();
            if let Ok(m) = MixedTsv::new(rp, rq) {
                prop_assume!(trace_product(m.rho_post().matrix(), m.rho_pre().matrix()).re > 0.05);
                prop_assert!(check_linear(&m, &a, &b, x, y));
            }
        }

        #[test]
        fn composite_identity(
            terms in proptest::collection::vec(((-1.0f64..1.0, -1.0f64..1.0), ket3(), ket3()), 1..4),
            a in herm3(),
        ) {
            let terms: Vec<_> = terms
                .into_iter()
                .map(|((ar, ai), post, pre)| GtsvTerm { alpha: cplx(ar, ai), post, pre })
                .collect();
            let g = GeneralizedTsv::new(terms);
            prop_assume!(g.is_ok());
            let g = g.unwrap();
            prop_assume!(g.denominator().norm() > 0.05);
            let comp = g.composite().unwrap();
            let big = a.tensor(&Operator::identity(g.terms().len()));
            let lhs = weak_value(&comp, &big).unwrap();
            let rhs = weak_value_generalized(&g, &a).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }
    }
}
