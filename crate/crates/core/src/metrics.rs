//! Distances between states and the quantities derived from them.
//!
//! Bures angles are evaluated as `atan2(sqrt(G), |<a|b>|)` where
//! `G = |a|^2 |b|^2 - |<a|b>|^2` is the Gram deficit. This equals
//! `arccos |<a|b>|` for unit vectors but keeps full relative precision for
//! angles far below `sqrt(eps)`, which the scaling sweeps reach.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pointer::{PointerEnsemble, PointerState};
use crate::qstate::Ket;
use crate::scalar::Real;

/// Distances at or below this are treated as numerical noise by [`fit_scaling_exponent`].
pub const NOISE_FLOOR: f64 = 1e-12;

/// A vector in some Hilbert space, not necessarily normalized.
pub trait PureState<T: Real> {
    /// `<self|other>`.
    fn inner(&self, other: &Self) -> Result<Complex<T>>;

    fn norm_sqr(&self) -> T;

    /// `|self|^2 |other|^2 - |<self|other>|^2`, computed without cancellation.
    fn gram_deficit(&self, other: &Self) -> Result<T>;
}

impl<T: Real> PureState<T> for Ket<T> {
    fn inner(&self, other: &Self) -> Result<Complex<T>> {
        Ket::inner(self, other)
    }

    fn norm_sqr(&self) -> T {
        Ket::norm_sqr(self)
    }

    /// Lagrange identity: the deficit is the sum of `|a_i b_j - a_j b_i|^2` over `i < j`.
    fn gram_deficit(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let a = self.amplitudes();
        let b = other.amplitudes();
        let mut acc = T::zero();
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                acc += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
            }
        }
        Ok(acc)
    }
}

/// `arccos |<p1|p2>|` for normalized arguments; inputs need not be normalized.
pub fn bures_pure<T: Real, S: PureState<T>>(p1: &S, p2: &S) -> Result<T> {
    let ov = p1.inner(p2)?.norm();
    let deficit = p1.gram_deficit(p2)?;
    if p1.norm_sqr() <= T::zero() || p2.norm_sqr() <= T::zero() {
        return Err(Error::ZeroNorm);
    }
    Ok(deficit.sqrt().atan2(ov))
}

/// `arccos sqrt(<p|rho|p>)` with `rho` the ensemble's density matrix.
pub fn bures_pure_mixed<T: Real, P: PointerState<T>>(
    p: &P,
    ens: &PointerEnsemble<T, P>,
) -> Result<T> {
    let np = p.norm_sqr();
    if np <= T::zero() {
        return Err(Error::ZeroNorm);
    }
    let mut sin2 = T::zero();
    let mut cos2 = T::zero();
    for (prob, c) in ens.components() {
        p.kind().check(&c.kind())?;
        let scale = np * c.norm_sqr();
        sin2 += *prob * p.gram_deficit(c)? / scale;
        cos2 += *prob * p.inner(c)?.norm_sqr() / scale;
    }
    Ok(sin2.sqrt().atan2(cos2.sqrt()))
}

/// Maximal interference visibility `cos D` allowed by a Bures angle `D`.
pub fn visibility_from_bures<T: Real>(d: T) -> Result<T> {
    if !(d >= T::zero() && d <= T::FRAC_PI_2()) {
        return Err(invalid("D", format!("{d} outside [0, pi/2]")));
    }
    Ok(d.cos())
}

pub fn bures_from_visibility<T: Real>(v: T) -> Result<T> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(invalid("V", format!("{v} outside [0, 1]")));
    }
    Ok(v.acos())
}

/// Leading quadratic Bures angle between the post-selected pointer and the
/// eigenvalue pointer: `|(A^2)_w - a^2| sqrt(<B^4> - <B^2>^2) (g eps)^2 / 2`.
///
/// Vanishes when the pointer variable has no fourth-moment spread (a `sigma_z`
/// pointer); the distance is then cubic in `g eps`.
pub fn predicted_bures_weak<T: Real>(
    a2_w: Complex<T>,
    a: Complex<T>,
    b2: T,
    b4: T,
    g_epsilon: T,
) -> Result<T> {
    let b2_sq = b2 * b2;
    if b4 < b2_sq - T::lit(1e-12) {
        return Err(Error::InconsistentMoments {
            b4: b4.to_f64_lossy(),
            b2_sq: b2_sq.to_f64_lossy(),
        });
    }
    let spread = (b4 - b2_sq).max(T::zero()).sqrt();
    Ok((a2_w - a * a).norm() * spread * g_epsilon * g_epsilon * T::lit(0.5))
}

/// Leading linear Bures angle for a pre-selected-only coupling: `dA dB g eps`.
pub fn predicted_bures_expectation<T: Real>(d_a: T, d_b: T, g_epsilon: T) -> Result<T> {
    if !(d_a >= T::zero()) || !(d_b >= T::zero()) {
        return Err(invalid("uncertainty", "must be non-negative"));
    }
    Ok(d_a * d_b * g_epsilon.abs())
}

/// Least-squares power law `D = exp(intercept) * eps^slope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Samples dropped for lying at or below [`NOISE_FLOOR`] (or being non-finite).
    pub points_excluded: usize,
}

/// Fits a line through `(ln eps, ln D)`.
pub fn fit_scaling_exponent<T: Real>(samples: &[(T, T)]) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|(e, d)| (e.to_f64_lossy(), d.to_f64_lossy()))
        .filter(|(e, d)| *e > 0.0 && e.is_finite() && *d > NOISE_FLOOR && d.is_finite())
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { usable: n });
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(invalid("samples", "all epsilon values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        points_used: n,
        points_excluded: samples.len() - n,
    })
}

/// A fixed, state-independent pointer deviation of size `xi` that adds to the
/// ideal distance in quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionModel {
    xi: f64,
}

impl ImperfectionModel {
    pub fn new(xi: f64) -> Result<Self> {
        check_angle("xi", xi)?;
        Ok(Self { xi })
    }

    /// The imperfection that limits visibility to `v` at zero coupling.
    pub fn from_visibility(v: f64) -> Result<Self> {
        Self::new(bures_from_visibility(v)?)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `sqrt(xi^2 + D_ideal^2)`.
    pub fn apply(&self, d_ideal: f64) -> Result<f64> {
        check_angle("D_ideal", d_ideal)?;
        Ok(self.xi.hypot(d_ideal))
    }

    /// Exact angle when the imperfection is orthogonal to the ideal
    /// deviation: `cos D = cos xi cos D_ideal`. Agrees with [`Self::apply`] to
    /// fourth order in the angles.
    pub fn apply_orthogonal(&self, d_ideal: f64) -> Result<f64> {
        check_angle("D_ideal", d_ideal)?;
        Ok((self.xi.cos() * d_ideal.cos()).acos())
    }

    /// Least-squares `xi` for observed `(D_ideal, D_observed)` pairs under [`Self::apply`].
    pub fn fit(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientSamples { usable: 0 });
        }
        for &(ideal, obs) in samples {
            check_angle("D_ideal", ideal)?;
            if !obs.is_finite() || obs < 0.0 {
                return Err(invalid("D_observed", format!("{obs} is not a valid angle")));
            }
        }
        let cost = |xi: f64| -> f64 {
            samples
                .iter()
                .map(|&(ideal, obs)| (xi.hypot(ideal) - obs).powi(2))
                .sum()
        };
        let xi = golden_section(cost, 0.0, std::f64::consts::FRAC_PI_2 - 1e-12, 1e-13);
        Self::new(xi)
    }
}

fn check_angle(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&x) {
        return Err(invalid(name, format!("{x} outside [0, pi/2)")));
    }
    Ok(())
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}
