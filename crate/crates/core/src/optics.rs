//! Birefringent-crystal model of the polarization/position coupling.
//!
//! Tilting a crystal by `theta` displaces the ordinary and extraordinary beams
//! by different amounts; the separation plays the role of `2 g eps` and the
//! beam waist sets the pointer width, `w = 2 Delta`. Lengths are in
//! millimetres unless a field name says otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Crystal and beam parameters. The refractive indices have no defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "CrystalRepr", into = "CrystalRepr")]
pub struct CrystalSpec {
    pub d_mm: f64,
    pub n_o: f64,
    pub n_e: f64,
    /// Recorded with the configuration; the displacement formula does not use it.
    pub wavelength_nm: Option<f64>,
    pub waist_um: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrystalRepr {
    d_mm: f64,
    n_o: f64,
    n_e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wavelength_nm: Option<f64>,
    waist_um: f64,
}

impl TryFrom<CrystalRepr> for CrystalSpec {
    type Error = Error;
    fn try_from(r: CrystalRepr) -> Result<Self> {
        Self::new(r.d_mm, r.n_o, r.n_e, r.wavelength_nm, r.waist_um)
    }
}

impl From<CrystalSpec> for CrystalRepr {
    fn from(c: CrystalSpec) -> Self {
        Self {
            d_mm: c.d_mm,
            n_o: c.n_o,
            n_e: c.n_e,
            wavelength_nm: c.wavelength_nm,
            waist_um: c.waist_um,
        }
    }
}

impl CrystalSpec {
    pub fn new(
        d_mm: f64,
        n_o: f64,
        n_e: f64,
        wavelength_nm: Option<f64>,
        waist_um: f64,
    ) -> Result<Self> {
        if !(d_mm > 0.0 && d_mm.is_finite()) {
            return Err(invalid("d_mm", format!("must be positive, got {d_mm}")));
        }
        for (name, n) in [("n_o", n_o), ("n_e", n_e)] {
            if !(n > 1.0 && n.is_finite()) {
                return Err(invalid(
                    name,
                    format!("refractive index must exceed 1, got {n}"),
                ));
            }
        }
        if !(waist_um > 0.0 && waist_um.is_finite()) {
            return Err(invalid(
                "waist_um",
                format!("must be positive, got {waist_um}"),
            ));
        }
        if let Some(l) = wavelength_nm {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid(
                    "wavelength_nm",
                    format!("must be positive, got {l}"),
                ));
            }
        }
        Ok(Self {
            d_mm,
            n_o,
            n_e,
            wavelength_nm,
            waist_um,
        })
    }

    pub fn waist_mm(&self) -> f64 {
        self.waist_um / 1000.0
    }

    /// Pointer width `Delta = w / 2`, in millimetres.
    pub fn delta_mm(&self) -> f64 {
        self.waist_mm() / 2.0
    }

    /// Limiting slope `d(delta x)/d(theta)` at normal incidence, in mm per radian.
    pub fn small_angle_slope(&self) -> f64 {
        self.d_mm * (1.0 / self.n_e - 1.0 / self.n_o)
    }
}

/// Signed separation of the ordinary and extraordinary beams, in millimetres,
/// for a tilt of `theta` radians.
pub fn beam_separation(spec: &CrystalSpec, theta: f64) -> f64 {
    let walk = |n: f64| {
        let t = (theta.sin() / n).asin();
        (theta - t).sin() / t.cos()
    };
    spec.d_mm * (walk(spec.n_o) - walk(spec.n_e))
}

/// Effective coupling for a separation `delta_x`, with `2 g eps = delta_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoupling {
    /// `g eps`, in the units of `delta_x`.
    pub g_epsilon: f64,
    /// `g eps / (2 Delta) = delta_x / (2 w)`.
    pub ratio: f64,
}

/// `delta_x` and `waist` share a length unit.
pub fn coupling_from_separation(delta_x: f64, waist: f64) -> Result<EffectiveCoupling> {
    if !(waist > 0.0 && waist.is_finite()) {
        return Err(invalid("waist", format!("must be positive, got {waist}")));
    }
    Ok(EffectiveCoupling {
        g_epsilon: delta_x / 2.0,
        ratio: delta_x / (2.0 * waist),
    })
}

/// Coupling produced by tilting `spec` to `theta`; `g_epsilon` in millimetres.
pub fn coupling_at_tilt(spec: &CrystalSpec, theta: f64) -> EffectiveCoupling {
    coupling_from_separation(beam_separation(spec, theta), spec.waist_mm())
        .expect("validated waist")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn yvo4() -> CrystalSpec {
        CrystalSpec::new(4.52, 1.9929, 2.2154, Some(780.0), 813.0).unwrap()
    }

    #[test]
    fn normal_incidence_and_isotropic_crystal_give_zero() {
        assert_eq!(beam_separation(&yvo4(), 0.0), 0.0);
        let iso = CrystalSpec::new(4.52, 2.0, 2.0, None, 813.0).unwrap();
        for theta in [-0.5, 0.1, 0.3, 1.2] {
            assert!(beam_separation(&iso, theta).abs() < 1e-15);
        }
    }

    #[test]
    fn regression_at_twenty_degrees() {
        let dx = beam_separation(&yvo4(), 20f64.to_radians());
        approx::assert_relative_eq!(dx, -0.07623064935580908, max_relative = 1e-13);
        approx::assert_relative_eq!(
            beam_separation(&yvo4(), 1.0),
            -0.13478970312921293,
            max_relative = 1e-13
        );
    }

    #[test]
    fn slope_at_zero_matches_central_difference() {
        let s = yvo4();
        let h = 1e-5;
        let numeric = (beam_separation(&s, h) - beam_separation(&s, -h)) / (2.0 * h);
        approx::assert_relative_eq!(numeric, s.small_angle_slope(), max_relative = 1e-6);
    }

    #[test]
    fn coupling_conversion() {
        let c = coupling_from_separation(0.0, 0.813).unwrap();
        assert_eq!(c.g_epsilon, 0.0);
        let c = coupling_from_separation(813.0, 813.0).unwrap();
        assert_eq!(c.ratio, 0.5);
        assert_eq!(c.g_epsilon, 406.5);
        assert!(coupling_from_separation(1.0, 0.0).is_err());
    }

    #[test]
    fn separation_is_monotone_near_zero() {
        let s = yvo4();
        let ratios: Vec<f64> = (0..=100)
            .map(|i| coupling_at_tilt(&s, i as f64 * 0.005).ratio.abs())
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn invalid_crystals_are_rejected() {
        assert!(CrystalSpec::new(0.0, 2.0, 2.1, None, 813.0).is_err());
        assert!(CrystalSpec::new(1.0, 0.9, 2.1, None, 813.0).is_err());
        assert!(CrystalSpec::new(1.0, 2.0, 2.1, None, -1.0).is_err());
        let bad = r#"{"d_mm":4.52,"n_o":1.0,"n_e":2.2,"waist_um":813}"#;
        assert!(serde_json::from_str::<CrystalSpec>(bad).is_err());
        let ok = r#"{"d_mm":4.52,"n_o":1.9929,"n_e":2.2154,"waist_um":813}"#;
        let s: CrystalSpec = serde_json::from_str(ok).unwrap();
        assert_eq!(s.delta_mm(), 0.4065);
    }

    proptest! {
        #[test]
        fn antisymmetric(theta in -1.5f64..1.5, n_o in 1.01f64..3.0, n_e in 1.01f64..3.0) {
            let s = CrystalSpec::new(4.52, n_o, n_e, None, 813.0).unwrap();
            prop_assert!((beam_separation(&s, -theta) + beam_separation(&s, theta)).abs() < 1e-12);
        }
    }
}
