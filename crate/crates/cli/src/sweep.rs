//! Distance-versus-epsilon sweeps shared by the `sweep` command and the scenarios.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use weakval::coupling::{couple_eigenvalue, couple_postselected, couple_preselected, CouplingSpec};
use weakval::{
    bures_pure, bures_pure_mixed, fit_scaling_exponent, predicted_bures_expectation,
    predicted_bures_weak, weak_value, weak_value_moment, AnyPointer, Ket64, Operator64,
    PointerKind, PureTsv64, ScalingFit,
};

use crate::error::{CliError, Result};
use crate::inputs::{spin_pair, ObservableSpec};
use crate::output::Table;

pub const SWEEP_COLUMNS: [&str; 5] = [
    "epsilon",
    "D_weak",
    "D_expectation",
    "D_pred_weak",
    "D_pred_exp",
];

/// `min, ..., max` spaced evenly in `log eps`, with `per_decade` steps per decade.
pub fn geometric_grid(min: f64, max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && max.is_finite()) {
        return Err(CliError::usage(format!(
            "epsilon grid needs 0 < min < max, got [{min}, {max}]"
        )));
    }
    if per_decade == 0 {
        return Err(CliError::usage("points_per_decade must be positive"));
    }
    let steps = ((max / min).log10() * per_decade as f64).round().max(2.0) as usize;
    let ratio = max / min;
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                max
            } else {
                min * ratio.powf(i as f64 / steps as f64)
            }
        })
        .collect())
}

/// `n` evenly spaced points on `[lo, hi]`, ends included.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn spec(op: &Operator64, kind: PointerKind<f64>, g: f64, eps: f64) -> Result<CouplingSpec<f64>> {
    Ok(CouplingSpec::new(op.clone(), g, eps, kind)?)
}

/// Distance between the pointer after coupling to eigenvalue `a` and the initial pointer.
pub fn eigen_distance(
    a: Complex<f64>,
    op: &Operator64,
    kind: PointerKind<f64>,
    g: f64,
    eps: f64,
) -> Result<f64> {
    let p0 = AnyPointer::initial(kind)?;
    let moved = couple_eigenvalue(a, &spec(op, kind, g, eps)?, &p0)?;
    Ok(bures_pure(&p0, moved.pure().expect("pure"))?)
}

/// Actual and leading-order distance between the post-selected pointer and the
/// pointer of an eigenvalue equal to `A_w`.
pub fn weak_point(
    tsv: &PureTsv64,
    op: &Operator64,
    kind: PointerKind<f64>,
    g: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    let p0 = AnyPointer::initial(kind)?;
    let s = spec(op, kind, g, eps)?;
    let a_w = weak_value(tsv, op)?;
    let a2_w = weak_value_moment(tsv, op, 2)?;
    let post = couple_postselected(tsv, &s, &p0)?;
    let eigen = couple_eigenvalue(a_w, &s, &p0)?;
    let d = bures_pure(post.pure().expect("pure"), eigen.pure().expect("pure"))?;
    let (b2, b4) = kind.b_moments();
    let pred = predicted_bures_weak(a2_w, a_w, b2, b4, g * eps)?;
    Ok((d, pred))
}

/// Actual and leading-order distance between the pointer mixture of a
/// pre-selected system and the pointer of an eigenvalue equal to `<A>`.
pub fn expectation_point(
    psi: &Ket64,
    op: &Operator64,
    kind: PointerKind<f64>,
    g: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    let psi = psi.normalize()?;
    let p0 = AnyPointer::initial(kind)?;
    let s = spec(op, kind, g, eps)?;
    let mean = op.expectation(&psi)?;
    let mix = couple_preselected(&psi, &s, &p0)?;
    let eigen = couple_eigenvalue(mean, &s, &p0)?;
    let d = bures_pure_mixed(eigen.pure().expect("pure"), mix.ensemble().expect("mixed"))?;
    let pred = predicted_bures_expectation(op.uncertainty(&psi)?, kind.b_uncertainty(), g * eps)?;
    Ok((d, pred))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakCase {
    pub observable: ObservableSpec,
    pub pre: Ket64,
    pub post: Ket64,
}

impl WeakCase {
    pub fn tsv(&self) -> Result<PureTsv64> {
        Ok(PureTsv64::new(self.pre.clone(), self.post.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationCase {
    pub observable: ObservableSpec,
    pub pre: Ket64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub pointer: PointerKind<f64>,
    pub g: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points_per_decade: usize,
    pub weak: Option<WeakCase>,
    pub expectation: Option<ExpectationCase>,
}

impl Default for SweepParams {
    /// The `A_w = 1` spin-1 two-state vector and the spin-2 state
    /// `(|0> + |2>)/sqrt 2` with `<S_z> = 1`, on a unit-width Gaussian pointer.
    fn default() -> Self {
        let tsv = weakval::tsv::examples::weak_one::<f64>();
        Self {
            pointer: PointerKind::Gaussian { delta: 1.0 },
            g: 1.0,
            eps_min: 1e-4,
            eps_max: 1e-2,
            points_per_decade: 8,
            weak: Some(WeakCase {
                observable: ObservableSpec::SpinZ(1.0),
                pre: tsv.pre().clone(),
                post: tsv.post().clone(),
            }),
            expectation: Some(ExpectationCase {
                observable: ObservableSpec::SpinZ(2.0),
                pre: spin_pair(2.0, 0.0, 2.0),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: Table,
    pub fit_weak: Option<ScalingFit>,
    pub fit_expectation: Option<ScalingFit>,
}

/// Columns [`SWEEP_COLUMNS`]; a case that is not configured gives `NaN`s.
pub fn run_sweep(p: &SweepParams) -> Result<SweepOutcome> {
    let grid = geometric_grid(p.eps_min, p.eps_max, p.points_per_decade)?;
    let weak = p
        .weak
        .as_ref()
        .map(|c| Ok::<_, CliError>((c.tsv()?, c.observable.build()?)))
        .transpose()?;
    let expectation = p
        .expectation
        .as_ref()
        .map(|c| Ok::<_, CliError>((c.pre.clone(), c.observable.build()?)))
        .transpose()?;

    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&eps| {
            let (dw, pw) = match &weak {
                Some((tsv, op)) => weak_point(tsv, op, p.pointer, p.g, eps)?,
                None => (f64::NAN, f64::NAN),
            };
            let (de, pe) = match &expectation {
                Some((psi, op)) => expectation_point(psi, op, p.pointer, p.g, eps)?,
                None => (f64::NAN, f64::NAN),
            };
            Ok(vec![eps, dw, de, pw, pe])
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&SWEEP_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    let fit = |col: usize| -> Result<Option<ScalingFit>> {
        let pts: Vec<(f64, f64)> = table.rows.iter().map(|r| (r[0], r[col])).collect();
        if pts.iter().all(|(_, d)| d.is_nan()) {
            return Ok(None);
        }
        Ok(Some(fit_scaling_exponent(&pts)?))
    };
    Ok(SweepOutcome {
        fit_weak: fit(1)?,
        fit_expectation: fit(2)?,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_requested_density_and_exact_ends() {
        let g = geometric_grid(1e-4, 1e-2, 8).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 1e-4);
        assert_eq!(*g.last().unwrap(), 1e-2);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(geometric_grid(0.0, 1.0, 8).is_err());
        assert!(geometric_grid(1.0, 1.0, 8).is_err());
        assert_eq!(linear_grid(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn default_sweep_has_documented_slopes() {
        let out = run_sweep(&SweepParams::default()).unwrap();
        assert_eq!(out.table.columns, SWEEP_COLUMNS);
        assert!((out.fit_weak.unwrap().slope - 2.0).abs() < 0.05);
        assert!((out.fit_expectation.unwrap().slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn missing_case_gives_nan_column() {
        let p = SweepParams {
            expectation: None,
            ..SweepParams::default()
        };
        let out = run_sweep(&p).unwrap();
        assert!(out.fit_expectation.is_none());
        assert!(out
            .table
            .rows
            .iter()
            .all(|r| r[2].is_nan() && r[4].is_nan()));
    }
}
