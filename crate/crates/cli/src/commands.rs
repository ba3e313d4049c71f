//! The free-form commands: `weak-value`, `couple`, `bures`, `sweep` and `protocol mixed-tsv`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use weakval::coupling::{
    couple_eigenvalue, couple_postselected, couple_preselected, CouplingOutcome, CouplingSpec,
};
use weakval::{
    build_circuit_states, bures_from_visibility, bures_pure, bures_pure_mixed,
    mixed_weak_value_via_ancillas, visibility_from_bures, weak_value, weak_value_generalized,
    weak_value_mixed, AnyPointer, DensityMatrix64, GaussianPointer64, GeneralizedTsv64, GtsvTerm,
    Ket64, MixedTsv64, MixedTsvCircuit64, Operator64, PointerEnsemble, PointerKind, PureTsv64,
};

use crate::config::{echo, resolve};
use crate::error::{CliError, Result};
use crate::inputs::{complex, ObservableSpec, StateSpec};
use crate::output::{Check, Report, Table};
use crate::scenarios::reduced_deviation;
use crate::sweep::{run_sweep, SweepParams};

/// The two-state vector given by whichever inputs are present.
enum Selection {
    Pure(PureTsv64),
    Generalized(GeneralizedTsv64),
    Mixed(MixedTsv64),
}

fn pick_selection(
    pre: &Option<Ket64>,
    post: &Option<Ket64>,
    terms: &Option<Vec<GtsvTerm<f64>>>,
    rho_pre: &Option<DensityMatrix64>,
    rho_post: &Option<DensityMatrix64>,
) -> Result<Selection> {
    match (pre, post, terms, rho_pre, rho_post) {
        (None, None, None, None, None) => Ok(Selection::Pure(weakval::tsv::examples::weak_one())),
        (Some(a), Some(b), None, None, None) => {
            Ok(Selection::Pure(PureTsv64::new(a.clone(), b.clone())?))
        }
        (None, None, Some(t), None, None) => {
            Ok(Selection::Generalized(GeneralizedTsv64::new(t.clone())?))
        }
        (None, None, None, Some(a), Some(b)) => {
            Ok(Selection::Mixed(MixedTsv64::new(a.clone(), b.clone())?))
        }
        _ => Err(CliError::usage(
            "give exactly one of {pre, post}, {terms} or {rho_pre, rho_post}",
        )),
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakValueParams {
    pub observable: ObservableSpec,
    /// Weak value of `A^power`.
    pub power: u32,
    pub pre: Option<Ket64>,
    pub post: Option<Ket64>,
    pub terms: Option<Vec<GtsvTerm<f64>>>,
    pub rho_pre: Option<DensityMatrix64>,
    pub rho_post: Option<DensityMatrix64>,
}

impl Default for WeakValueParams {
    fn default() -> Self {
        Self {
            observable: ObservableSpec::default(),
            power: 1,
            pre: None,
            post: None,
            terms: None,
            rho_pre: None,
            rho_post: None,
        }
    }
}

pub fn weak_value_command(parameters: &Map<String, Value>, seed: u64) -> Result<Report> {
    let p: WeakValueParams = resolve(parameters)?;
    let op = p.observable.build()?.pow(p.power);
    let sel = pick_selection(&p.pre, &p.post, &p.terms, &p.rho_pre, &p.rho_post)?;
    let (kind, aw) = match &sel {
        Selection::Pure(t) => ("pure", weak_value(t, &op)?),
        Selection::Generalized(g) => ("generalized", weak_value_generalized(g, &op)?),
        Selection::Mixed(m) => ("mixed", weak_value_mixed(m, &op)?),
    };
    let mut table = Table::new(&["weak_value_re", "weak_value_im"]);
    table.push(vec![aw.re, aw.im]);
    let mut r = Report::new("weak-value", seed, echo(&p), table);
    r.note("weak_value_re", aw.re);
    r.note("weak_value_im", aw.im);
    r.detail = Some(serde_json::json!({ "two_state_vector": kind }));
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupleMode {
    /// System in an eigenstate with eigenvalue `a`.
    Eigenvalue,
    /// Pre-selected `pre`, no post-selection.
    Preselected,
    /// Pre- and post-selected.
    Postselected,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupleParams {
    pub mode: CoupleMode,
    /// Eigenvalue for `eigenvalue` mode, `[re, im]`.
    pub a: Complex<f64>,
    pub observable: ObservableSpec,
    pub pre: Option<Ket64>,
    pub post: Option<Ket64>,
    pub terms: Option<Vec<GtsvTerm<f64>>>,
    pub g: f64,
    pub epsilon: f64,
    pub pointer: PointerKind<f64>,
}

impl Default for CoupleParams {
    fn default() -> Self {
        Self {
            mode: CoupleMode::Postselected,
            a: complex(1.0, 0.0),
            observable: ObservableSpec::default(),
            pre: None,
            post: None,
            terms: None,
            g: 1.0,
            epsilon: 0.02,
            pointer: PointerKind::Gaussian { delta: 1.0 },
        }
    }
}

fn mean_position(p: &AnyPointer<f64>) -> Result<f64> {
    match p {
        AnyPointer::Gaussian(g) => Ok(g.mean_position()?),
        AnyPointer::Spin(_) => Ok(f64::NAN),
    }
}

fn ensemble_mean(e: &PointerEnsemble<f64, AnyPointer<f64>>) -> Result<f64> {
    e.components()
        .iter()
        .try_fold(0.0, |acc, (w, p)| Ok(acc + w * mean_position(p)?))
}

/// Distances from `reference` and from the initial pointer, and the mean pointer position.
fn outcome_row(
    out: &CouplingOutcome<f64, AnyPointer<f64>>,
    p0: &AnyPointer<f64>,
    reference: &AnyPointer<f64>,
) -> Result<Vec<f64>> {
    let (d0, dref, mean) = match (out.pure(), out.ensemble()) {
        (Some(p), _) => (
            bures_pure(p0, p)?,
            bures_pure(reference, p)?,
            mean_position(p)?,
        ),
        (None, Some(e)) => (
            bures_pure_mixed(p0, e)?,
            bures_pure_mixed(reference, e)?,
            ensemble_mean(e)?,
        ),
        (None, None) => unreachable!("outcome is pure or mixed"),
    };
    Ok(vec![
        out.postselect_probability.unwrap_or(f64::NAN),
        d0,
        dref,
        mean,
    ])
}

pub fn couple_command(parameters: &Map<String, Value>, seed: u64) -> Result<Report> {
    let p: CoupleParams = resolve(parameters)?;
    let op = p.observable.build()?;
    let spec = CouplingSpec::new(op.clone(), p.g, p.epsilon, p.pointer)?;
    let p0 = AnyPointer::initial(p.pointer)?;

    // reference is the pointer of the eigenvalue the shift rule predicts
    let (out, reference) = match p.mode {
        CoupleMode::Eigenvalue => {
            if p.pre.is_some() || p.post.is_some() || p.terms.is_some() {
                return Err(CliError::usage("eigenvalue mode takes `a`, not states"));
            }
            let out = couple_eigenvalue(p.a, &spec, &p0)?;
            let reference = out.pure().expect("pure").clone();
            (out, reference)
        }
        CoupleMode::Preselected => {
            let psi = match (&p.pre, &p.post, &p.terms) {
                (Some(psi), None, None) => psi.normalize()?,
                _ => return Err(CliError::usage("preselected mode takes `pre` only")),
            };
            let mean = op.expectation(&psi)?;
            let reference = couple_eigenvalue(mean, &spec, &p0)?
                .pure()
                .expect("pure")
                .clone();
            (couple_preselected(&psi, &spec, &p0)?, reference)
        }
        CoupleMode::Postselected => {
            let (out, aw) = match pick_selection(&p.pre, &p.post, &p.terms, &None, &None)? {
                Selection::Pure(t) => (couple_postselected(&t, &spec, &p0)?, weak_value(&t, &op)?),
                Selection::Generalized(g) => (
                    couple_postselected(&g, &spec, &p0)?,
                    weak_value_generalized(&g, &op)?,
                ),
                Selection::Mixed(_) => unreachable!("no density matrices passed"),
            };
            let reference = couple_eigenvalue(aw, &spec, &p0)?
                .pure()
                .expect("pure")
                .clone();
            (out, reference)
        }
    };
    let mut table = Table::new(&[
        "postselect_probability",
        "bures_initial",
        "bures_shift_rule",
        "mean_position",
    ]);
    table.push(outcome_row(&out, &p0, &reference)?);
    let row = table.rows[0].clone();
    let mut r = Report::new("couple", seed, echo(&p), table);
    r.note("postselect_probability", row[0]);
    r.note("bures_initial", row[1]);
    r.note("bures_shift_rule", row[2]);
    r.note("mean_position", row[3]);
    r.detail = Some(serde_json::to_value(&out).map_err(|e| CliError::Output(e.to_string()))?);
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuresParams {
    pub a: StateSpec,
    pub b: StateSpec,
    /// When set, `D = arccos V` is reported and the states are not used.
    pub visibility: Option<f64>,
}

impl Default for BuresParams {
    /// Unit-width Gaussian and the same Gaussian displaced by `0.02`.
    fn default() -> Self {
        let g0 = GaussianPointer64::initial(1.0).expect("positive width");
        let g1 = g0.shift(complex(0.02, 0.0)).expect("finite shift");
        Self {
            a: StateSpec::Gaussian(g0),
            b: StateSpec::Gaussian(g1),
            visibility: None,
        }
    }
}

fn as_pointer(s: &StateSpec) -> Option<AnyPointer<f64>> {
    match s {
        StateSpec::Gaussian(g) => Some(AnyPointer::Gaussian(g.clone())),
        StateSpec::Spin(p) => Some(AnyPointer::Spin(p.clone())),
        _ => None,
    }
}

fn ensemble(
    components: &[(f64, AnyPointer<f64>)],
) -> Result<PointerEnsemble<f64, AnyPointer<f64>>> {
    Ok(PointerEnsemble::new(components.to_vec())?)
}

fn bures_between(a: &StateSpec, b: &StateSpec) -> Result<f64> {
    use StateSpec::*;
    match (a, b) {
        (Ket(x), Ket(y)) => Ok(bures_pure(x, y)?),
        (Ensemble(_), Ensemble(_)) => Err(CliError::usage("at least one state must be pure")),
        (Ensemble(e), other) | (other, Ensemble(e)) => {
            let p = as_pointer(other)
                .ok_or_else(|| CliError::usage("ensembles compare with pointer states only"))?;
            Ok(bures_pure_mixed(&p, &ensemble(e)?)?)
        }
        (x, y) => match (as_pointer(x), as_pointer(y)) {
            (Some(x), Some(y)) => Ok(bures_pure(&x, &y)?),
            _ => Err(CliError::usage("cannot compare a ket with a pointer state")),
        },
    }
}

pub fn bures_command(parameters: &Map<String, Value>, seed: u64) -> Result<Report> {
    let p: BuresParams = resolve(parameters)?;
    let d = match p.visibility {
        Some(v) => bures_from_visibility(v)?,
        None => bures_between(&p.a, &p.b)?,
    };
    let v = visibility_from_bures(d)?;
    let mut table = Table::new(&["D", "V"]);
    table.push(vec![d, v]);
    let mut r = Report::new("bures", seed, echo(&p), table);
    r.note("D", d);
    r.note("V", v);
    Ok(r)
}

// ---------------------------------------------------------------------------

pub fn sweep_command(parameters: &Map<String, Value>, seed: u64) -> Result<Report> {
    let p: SweepParams = resolve(parameters)?;
    let out = run_sweep(&p)?;
    let mut r = Report::new("sweep", seed, echo(&p), out.table);
    for (prefix, fit) in [
        ("weak", &out.fit_weak),
        ("expectation", &out.fit_expectation),
    ] {
        if let Some(f) = fit {
            r.note(&format!("{prefix}_slope"), f.slope);
            r.note(&format!("{prefix}_intercept"), f.intercept);
            r.note(&format!("{prefix}_r_squared"), f.r_squared);
            r.note(&format!("{prefix}_points_used"), f.points_used as f64);
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixedTsvParams {
    pub circuit: MixedTsvCircuit64,
    pub observable: ObservableSpec,
}

impl Default for MixedTsvParams {
    /// Equal mixtures of `{|0>, |+>}` before and `{|1>, |+>}` after, with `sigma_z`.
    fn default() -> Self {
        let zero = Ket64::basis(2, 0).expect("basis");
        let one = Ket64::basis(2, 1).expect("basis");
        let plus = Ket64::from_reals(&[1.0, 1.0])
            .and_then(|k| k.normalize())
            .expect("nonzero");
        Self {
            circuit: MixedTsvCircuit64::minimal(
                vec![0.5, 0.5],
                vec![zero, plus.clone()],
                vec![0.5, 0.5],
                vec![one, plus],
            )
            .expect("valid circuit"),
            observable: ObservableSpec::SigmaZ,
        }
    }
}

pub fn mixed_tsv_command(parameters: &Map<String, Value>, seed: u64) -> Result<Report> {
    let p: MixedTsvParams = resolve(parameters)?;
    let op: Operator64 = p.observable.build()?;
    let c = &p.circuit;
    let formula = weak_value_mixed(&c.mixed_tsv()?, &op)?;
    let via = mixed_weak_value_via_ancillas(c, &op)?;
    let states = build_circuit_states(c)?;
    let [d, k, n, _] = c.dims();
    let dev_pre = reduced_deviation(&states.pre_entangled, [d, k], &c.rho_pre()?)?;
    let dev_post = reduced_deviation(&states.post_entangled, [d, n], &c.rho_post()?)?;
    let diff = (formula - via).norm();

    let mut table = Table::new(&[
        "formula_re",
        "formula_im",
        "ancilla_re",
        "ancilla_im",
        "abs_difference",
        "rho_pre_deviation",
        "rho_post_deviation",
    ]);
    table.push(vec![
        formula.re, formula.im, via.re, via.im, diff, dev_pre, dev_post,
    ]);
    let mut r = Report::new("protocol mixed-tsv", seed, echo(&p), table);
    r.note("weak_value_re", formula.re);
    r.note("weak_value_im", formula.im);
    r.check(Check::at_most(
        "|formula - ancilla construction|",
        diff,
        1e-10,
    ));
    r.check(Check::at_most(
        "reduced pre-selection deviation",
        dev_pre,
        1e-12,
    ));
    r.check(Check::at_most(
        "reduced post-selection deviation",
        dev_post,
        1e-12,
    ));
    Ok(r)
}
