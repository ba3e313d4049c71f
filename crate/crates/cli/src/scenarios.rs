//! Registry of named scenarios, each with documented defaults and pass/fail checks.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use weakval::coupling::{
    couple_eigenvalue, finite_strength_pointer_closed_form, finite_strength_scenario,
    finite_strength_weak_value_closed_form, CouplingSpec, FiniteStrengthSetup,
};
use weakval::optics::coupling_at_tilt;
use weakval::random::{random_circuit, random_hermitian, random_ket};
use weakval::{
    build_circuit_states, bures_from_visibility, bures_pure_mixed, couple_mixed,
    derive_generalized_tsv, fit_scaling_exponent, mixed_weak_value_via_ancillas,
    polarization_operator, spin_z_operator, visibility_from_bures, weak_value,
    weak_value_generalized, weak_value_moment, AnyPointer, CrystalSpec, DensityMatrix64,
    ImperfectionModel, Ket64, MixedTsvCircuit64, Operator64, PointerKind, PureTsv64, ScalingFit,
};

use crate::config::{echo, resolve};
use crate::error::{CliError, Result};
use crate::inputs::{circular_polarization, complex, diagonal_polarization, spin_pair};
use crate::output::{Check, Report, Table};
use crate::sweep::{
    eigen_distance, expectation_point, geometric_grid, linear_grid, run_sweep, weak_point,
    SweepParams, SWEEP_COLUMNS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum, Serialize, Deserialize)]
pub enum ScenarioName {
    #[value(name = "sec2-weak-1")]
    #[serde(rename = "sec2-weak-1")]
    Sec2Weak1,
    #[value(name = "sec2-expectation")]
    #[serde(rename = "sec2-expectation")]
    Sec2Expectation,
    #[value(name = "sec2-weak-100")]
    #[serde(rename = "sec2-weak-100")]
    Sec2Weak100,
    #[value(name = "sec3-experiment")]
    #[serde(rename = "sec3-experiment")]
    Sec3Experiment,
    #[value(name = "sec4-scaling")]
    #[serde(rename = "sec4-scaling")]
    Sec4Scaling,
    #[value(name = "sec6-finite-strength")]
    #[serde(rename = "sec6-finite-strength")]
    Sec6FiniteStrength,
    #[value(name = "appA-spin")]
    #[serde(rename = "appA-spin")]
    AppASpin,
    #[value(name = "appC-imaginary")]
    #[serde(rename = "appC-imaginary")]
    AppCImaginary,
    #[value(name = "appD-mixed-oracle")]
    #[serde(rename = "appD-mixed-oracle")]
    AppDMixedOracle,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 9] = [
        Self::Sec2Weak1,
        Self::Sec2Expectation,
        Self::Sec2Weak100,
        Self::Sec3Experiment,
        Self::Sec4Scaling,
        Self::Sec6FiniteStrength,
        Self::AppASpin,
        Self::AppCImaginary,
        Self::AppDMixedOracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sec2Weak1 => "sec2-weak-1",
            Self::Sec2Expectation => "sec2-expectation",
            Self::Sec2Weak100 => "sec2-weak-100",
            Self::Sec3Experiment => "sec3-experiment",
            Self::Sec4Scaling => "sec4-scaling",
            Self::Sec6FiniteStrength => "sec6-finite-strength",
            Self::AppASpin => "appA-spin",
            Self::AppCImaginary => "appC-imaginary",
            Self::AppDMixedOracle => "appD-mixed-oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s)
    }
}

/// Runs `name` with `parameters` layered over its defaults.
pub fn run_scenario(
    name: ScenarioName,
    parameters: &Map<String, Value>,
    seed: u64,
) -> Result<Report> {
    match name {
        ScenarioName::Sec2Weak1 => sec2_weak_1(&resolve(parameters)?, seed),
        ScenarioName::Sec2Expectation => sec2_expectation(&resolve(parameters)?, seed),
        ScenarioName::Sec2Weak100 => sec2_weak_100(&resolve(parameters)?, seed),
        ScenarioName::Sec3Experiment => sec3_experiment(&resolve(parameters)?, seed),
        ScenarioName::Sec4Scaling => sec4_scaling(&resolve(parameters)?, seed),
        ScenarioName::Sec6FiniteStrength => sec6_finite_strength(&resolve(parameters)?, seed),
        ScenarioName::AppASpin => app_a_spin(&resolve(parameters)?, seed),
        ScenarioName::AppCImaginary => app_c_imaginary(&resolve(parameters)?, seed),
        ScenarioName::AppDMixedOracle => app_d_mixed_oracle(&resolve(parameters)?, seed),
    }
}

fn report(name: ScenarioName, seed: u64, params: &impl Serialize, table: Table) -> Report {
    Report::new(
        format!("scenario {}", name.as_str()),
        seed,
        echo(params),
        table,
    )
}

/// Evaluates `f` on every grid point in parallel; rows stay in grid order.
fn par_rows(grid: &[f64], f: impl Fn(f64) -> Result<Vec<f64>> + Sync) -> Result<Vec<Vec<f64>>> {
    grid.par_iter().map(|&x| f(x)).collect()
}

fn fit_column(table: &Table, x: &str, y: &str) -> Result<ScalingFit> {
    let xs = table.column(x).expect("known column");
    let ys = table.column(y).expect("known column");
    Ok(fit_scaling_exponent(
        &xs.into_iter().zip(ys).collect::<Vec<_>>(),
    )?)
}

fn note_fit(r: &mut Report, prefix: &str, fit: &ScalingFit) {
    r.note(&format!("{prefix}_slope"), fit.slope);
    r.note(&format!("{prefix}_intercept"), fit.intercept);
    r.note(&format!("{prefix}_r_squared"), fit.r_squared);
    r.note(&format!("{prefix}_points_used"), fit.points_used as f64);
    r.note(
        &format!("{prefix}_points_excluded"),
        fit.points_excluded as f64,
    );
}

fn exact_weak_value(r: &mut Report, label: &str, value: Complex<f64>, expected: Complex<f64>) {
    r.note(&format!("{label}_re"), value.re);
    r.note(&format!("{label}_im"), value.im);
    r.check(Check::absolute(
        format!("{label} real part"),
        value.re,
        expected.re,
        1e-12,
    ));
    r.check(Check::absolute(
        format!("{label} imaginary part"),
        value.im,
        expected.im,
        1e-12,
    ));
}

fn gaussian(delta: f64) -> Result<PointerKind<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CliError::usage(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(PointerKind::Gaussian { delta })
}

fn check_g(g: f64) -> Result<()> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(CliError::usage(format!("g must be positive, got {g}")));
    }
    Ok(())
}

/// The small-coupling point `eps = 1e-3 Delta / g` at which leading-order predictions are compared.
fn prediction_epsilon(kind: PointerKind<f64>, g: f64) -> f64 {
    match kind {
        PointerKind::Gaussian { delta } => 1e-3 * delta / g,
        PointerKind::Spin => 1e-3 / g,
    }
}

fn weak_one() -> PureTsv64 {
    weakval::tsv::examples::weak_one()
}

fn weak_hundred() -> PureTsv64 {
    weakval::tsv::examples::weak_hundred()
}

fn sz(s: f64) -> Operator64 {
    spin_z_operator(s).expect("valid spin")
}

fn expectation_pre() -> Ket64 {
    spin_pair(2.0, 0.0, 2.0)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sec2Weak1Params {
    pub delta: f64,
    pub g: f64,
    pub epsilon: f64,
}

impl Default for Sec2Weak1Params {
    fn default() -> Self {
        Self {
            delta: 1.0,
            g: 1.0,
            epsilon: 0.02,
        }
    }
}

/// Eigenvalue, weak-value and expectation-value pointers for `A_w = <A> = 1`.
fn sec2_weak_1(p: &Sec2Weak1Params, seed: u64) -> Result<Report> {
    let kind = gaussian(p.delta)?;
    check_g(p.g)?;
    let tsv = weak_one();
    let a = sz(1.0);
    let a2 = sz(2.0);
    let psi = expectation_pre();

    let mut table = Table::new(&[
        "epsilon",
        "D_0e",
        "D_ew",
        "D_eex",
        "D_pred_weak",
        "D_pred_exp",
    ]);
    let eps4 = prediction_epsilon(kind, p.g);
    for eps in [p.epsilon, eps4] {
        let d0e = eigen_distance(complex(1.0, 0.0), &a, kind, p.g, eps)?;
        let (dew, pw) = weak_point(&tsv, &a, kind, p.g, eps)?;
        let (deex, pe) = expectation_point(&psi, &a2, kind, p.g, eps)?;
        table.push(vec![eps, d0e, dew, deex, pw, pe]);
    }
    let (main, small) = (table.rows[0].clone(), table.rows[1].clone());

    let mut r = report(ScenarioName::Sec2Weak1, seed, p, table);
    exact_weak_value(&mut r, "A_w", weak_value(&tsv, &a)?, complex(1.0, 0.0));
    exact_weak_value(
        &mut r,
        "(S_z^2)_w",
        weak_value_moment(&tsv, &a, 2)?,
        complex(-1.0, 0.0),
    );

    let ge = p.g * p.epsilon;
    let linear = ge / (2.0 * p.delta);
    let quadratic = ge * ge / (2.0 * SQRT_2 * p.delta * p.delta);
    r.note("D_0e", main[1]);
    r.note("D_ew", main[2]);
    r.note("D_eex", main[3]);
    r.check(Check::absolute("D(Phi_0, Phi_e)", main[1], linear, 1e-5));
    r.check(Check::relative("D(Phi_e, Phi_w)", main[2], quadratic, 0.02));
    r.check(Check::absolute("D(Phi_e, rho_ex)", main[3], linear, 1e-4));
    r.check(Check::relative(
        "predicted weak distance at small epsilon",
        small[4],
        small[2],
        0.05,
    ));
    r.check(Check::relative(
        "predicted expectation distance at small epsilon",
        small[5],
        small[3],
        0.05,
    ));
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub delta: f64,
    pub g: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points_per_decade: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            g: 1.0,
            eps_min: 1e-4,
            eps_max: 1e-2,
            points_per_decade: 8,
        }
    }
}

/// Pointer mixture from the spin-2 state `(|0> + |2>)/sqrt 2` against the `A = 1` eigenvalue pointer.
fn sec2_expectation(p: &GridParams, seed: u64) -> Result<Report> {
    let kind = gaussian(p.delta)?;
    check_g(p.g)?;
    let a = sz(2.0);
    let psi = expectation_pre();
    let mean = a.expectation(&psi)?.re;
    let grid = geometric_grid(p.eps_min, p.eps_max, p.points_per_decade)?;
    let rows = par_rows(&grid, |eps| {
        let (d, pred) = expectation_point(&psi, &a, kind, p.g, eps)?;
        let spec = CouplingSpec::new(a.clone(), p.g, eps, kind)?;
        let p0 = weakval::GaussianPointer64::initial(p.delta)?;
        let mix = weakval::coupling::couple_preselected(&psi, &spec, &p0)?;
        let mean_q = mix.ensemble().expect("mixed").mean_position()?;
        Ok(vec![eps, d, pred, mean_q])
    })?;
    let mut table = Table::new(&["epsilon", "D_expectation", "D_pred_exp", "mean_position"]);
    rows.into_iter().for_each(|row| table.push(row));

    let fit = fit_column(&table, "epsilon", "D_expectation")?;
    let mean_err = table
        .rows
        .iter()
        .map(|row| (row[3] - p.g * row[0] * mean).abs())
        .fold(0.0, f64::max);
    let eps4 = prediction_epsilon(kind, p.g);
    let (d4, pred4) = expectation_point(&psi, &a, kind, p.g, eps4)?;

    let mut r = report(ScenarioName::Sec2Expectation, seed, p, table);
    note_fit(&mut r, "expectation", &fit);
    r.note("expectation_value", mean);
    r.check(Check::absolute("expectation slope", fit.slope, 1.0, 0.05));
    r.check(Check::at_most("max |<Q> - g eps <A>|", mean_err, 1e-10));
    r.check(Check::relative(
        "predicted expectation distance at small epsilon",
        pred4,
        d4,
        0.05,
    ));
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sec2Weak100Params {
    pub delta: f64,
    pub g: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points_per_decade: usize,
}

impl Default for Sec2Weak100Params {
    /// `g eps A_w` must stay small, so the grid sits two decades below the others.
    fn default() -> Self {
        Self {
            delta: 1.0,
            g: 1.0,
            eps_min: 1e-6,
            eps_max: 1e-4,
            points_per_decade: 8,
        }
    }
}

/// Anomalous weak value 100 against the `A = 100` eigenvalue pointer.
fn sec2_weak_100(p: &Sec2Weak100Params, seed: u64) -> Result<Report> {
    let kind = gaussian(p.delta)?;
    check_g(p.g)?;
    let tsv = weak_hundred();
    let a = sz(1.0);
    let grid = geometric_grid(p.eps_min, p.eps_max, p.points_per_decade)?;
    let rows = par_rows(&grid, |eps| {
        let (d, pred) = weak_point(&tsv, &a, kind, p.g, eps)?;
        Ok(vec![eps, d, pred])
    })?;
    let mut table = Table::new(&["epsilon", "D_weak", "D_pred_weak"]);
    rows.into_iter().for_each(|row| table.push(row));
    let fit = fit_column(&table, "epsilon", "D_weak")?;

    let eps_bound = 1e-4 * p.delta / p.g;
    let (d_bound, _) = weak_point(&tsv, &a, kind, p.g, eps_bound)?;
    let ge = p.g * eps_bound;
    let bound = 100.0 * 101.0 * ge * ge / (4.0 * SQRT_2 * p.delta * p.delta);
    let (d4, pred4) = weak_point(&tsv, &a, kind, p.g, prediction_epsilon(kind, p.g))?;

    let mut r = report(ScenarioName::Sec2Weak100, seed, p, table);
    exact_weak_value(&mut r, "A_w", weak_value(&tsv, &a)?, complex(100.0, 0.0));
    exact_weak_value(
        &mut r,
        "(S_z^2)_w",
        weak_value_moment(&tsv, &a, 2)?,
        complex(-100.0, 0.0),
    );
    note_fit(&mut r, "weak", &fit);
    r.check(Check::absolute("weak slope", fit.slope, 2.0, 0.05));
    r.check(Check::at_most(
        "D at g eps / Delta = 1e-4 within twice the quadratic term",
        d_bound,
        2.0 * bound,
    ));
    r.check(Check::relative(
        "predicted weak distance at small epsilon",
        pred4,
        d4,
        0.05,
    ));
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sec3Params {
    /// Pointer width; replaced by `waist / 2` when a crystal is given.
    pub delta: f64,
    /// Largest `g eps / (2 Delta)` on the grid (no crystal).
    pub ratio_max: f64,
    pub points: usize,
    /// Maximal visibility at zero coupling; sets the imperfection `xi = arccos V`.
    pub visibility_baseline: f64,
    /// Derive `g eps` from crystal tilts instead of a ratio grid.
    pub crystal: Option<CrystalSpec>,
    pub theta_max_deg: f64,
}

impl Default for Sec3Params {
    fn default() -> Self {
        Self {
            delta: 0.4065,
            ratio_max: 0.25,
            points: 26,
            visibility_baseline: 0.99,
            crystal: None,
            theta_max_deg: 20.0,
        }
    }
}

/// Modeled interference experiment: weak value 0 and expectation value 0 for
/// the polarization operator, with a fixed orthogonal imperfection.
fn sec3_experiment(p: &Sec3Params, seed: u64) -> Result<Report> {
    if p.points < 3 {
        return Err(CliError::usage("points must be at least 3"));
    }
    let xi = bures_from_visibility(p.visibility_baseline)?;
    let model = ImperfectionModel::new(xi)?;
    let op = polarization_operator();
    let pre = diagonal_polarization();
    let tsv = PureTsv64::new(pre.clone(), pre.clone())?;

    // (theta, g eps) pairs; g = 1 so eps carries the whole coupling
    let (delta, couplings): (f64, Vec<(f64, f64)>) = match &p.crystal {
        Some(c) => {
            let thetas = linear_grid(0.0, p.theta_max_deg.to_radians(), p.points);
            let pts = thetas
                .into_iter()
                .map(|t| (t, coupling_at_tilt(c, t).g_epsilon.abs()))
                .collect();
            (c.delta_mm(), pts)
        }
        None => {
            if !(p.ratio_max > 0.0) {
                return Err(CliError::usage("ratio_max must be positive"));
            }
            let pts = linear_grid(0.0, p.ratio_max, p.points)
                .into_iter()
                .map(|ratio| (f64::NAN, 2.0 * p.delta * ratio))
                .collect();
            (p.delta, pts)
        }
    };
    let kind = gaussian(delta)?;

    let ge: Vec<f64> = couplings.iter().map(|c| c.1).collect();
    let ideal = par_rows(&ge, |ge| {
        let (d_ex, _) = expectation_point(&pre, &op, kind, 1.0, ge)?;
        let (d_w, _) = weak_point(&tsv, &op, kind, 1.0, ge)?;
        Ok(vec![d_ex, d_w])
    })?;

    let lin = |ge: f64| ge / (2.0 * delta);
    let quad = |ge: f64| ge * ge / (4.0 * SQRT_2 * delta * delta);
    let mut modeled = Vec::with_capacity(ge.len());
    for row in &ideal {
        modeled.push((model.apply(row[0])?, model.apply(row[1])?));
    }
    let xi_ex = ImperfectionModel::fit(
        &ge.iter()
            .zip(&modeled)
            .map(|(g, m)| (lin(*g), m.0))
            .collect::<Vec<_>>(),
    )?;
    let xi_w = ImperfectionModel::fit(
        &ge.iter()
            .zip(&modeled)
            .map(|(g, m)| (quad(*g), m.1))
            .collect::<Vec<_>>(),
    )?;

    let mut table = Table::new(&[
        "theta_rad",
        "ratio",
        "g_epsilon",
        "D_expectation",
        "D_weak",
        "V_expectation",
        "V_weak",
        "fit_expectation",
        "fit_weak",
    ]);
    let mut worst_ex = 0.0f64;
    let mut worst_w = 0.0f64;
    let mut worst_round_trip = 0.0f64;
    for (((theta, g_eps), (m_ex, m_w)), _) in couplings.iter().zip(&modeled).zip(&ideal) {
        let v_ex = visibility_from_bures(*m_ex)?;
        let v_w = visibility_from_bures(*m_w)?;
        let f_ex = xi_ex.apply(lin(*g_eps))?;
        let f_w = xi_w.apply(quad(*g_eps))?;
        worst_ex = worst_ex.max((m_ex - f_ex).abs() / m_ex);
        worst_w = worst_w.max((m_w - f_w).abs() / m_w);
        for (d, v) in [(*m_ex, v_ex), (*m_w, v_w)] {
            worst_round_trip = worst_round_trip.max((bures_from_visibility(v)? - d).abs());
        }
        table.push(vec![
            *theta,
            g_eps / (2.0 * delta),
            *g_eps,
            *m_ex,
            *m_w,
            v_ex,
            v_w,
            f_ex,
            f_w,
        ]);
    }
    let eps4 = prediction_epsilon(kind, 1.0);
    let (dex4, pex4) = expectation_point(&pre, &op, kind, 1.0, eps4)?;
    let (dw4, pw4) = weak_point(&tsv, &op, kind, 1.0, eps4)?;
    let v0 = table.rows[0][5];
    let ratio_span = table.rows.last().map(|row| row[1]).unwrap_or(0.0);

    let mut r = report(ScenarioName::Sec3Experiment, seed, p, table);
    r.note("xi_model", xi);
    r.note("xi_expectation_fit", xi_ex.xi());
    r.note("xi_weak_fit", xi_w.xi());
    r.note("ratio_max_reached", ratio_span);
    r.check(Check::absolute(
        "visibility at zero coupling",
        v0,
        p.visibility_baseline,
        1e-12,
    ));
    r.check(Check::at_most(
        "max |arccos V - D|",
        worst_round_trip,
        1e-12,
    ));
    r.check(Check::at_most(
        "expectation curve vs fit form (relative)",
        worst_ex,
        0.01,
    ));
    r.check(Check::at_most(
        "weak curve vs fit form (relative)",
        worst_w,
        0.01,
    ));
    r.check(Check::relative(
        "predicted expectation distance at small epsilon",
        pex4,
        dex4,
        0.05,
    ));
    r.check(Check::relative(
        "predicted weak distance at small epsilon",
        pw4,
        dw4,
        0.05,
    ));
    Ok(r)
}

// ---------------------------------------------------------------------------

/// Weak-value and expectation-value sweeps on the default two-state vectors,
/// plus the shift rule on a seeded random two-state vector.
fn sec4_scaling(p: &SweepParams, seed: u64) -> Result<Report> {
    check_g(p.g)?;
    let out = run_sweep(p)?;
    let weak_slope = match p.pointer {
        PointerKind::Gaussian { .. } => 2.0,
        PointerKind::Spin => 3.0,
    };

    let eps4 = prediction_epsilon(p.pointer, p.g);
    let small_weak = p
        .weak
        .as_ref()
        .map(|c| weak_point(&c.tsv()?, &c.observable.build()?, p.pointer, p.g, eps4))
        .transpose()?;
    let small_exp = p
        .expectation
        .as_ref()
        .map(|c| expectation_point(&c.pre, &c.observable.build()?, p.pointer, p.g, eps4))
        .transpose()?;
    let random_fit = random_shift_rule_fit(p, seed)?;

    let mut r = report(ScenarioName::Sec4Scaling, seed, p, out.table);
    if let Some(fit) = &out.fit_weak {
        note_fit(&mut r, "weak", fit);
        r.check(Check::absolute("weak slope", fit.slope, weak_slope, 0.05));
    }
    if let Some(fit) = &out.fit_expectation {
        note_fit(&mut r, "expectation", fit);
        r.check(Check::absolute("expectation slope", fit.slope, 1.0, 0.05));
    }
    if let (Some((d, pred)), PointerKind::Gaussian { .. }) = (small_weak, p.pointer) {
        r.check(Check::relative(
            "predicted weak distance at small epsilon",
            pred,
            d,
            0.05,
        ));
    }
    if let Some((d, pred)) = small_exp {
        r.check(Check::relative(
            "predicted expectation distance at small epsilon",
            pred,
            d,
            0.05,
        ));
    }
    note_fit(&mut r, "random_shift_rule", &random_fit);
    r.check(Check::at_least(
        "random two-state vector shift-rule slope",
        random_fit.slope,
        weak_slope - 0.1,
    ));
    Ok(r)
}

/// Qutrit two-state vector and observable drawn from `seed`; the grid is
/// rescaled so that `g eps` times the weak values stays in the weak regime.
fn random_shift_rule_fit(p: &SweepParams, seed: u64) -> Result<ScalingFit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tsv = PureTsv64::new(random_ket(&mut rng, 3)?, random_ket(&mut rng, 3)?)?;
    let op = random_hermitian(&mut rng, 3)?;
    let scale = 1f64
        .max(weak_value(&tsv, &op)?.norm())
        .max(weak_value_moment(&tsv, &op, 2)?.norm().sqrt())
        .max(
            op.spectrum()?
                .iter()
                .map(|e| e.value.abs())
                .fold(0.0, f64::max),
        );
    let grid = geometric_grid(p.eps_min / scale, p.eps_max / scale, p.points_per_decade)?;
    let samples = par_rows(&grid, |eps| {
        Ok(vec![eps, weak_point(&tsv, &op, p.pointer, p.g, eps)?.0])
    })?;
    Ok(fit_scaling_exponent(
        &samples.iter().map(|s| (s[0], s[1])).collect::<Vec<_>>(),
    )?)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sec6Params {
    pub points: usize,
    pub g_tau_max: f64,
}

impl Default for Sec6Params {
    fn default() -> Self {
        Self {
            points: 100,
            g_tau_max: PI,
        }
    }
}

/// Spin-1 system with weak value 100 measured by a spin pointer at finite strength.
fn sec6_finite_strength(p: &Sec6Params, seed: u64) -> Result<Report> {
    if p.points < 2 || !(p.g_tau_max > 0.0 && p.g_tau_max.is_finite()) {
        return Err(CliError::usage("need points >= 2 and a positive g_tau_max"));
    }
    let grid = linear_grid(0.0, p.g_tau_max, p.points);
    let rows = par_rows(&grid, |gt| {
        let rec = finite_strength_scenario(gt)?;
        let closed = finite_strength_pointer_closed_form(gt)?;
        let amp_err = rec
            .pointer_after
            .ket()
            .amplitudes()
            .iter()
            .zip(closed.ket().amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        Ok(vec![
            gt,
            rec.pointer_reading.unwrap_or(f64::NAN),
            rec.weak_value.re,
            finite_strength_weak_value_closed_form(gt),
            rec.rotation_angle,
            rec.postselect_probability,
            amp_err,
        ])
    })?;
    let mut table = Table::new(&[
        "g_tau",
        "pointer_reading",
        "weak_value",
        "weak_value_closed_form",
        "rotation_angle",
        "postselect_probability",
        "pointer_path_difference",
    ]);
    rows.into_iter().for_each(|row| table.push(row));
    let max_pointer_err = table
        .column("pointer_path_difference")
        .expect("column")
        .into_iter()
        .fold(0.0, f64::max);
    let max_aw_err = table
        .rows
        .iter()
        .map(|row| (row[2] - row[3]).abs())
        .fold(0.0, f64::max);

    let near_zero = finite_strength_scenario(1e-3)?;
    let at_pi = finite_strength_scenario(PI)?;
    let setup = FiniteStrengthSetup::anomalous_spin_one();
    let sz1 = sz(1.0);
    let mut gen_err = 0.0f64;
    for gt in [0.1, 0.5, 1.0] {
        let aw = weak_value_generalized(&derive_generalized_tsv(&setup, gt)?, &sz1)?;
        gen_err =
            gen_err.max((aw - complex(finite_strength_weak_value_closed_form(gt), 0.0)).norm());
    }

    let mut r = report(ScenarioName::Sec6FiniteStrength, seed, p, table);
    r.note("max_weak_value_path_difference", max_aw_err);
    r.note(
        "pointer_reading_at_1e-3",
        near_zero.pointer_reading.unwrap_or(f64::NAN),
    );
    r.note("weak_value_at_1e-3", near_zero.weak_value.re);
    r.note("weak_value_at_pi", at_pi.weak_value.re);
    r.check(Check::at_most(
        "pointer state: evolution vs closed form",
        max_pointer_err,
        1e-10,
    ));
    r.check(Check::relative(
        "pointer reading at g tau = 1e-3",
        near_zero.pointer_reading.unwrap_or(f64::NAN),
        100.0,
        0.01,
    ));
    r.check(Check::relative(
        "weak value at g tau = 1e-3",
        near_zero.weak_value.re,
        100.0,
        0.01,
    ));
    r.check(Check::absolute(
        "weak value at g tau = pi",
        at_pi.weak_value.re,
        201.0 / 80802.0 - 0.5,
        1e-12,
    ));
    r.check(Check::at_most(
        "generalized two-state vector vs closed form",
        gen_err,
        1e-10,
    ));
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinParams {
    pub g: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points_per_decade: usize,
    /// Coupling at which the eigenvalue rotation angle is checked.
    pub rotation_epsilon: f64,
}

impl Default for SpinParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            eps_min: 1e-4,
            eps_max: 1e-2,
            points_per_decade: 8,
            rotation_epsilon: 0.3,
        }
    }
}

/// The `A_w = 1` and `<A> = 1` cases on a spin pointer.
fn app_a_spin(p: &SpinParams, seed: u64) -> Result<Report> {
    check_g(p.g)?;
    let kind = PointerKind::Spin;
    let tsv = weak_one();
    let a = sz(1.0);
    let a2 = sz(2.0);
    let psi = expectation_pre();
    let grid = geometric_grid(p.eps_min, p.eps_max, p.points_per_decade)?;
    let rows = par_rows(&grid, |eps| {
        let (dw, pw) = weak_point(&tsv, &a, kind, p.g, eps)?;
        let (de, pe) = expectation_point(&psi, &a2, kind, p.g, eps)?;
        Ok(vec![eps, dw, de, pw, pe, dw / (p.g * eps).powi(3)])
    })?;
    let mut cols = SWEEP_COLUMNS.to_vec();
    cols.push("D_weak_over_cube");
    let mut table = Table::new(&cols);
    rows.into_iter().for_each(|row| table.push(row));
    let fit_w = fit_column(&table, "epsilon", "D_weak")?;
    let fit_e = fit_column(&table, "epsilon", "D_expectation")?;

    let rot = eigen_distance(complex(1.0, 0.0), &a, kind, p.g, p.rotation_epsilon)?;
    let eps4 = prediction_epsilon(kind, p.g);
    let (dw4, pw4) = weak_point(&tsv, &a, kind, p.g, eps4)?;
    let (de4, pe4) = expectation_point(&psi, &a2, kind, p.g, eps4)?;

    let mut r = report(ScenarioName::AppASpin, seed, p, table);
    note_fit(&mut r, "weak", &fit_w);
    note_fit(&mut r, "expectation", &fit_e);
    r.check(Check::absolute(
        "D(Phi_0, Phi_e) equals g eps",
        rot,
        p.g * p.rotation_epsilon,
        1e-12,
    ));
    r.check(Check::absolute("weak slope", fit_w.slope, 3.0, 0.05));
    r.check(Check::absolute("expectation slope", fit_e.slope, 1.0, 0.05));
    r.check(Check::absolute(
        "predicted weak distance vanishes",
        pw4,
        0.0,
        0.0,
    ));
    r.check(Check::relative(
        "weak distance is (g eps)^3 at small epsilon",
        dw4,
        (p.g * eps4).powi(3),
        0.05,
    ));
    r.check(Check::relative(
        "predicted expectation distance at small epsilon",
        pe4,
        de4,
        0.05,
    ));
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImaginaryParams {
    pub delta: f64,
    pub g: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points_per_decade: usize,
    /// Coupling `g eps` of the single worked example.
    pub example_g_epsilon: f64,
}

impl Default for ImaginaryParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            g: 1.0,
            eps_min: 1e-4,
            eps_max: 1e-2,
            points_per_decade: 8,
            example_g_epsilon: 0.1,
        }
    }
}

/// Weak value `i` of the polarization operator on Gaussian and spin pointers.
fn app_c_imaginary(p: &ImaginaryParams, seed: u64) -> Result<Report> {
    let kind = gaussian(p.delta)?;
    check_g(p.g)?;
    let op = polarization_operator();
    let tsv = PureTsv64::new(diagonal_polarization(), circular_polarization())?;
    let grid = geometric_grid(p.eps_min, p.eps_max, p.points_per_decade)?;
    let rows = par_rows(&grid, |eps| {
        let (dg, pg) = weak_point(&tsv, &op, kind, p.g, eps)?;
        let (ds, _) = weak_point(&tsv, &op, PointerKind::Spin, p.g, eps)?;
        Ok(vec![eps, dg, pg, ds, 2.0 * (p.g * eps).powi(3) / 3.0])
    })?;
    let mut table = Table::new(&[
        "epsilon",
        "D_gaussian",
        "D_pred_gaussian",
        "D_spin",
        "D_pred_spin",
    ]);
    rows.into_iter().for_each(|row| table.push(row));
    let fit_g = fit_column(&table, "epsilon", "D_gaussian")?;
    let fit_s = fit_column(&table, "epsilon", "D_spin")?;

    let ge = p.example_g_epsilon;
    let (d_example, _) = weak_point(&tsv, &op, kind, 1.0, ge)?;
    let example_pred = ge * ge / (2.0 * SQRT_2 * p.delta * p.delta);
    let eps4 = prediction_epsilon(kind, p.g);
    let (dg4, pg4) = weak_point(&tsv, &op, kind, p.g, eps4)?;
    let eps_spin = prediction_epsilon(PointerKind::Spin, p.g);
    let (ds4, _) = weak_point(&tsv, &op, PointerKind::Spin, p.g, eps_spin)?;

    let mut r = report(ScenarioName::AppCImaginary, seed, p, table);
    exact_weak_value(&mut r, "A_w", weak_value(&tsv, &op)?, complex(0.0, 1.0));
    note_fit(&mut r, "gaussian", &fit_g);
    note_fit(&mut r, "spin", &fit_s);
    r.note("D_example", d_example);
    r.check(Check::absolute("gaussian slope", fit_g.slope, 2.0, 0.05));
    r.check(Check::absolute("spin slope", fit_s.slope, 3.0, 0.05));
    r.check(Check::relative(
        "worked example distance",
        d_example,
        example_pred,
        0.05,
    ));
    r.check(Check::relative(
        "predicted gaussian distance at small epsilon",
        pg4,
        dg4,
        0.05,
    ));
    r.check(Check::relative(
        "spin distance is 2 (g eps)^3 / 3 at small epsilon",
        ds4,
        2.0 * (p.g * eps_spin).powi(3) / 3.0,
        0.05,
    ));
    Ok(r)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixedOracleParams {
    pub runs: usize,
    /// System dimensions, used in turn.
    pub dims: Vec<usize>,
    pub max_pre: usize,
    pub max_post: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points_per_decade: usize,
}

impl Default for MixedOracleParams {
    fn default() -> Self {
        Self {
            runs: 100,
            dims: vec![2, 3],
            max_pre: 3,
            max_post: 3,
            eps_min: 1e-4,
            eps_max: 1e-2,
            points_per_decade: 8,
        }
    }
}

/// Qubit circuit whose pure branches carry different weak values, so the
/// pointer mixture departs from the single shifted pointer at first order.
pub fn distinct_branch_circuit() -> MixedTsvCircuit64 {
    let zero = Ket64::basis(2, 0).expect("basis");
    let plus = Ket64::from_reals(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).expect("finite");
    let plus_i = Ket64::new(vec![
        complex(FRAC_1_SQRT_2, 0.0),
        complex(0.0, FRAC_1_SQRT_2),
    ])
    .expect("finite");
    MixedTsvCircuit64::minimal(
        vec![0.7, 0.3],
        vec![zero, plus.clone()],
        vec![0.6, 0.4],
        vec![plus, plus_i],
    )
    .expect("valid circuit")
}

pub(crate) fn reduced_deviation(
    joint: &Ket64,
    dims: [usize; 2],
    target: &DensityMatrix64,
) -> Result<f64> {
    let reduced = DensityMatrix64::from_pure(joint)?.partial_trace(&dims, 0)?;
    Ok((reduced.matrix() - target.matrix()).max_abs())
}

/// Formula and ancilla-circuit mixed weak values on seeded random circuits.
fn app_d_mixed_oracle(p: &MixedOracleParams, seed: u64) -> Result<Report> {
    if p.runs == 0 || p.dims.is_empty() || p.dims.contains(&0) || p.max_pre == 0 || p.max_post == 0
    {
        return Err(CliError::usage(
            "runs, dims, max_pre and max_post must be positive",
        ));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let run_seeds: Vec<u64> = (0..p.runs).map(|_| master.random()).collect();
    let rows: Vec<Vec<f64>> = run_seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let dim = p.dims[i % p.dims.len()];
            let n_pre = rng.random_range(1..=p.max_pre);
            let n_post = rng.random_range(1..=p.max_post);
            let circuit = random_circuit(&mut rng, dim, n_pre, n_post)?;
            let op = random_hermitian(&mut rng, dim)?;
            let formula = circuit.mixed_tsv()?.weak_value_of(&op)?;
            let via = mixed_weak_value_via_ancillas(&circuit, &op)?;
            let states = build_circuit_states(&circuit)?;
            let dev_pre =
                reduced_deviation(&states.pre_entangled, [dim, n_pre], &circuit.rho_pre()?)?;
            let dev_post = reduced_deviation(
                &states.post_entangled,
                [dim, circuit.ancilla_dim()],
                &circuit.rho_post()?,
            )?;
            Ok(vec![
                i as f64,
                dim as f64,
                n_pre as f64,
                n_post as f64,
                formula.re,
                formula.im,
                via.re,
                via.im,
                (formula - via).norm(),
                dev_pre,
                dev_post,
            ])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "run",
        "dim",
        "n_pre",
        "n_post",
        "A_w_re",
        "A_w_im",
        "ancilla_re",
        "ancilla_im",
        "abs_difference",
        "rho_pre_deviation",
        "rho_post_deviation",
    ]);
    rows.into_iter().for_each(|row| table.push(row));
    let max_of = |c: &str| {
        table
            .column(c)
            .expect("column")
            .into_iter()
            .fold(0.0, f64::max)
    };
    let max_diff = max_of("abs_difference");
    let max_reduced = max_of("rho_pre_deviation").max(max_of("rho_post_deviation"));

    let slope = mixed_coupling_fit(p)?;

    let mut r = report(ScenarioName::AppDMixedOracle, seed, p, table);
    r.note("max_abs_difference", max_diff);
    r.note("max_reduced_deviation", max_reduced);
    note_fit(&mut r, "mixed", &slope);
    r.check(Check::at_most(
        "max |formula - ancilla construction|",
        max_diff,
        1e-10,
    ));
    r.check(Check::at_most(
        "max reduced-matrix deviation",
        max_reduced,
        1e-12,
    ));
    r.check(Check::absolute(
        "mixed coupling slope",
        slope.slope,
        1.0,
        0.1,
    ));
    Ok(r)
}

/// Distance between the pointer mixture of [`distinct_branch_circuit`] and the
/// pointer shifted by its mixed weak value, fitted over the epsilon grid.
pub fn mixed_coupling_fit(p: &MixedOracleParams) -> Result<ScalingFit> {
    let circuit = distinct_branch_circuit();
    let op = weakval::sigma_z();
    let a_w = circuit.mixed_tsv()?.weak_value_of(&op)?;
    let kind = PointerKind::Gaussian { delta: 1.0 };
    let grid = geometric_grid(p.eps_min, p.eps_max, p.points_per_decade)?;
    let samples = par_rows(&grid, |eps| {
        let spec = CouplingSpec::new(op.clone(), 1.0, eps, kind)?;
        let p0 = AnyPointer::initial(kind)?;
        let mixed = couple_mixed(&circuit, &spec, &p0)?;
        let shifted = couple_eigenvalue(a_w, &spec, &p0)?;
        Ok(vec![
            eps,
            bures_pure_mixed(
                shifted.pure().expect("pure"),
                mixed.ensemble().expect("mixed"),
            )?,
        ])
    })?;
    Ok(fit_scaling_exponent(
        &samples.iter().map(|s| (s[0], s[1])).collect::<Vec<_>>(),
    )?)
}

trait WeakValueOf {
    fn weak_value_of(&self, op: &Operator64) -> weakval::Result<Complex<f64>>;
}

impl WeakValueOf for weakval::MixedTsv64 {
    fn weak_value_of(&self, op: &Operator64) -> weakval::Result<Complex<f64>> {
        weakval::weak_value_mixed(self, op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in ScenarioName::ALL {
            assert_eq!(ScenarioName::parse(n.as_str()), Some(n));
            let json = serde_json::to_string(&n).unwrap();
            assert_eq!(json, format!("\"{}\"", n.as_str()));
        }
        assert_eq!(ScenarioName::parse("sec5"), None);
    }

    #[test]
    fn unknown_parameter_is_a_usage_error() {
        let mut m = Map::new();
        m.insert("bogus".into(), Value::from(1));
        for n in ScenarioName::ALL {
            let err = run_scenario(n, &m, 42).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{}", n.as_str());
        }
    }

    #[test]
    fn sec2_weak_1_defaults_pass() {
        let r = run_scenario(ScenarioName::Sec2Weak1, &Map::new(), 42).unwrap();
        assert!(r.passed(), "{}", r.summary_text());
    }

    #[test]
    fn sec3_with_crystal_uses_tilts() {
        let mut m = Map::new();
        m.insert(
            "crystal".into(),
            serde_json::json!({"d_mm": 4.52, "n_o": 1.9929, "n_e": 2.2154, "waist_um": 813}),
        );
        m.insert("points".into(), Value::from(11));
        let r = run_scenario(ScenarioName::Sec3Experiment, &m, 42).unwrap();
        let thetas = r.table.column("theta_rad").unwrap();
        assert_eq!(thetas[0], 0.0);
        assert!((thetas[10] - 20f64.to_radians()).abs() < 1e-15);
        assert!(r.passed(), "{}", r.summary_text());
    }

    #[test]
    fn mixed_oracle_small_run() {
        let mut m = Map::new();
        m.insert("runs".into(), Value::from(8));
        let r = run_scenario(ScenarioName::AppDMixedOracle, &m, 1).unwrap();
        assert_eq!(r.table.rows.len(), 8);
        assert!(r.passed(), "{}", r.summary_text());
    }
}
