//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Map;
use weakval::random::{random_gaussian_pointer, random_generalized_tsv, random_hermitian};
use weakval::tsv::examples::{naive_counterexample, weak_hundred, weak_one};
use weakval::{
    bures_from_visibility, fit_scaling_exponent, polarization_operator, quadrature_overlap,
    sigma_z, spin_z_operator, visibility_from_bures, weak_value, weak_value_generalized,
    weak_value_mixed, weak_value_moment, GridSpec, Operator64, PointerKind, PureTsv64,
};
use weakval_cli::inputs::{circular_polarization, diagonal_polarization, spin_pair};
use weakval_cli::output::Report;
use weakval_cli::scenarios::{mixed_coupling_fit, MixedOracleParams};
use weakval_cli::sweep::{eigen_distance, expectation_point, geometric_grid, weak_point};
use weakval_cli::{run_scenario, ScenarioName};

/// Outcome of one criterion: verdict plus the numbers behind it.
struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn from_checks(items: Vec<(bool, String)>) -> Self {
        Self {
            passed: items.iter().all(|(ok, _)| *ok),
            detail: items
                .into_iter()
                .map(|(ok, s)| if ok { s } else { format!("[failed] {s}") })
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

type Criterion = (&'static str, fn() -> Verdict);

const GAUSSIAN: PointerKind<f64> = PointerKind::Gaussian { delta: 1.0 };

fn sz(s: f64) -> Operator64 {
    spin_z_operator(s).unwrap()
}

fn within(label: &str, observed: f64, expected: f64, tol: f64) -> (bool, String) {
    let ok = (observed - expected).abs() <= tol;
    (
        ok,
        format!("{label} = {observed:.6e} (want {expected:.6e} +/- {tol:.0e})"),
    )
}

fn within_rel(label: &str, observed: f64, expected: f64, rel: f64) -> (bool, String) {
    let ok = (observed - expected).abs() <= rel * expected.abs();
    (
        ok,
        format!(
            "{label} = {observed:.6e} (want {expected:.6e} +/- {}%)",
            rel * 100.0
        ),
    )
}

fn at_most(label: &str, observed: f64, bound: f64) -> (bool, String) {
    (
        observed <= bound,
        format!("{label} = {observed:.3e} (want <= {bound:.0e})"),
    )
}

fn timed(label: &str, elapsed: Duration, limit: Duration) -> (bool, String) {
    (
        elapsed <= limit,
        format!(
            "{label} took {:.2} s (limit {:.0} s)",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ),
    )
}

fn slope(label: &str, samples: Vec<(f64, f64)>, expected: f64, tol: f64) -> (bool, String) {
    match fit_scaling_exponent(&samples) {
        Ok(fit) => within(label, fit.slope, expected, tol),
        Err(e) => (false, format!("{label}: {e}")),
    }
}

fn grid() -> Vec<f64> {
    geometric_grid(1e-4, 1e-2, 8).unwrap()
}

fn scenario(name: ScenarioName) -> Report {
    run_scenario(name, &Map::new(), 42).unwrap()
}

fn report_checks(r: &Report) -> Vec<(bool, String)> {
    r.checks
        .iter()
        .map(|c| (c.passed, format!("{} = {:.6e}", c.name, c.observed)))
        .collect()
}

fn c1_weak_value_exactness() -> Verdict {
    let a = sz(1.0);
    let mut items = Vec::new();
    for (label, tsv, aw, a2w) in [
        ("first", weak_one(), 1.0, -1.0),
        ("second", weak_hundred(), 100.0, -100.0),
    ] {
        let v1 = weak_value(&tsv, &a).unwrap();
        let v2 = weak_value_moment(&tsv, &a, 2).unwrap();
        items.push(at_most(
            &format!("{label} |A_w - {aw}|"),
            (v1 - aw).norm(),
            1e-12,
        ));
        items.push(at_most(
            &format!("{label} |(S_z^2)_w - ({a2w})|"),
            (v2 - a2w).norm(),
            1e-12,
        ));
    }
    Verdict::from_checks(items)
}

fn c2_distance_hierarchy() -> Verdict {
    let (g, eps) = (1.0, 0.02);
    let d0e = eigen_distance(Complex::new(1.0, 0.0), &sz(1.0), GAUSSIAN, g, eps).unwrap();
    let (dew, _) = weak_point(&weak_one(), &sz(1.0), GAUSSIAN, g, eps).unwrap();
    let (deex, _) =
        expectation_point(&spin_pair(2.0, 0.0, 2.0), &sz(2.0), GAUSSIAN, g, eps).unwrap();
    Verdict::from_checks(vec![
        within("D(Phi_0,Phi_e)", d0e, 0.0100, 1e-5),
        within_rel("D(Phi_e,Phi_w)", dew, 1.414e-4, 0.02),
        within("D(Phi_e,rho_ex)", deex, 0.0100, 1e-4),
    ])
}

fn c3_scaling_exponents() -> Verdict {
    let start = Instant::now();
    let polar = polarization_operator();
    let imaginary = PureTsv64::new(diagonal_polarization(), circular_polarization()).unwrap();
    let sweep = |f: &dyn Fn(f64) -> f64| grid().into_iter().map(|e| (e, f(e))).collect::<Vec<_>>();

    let mut items = vec![
        slope(
            "weak slope",
            sweep(&|e| {
                weak_point(&weak_one(), &sz(1.0), GAUSSIAN, 1.0, e)
                    .unwrap()
                    .0
            }),
            2.0,
            0.05,
        ),
        slope(
            "expectation slope",
            sweep(&|e| {
                expectation_point(&spin_pair(2.0, 0.0, 2.0), &sz(2.0), GAUSSIAN, 1.0, e)
                    .unwrap()
                    .0
            }),
            1.0,
            0.05,
        ),
        slope(
            "spin-pointer weak slope",
            sweep(&|e| {
                weak_point(&weak_one(), &sz(1.0), PointerKind::Spin, 1.0, e)
                    .unwrap()
                    .0
            }),
            3.0,
            0.05,
        ),
        slope(
            "imaginary weak slope",
            sweep(&|e| weak_point(&imaginary, &polar, GAUSSIAN, 1.0, e).unwrap().0),
            2.0,
            0.05,
        ),
    ];
    match mixed_coupling_fit(&MixedOracleParams::default()) {
        Ok(fit) => items.push(within("mixed slope", fit.slope, 1.0, 0.1)),
        Err(e) => items.push((false, format!("mixed slope: {e}"))),
    }
    items.push(timed("sweeps", start.elapsed(), Duration::from_secs(10)));
    Verdict::from_checks(items)
}

fn c4_analytic_predictions() -> Verdict {
    let eps = 1e-3;
    let mut items = Vec::new();
    let polar = polarization_operator();
    let diag = diagonal_polarization();
    let weak_cases: [(&str, PureTsv64, Operator64); 3] = [
        ("weak A_w=1", weak_one(), sz(1.0)),
        ("weak A_w=100", weak_hundred(), sz(1.0)),
        (
            "weak polarization",
            PureTsv64::new(diag.clone(), diag.clone()).unwrap(),
            polar.clone(),
        ),
    ];
    for (label, tsv, op) in &weak_cases {
        let (d, pred) = weak_point(tsv, op, GAUSSIAN, 1.0, eps).unwrap();
        items.push(within_rel(label, pred, d, 0.05));
    }
    let exp_cases = [
        (
            "expectation spin-2",
            spin_pair(2.0, 0.0, 2.0),
            sz(2.0),
            GAUSSIAN,
        ),
        ("expectation polarization", diag.clone(), polar, GAUSSIAN),
        (
            "expectation spin pointer",
            spin_pair(2.0, 0.0, 2.0),
            sz(2.0),
            PointerKind::Spin,
        ),
    ];
    for (label, psi, op, kind) in &exp_cases {
        let (d, pred) = expectation_point(psi, op, *kind, 1.0, eps).unwrap();
        items.push(within_rel(label, pred, d, 0.05));
    }
    let (d, pred) = weak_point(&weak_one(), &sz(1.0), PointerKind::Spin, 1.0, eps).unwrap();
    items.push(within("spin-pointer weak prediction", pred, 0.0, 0.0));
    items.push(within_rel(
        "spin-pointer weak D / (g eps)^3",
        d / eps.powi(3),
        1.0,
        0.05,
    ));
    Verdict::from_checks(items)
}

fn c5_visibility() -> Verdict {
    let worst = (0..=1000)
        .map(|i| i as f64 * 1.5 / 1000.0)
        .map(|d| (bures_from_visibility(visibility_from_bures(d).unwrap()).unwrap() - d).abs())
        .fold(0.0, f64::max);
    let mut items = vec![at_most("max |arccos cos D - D|", worst, 1e-12)];
    let r = scenario(ScenarioName::Sec3Experiment);
    let span = r.table.column("ratio").unwrap();
    items.push(within("ratio range start", span[0], 0.0, 0.0));
    items.push(within(
        "ratio range end",
        *span.last().unwrap(),
        0.25,
        1e-15,
    ));
    items.extend(report_checks(&r));
    Verdict::from_checks(items)
}

fn c6_finite_strength() -> Verdict {
    let r = scenario(ScenarioName::Sec6FiniteStrength);
    let mut items = vec![(
        r.table.rows.len() == 100
            && r.table.column("pointer_reading").is_some()
            && r.table.column("weak_value").is_some(),
        format!(
            "{} rows with pointer_reading and weak_value columns",
            r.table.rows.len()
        ),
    )];
    items.extend(report_checks(&r));
    Verdict::from_checks(items)
}

fn c7_mixed_oracle() -> Verdict {
    let start = Instant::now();
    let r = scenario(ScenarioName::AppDMixedOracle);
    let elapsed = start.elapsed();
    let dims: Vec<f64> = r.table.column("dim").unwrap();
    let mut items = vec![(
        dims.len() == 100 && dims.contains(&2.0) && dims.contains(&3.0),
        format!("{} circuits on qubits and qutrits", dims.len()),
    )];
    items.extend(report_checks(&r));
    items.push(timed("oracle", elapsed, Duration::from_secs(5)));
    Verdict::from_checks(items)
}

fn c8_generalized_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let dim = 2 + i % 2;
        let n_terms = rng.random_range(1..=3);
        let g = random_generalized_tsv(&mut rng, dim, n_terms).unwrap();
        let a = random_hermitian(&mut rng, dim).unwrap();
        let comp = g.composite().unwrap();
        let big = a.tensor(&Operator64::identity(n_terms));
        let lhs = weak_value(&comp, &big).unwrap();
        let rhs = weak_value_generalized(&g, &a).unwrap();
        worst = worst.max((lhs - rhs).norm());
    }
    let ce = naive_counterexample::<f64>();
    let correct = weak_value_generalized(&ce, &sigma_z()).unwrap();
    let naive = weak_value_mixed(&ce.naive_mixed().unwrap(), &sigma_z()).unwrap();
    let gap = (correct - naive).norm();
    Verdict::from_checks(vec![
        at_most(
            "max |generalized - composite| over 50 instances",
            worst,
            1e-10,
        ),
        (
            (gap > 1e-3),
            format!("naive formula gap on counterexample = {gap:.6e} (want > 1e-3)"),
        ),
    ])
}

fn c9_gaussian_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    let mut complex_centers = 0;
    for _ in 0..100 {
        let delta = rng.random_range(0.5..2.0);
        let n1 = rng.random_range(1..=4);
        let n2 = rng.random_range(1..=4);
        let p = random_gaussian_pointer(&mut rng, delta, n1).unwrap();
        let q = random_gaussian_pointer(&mut rng, delta, n2).unwrap();
        complex_centers += p
            .terms()
            .iter()
            .chain(q.terms())
            .filter(|t| t.center.im != 0.0)
            .count();
        let exact = p.overlap(&q).unwrap();
        let quad = quadrature_overlap(&p, &q, GridSpec::default()).unwrap();
        worst = worst.max((exact - quad.value).norm());
    }
    Verdict::from_checks(vec![
        at_most("max |closed form - quadrature| over 100 pairs", worst, 1e-8),
        (
            complex_centers > 0,
            format!("{complex_centers} terms with complex centers"),
        ),
    ])
}

fn c10_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_weakval");
    let run = |name: &str, threads: &str, format: &str| {
        Command::new(bin)
            .args(["scenario", name, "--seed", "42", "--format", format])
            .env("WEAKVAL_THREADS", threads)
            .output()
            .expect("binary runs")
    };
    let mut items = Vec::new();
    for n in ScenarioName::ALL {
        for format in ["csv", "json"] {
            let a = run(n.as_str(), "1", format);
            let b = run(n.as_str(), "4", format);
            let same = a.stdout == b.stdout && a.status == b.status && !a.stdout.is_empty();
            if !same {
                items.push((
                    false,
                    format!("{} {format} output differs between runs", n.as_str()),
                ));
            }
        }
    }
    if items.is_empty() {
        items.push((
            true,
            format!(
                "{} scenarios identical in CSV and JSON across runs and thread counts",
                ScenarioName::ALL.len()
            ),
        ));
    }
    Verdict::from_checks(items)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("weak-value exactness", c1_weak_value_exactness),
        ("distance hierarchy", c2_distance_hierarchy),
        ("scaling exponents", c3_scaling_exponents),
        ("analytic predictions", c4_analytic_predictions),
        ("visibility relation", c5_visibility),
        ("finite-strength measurement", c6_finite_strength),
        ("mixed two-state vector oracle", c7_mixed_oracle),
        (
            "generalized two-state vector identity",
            c8_generalized_identity,
        ),
        ("gaussian algebra oracle", c9_gaussian_oracle),
        ("determinism", c10_determinism),
    ];
    let mut all_passed = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| Verdict {
            passed: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        });
        all_passed &= v.passed;
        let verdict = if v.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name}: {}", i + 1, v.detail);
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
