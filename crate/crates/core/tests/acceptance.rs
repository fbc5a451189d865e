//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! straight to stdout, so the lines show up even when output is captured.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sta_interferometer::harness::{
    phase_tolerance, run_prepared, run_suite, InitialState, RunOptions, RunRecord, Scenario, SuiteName,
    SuiteReport,
};
use sta_interferometer::invariants::{lr_phase, verify_invariance};
use sta_interferometer::potentials::Potential;
use sta_interferometer::spectral::{solve_stationary, Grid};
use sta_interferometer::trajectory::design_polynomial;
use sta_interferometer::units::PhysicalParams;
use sta_interferometer::Spin;

const SENSITIVITY_REL_TOL: f64 = 1e-10;
const SENSITIVITY_BUDGET: Duration = Duration::from_secs(1);
const PHASE_LAW_FORCES: [f64; 4] = [0.0, 0.001, 0.01, 0.05];
const PHASE_LAW_BUDGET: Duration = Duration::from_secs(30);
const VISIBILITY_TOL: f64 = 1e-6;
const STATE_SPREAD_TOL: f64 = 1e-6;
const INVARIANT_DRIFT_TOL: f64 = 1e-6;
const UNCOMPENSATED_DRIFT_FLOOR: f64 = 1e-3;
const LR_TOL: f64 = 1e-6;
const LR_N_INDEPENDENCE_TOL: f64 = 1e-8;
const EIGEN_TOL: f64 = 1e-8;
const EIGEN_BUDGET: Duration = Duration::from_secs(5);
const CS_BUDGET: Duration = Duration::from_secs(1);
const ESTIMATOR_BUDGET: Duration = Duration::from_secs(600);

/// Timed criteria must not share the CPU with each other.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: usize, title: &str, passed: bool, detail: String) {
    let line = format!(
        "acceptance {id:>2} [{}] {title}: {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(passed, "{}", line.trim_end());
}

fn suite_verdict(id: usize, title: &str, report: &SuiteReport, elapsed: Duration, budget: Option<Duration>) {
    let mut detail: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{}={:.3e}/{:.1e}", c.name, c.value, c.threshold))
        .collect();
    detail.push(format!("{:.1} s", elapsed.as_secs_f64()));
    let in_budget = budget.is_none_or(|b| elapsed < b);
    verdict(id, title, report.passed && in_budget, detail.join(", "));
}

fn benchmark_states() -> [InitialState; 3] {
    [
        InitialState::Eigenstate { n: 0 },
        InitialState::Eigenstate { n: 2 },
        InitialState::RandomSuperposition { modes: 5, seed: 7 },
    ]
}

fn run(s: &Scenario) -> (RunRecord, Duration) {
    let start = Instant::now();
    let rec = run_prepared(s, &s.prepare().unwrap(), false).unwrap();
    (rec, start.elapsed())
}

/// Harmonic benchmark runs for each force and initial state, gate enabled.
fn harmonic_matrix() -> Vec<(f64, Vec<(RunRecord, Duration)>)> {
    PHASE_LAW_FORCES
        .iter()
        .map(|&c| {
            let runs = benchmark_states()
                .into_iter()
                .map(|initial| {
                    run(&Scenario {
                        initial,
                        ..Scenario::harmonic_benchmark(c)
                    })
                })
                .collect();
            (c, runs)
        })
        .collect()
}

#[test]
fn criterion_01_closed_form_sensitivity() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = 10f64.powf(rng.random_range(-3.0..3.0));
        let t_f = 10f64.powf(rng.random_range(-2.0..3.0));
        let traj = design_polynomial(m, t_f).unwrap();
        let oracle = 32.0 * m * t_f / 35.0;
        for s in [traj.sensitivity(1.0), traj.sensitivity_quadrature(1.0)] {
            worst = worst.max(((s - oracle) / oracle).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "closed-form sensitivity",
        worst < SENSITIVITY_REL_TOL && elapsed < SENSITIVITY_BUDGET,
        format!("worst relative error {worst:.2e} (< {SENSITIVITY_REL_TOL:.0e}), {elapsed:.2?}"),
    );
}

#[test]
fn criteria_02_to_04_phase_law_visibility_and_state_independence() {
    let _g = serial();
    let matrix = harmonic_matrix();

    let mut law_ok = true;
    let mut law = Vec::new();
    for (c, runs) in &matrix {
        let (rec, _) = &runs[0];
        let r = &rec.result;
        let predicted = c * r.sensitivity;
        let err = (r.delta_phi_unwrapped - predicted).abs();
        let tol = phase_tolerance(predicted);
        let slowest = runs.iter().map(|(_, d)| *d).max().unwrap();
        law_ok &= err < tol && slowest < PHASE_LAW_BUDGET;
        law.push(format!("c={c}: |err|={err:.2e}/{tol:.1e} {:.1}s", slowest.as_secs_f64()));
    }

    let mut vis_worst = 0.0f64;
    let mut spread_worst = 0.0f64;
    for (_, runs) in &matrix {
        let phases: Vec<f64> = runs.iter().map(|(r, _)| r.result.delta_phi_unwrapped).collect();
        let hi = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = phases.iter().cloned().fold(f64::INFINITY, f64::min);
        spread_worst = spread_worst.max(hi - lo);
        for (r, _) in runs {
            vis_worst = vis_worst.max((r.result.visibility - 1.0).abs());
        }
    }
    let vis_ok = vis_worst < VISIBILITY_TOL;
    let spread_ok = spread_worst < STATE_SPREAD_TOL;

    let mut out = Vec::new();
    let mut record = |id, title: &str, ok: bool, detail: String| {
        let line = format!("acceptance {id:>2} [{}] {title}: {detail}\n", if ok { "PASS" } else { "FAIL" });
        std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
        out.push((ok, line));
    };
    record(2, "phase law", law_ok, law.join("; "));
    record(
        3,
        "unit visibility",
        vis_ok,
        format!("worst |V-1| = {vis_worst:.2e} (< {VISIBILITY_TOL:.0e}) over n=0, n=2, 5-mode"),
    );
    record(
        4,
        "initial-state independence",
        spread_ok,
        format!("worst phase spread {spread_worst:.2e} rad (< {STATE_SPREAD_TOL:.0e})"),
    );
    let failed: Vec<&str> = out.iter().filter(|(ok, _)| !ok).map(|(_, l)| l.trim_end()).collect();
    assert!(failed.is_empty(), "{failed:?}");
}

#[test]
fn criterion_05_pivot_independence() {
    let _g = serial();
    let start = Instant::now();
    let report = run_suite(SuiteName::PivotRobustness, &RunOptions::default());
    suite_verdict(5, "pivot independence", &report, start.elapsed(), None);
}

#[test]
fn criterion_06_adiabatic_limit() {
    let _g = serial();
    let start = Instant::now();
    let report = run_suite(SuiteName::AdiabaticLimit, &RunOptions::default());
    suite_verdict(6, "adiabatic-limit contrast", &report, start.elapsed(), None);
}

#[test]
fn criterion_07_invariant_constancy() {
    let _g = serial();
    let drift = |compensation: bool| {
        let s = Scenario {
            compensation,
            ..Scenario::harmonic_benchmark(0.05)
        };
        let prepared = s.prepare().unwrap();
        let transport = s.transport(&prepared).unwrap();
        let n = transport.steps_for(1.0);
        verify_invariance(&transport, &prepared.grid, &prepared.initial, n, 50)
            .unwrap()
            .max_relative_drift
    };
    let (with, without) = (drift(true), drift(false));
    verdict(
        7,
        "invariant constancy",
        with < INVARIANT_DRIFT_TOL && without > UNCOMPENSATED_DRIFT_FLOOR,
        format!(
            "compensated drift {with:.2e} (< {INVARIANT_DRIFT_TOL:.0e}), uncompensated {without:.2e} (> {UNCOMPENSATED_DRIFT_FLOOR:.0e})"
        ),
    );
}

#[test]
fn criterion_08_lewis_riesenfeld_phase() {
    let _g = serial();
    let s = Scenario {
        initial: InitialState::Eigenstate { n: 2 },
        ..Scenario::harmonic_benchmark(0.05)
    };
    let prepared = s.prepare().unwrap();
    let transport = s.transport(&prepared).unwrap();
    let eigen = prepared.eigen.as_ref().expect("eigenstate initial state carries modes");
    let t_f = transport.duration();
    let phase = |n, spin| lr_phase(eigen, n, &transport, t_f, spin, 40).unwrap();
    let mut worst = 0.0f64;
    let mut differential = Vec::new();
    for n in 0..3 {
        let (up, down) = (phase(n, Spin::Up), phase(n, Spin::Down));
        worst = worst.max(up.discrepancy()).max(down.discrepancy());
        differential.push(up.matrix_element - down.matrix_element);
    }
    let n_gap = (differential[0] - differential[1]).abs();
    verdict(
        8,
        "Lewis-Riesenfeld certification",
        worst < LR_TOL && n_gap < LR_N_INDEPENDENCE_TOL,
        format!(
            "closed form vs matrix element {worst:.2e} (< {LR_TOL:.0e}), n=0 vs n=1 differential {n_gap:.2e} (< {LR_N_INDEPENDENCE_TOL:.0e})"
        ),
    );
}

#[test]
fn criterion_09_eigensolver_oracle() {
    let _g = serial();
    let grid = Grid::centered(16.0, 1024).unwrap();
    let potential = Potential::harmonic(1.0, 1.0);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for c in [0.0, 0.3] {
        let u = potential.eval_tilted(c, &grid.x()).unwrap();
        let eig = solve_stationary(&grid, &u, &PhysicalParams::natural(c), 11).unwrap();
        for (n, lam) in eig.eigenvalues.iter().enumerate() {
            worst = worst.max((lam - (n as f64 + 0.5 - c * c / 2.0)).abs());
        }
    }
    let elapsed = start.elapsed() / 2;
    verdict(
        9,
        "eigensolver oracle",
        worst < EIGEN_TOL && elapsed < EIGEN_BUDGET,
        format!("worst |lambda_n - oracle| {worst:.2e} for n<=10 at c=0 and 0.3 (< {EIGEN_TOL:.0e}), {elapsed:.2?} per solve"),
    );
}

#[test]
fn criterion_10_cs_scaling() {
    let _g = serial();
    let start = Instant::now();
    let report = run_suite(SuiteName::CsScaling, &RunOptions::default());
    suite_verdict(10, "Cs scaling", &report, start.elapsed(), Some(CS_BUDGET));
}

#[test]
fn criterion_11_end_to_end_estimation() {
    let _g = serial();
    let start = Instant::now();
    let report = run_suite(SuiteName::EstimatorEnd2end, &RunOptions::default());
    suite_verdict(11, "end-to-end estimation", &report, start.elapsed(), Some(ESTIMATOR_BUDGET));
}
