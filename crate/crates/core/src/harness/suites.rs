use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{phase_tolerance, run_prepared, Check, CheckKind, InitialState, RunOptions, RunRecord, Scenario, VISIBILITY_TOL};
use crate::analysis::{add_shot_noise, bootstrap_estimate, estimate_force, EstimatorOptions};
use crate::error::{Error, Result};
use crate::potentials::Pivot;
use crate::trajectory::ELEMENTARY_CYCLE_SI;
use crate::units::{from_natural, Dimension, HBAR_SI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    PivotRobustness,
    StateIndependence,
    AdiabaticLimit,
    CsScaling,
    EstimatorEnd2end,
}

impl SuiteName {
    pub const ALL: [SuiteName; 5] = [
        SuiteName::PivotRobustness,
        SuiteName::StateIndependence,
        SuiteName::AdiabaticLimit,
        SuiteName::CsScaling,
        SuiteName::EstimatorEnd2end,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::PivotRobustness => "pivot_robustness",
            SuiteName::StateIndependence => "state_independence",
            SuiteName::AdiabaticLimit => "adiabatic_limit",
            SuiteName::CsScaling => "cs_scaling",
            SuiteName::EstimatorEnd2end => "estimator_end2end",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: SuiteName,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub summary: String,
    pub data: Value,
}

/// Runs a named suite. Failures, including errors from inner runs, are
/// reported as failed checks.
pub fn run_suite(name: SuiteName, opts: &RunOptions) -> SuiteReport {
    let outcome = match name {
        SuiteName::PivotRobustness => pivot_robustness(opts),
        SuiteName::StateIndependence => state_independence(opts),
        SuiteName::AdiabaticLimit => adiabatic_limit(opts),
        SuiteName::CsScaling => cs_scaling(),
        SuiteName::EstimatorEnd2end => estimator_end2end(opts),
    };
    let (checks, data) = match outcome {
        Ok(v) => v,
        Err(e) => (
            vec![Check::flag(format!("error: {e}"), CheckKind::Numerical, false)],
            Value::Null,
        ),
    };
    let passed = checks.iter().all(|c| c.passed);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let summary = if passed {
        format!("{name}: all {} checks passed", checks.len())
    } else {
        format!("{name}: {} of {} checks failed ({})", failed.len(), checks.len(), failed.join(", "))
    };
    SuiteReport {
        name,
        passed,
        checks,
        summary,
        data,
    }
}

type Outcome = Result<(Vec<Check>, Value)>;

/// Runs scenarios concurrently, keeping their order.
pub(crate) fn run_all(scenarios: &[Scenario], opts: &RunOptions) -> Result<Vec<RunRecord>> {
    scenarios
        .par_iter()
        .map(|s| {
            let s = s.with_options(opts)?;
            run_prepared(&s, &s.prepare()?, opts.no_gate)
        })
        .collect()
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn worst_visibility(records: &[RunRecord]) -> f64 {
    records
        .iter()
        .map(|r| (r.result.visibility - 1.0).abs())
        .fold(0.0, f64::max)
}

fn phases(records: &[RunRecord]) -> Vec<f64> {
    records.iter().map(|r| r.result.delta_phi_unwrapped).collect()
}

/// Lattice transport with deterministic pivots and an ensemble of noisy
/// ones.
fn pivot_robustness(opts: &RunOptions) -> Outcome {
    let base = Scenario::lattice_benchmark(1.0);
    let t_f = base.trajectory.t_f;
    let lambda = 1.0;
    let pivots = [
        Pivot::Constant { x0: 0.0 },
        Pivot::Constant { x0: lambda / 2.0 },
        Pivot::LinearDrift {
            a: 0.0,
            b: lambda / (4.0 * t_f),
        },
        Pivot::SpinLocked,
    ];
    let noisy: Vec<Pivot> = (1..=20)
        .map(|seed| Pivot::Noisy {
            mean: 0.0,
            sigma: lambda / 100.0,
            tau: t_f / 100.0,
            seed,
        })
        .collect();
    let scenarios: Vec<Scenario> = pivots
        .iter()
        .chain(&noisy)
        .map(|p| Scenario {
            pivot: p.clone(),
            ..base.clone()
        })
        .collect();
    let mut opts = opts.clone();
    opts.seed = None;
    let records = run_all(&scenarios, &opts)?;
    let (fixed, noisy_runs) = records.split_at(pivots.len());
    let fixed_phases = phases(fixed);
    let noisy_phases = phases(noisy_runs);
    let reference = fixed_phases[0];
    let n = noisy_phases.len() as f64;
    let mean = noisy_phases.iter().sum::<f64>() / n;
    let sd = (noisy_phases.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    let noisy_prediction = noisy_runs
        .iter()
        .map(|r| r.result.phase_error().abs())
        .fold(0.0, f64::max);
    let checks = vec![
        Check::below("deterministic_pivot_spread", CheckKind::Physics, spread(&fixed_phases), 1e-5),
        Check::below(
            "noisy_mean_offset_in_standard_errors",
            CheckKind::Physics,
            (mean - reference).abs() / se.max(f64::MIN_POSITIVE),
            3.0,
        ),
        Check::below("noisy_phase_vs_prediction", CheckKind::Physics, noisy_prediction, 1e-5),
        Check::below("visibility_defect", CheckKind::Physics, worst_visibility(&records), VISIBILITY_TOL),
    ];
    let data = json!({
        "pivots": pivots,
        "fixed_phases": fixed_phases,
        "noisy_phases": noisy_phases,
        "noisy_mean": mean,
        "noisy_standard_error": se,
        "reference": reference,
    });
    Ok((checks, data))
}

/// Harmonic benchmark from the ground state, the second excited state and
/// a random five-mode superposition.
fn state_independence(opts: &RunOptions) -> Outcome {
    let base = Scenario::harmonic_benchmark(0.01);
    let states = [
        InitialState::Eigenstate { n: 0 },
        InitialState::Eigenstate { n: 2 },
        InitialState::RandomSuperposition { modes: 5, seed: 7 },
    ];
    let scenarios: Vec<Scenario> = states
        .iter()
        .map(|st| Scenario {
            initial: st.clone(),
            ..base.clone()
        })
        .collect();
    let records = run_all(&scenarios, opts)?;
    let ph = phases(&records);
    let worst_phase = records
        .iter()
        .map(|r| r.result.phase_error().abs() / phase_tolerance(r.result.predicted_phase))
        .fold(0.0, f64::max);
    let checks = vec![
        Check::below("phase_spread", CheckKind::Physics, spread(&ph), 1e-6),
        Check::below("visibility_defect", CheckKind::Physics, worst_visibility(&records), VISIBILITY_TOL),
        Check::below("phase_vs_prediction_over_tolerance", CheckKind::Physics, worst_phase, 1.0),
    ];
    let data = json!({ "initial_states": states, "phases": ph, "predicted": records[0].result.predicted_phase });
    Ok((checks, data))
}

/// Slow factors applied to the uncompensated harmonic benchmark.
pub const SLOW_FACTORS: [f64; 3] = [1.0, 4.0, 16.0];

fn adiabatic_limit(opts: &RunOptions) -> Outcome {
    let compensated = Scenario::harmonic_benchmark(0.01);
    let mut scenarios: Vec<Scenario> = SLOW_FACTORS
        .iter()
        .map(|&k| {
            let mut s = compensated.clone();
            s.compensation = false;
            s.trajectory.t_f *= k;
            s
        })
        .collect();
    scenarios.push(compensated);
    let records = run_all(&scenarios, opts)?;
    let (slow, fast) = records.split_at(SLOW_FACTORS.len());
    let defects: Vec<f64> = slow.iter().map(|r| 1.0 - r.result.visibility).collect();
    let errors: Vec<f64> = slow.iter().map(|r| r.result.phase_error().abs()).collect();
    let increasing = slow.windows(2).all(|w| w[1].result.visibility > w[0].result.visibility);
    let approaching = errors.windows(2).all(|w| w[1] <= w[0]) || errors[errors.len() - 1] < 1e-6;
    let comp = &fast[0];
    let checks = vec![
        Check::flag("visibility_strictly_increasing", CheckKind::Physics, increasing),
        Check::flag("phase_approaches_prediction", CheckKind::Physics, approaching),
        Check::below(
            "compensated_visibility_defect",
            CheckKind::Physics,
            (comp.result.visibility - 1.0).abs(),
            VISIBILITY_TOL,
        ),
        Check::below(
            "compensated_phase_error",
            CheckKind::Physics,
            comp.result.phase_error().abs(),
            phase_tolerance(comp.result.predicted_phase),
        ),
    ];
    let data = json!({
        "slow_factors": SLOW_FACTORS,
        "visibility_defects": defects,
        "phase_errors": errors,
        "compensated": { "visibility": comp.result.visibility, "delta_phi": comp.result.delta_phi },
    });
    Ok((checks, data))
}

/// Durations in seconds for the caesium scaling study.
pub fn cs_durations() -> Vec<f64> {
    (0..10)
        .map(|i| 50e-6 * (10f64).powf(i as f64 / 9.0))
        .collect()
}

/// Caesium in an 866 nm lattice with the linear displacement law; returns
/// `(t_f, M, S)` in SI for each duration, computed through natural units.
pub fn cs_sensitivities() -> Result<Vec<(f64, f64, f64)>> {
    let lambda = 866e-9;
    let units = super::UnitsSpec {
        mass: "cs133".into(),
        length_scale: "866 nm".into(),
    };
    let sys = units.system()?;
    cs_durations()
        .into_iter()
        .map(|t_f| {
            let mut s = Scenario::lattice_benchmark(0.0);
            s.units = Some(units.clone());
            s.grid = super::GridSpec::default();
            s.potential = super::PotentialSpec::Lattice {
                wavelength: lambda,
                depth: None,
                depth_recoils: Some(50.0),
            };
            s.trajectory = super::TrajectorySpec {
                t_f,
                peak: None,
                target_sensitivity: None,
                scaling: Some(super::PowerLaw {
                    mu: 1.0,
                    coefficient: lambda / ELEMENTARY_CYCLE_SI,
                }),
                csv: None,
            };
            let n = s.natural()?;
            let traj = n.build_trajectory()?;
            let s_nat = traj.sensitivity(n.physics.hbar);
            let s_si = from_natural(s_nat, Dimension::SENSITIVITY, &sys).value;
            let m_si = from_natural(traj.peak().unwrap_or(0.0), Dimension::LENGTH, &sys).value;
            Ok((t_f, m_si, s_si))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn cs_scaling() -> Outcome {
    let rows = cs_sensitivities()?;
    let slope = log_log_slope(&rows.iter().map(|&(t, _, s)| (t, s)).collect::<Vec<_>>());
    let worst = rows
        .iter()
        .map(|&(t, m, s)| {
            let closed = 32.0 * m * t / (35.0 * HBAR_SI);
            ((s - closed) / closed).abs()
        })
        .fold(0.0, f64::max);
    let checks = vec![
        Check::below("exponent_offset", CheckKind::Physics, (slope - 2.0).abs(), 0.01),
        Check::below("closed_form_relative_error", CheckKind::Numerical, worst, 1e-8),
    ];
    let data = json!({ "rows": rows, "exponent": slope });
    Ok((checks, data))
}

/// End-to-end estimation setup: harmonic trap, `t_f = 40`, ten peaks.
pub fn estimator_scenarios(c: f64) -> Vec<Scenario> {
    (1..=10)
        .map(|m| {
            let mut s = Scenario::harmonic_benchmark(c);
            s.name = format!("estimator_m{m}");
            s.trajectory.t_f = 40.0;
            s.trajectory.peak = Some(m as f64);
            s.grid.half_extent = Some(24.0);
            s
        })
        .collect()
}

pub const ESTIMATOR_FORCE: f64 = 0.02;
pub const ESTIMATOR_SHOTS: u64 = 10_000;

pub fn estimator_options() -> EstimatorOptions {
    EstimatorOptions {
        c_min: 1e-4,
        c_max: 0.08,
        ..EstimatorOptions::default()
    }
}

fn estimator_end2end(opts: &RunOptions) -> Outcome {
    let c = ESTIMATOR_FORCE;
    let records = run_all(&estimator_scenarios(c), opts)?;
    let data: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.result.sensitivity, r.result.p_up))
        .collect();
    let options = estimator_options();
    let clean = estimate_force(&data, &options)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.unwrap_or(2024));
    let pops: Vec<f64> = data.iter().map(|d| d.1).collect();
    let noisy: Vec<(f64, f64)> = data
        .iter()
        .map(|d| d.0)
        .zip(add_shot_noise(&pops, ESTIMATOR_SHOTS, &mut rng)?)
        .collect();
    let boot = bootstrap_estimate(&noisy, ESTIMATOR_SHOTS, 200, opts.seed.unwrap_or(2024) + 1, &options)?;
    let checks = vec![
        Check::below("noiseless_relative_error", CheckKind::Physics, ((clean.c_hat - c) / c).abs(), 1e-4),
        Check::below(
            "noisy_offset_in_bootstrap_sigmas",
            CheckKind::Physics,
            (boot.estimate.c_hat - c).abs() / boot.std_error.max(f64::MIN_POSITIVE),
            3.0,
        ),
        Check::flag("unambiguous", CheckKind::Physics, !clean.is_ambiguous()),
    ];
    let out = json!({
        "samples": data,
        "noisy_samples": noisy,
        "noiseless": clean,
        "noisy": boot.estimate,
        "bootstrap_std_error": boot.std_error,
        "bootstrap_mean": boot.mean,
    });
    Ok((checks, out))
}
