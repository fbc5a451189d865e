//! Scenario runner: configuration, the dt-halving gate, suites and sweeps.

mod config;
mod suites;
mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use config::{
    recoil_energy, GridSpec, InitialState, OutputFormat, OutputSpec, PhysicsSpec, PotentialSpec, PowerLaw,
    Prepared, Scenario, SteppingSpec, SweepMode, SweepSpec, TrajectorySpec, UnitsSpec,
};
pub use suites::{run_suite, SuiteName, SuiteReport};
pub use sweep::{run_sweep, SweepReport, SweepRow};

use crate::analysis::{readout, write_aggregate_csv, ConvergenceRecord, RunResult};
use crate::dynamics::{check_step, ArmState, Frame, Propagator, SpinPair, Transport};
use crate::error::{Error, Result};
use crate::spectral::Grid;
use crate::Spin;

/// Whether a failed check reflects the physics or the numerics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Physics,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < threshold`.
    pub fn below(name: impl Into<String>, kind: CheckKind, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            value,
            threshold,
            passed: value < threshold,
        }
    }

    pub fn flag(name: impl Into<String>, kind: CheckKind, passed: bool) -> Self {
        Self {
            name: name.into(),
            kind,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed,
        }
    }
}

/// Command-line style overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dt_scale: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    /// Skips the dt/2 rerun. Results are then unverified.
    pub no_gate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub result: RunResult,
    pub checks: Vec<Check>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_kind(&self) -> Option<CheckKind> {
        let failed = |k| self.checks.iter().any(|c| !c.passed && c.kind == k);
        if failed(CheckKind::Numerical) {
            Some(CheckKind::Numerical)
        } else if failed(CheckKind::Physics) {
            Some(CheckKind::Physics)
        } else {
            None
        }
    }
}

/// Norm drift allowed over a full run.
pub const NORM_TOL: f64 = 1e-10;
/// Visibility defect allowed for compensated runs.
pub const VISIBILITY_TOL: f64 = 1e-6;

/// Phase agreement tolerance `max(1e-5, 1e-4 |c S|)`.
pub fn phase_tolerance(predicted: f64) -> f64 {
    (1e-4 * predicted.abs()).max(1e-5)
}

impl Scenario {
    /// Copy with run overrides applied.
    pub fn with_options(&self, opts: &RunOptions) -> Result<Scenario> {
        let mut s = self.clone();
        if let Some(scale) = opts.dt_scale {
            s.stepping.dt_scale = scale;
        }
        if let Some(seed) = opts.seed {
            s.pivot = s.pivot.with_seed(seed);
            if let InitialState::RandomSuperposition { seed: old, .. } = &mut s.initial {
                *old = seed;
            }
        }
        if let Some(dir) = &opts.out_dir {
            s.output.dir = Some(dir.clone());
        }
        if let Some(format) = opts.format {
            s.output.format = format;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn transport(&self, prepared: &Prepared) -> Result<Transport> {
        Transport::new(
            prepared.potential.clone(),
            prepared.trajectory.clone(),
            &prepared.pivot,
            prepared.params,
            self.compensation,
        )
    }
}

type Frames = Vec<(f64, Vec<C64>)>;

fn run_arms(
    initial: &[C64],
    transport: &Transport,
    grid: &Grid,
    n_steps: usize,
    snapshot_stride: usize,
    settle: f64,
) -> Result<(SpinPair<ArmState>, Option<SpinPair<Frames>>)> {
    let dt = transport.duration() / n_steps as f64;
    check_step(transport, dt)?;
    let run = |spin: Spin| -> Result<(ArmState, Frames)> {
        let mut frames = Vec::new();
        let mut prop = Propagator::new(transport, *grid, dt);
        let mut psi = initial.to_vec();
        prop.settle(&mut psi, 0.0, spin, settle)?;
        let start = ArmState::new(psi, 0.0, spin, Frame::Lab);
        let end = prop.run(&start, n_steps, snapshot_stride, |s| {
            frames.push((s.t, s.psi.clone()))
        })?;
        Ok((end, frames))
    };
    let (up, down) = rayon::join(|| run(Spin::Up), || run(Spin::Down));
    let ((up, fu), (down, fd)) = (up?, down?);
    let frames = (snapshot_stride > 0).then_some(SpinPair { up: fu, down: fd });
    Ok((SpinPair { up, down }, frames))
}

fn settle_window(s: &Scenario, transport: &Transport) -> f64 {
    let w = transport.potential.curvature_frequency(transport.params.mass);
    if s.stepping.settle_periods > 0.0 && w > 0.0 {
        s.stepping.settle_periods * std::f64::consts::TAU / w
    } else {
        0.0
    }
}

/// Result of one scenario, with the artifacts written for it.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub artifacts: Vec<PathBuf>,
}

/// Prepares, propagates both arms, reads out, and (unless disabled)
/// repeats at half the step to check the differential phase.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    let s = scenario.with_options(opts)?;
    let prepared = s.prepare()?;
    let record = run_prepared(&s, &prepared, opts.no_gate)?;
    let artifacts = match &s.output.dir {
        Some(dir) => write_run_artifacts(dir, &s, &record)?,
        None => Vec::new(),
    };
    if s.stepping.snapshot_stride > 0 {
        if let Some(dir) = &s.output.dir {
            let transport = s.transport(&prepared)?;
            let n = transport.steps_for(s.stepping.dt_scale);
            let (_, frames) = run_arms(
                &prepared.initial,
                &transport,
                &prepared.grid,
                n,
                s.stepping.snapshot_stride,
                settle_window(&s, &transport),
            )?;
            if let Some(frames) = frames {
                let path = dir.join(format!("{}_snapshots.csv", s.name));
                write_snapshots(fs::File::create(&path)?, &prepared.grid, &frames)?;
                let mut record_artifacts = artifacts;
                record_artifacts.push(path);
                return Ok(RunOutcome {
                    record,
                    artifacts: record_artifacts,
                });
            }
        }
    }
    Ok(RunOutcome { record, artifacts })
}

/// Runs a prepared scenario without writing anything.
pub fn run_prepared(s: &Scenario, prepared: &Prepared, no_gate: bool) -> Result<RunRecord> {
    let transport = s.transport(prepared)?;
    let grid = &prepared.grid;
    let n = transport.steps_for(s.stepping.dt_scale);
    let settle = settle_window(s, &transport);
    let (coarse, fine) = if no_gate {
        (run_arms(&prepared.initial, &transport, grid, n, 0, settle), None)
    } else {
        let (c, f) = rayon::join(
            || run_arms(&prepared.initial, &transport, grid, n, 0, settle),
            || run_arms(&prepared.initial, &transport, grid, 2 * n, 0, settle),
        );
        (c, Some(f))
    };
    let coarse = coarse?.0;
    let coarse_result = readout(&coarse.up, &coarse.down, grid, &transport)?;
    let (mut result, arms) = match fine {
        None => (coarse_result, coarse),
        Some(fine) => {
            let fine = fine?.0;
            let mut r = readout(&fine.up, &fine.down, grid, &transport)?;
            let difference = crate::analysis::wrap(r.delta_phi - coarse_result.delta_phi).abs();
            let record = ConvergenceRecord {
                dt: transport.duration() / n as f64,
                delta_phi_coarse: coarse_result.delta_phi,
                delta_phi_fine: r.delta_phi,
                difference,
                tolerance: s.stepping.gate_tolerance,
                passed: difference < s.stepping.gate_tolerance,
            };
            if !record.passed {
                return Err(Error::GateFailure {
                    coarse: record.delta_phi_coarse,
                    fine: record.delta_phi_fine,
                });
            }
            r.diagnostics.convergence = Some(record);
            (r, fine)
        }
    };
    let norm0 = grid.norm(&prepared.initial);
    result.diagnostics.norm_up = grid.norm(&arms.up.psi);
    result.diagnostics.norm_down = grid.norm(&arms.down.psi);
    let mut checks = vec![Check::below(
        "norm_drift",
        CheckKind::Numerical,
        (result.diagnostics.norm_up - norm0)
            .abs()
            .max((result.diagnostics.norm_down - norm0).abs()),
        NORM_TOL,
    )];
    if s.compensation {
        checks.push(Check::below(
            "visibility",
            CheckKind::Physics,
            (result.visibility - 1.0).abs(),
            VISIBILITY_TOL,
        ));
        checks.push(Check::below(
            "phase_vs_prediction",
            CheckKind::Physics,
            result.phase_error().abs(),
            phase_tolerance(result.predicted_phase),
        ));
    }
    Ok(RunRecord {
        scenario: s.name.clone(),
        result,
        checks,
    })
}

fn write_run_artifacts(dir: &Path, s: &Scenario, record: &RunRecord) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let path = match s.output.format {
        OutputFormat::Json => {
            let path = dir.join(format!("{}.json", s.name));
            let mut f = fs::File::create(&path)?;
            serde_json::to_writer_pretty(&mut f, record)?;
            writeln!(f)?;
            path
        }
        OutputFormat::Csv => {
            let path = dir.join(format!("{}.csv", s.name));
            write_aggregate_csv(fs::File::create(&path)?, std::slice::from_ref(&record.result))?;
            path
        }
    };
    Ok(vec![path])
}

pub const SNAPSHOT_HEADER: [&str; 8] = ["t", "x", "abs2_up", "abs2_down", "re_up", "im_up", "re_down", "im_down"];

/// Frames of both arms, one row per grid point and time.
pub fn write_snapshots<W: Write>(writer: W, grid: &Grid, frames: &SpinPair<Frames>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SNAPSHOT_HEADER)?;
    let x = grid.x();
    for ((t, up), (_, down)) in frames.up.iter().zip(&frames.down) {
        for ((xi, u), d) in x.iter().zip(up).zip(down) {
            w.write_record(
                [*t, *xi, u.norm_sqr(), d.norm_sqr(), u.re, u.im, d.re, d.im].map(|v| format!("{v:e}")),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Solves the tilted trap of a scenario and writes `<name>_eigen.csv` and
/// `<name>_eigen.json` into `dir`.
pub fn run_eigensolve(scenario: &Scenario, dir: &Path) -> Result<(crate::spectral::EigenSolution, Vec<PathBuf>)> {
    let n = scenario.natural()?;
    let params = n.params()?;
    let potential = n.build_potential()?;
    let mut s = n.clone();
    s.initial = InitialState::Eigenstate {
        n: n.output.eigenstates.max(1) - 1,
    };
    let prepared = s.prepare()?;
    let eigen = match prepared.eigen {
        Some(e) => e,
        None => {
            let u = potential.eval_tilted(params.c, &prepared.grid.x())?;
            crate::spectral::solve_stationary(&prepared.grid, &u, &params, n.output.eigenstates)?
        }
    };
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}_eigen.csv", scenario.name));
    let json = dir.join(format!("{}_eigen.json", scenario.name));
    eigen.save(&csv, &json)?;
    Ok((eigen, vec![csv, json]))
}

/// Writes the scenario's trap waveform as `<name>_waveform.csv`.
pub fn export_waveform(scenario: &Scenario, dir: &Path) -> Result<PathBuf> {
    let n = scenario.natural()?;
    let traj = n.build_trajectory()?;
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}_waveform.csv", scenario.name));
    traj.save_csv(&path, n.output.waveform_samples.max(2), n.physics.mass)?;
    Ok(path)
}
