use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::suites::run_all;
use super::{OutputFormat, RunOptions, RunRecord, Scenario, SweepMode, SweepSpec};
use crate::analysis::{add_shot_noise, estimate_force, unwrap_along, EstimationResult, EstimatorOptions};
use crate::error::{Error, Result};
use crate::potentials::Pivot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub peak: f64,
    pub t_f: f64,
    pub c: f64,
    pub pivot: usize,
    pub seed: Option<u64>,
    pub sensitivity: f64,
    pub closed_form: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunRecord>,
    /// Population after optional shot noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_up_measured: Option<f64>,
    /// Differential phase tracked continuously along increasing `S`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_phi_tracked: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub rows: Vec<SweepRow>,
    pub estimate: Option<EstimationResult>,
    pub artifacts: Vec<PathBuf>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.rows
            .iter()
            .filter_map(|r| r.run.as_ref())
            .all(|r| r.passed())
    }
}

struct Point {
    peak: f64,
    t_f: f64,
    c: f64,
    pivot: usize,
    seed: Option<u64>,
    scenario: Scenario,
}

fn expand(base: &Scenario, spec: &SweepSpec) -> Result<Vec<Point>> {
    let or = |v: &Vec<f64>, d: Option<f64>| -> Result<Vec<f64>> {
        match (v.is_empty(), d) {
            (false, _) => Ok(v.clone()),
            (true, Some(d)) => Ok(vec![d]),
            (true, None) => Err(Error::Config(
                "sweep axis has no values and the scenario gives no default".into(),
            )),
        }
    };
    let peaks = or(&spec.peaks, base.trajectory.peak)?;
    let durations = or(&spec.durations, Some(base.trajectory.t_f))?;
    let forces = or(&spec.forces, Some(base.physics.c))?;
    let pivots = if spec.pivots.is_empty() {
        vec![base.pivot.clone()]
    } else {
        spec.pivots.clone()
    };
    let seeds: Vec<Option<u64>> = if spec.seeds.is_empty() {
        vec![None]
    } else {
        spec.seeds.iter().map(|&s| Some(s)).collect()
    };
    let mut points = Vec::new();
    for &t_f in &durations {
        for &peak in &peaks {
            for &c in &forces {
                for (pi, pivot) in pivots.iter().enumerate() {
                    for &seed in &seeds {
                        let mut s = base.clone();
                        s.sweep = None;
                        s.trajectory.t_f = t_f;
                        s.trajectory.peak = Some(peak);
                        s.trajectory.target_sensitivity = None;
                        s.trajectory.scaling = None;
                        s.physics.c = c;
                        s.pivot = match seed {
                            Some(seed) => pivot.with_seed(seed),
                            None => pivot.clone(),
                        };
                        s.name = format!("{}_{}", base.name, points.len());
                        points.push(Point {
                            peak,
                            t_f,
                            c,
                            pivot: pi,
                            seed: seed.filter(|_| matches!(pivot, Pivot::Noisy { .. })),
                            scenario: s,
                        });
                    }
                }
            }
        }
    }
    Ok(points)
}

/// Fans the scenario's sweep axes out into independent runs and
/// aggregates them in axis order.
pub fn run_sweep(scenario: &Scenario, opts: &RunOptions) -> Result<SweepReport> {
    let base = scenario.with_options(opts)?;
    let spec = base
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("scenario has no [sweep] table".into()))?;
    let points = expand(&base, &spec)?;
    let mut rows: Vec<SweepRow> = points
        .iter()
        .map(|p| {
            let n = p.scenario.natural()?;
            let traj = n.build_trajectory()?;
            let hbar = n.physics.hbar;
            let closed = 32.0 * traj.peak().unwrap_or(f64::NAN) * traj.duration() / (35.0 * hbar);
            Ok(SweepRow {
                peak: p.peak,
                t_f: p.t_f,
                c: p.c,
                pivot: p.pivot,
                seed: p.seed,
                sensitivity: traj.sensitivity(hbar),
                closed_form: closed,
                run: None,
                p_up_measured: None,
                delta_phi_tracked: None,
            })
        })
        .collect::<Result<_>>()?;

    let mut estimate = None;
    if spec.mode == SweepMode::Tdse {
        let scenarios: Vec<Scenario> = points.into_iter().map(|p| p.scenario).collect();
        let mut inner = opts.clone();
        inner.seed = None;
        inner.out_dir = None;
        let records = run_all(&scenarios, &inner)?;
        let pops: Vec<f64> = records.iter().map(|r| r.result.p_up).collect();
        let measured = if spec.shots > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.shot_seed);
            add_shot_noise(&pops, spec.shots, &mut rng)?
        } else {
            pops
        };
        let options = match spec.c_range {
            Some([lo, hi]) => EstimatorOptions {
                c_min: lo,
                c_max: hi,
                ..EstimatorOptions::default()
            },
            None => EstimatorOptions::default(),
        };
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| rows[a].sensitivity.total_cmp(&rows[b].sensitivity));
        let s_sorted: Vec<f64> = order.iter().map(|&i| rows[i].sensitivity).collect();
        let phi_sorted: Vec<f64> = order.iter().map(|&i| records[i].result.delta_phi).collect();
        let tracked = unwrap_along(&s_sorted, &phi_sorted, options.c_max);
        for (&i, (phi, _)) in order.iter().zip(tracked) {
            rows[i].delta_phi_tracked = Some(phi);
        }
        for ((row, record), p) in rows.iter_mut().zip(records).zip(measured) {
            row.run = Some(record);
            row.p_up_measured = Some(p);
        }
        let single_force = rows.windows(2).all(|w| w[0].c == w[1].c);
        let mut distinct: Vec<f64> = rows.iter().map(|r| r.sensitivity).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if single_force && distinct.len() >= 3 {
            let data: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r.sensitivity, r.p_up_measured.unwrap_or(f64::NAN)))
                .collect();
            estimate = Some(estimate_force(&data, &options)?);
        }
    }

    let mut artifacts = Vec::new();
    if let Some(dir) = &base.output.dir {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}_sweep.csv", base.name));
        write_rows(fs::File::create(&csv_path)?, &rows)?;
        artifacts.push(csv_path);
        if base.output.format == OutputFormat::Json || estimate.is_some() {
            let json_path = dir.join(format!("{}_sweep.json", base.name));
            let report = SweepReport {
                name: base.name.clone(),
                rows: rows.clone(),
                estimate: estimate.clone(),
                artifacts: Vec::new(),
            };
            serde_json::to_writer_pretty(fs::File::create(&json_path)?, &report)?;
            artifacts.push(json_path);
        }
    }
    Ok(SweepReport {
        name: base.name.clone(),
        rows,
        estimate,
        artifacts,
    })
}

const SWEEP_HEADER: [&str; 15] = [
    "M",
    "t_f",
    "c",
    "pivot",
    "seed",
    "S",
    "S_closed_form",
    "P_up",
    "P_down",
    "delta_phi",
    "delta_phi_unwrapped",
    "delta_phi_tracked",
    "predicted_phase",
    "visibility",
    "P_up_measured",
];

fn write_rows<W: std::io::Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_HEADER)?;
    let num = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
    for r in rows {
        let res = r.run.as_ref().map(|x| &x.result);
        w.write_record([
            num(Some(r.peak)),
            num(Some(r.t_f)),
            num(Some(r.c)),
            r.pivot.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            num(Some(r.sensitivity)),
            num(Some(r.closed_form)),
            num(res.map(|x| x.p_up)),
            num(res.map(|x| x.p_down)),
            num(res.map(|x| x.delta_phi)),
            num(res.map(|x| x.delta_phi_unwrapped)),
            num(r.delta_phi_tracked),
            num(res.map(|x| x.predicted_phase)),
            num(res.map(|x| x.visibility)),
            num(r.p_up_measured),
        ])?;
    }
    w.flush()?;
    Ok(())
}
