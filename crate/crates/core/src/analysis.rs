//! Interferometric readout and force estimation.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ArmState, Frame, PhaseLedger, Transport};
use crate::error::{Error, Result};
use crate::potentials::PivotPath;
use crate::spectral::Grid;
use crate::trajectory::Trajectory;
use crate::Spin;

/// Outcome of the dt-halving check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub dt: f64,
    pub delta_phi_coarse: f64,
    pub delta_phi_fine: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub ledger: PhaseLedger,
    pub norm_up: f64,
    pub norm_down: f64,
    pub convergence: Option<ConvergenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub overlap: C64,
    /// Principal value of `arg(overlap)` in `(-pi, pi]`.
    pub delta_phi: f64,
    /// `delta_phi` moved by whole turns to the branch nearest the prediction.
    pub delta_phi_unwrapped: f64,
    pub visibility: f64,
    pub p_up: f64,
    pub p_down: f64,
    pub sensitivity: f64,
    pub predicted_phase: f64,
    pub diagnostics: Diagnostics,
}

impl RunResult {
    /// Signed distance of `delta_phi` from the prediction, reduced to
    /// `(-pi, pi]`.
    pub fn phase_error(&self) -> f64 {
        wrap(self.delta_phi - self.predicted_phase)
    }
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap(phi: f64) -> f64 {
    let r = phi - TAU * (phi / TAU).round();
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Moves `phi` by whole turns to lie closest to `reference`.
pub fn unwrap_near(phi: f64, reference: f64) -> f64 {
    phi + TAU * ((reference - phi) / TAU).round()
}

/// `<down|up>` together with the populations after the closing pulse.
pub fn readout(up: &ArmState, down: &ArmState, grid: &Grid, transport: &Transport) -> Result<RunResult> {
    if up.psi.len() != grid.len() || down.psi.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "arms have {} and {} samples, grid has {}",
            up.psi.len(),
            down.psi.len(),
            grid.len()
        )));
    }
    if up.frame != Frame::Lab || down.frame != Frame::Lab {
        return Err(Error::InvalidParameter("readout needs lab-frame states".into()));
    }
    if up.spin != Spin::Up || down.spin != Spin::Down {
        return Err(Error::InvalidParameter("readout needs one up and one down arm".into()));
    }
    if (up.t - down.t).abs() > 1e-9 * up.t.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "arms are at different times {} and {}",
            up.t, down.t
        )));
    }
    let overlap = grid.inner(&down.psi, &up.psi);
    let predicted_phase = transport_prediction(transport);
    let delta_phi = overlap.arg();
    Ok(RunResult {
        overlap,
        delta_phi,
        delta_phi_unwrapped: unwrap_near(delta_phi, predicted_phase),
        visibility: overlap.norm(),
        p_up: 0.5 + 0.5 * overlap.re,
        p_down: 1.0 - (0.5 + 0.5 * overlap.re),
        sensitivity: transport.trajectory.sensitivity(transport.params.hbar),
        predicted_phase,
        diagnostics: Diagnostics {
            ledger: transport.phase_ledger(up.t),
            norm_up: grid.norm(&up.psi),
            norm_down: grid.norm(&down.psi),
            convergence: None,
        },
    })
}

/// Expected differential phase
/// `2 c int alpha / hbar - (int x0_up f + int x0_down f) / hbar`
/// with `f = m alpha''`.
pub fn predict_phase(c: f64, trajectory: &Trajectory, hbar: f64, mass: f64, pivot: &PivotPath) -> f64 {
    let t_f = trajectory.duration();
    let pivot_term = pivot.x0f_integral(Spin::Up, trajectory, mass, t_f)
        + pivot.x0f_integral(Spin::Down, trajectory, mass, t_f);
    c * trajectory.sensitivity(hbar) - pivot_term / hbar
}

fn transport_prediction(transport: &Transport) -> f64 {
    let p = &transport.params;
    if transport.compensation {
        predict_phase(p.c, &transport.trajectory, p.hbar, p.mass, &transport.pivot)
    } else {
        p.c * transport.trajectory.sensitivity(p.hbar)
    }
}

/// Unwraps a sequence of phases measured at increasing `S`, starting from
/// zero phase at `S = 0` and assuming `|d phi / dS| <= c_max`.
///
/// Each returned flag is false where consecutive samples are too far apart
/// in `S` for the assumption to pin the branch.
pub fn unwrap_along(sensitivities: &[f64], phases: &[f64], c_max: f64) -> Vec<(f64, bool)> {
    let (mut prev_s, mut prev_phi) = (0.0, 0.0);
    sensitivities
        .iter()
        .zip(phases)
        .map(|(&s, &phi)| {
            let u = unwrap_near(phi, prev_phi);
            let reliable = c_max * (s - prev_s).abs() < PI;
            prev_s = s;
            prev_phi = u;
            (u, reliable)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    ArccosBranch,
    PeriodicityScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub c_hat: f64,
    pub method: EstimationMethod,
    /// Arccos branch of the largest-`S` sample under the fitted `c_hat`.
    pub branch: i64,
    /// Root-mean-square population residual.
    pub residual: f64,
    pub warning: Option<String>,
}

impl EstimationResult {
    pub fn is_ambiguous(&self) -> bool {
        self.warning.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub c_min: f64,
    pub c_max: f64,
    pub coarse_points: usize,
    pub tolerance: f64,
    /// Branch used when only a single sample is given.
    pub branch: i64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            c_min: 0.0,
            c_max: 1.0,
            coarse_points: 512,
            tolerance: 1e-10,
            branch: 0,
        }
    }
}

/// Phase on arccos branch `b` for a population `p_up = (1 + cos phi) / 2`.
///
/// With `theta = acos(2 p - 1)`, non-negative even branches give
/// `b pi + theta`, odd ones `(b + 1) pi - theta`, and negative branches mirror
/// the non-negative ones: `phi_b = -phi_{-b-1}`.
pub fn branch_phase(p_up: f64, branch: i64) -> f64 {
    let theta = (2.0 * p_up - 1.0).clamp(-1.0, 1.0).acos();
    if branch < 0 {
        return -branch_phase(p_up, -branch - 1);
    }
    let b = branch as f64;
    if branch % 2 == 0 {
        b * PI + theta
    } else {
        (b + 1.0) * PI - theta
    }
}

/// Branch on which `phi` lies.
pub fn branch_of(phi: f64) -> i64 {
    if phi < 0.0 {
        -branch_of(-phi) - 1
    } else {
        (phi / PI).floor() as i64
    }
}

fn model(c: f64, s: f64) -> f64 {
    0.5 + 0.5 * (c * s).cos()
}

fn cost(data: &[(f64, f64)], c: f64) -> f64 {
    data.iter().map(|&(s, p)| (p - model(c, s)).powi(2)).sum()
}

/// Inverts a single `(S, P_up)` sample on the declared branch.
pub fn arccos_branch(s: f64, p_up: f64, branch: i64) -> Result<EstimationResult> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::DegenerateData(format!("cannot invert at S = {s}")));
    }
    let c_hat = branch_phase(p_up, branch) / s;
    Ok(EstimationResult {
        c_hat,
        method: EstimationMethod::ArccosBranch,
        branch,
        residual: (p_up - model(c_hat, s)).abs(),
        warning: None,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Estimates `c` from populations measured at several sensitivities by
/// fitting `P(S) = (1 + cos(c S)) / 2` over `[c_min, c_max]`. A single
/// sample is inverted on `options.branch` instead.
pub fn estimate_force(data: &[(f64, f64)], options: &EstimatorOptions) -> Result<EstimationResult> {
    match data {
        [] => return Err(Error::DegenerateData("no samples".into())),
        [(s, p)] => return arccos_branch(*s, *p, options.branch),
        _ => {}
    }
    let mut distinct: Vec<f64> = data.iter().map(|d| d.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "{} distinct sensitivities, at least 3 needed",
            distinct.len()
        )));
    }
    if !(options.c_max > options.c_min) || options.coarse_points < 3 {
        return Err(Error::InvalidParameter(format!(
            "empty force range [{}, {}]",
            options.c_min, options.c_max
        )));
    }
    let n = options.coarse_points;
    let h = (options.c_max - options.c_min) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| options.c_min + i as f64 * h).collect();
    let costs: Vec<f64> = grid.iter().map(|&c| cost(data, c)).collect();

    // refine every coarse local minimum
    let mut minima: Vec<(f64, f64)> = (0..n)
        .filter(|&i| (i == 0 || costs[i] <= costs[i - 1]) && (i == n - 1 || costs[i] <= costs[i + 1]))
        .map(|i| {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(n - 1)];
            let c = golden_section(|c| cost(data, c), a, b, options.tolerance);
            (c, cost(data, c))
        })
        .collect();
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (c_hat, best) = minima[0];
    let floor = 1e-12 * data.len() as f64;
    let warning = minima.get(1).and_then(|&(c2, second)| {
        (second <= 2.0 * best + floor && (c2 - c_hat).abs() > 2.0 * h).then(|| {
            format!("ambiguous fit: minima at c = {c_hat} and c = {c2} have comparable residuals")
        })
    });
    let s_max = distinct[distinct.len() - 1];
    Ok(EstimationResult {
        c_hat,
        method: EstimationMethod::PeriodicityScan,
        branch: branch_of(c_hat * s_max),
        residual: (best / data.len() as f64).sqrt(),
        warning,
    })
}

/// Replaces each population with the fraction of `n_shots` binomial draws.
pub fn add_shot_noise<R: rand::Rng>(populations: &[f64], n_shots: u64, rng: &mut R) -> Result<Vec<f64>> {
    if n_shots == 0 {
        return Err(Error::InvalidParameter("shot count must be positive".into()));
    }
    populations
        .iter()
        .map(|&p| {
            let dist = Binomial::new(n_shots, p.clamp(0.0, 1.0))
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(dist.sample(rng) as f64 / n_shots as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub estimate: EstimationResult,
    pub mean: f64,
    pub std_error: f64,
    pub replicates: Vec<f64>,
}

/// Parametric bootstrap: resamples shot noise around the fitted model and
/// re-estimates `c` for each replicate.
pub fn bootstrap_estimate(
    data: &[(f64, f64)],
    n_shots: u64,
    n_replicates: usize,
    seed: u64,
    options: &EstimatorOptions,
) -> Result<BootstrapSummary> {
    if n_replicates < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least two replicates".into()));
    }
    let estimate = estimate_force(data, options)?;
    let fitted: Vec<f64> = data.iter().map(|&(s, _)| model(estimate.c_hat, s)).collect();
    let replicates = (0..n_replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let noisy = add_shot_noise(&fitted, n_shots, &mut rng)?;
            let resampled: Vec<(f64, f64)> = data.iter().map(|d| d.0).zip(noisy).collect();
            Ok(estimate_force(&resampled, options)?.c_hat)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = replicates.iter().sum::<f64>() / n_replicates as f64;
    let var = replicates.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n_replicates - 1) as f64;
    Ok(BootstrapSummary {
        estimate,
        mean,
        std_error: var.sqrt(),
        replicates,
    })
}

pub const AGGREGATE_HEADER: [&str; 7] = [
    "S",
    "P_up",
    "P_down",
    "delta_phi",
    "delta_phi_unwrapped",
    "predicted_phase",
    "visibility",
];

/// One row per run, in the given order.
pub fn write_aggregate_csv<W: Write>(writer: W, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(AGGREGATE_HEADER)?;
    for r in results {
        w.write_record(
            [
                r.sensitivity,
                r.p_up,
                r.p_down,
                r.delta_phi,
                r.delta_phi_unwrapped,
                r.predicted_phase,
                r.visibility,
            ]
            .map(|v| format!("{v:e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(writer: W, result: &RunResult) -> Result<()> {
    serde_json::to_writer_pretty(writer, result)?;
    Ok(())
}
