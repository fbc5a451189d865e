//! Trap trajectories `alpha(t)`, their compensation force `f = m * alpha''`
//! and the interferometer sensitivity `S = (2 / hbar) * int_0^t_f alpha dt`.
//!
//! Series bases are stored in the reduced time `s = t / t_f` so that the
//! coefficients stay of the order of the displacement regardless of `t_f`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spline::{CubicSpline, EndCondition};

/// Duration in seconds of the elementary lattice displacement cycle that the
/// linear displacement law extrapolates (a `lambda/4` shift in 18 us, so
/// `M = lambda * t_f / 144 us`).
pub const ELEMENTARY_CYCLE_SI: f64 = 144e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `s^p` for each listed power.
    Polynomial { powers: Vec<u32> },
    /// `sin(j * pi * s)` for each listed harmonic.
    SineSeries { harmonics: Vec<u32> },
    /// Clamped cubic spline through `(t, alpha)` samples. Second derivatives
    /// come from the spline and are only approximate.
    Tabulated { spline: CubicSpline },
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Polynomial { powers } => powers.len(),
            Basis::SineSeries { harmonics } => harmonics.len(),
            Basis::Tabulated { .. } => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `order`-th derivative of basis function `j` with respect to `s`.
    fn function(&self, j: usize, s: f64, order: u8) -> f64 {
        match self {
            Basis::Polynomial { powers } => {
                let p = powers[j] as i32;
                if order as i32 > p {
                    return 0.0;
                }
                let falling: f64 = (0..order as i32).map(|k| (p - k) as f64).product();
                falling * s.powi(p - order as i32)
            }
            Basis::SineSeries { harmonics } => {
                let w = harmonics[j] as f64 * std::f64::consts::PI;
                let scale = w.powi(order as i32);
                match order % 4 {
                    0 => scale * (w * s).sin(),
                    1 => scale * (w * s).cos(),
                    2 => -scale * (w * s).sin(),
                    _ => -scale * (w * s).cos(),
                }
            }
            Basis::Tabulated { .. } => 0.0,
        }
    }

    /// `int_0^1` of basis function `j` in `s`.
    fn unit_integral(&self, j: usize) -> f64 {
        match self {
            Basis::Polynomial { powers } => 1.0 / (powers[j] as f64 + 1.0),
            Basis::SineSeries { harmonics } => {
                let k = harmonics[j];
                if k % 2 == 1 {
                    2.0 / (k as f64 * std::f64::consts::PI)
                } else {
                    0.0
                }
            }
            Basis::Tabulated { .. } => 0.0,
        }
    }
}

/// A designed trap path. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    t_f: f64,
    basis: Basis,
    coeffs: Vec<f64>,
    /// Displacement at `t_f / 2` for the canonical four-term ansatz.
    peak: Option<f64>,
}

/// `alpha^(order)(time) = value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub order: u8,
    pub time: f64,
    pub value: f64,
}

impl Constraint {
    pub fn new(order: u8, time: f64, value: f64) -> Self {
        Self { order, time, value }
    }

    /// `alpha = alpha' = alpha'' = 0` at `t = 0` and `t = t_f`.
    pub fn rest_to_rest(t_f: f64) -> Vec<Constraint> {
        [0.0, t_f]
            .iter()
            .flat_map(|&t| (0..3).map(move |d| Constraint::new(d, t, 0.0)))
            .collect()
    }
}

fn check_duration(t_f: f64) -> Result<()> {
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::NonpositiveDuration(t_f));
    }
    Ok(())
}

/// Canonical four-term polynomial reaching `peak` at `t_f / 2`:
/// `alpha = M (64 s^3 - 192 s^4 + 192 s^5 - 64 s^6)`.
pub fn design_polynomial(peak: f64, t_f: f64) -> Result<Trajectory> {
    check_duration(t_f)?;
    Ok(Trajectory {
        t_f,
        basis: Basis::Polynomial {
            powers: vec![3, 4, 5, 6],
        },
        coeffs: vec![64.0 * peak, -192.0 * peak, 192.0 * peak, -64.0 * peak],
        peak: Some(peak),
    })
}

/// Target sensitivity appended as an extra linear condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityTarget {
    pub value: f64,
    pub hbar: f64,
}

/// Solves for the coefficients of `basis` so that every constraint (and
/// optionally a target sensitivity) holds.
///
/// The system may be overdetermined as long as it is consistent; the basis
/// functions must be linearly independent on the constraint rows.
pub fn design_constrained(
    t_f: f64,
    basis: Basis,
    constraints: &[Constraint],
    target: Option<SensitivityTarget>,
) -> Result<Trajectory> {
    check_duration(t_f)?;
    if matches!(basis, Basis::Tabulated { .. }) {
        return Err(Error::InvalidParameter(
            "constrained design needs a series basis".into(),
        ));
    }
    let ncols = basis.len();
    if ncols == 0 {
        if constraints.iter().all(|c| c.value == 0.0) && target.is_none_or(|t| t.value == 0.0) {
            return Ok(Trajectory {
                t_f,
                basis,
                coeffs: vec![],
                peak: None,
            });
        }
        return Err(Error::SingularSystem { cond: f64::INFINITY });
    }
    let nrows = constraints.len() + target.is_some() as usize;
    let mut a = DMatrix::<f64>::zeros(nrows, ncols);
    let mut b = DVector::<f64>::zeros(nrows);
    for (i, c) in constraints.iter().enumerate() {
        if c.time < 0.0 || c.time > t_f {
            return Err(Error::TimeOutOfRange { t: c.time, t_f });
        }
        let s = c.time / t_f;
        let scale = t_f.powi(-(c.order as i32));
        for j in 0..ncols {
            a[(i, j)] = basis.function(j, s, c.order) * scale;
        }
        b[i] = c.value;
    }
    if let Some(target) = target {
        let row = nrows - 1;
        for j in 0..ncols {
            a[(row, j)] = 2.0 * t_f / target.hbar * basis.unit_integral(j);
        }
        b[row] = target.value;
    }

    // rows that vanish identically on the basis are dropped if satisfied
    let keep: Vec<usize> = (0..nrows)
        .filter(|&i| a.row(i).amax() > 0.0 || b[i] != 0.0)
        .collect();
    if let Some(&i) = keep.iter().find(|&&i| a.row(i).amax() == 0.0) {
        return Err(Error::InconsistentConstraints { residual: b[i].abs() });
    }
    if keep.is_empty() {
        return Ok(Trajectory {
            t_f,
            coeffs: vec![0.0; ncols],
            basis,
            peak: None,
        });
    }
    let a = a.select_rows(&keep);
    let mut a = a;
    let b = b.select_rows(&keep);

    // column equilibration keeps the condition estimate scale-free
    let col_norms: Vec<f64> = (0..ncols)
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    for (j, n) in col_norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= 1e12) {
        return Err(Error::SingularSystem { cond });
    }
    // minimum-norm solution when there are more terms than conditions
    let y = svd
        .solve(&b, 0.0)
        .map_err(|_| Error::SingularSystem { cond })?;
    let residual = (&a * &y - &b).amax();
    if residual > 1e-10 * b.amax().max(1.0) {
        return Err(Error::InconsistentConstraints { residual });
    }
    let coeffs = y
        .iter()
        .zip(&col_norms)
        .map(|(v, n)| v / n)
        .collect();
    Ok(Trajectory {
        t_f,
        basis,
        coeffs,
        peak: None,
    })
}

impl Trajectory {
    /// Builds a clamped-spline trajectory from `(t, alpha)` samples starting
    /// at `t = 0`. Endpoint slopes are pinned to zero.
    pub fn tabulated(times: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        let t0 = *times.first().ok_or_else(|| Error::InvalidParameter("empty table".into()))?;
        if t0 != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tabulated trajectory must start at t = 0, got {t0}"
            )));
        }
        let t_f = *times.last().expect("nonempty");
        check_duration(t_f)?;
        let amax = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let ends = alpha[0].abs().max(alpha[alpha.len() - 1].abs());
        if ends > 1e-12 * amax.max(f64::MIN_POSITIVE) && ends > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tabulated trajectory must start and end at zero displacement (|alpha| = {ends})"
            )));
        }
        let spline = CubicSpline::new(times, alpha, EndCondition::Clamped { start: 0.0, end: 0.0 })?;
        Ok(Self {
            t_f,
            basis: Basis::Tabulated { spline },
            coeffs: vec![],
            peak: None,
        })
    }

    /// Zero displacement for the whole duration.
    pub fn stationary(t_f: f64) -> Result<Self> {
        design_polynomial(0.0, t_f)
    }

    pub fn duration(&self) -> f64 {
        self.t_f
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn peak(&self) -> Option<f64> {
        self.peak
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.basis, Basis::Tabulated { .. })
    }

    /// Same path executed `factor` times slower (fixed displacement).
    pub fn stretched(&self, factor: f64) -> Result<Self> {
        check_duration(self.t_f * factor)?;
        match &self.basis {
            Basis::Tabulated { spline } => {
                let t = spline.knots().iter().map(|t| t * factor).collect();
                Self::tabulated(t, spline.values().to_vec())
            }
            _ => Ok(Self {
                t_f: self.t_f * factor,
                ..self.clone()
            }),
        }
    }

    /// `alpha`, `alpha'` or `alpha''` at `t` in `[0, t_f]`.
    pub fn evaluate(&self, t: f64, order: u8) -> Result<f64> {
        let slack = 1e-12 * self.t_f;
        if !(t >= -slack && t <= self.t_f + slack) {
            return Err(Error::TimeOutOfRange { t, t_f: self.t_f });
        }
        Ok(self.eval_clamped(t.clamp(0.0, self.t_f), order))
    }

    /// Like [`Trajectory::evaluate`] without the range check; callers
    /// guarantee `0 <= t <= t_f`.
    pub fn eval_clamped(&self, t: f64, order: u8) -> f64 {
        match &self.basis {
            Basis::Tabulated { spline } => spline.eval(t, order).unwrap_or(0.0),
            basis => {
                let s = t / self.t_f;
                let scale = self.t_f.powi(-(order as i32));
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, b)| b * basis.function(j, s, order))
                    .sum::<f64>()
                    * scale
            }
        }
    }

    /// `(alpha, alpha', alpha'')` at `t`.
    pub fn kinematics(&self, t: f64) -> (f64, f64, f64) {
        (
            self.eval_clamped(t, 0),
            self.eval_clamped(t, 1),
            self.eval_clamped(t, 2),
        )
    }

    /// `int_0^t_f alpha dt` in closed form.
    pub fn area(&self) -> f64 {
        match &self.basis {
            Basis::Tabulated { spline } => spline.integral(),
            basis => {
                self.t_f
                    * self
                        .coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, b)| b * basis.unit_integral(j))
                        .sum::<f64>()
            }
        }
    }

    /// `int_0^t_f alpha dt` by adaptive quadrature.
    pub fn area_quadrature(&self) -> f64 {
        match &self.basis {
            Basis::Tabulated { spline } => {
                quad::integrate_piecewise(|t| self.eval_clamped(t, 0), spline.knots())
            }
            _ => quad::integrate(|t| self.eval_clamped(t, 0), 0.0, self.t_f, 1e-12),
        }
    }

    /// Phase per unit force, `(2 / hbar) int alpha dt`.
    pub fn sensitivity(&self, hbar: f64) -> f64 {
        2.0 * self.area() / hbar
    }

    pub fn sensitivity_quadrature(&self, hbar: f64) -> f64 {
        2.0 * self.area_quadrature() / hbar
    }

    /// Largest `|alpha|` on a dense sample plus the endpoints.
    pub fn max_displacement(&self) -> f64 {
        if let Some(m) = self.peak {
            return m.abs();
        }
        let n = 2048;
        (0..=n)
            .map(|i| self.eval_clamped(self.t_f * i as f64 / n as f64, 0).abs())
            .fold(0.0, f64::max)
    }

    pub fn compensation(&self, mass: f64) -> CompensationForce<'_> {
        CompensationForce {
            trajectory: self,
            mass,
        }
    }

    /// Writes `(t, alpha, alpha_dot, alpha_ddot, f)` rows at `samples`
    /// evenly spaced times including both ends.
    pub fn write_csv<W: Write>(&self, writer: W, samples: usize, mass: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(WAVEFORM_HEADER)?;
        let n = samples.max(2) - 1;
        for i in 0..=n {
            let t = self.t_f * i as f64 / n as f64;
            let (a, v, acc) = self.kinematics(t);
            w.write_record([t, a, v, acc, mass * acc].iter().map(|x| format!("{x:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, samples: usize, mass: f64) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?, samples, mass)
    }

    /// Reads the `t` and `alpha` columns of a waveform file into a tabulated
    /// trajectory.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("waveform file lacks a `{name}` column")))
        };
        let (it, ia) = (col("t")?, col("alpha")?);
        let mut times = Vec::new();
        let mut alpha = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| {
                rec.get(i)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("bad waveform row {rec:?}")))
            };
            times.push(parse(it)?);
            alpha.push(parse(ia)?);
        }
        Self::tabulated(times, alpha)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

pub const WAVEFORM_HEADER: [&str; 5] = ["t", "alpha", "alpha_dot", "alpha_ddot", "f"];

/// `f(t) = m * alpha''(t)`, the homogeneous force that cancels the inertial
/// term of the moving trap.
#[derive(Debug, Clone, Copy)]
pub struct CompensationForce<'a> {
    pub trajectory: &'a Trajectory,
    pub mass: f64,
}

impl CompensationForce<'_> {
    pub fn at(&self, t: f64) -> f64 {
        self.mass * self.trajectory.eval_clamped(t, 2)
    }

    /// `int_0^t_f f dt` by quadrature.
    pub fn impulse(&self) -> f64 {
        quad::integrate(|t| self.at(t), 0.0, self.trajectory.duration(), 1e-13)
    }
}

/// Peak displacement giving sensitivity `s0` with the canonical ansatz:
/// `M = 35 S0 hbar / (32 t_f)`.
pub fn peak_for_sensitivity(s0: f64, t_f: f64, hbar: f64) -> Result<f64> {
    check_duration(t_f)?;
    Ok(35.0 * s0 * hbar / (32.0 * t_f))
}

/// Linear displacement law `M = lambda * t_f / 144 us` (SI seconds and
/// metres).
pub fn steffen_scaling(t_f_seconds: f64, lambda_m: f64) -> f64 {
    lambda_m * t_f_seconds / ELEMENTARY_CYCLE_SI
}

/// `M = coefficient * t_f^mu`.
pub fn power_law_peak(t_f: f64, mu: f64, coefficient: f64) -> f64 {
    coefficient * t_f.powf(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Horner evaluation of the canonical polynomial, independent of the basis
    // machinery.
    fn horner_canonical(m: f64, s: f64) -> f64 {
        let c = [0.0, 0.0, 0.0, 64.0 * m, -192.0 * m, 192.0 * m, -64.0 * m];
        c.iter().rev().fold(0.0, |acc, b| acc * s + b)
    }

    fn max_abs(traj: &Trajectory, order: u8) -> f64 {
        (0..=4000)
            .map(|i| traj.eval_clamped(traj.duration() * i as f64 / 4000.0, order).abs())
            .fold(0.0, f64::max)
    }

    fn assert_rest_to_rest(traj: &Trajectory) {
        for order in 0..3 {
            let scale = max_abs(traj, order).max(f64::MIN_POSITIVE);
            for t in [0.0, traj.duration()] {
                let v = traj.evaluate(t, order).unwrap();
                assert!(v.abs() < 1e-12 * scale, "order {order} at {t}: {v}");
            }
        }
    }

    #[test]
    fn canonical_peak_and_boundaries() {
        let traj = design_polynomial(1.0, 1.0).unwrap();
        assert_eq!(traj.coeffs(), &[64.0, -192.0, 192.0, -64.0]);
        assert!((traj.evaluate(0.5, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(traj.evaluate(0.0, 0).unwrap(), 0.0);
        assert!(traj.evaluate(1.0, 0).unwrap().abs() < 1e-12);
        assert_rest_to_rest(&traj);
    }

    #[test]
    fn canonical_quarter_point() {
        let traj = design_polynomial(1.0, 1.0).unwrap();
        let oracle = horner_canonical(1.0, 0.25);
        assert_eq!(oracle, 27.0 / 64.0);
        assert!((traj.evaluate(0.25, 0).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let traj = design_polynomial(1.0, 1.0).unwrap();
        assert_eq!(traj.evaluate(0.0, 2).unwrap(), 0.0);
        let h = 1e-6;
        let fd = (horner_canonical(1.0, 0.5 + h) - horner_canonical(1.0, 0.5 - h)) / (2.0 * h);
        let v = traj.evaluate(0.5, 1).unwrap();
        assert!(v.abs() < 1e-12);
        assert!((v - fd).abs() < 1e-8);
        // off-centre check, scaled duration
        let traj = design_polynomial(2.0, 3.0).unwrap();
        let t = 0.7;
        let fd1 = (traj.evaluate(t + h, 0).unwrap() - traj.evaluate(t - h, 0).unwrap()) / (2.0 * h);
        assert!((traj.evaluate(t, 1).unwrap() - fd1).abs() < 1e-8);
        let fd2 = (traj.evaluate(t + 1e-4, 1).unwrap() - traj.evaluate(t - 1e-4, 1).unwrap()) / 2e-4;
        assert!((traj.evaluate(t, 2).unwrap() - fd2).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_and_bad_duration() {
        let traj = design_polynomial(1.0, 1.0).unwrap();
        assert!(matches!(traj.evaluate(1.5, 0), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(traj.evaluate(-0.1, 1), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(design_polynomial(1.0, 0.0), Err(Error::NonpositiveDuration(_))));
        assert!(peak_for_sensitivity(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn canonical_sensitivity() {
        let traj = design_polynomial(1.0, 1.0).unwrap();
        assert!((traj.sensitivity(1.0) - 32.0 / 35.0).abs() < 1e-13);
        assert_eq!(Trajectory::stationary(2.0).unwrap().sensitivity(1.0), 0.0);
        let traj = design_polynomial(2.0, 3.0).unwrap();
        let by_quad = traj.sensitivity_quadrature(1.0);
        assert!((by_quad - 192.0 / 35.0).abs() < 1e-12 * 192.0 / 35.0);
        assert!((traj.sensitivity(1.0) - 192.0 / 35.0).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_is_linear_in_peak_and_duration() {
        let base = design_polynomial(1.3, 2.1).unwrap().sensitivity(1.0);
        for k in [0.5, 2.0, 7.0] {
            let sm = design_polynomial(1.3 * k, 2.1).unwrap().sensitivity(1.0);
            let st = design_polynomial(1.3, 2.1 * k).unwrap().sensitivity(1.0);
            assert!((sm - k * base).abs() < 1e-13 * sm.abs());
            assert!((st - k * base).abs() < 1e-13 * st.abs());
        }
    }

    #[test]
    fn compensation_force_vanishes_at_ends_and_integrates_to_zero() {
        let traj = design_polynomial(1.0, 10.0).unwrap();
        let f = traj.compensation(1.0);
        assert_eq!(f.at(0.0), 0.0);
        assert!(f.at(10.0).abs() < 1e-14);
        assert!(f.impulse().abs() < 1e-10);
    }

    #[test]
    fn inverse_peak_formula() {
        assert!((peak_for_sensitivity(32.0 / 35.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(peak_for_sensitivity(0.0, 4.0, 1.0).unwrap(), 0.0);
        let m = peak_for_sensitivity(1.0, 2.0, 1.0).unwrap();
        assert!((m - 35.0 / 64.0).abs() < 1e-15);
        let s = design_polynomial(m, 2.0).unwrap().sensitivity(1.0);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_displacement_law() {
        assert!((steffen_scaling(72e-6, 866e-9) - 433e-9).abs() < 1e-21);
        assert_eq!(steffen_scaling(0.0, 866e-9), 0.0);
        assert!((steffen_scaling(144e-6, 866e-9) - 866e-9).abs() < 1e-21);
    }

    #[test]
    fn constrained_design_reproduces_canonical() {
        let t_f = 2.5;
        let mut cons = Constraint::rest_to_rest(t_f);
        cons.push(Constraint::new(0, t_f / 2.0, 1.7));
        let traj = design_constrained(
            t_f,
            Basis::Polynomial {
                powers: vec![3, 4, 5, 6],
            },
            &cons,
            None,
        )
        .unwrap();
        let canon = design_polynomial(1.7, t_f).unwrap();
        for (a, b) in traj.coeffs().iter().zip(canon.coeffs()) {
            assert!((a - b).abs() < 1e-9 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn constrained_design_null_solution() {
        let mut cons = Constraint::rest_to_rest(1.0);
        cons.push(Constraint::new(0, 0.5, 0.0));
        let traj = design_constrained(
            1.0,
            Basis::Polynomial {
                powers: vec![3, 4, 5, 6],
            },
            &cons,
            None,
        )
        .unwrap();
        assert!(traj.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn constrained_design_hits_target_sensitivity() {
        let t_f = 3.0;
        let cons = Constraint::rest_to_rest(t_f);
        let target = SensitivityTarget {
            value: 4.2,
            hbar: 1.0,
        };
        let traj = design_constrained(
            t_f,
            Basis::Polynomial {
                powers: vec![3, 4, 5, 6, 7],
            },
            &cons,
            Some(target),
        )
        .unwrap();
        for c in &cons {
            assert!((traj.evaluate(c.time, c.order).unwrap() - c.value).abs() < 1e-10);
        }
        let by_quad = traj.sensitivity_quadrature(1.0);
        assert!((by_quad - 4.2).abs() < 1e-8 * 4.2);
        assert_rest_to_rest(&traj);
    }

    #[test]
    fn sine_series_design() {
        let t_f = 1.0;
        // sines satisfy alpha = alpha'' = 0 at both ends; impose the slopes
        let cons = vec![
            Constraint::new(1, 0.0, 0.0),
            Constraint::new(1, t_f, 0.0),
            Constraint::new(0, 0.5, 1.0),
        ];
        let traj = design_constrained(
            t_f,
            Basis::SineSeries {
                harmonics: vec![1, 2, 3],
            },
            &cons,
            None,
        )
        .unwrap();
        assert_rest_to_rest(&traj);
        assert!((traj.evaluate(0.5, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!((traj.area() - traj.area_quadrature()).abs() < 1e-12);
    }

    #[test]
    fn dependent_constraints_are_singular() {
        // s^3 and s^3 again: duplicated basis columns
        let cons = vec![Constraint::new(0, 1.0, 1.0), Constraint::new(1, 1.0, 0.0)];
        let err = design_constrained(
            1.0,
            Basis::Polynomial { powers: vec![3, 3] },
            &cons,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
    }

    #[test]
    fn symmetric_peak_and_area_rows_are_dependent() {
        // on s^3 (1 - s)^3 (a + b s) both the midpoint value and the area
        // depend on a + b/2 only
        let mut cons = Constraint::rest_to_rest(1.0);
        cons.push(Constraint::new(0, 0.5, 1.0));
        let target = SensitivityTarget { value: 2.0, hbar: 1.0 };
        let basis = Basis::Polynomial {
            powers: vec![3, 4, 5, 6, 7],
        };
        let err = design_constrained(1.0, basis, &cons, Some(target)).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
    }

    #[test]
    fn tabulated_round_trip_through_csv() {
        let traj = design_polynomial(1.0, 10.0).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, 401, 1.0).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,alpha,alpha_dot,alpha_ddot,f\n"));
        let tab = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert!(tab.is_tabulated());
        assert!((tab.duration() - 10.0).abs() < 1e-12);
        assert!((tab.evaluate(5.0, 0).unwrap() - 1.0).abs() < 1e-6);
        assert!((tab.sensitivity(1.0) - traj.sensitivity(1.0)).abs() < 1e-5);
        assert!((tab.area() - tab.area_quadrature()).abs() < 1e-12);
        assert!(tab.evaluate(0.0, 1).unwrap().abs() < 1e-12);
    }
}
