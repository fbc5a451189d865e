//! Trap potentials, their displaced and tilted forms, and the pivot of the
//! compensating linear potentials.
//!
//! For an arm with spin sign `s` the full lab-frame potential is
//! `U(x - s*alpha) - s*(x - x0)*f - c*x`.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spline::{CubicSpline, EndCondition};
use crate::trajectory::Trajectory;
use crate::units::PhysicalParams;
use crate::Spin;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `U = m omega^2 x^2 / 2`.
    Harmonic { omega: f64, mass: f64 },
    /// `U = depth * sin^2(2 pi x / wavelength)`.
    Lattice { depth: f64, wavelength: f64 },
    /// Natural cubic spline through samples; undefined outside them.
    Tabulated { spline: CubicSpline },
}

impl Potential {
    pub fn harmonic(omega: f64, mass: f64) -> Self {
        Potential::Harmonic { omega, mass }
    }

    pub fn lattice(depth: f64, wavelength: f64) -> Self {
        Potential::Lattice { depth, wavelength }
    }

    pub fn tabulated(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        Ok(Potential::Tabulated {
            spline: CubicSpline::new(x, u, EndCondition::Natural)?,
        })
    }

    /// Loads a two-column `(x, U)` CSV file. A header row is optional.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        let (mut xs, mut us) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let cols: Vec<Option<f64>> = rec.iter().map(|v| v.trim().parse().ok()).collect();
            match cols.as_slice() {
                [Some(x), Some(u), ..] => {
                    xs.push(*x);
                    us.push(*u);
                }
                _ if xs.is_empty() => continue,
                _ => return Err(Error::Config(format!("bad potential row {rec:?}"))),
            }
        }
        Self::tabulated(xs, us)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Potential::Harmonic { omega, mass } if !(omega > 0.0 && mass > 0.0) => Err(
                Error::InvalidParameter(format!("harmonic trap needs omega, mass > 0 (got {omega}, {mass})")),
            ),
            Potential::Lattice { depth, wavelength } if !(depth > 0.0 && wavelength > 0.0) => Err(
                Error::InvalidParameter(format!("lattice needs depth, wavelength > 0 (got {depth}, {wavelength})")),
            ),
            _ => Ok(()),
        }
    }

    /// Spatial extent where the potential is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Potential::Tabulated { spline } => spline.domain(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `U(y)`.
    pub fn value(&self, y: f64) -> Result<f64> {
        Ok(match *self {
            Potential::Harmonic { omega, mass } => 0.5 * mass * omega * omega * y * y,
            Potential::Lattice { depth, wavelength } => {
                let s = (2.0 * PI * y / wavelength).sin();
                depth * s * s
            }
            Potential::Tabulated { ref spline } => spline.eval(y, 0)?,
        })
    }

    /// `dU/dy`.
    pub fn slope(&self, y: f64) -> Result<f64> {
        Ok(match *self {
            Potential::Harmonic { omega, mass } => mass * omega * omega * y,
            Potential::Lattice { depth, wavelength } => {
                let k = 2.0 * PI / wavelength;
                depth * k * (2.0 * k * y).sin()
            }
            Potential::Tabulated { ref spline } => spline.eval(y, 1)?,
        })
    }

    /// Angular frequency of small oscillations at the trap bottom.
    pub fn curvature_frequency(&self, mass: f64) -> f64 {
        match *self {
            Potential::Harmonic { omega, .. } => omega,
            Potential::Lattice { depth, wavelength } => 2.0 * PI / wavelength * (2.0 * depth / mass).sqrt(),
            Potential::Tabulated { ref spline } => {
                let (i_min, _) = spline
                    .values()
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("nonempty spline");
                let curv = spline.eval(spline.knots()[i_min], 2).unwrap_or(0.0);
                (curv.max(0.0) / mass).sqrt()
            }
        }
    }

    /// Oscillator length `sqrt(hbar / (m omega_eff))`.
    pub fn oscillator_length(&self, mass: f64, hbar: f64) -> f64 {
        let w = self.curvature_frequency(mass);
        if w > 0.0 {
            (hbar / (mass * w)).sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Lattice wavelength, if any.
    pub fn lattice_wavelength(&self) -> Option<f64> {
        match *self {
            Potential::Lattice { wavelength, .. } => Some(wavelength),
            _ => None,
        }
    }

    /// Largest restoring force of the lattice, `2 pi U0 / lambda`.
    pub fn max_lattice_force(&self) -> Option<f64> {
        match *self {
            Potential::Lattice { depth, wavelength } => Some(2.0 * PI * depth / wavelength),
            _ => None,
        }
    }

    /// Trap displaced along the arm: `U(x - s*alpha)`.
    pub fn eval_trap(&self, x: &[f64], alpha: f64, spin: Spin) -> Result<Vec<f64>> {
        let shift = spin.sign() * alpha;
        x.iter().map(|&xi| self.value(xi - shift)).collect()
    }

    /// Full arm potential `U(x - s*alpha) - s*(x - x0)*f - c*x`.
    pub fn eval_total(
        &self,
        params: &PhysicalParams,
        x0: f64,
        f: f64,
        x: &[f64],
        alpha: f64,
        spin: Spin,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.fill_total(params.c, x0, f, x, alpha, spin, &mut out)?;
        Ok(out)
    }

    /// In-place form of [`Potential::eval_total`].
    #[allow(clippy::too_many_arguments)]
    pub fn fill_total(
        &self,
        c: f64,
        x0: f64,
        f: f64,
        x: &[f64],
        alpha: f64,
        spin: Spin,
        out: &mut [f64],
    ) -> Result<()> {
        let s = spin.sign();
        let shift = s * alpha;
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.value(xi - shift)? - s * (xi - x0) * f - c * xi;
        }
        Ok(())
    }

    /// Tilted trap `U(x) - c*x`.
    pub fn eval_tilted(&self, c: f64, x: &[f64]) -> Result<Vec<f64>> {
        x.iter().map(|&xi| Ok(self.value(xi)? - c * xi)).collect()
    }

    /// Tilted trap displaced along the arm, `U(x - s*alpha) - (x - s*alpha)*c`.
    pub fn eval_tilted_shifted(&self, c: f64, x: &[f64], alpha: f64, spin: Spin) -> Result<Vec<f64>> {
        let shift = spin.sign() * alpha;
        x.iter()
            .map(|&xi| Ok(self.value(xi - shift)? - c * (xi - shift)))
            .collect()
    }
}

/// Ornstein–Uhlenbeck process with stationary standard deviation `sigma` and
/// correlation time `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrnsteinUhlenbeck {
    pub mean: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl OrnsteinUhlenbeck {
    pub fn new(mean: f64, sigma: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !(sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "OU process needs tau > 0 and sigma >= 0 (got tau = {tau}, sigma = {sigma})"
            )));
        }
        Ok(Self { mean, sigma, tau })
    }

    /// Draws from the stationary distribution.
    pub fn stationary<R: rand::Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean + self.sigma * z
    }

    /// Exact transition over a step `h`.
    pub fn step<R: rand::Rng>(&self, x: f64, h: f64, rng: &mut R) -> f64 {
        let decay = (-h / self.tau).exp();
        let z: f64 = StandardNormal.sample(rng);
        self.mean + (x - self.mean) * decay + self.sigma * (1.0 - decay * decay).sqrt() * z
    }

    /// Stationary path sampled at `n + 1` evenly spaced times over
    /// `[0, duration]`.
    pub fn path<R: rand::Rng>(&self, duration: f64, n: usize, rng: &mut R) -> Vec<f64> {
        let h = duration / n as f64;
        let mut out = Vec::with_capacity(n + 1);
        let mut x = self.stationary(rng);
        out.push(x);
        for _ in 0..n {
            x = self.step(x, h, rng);
            out.push(x);
        }
        out
    }
}

const MAX_NOISE_KNOTS: usize = 1 << 22;

/// Pivot of the spin-dependent compensating potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pivot {
    Constant { x0: f64 },
    LinearDrift { a: f64, b: f64 },
    /// Zero-mean OU fluctuation around `mean`, seeded per realization.
    Noisy { mean: f64, sigma: f64, tau: f64, seed: u64 },
    /// `x0 = +alpha` for spin up and `-alpha` for spin down.
    SpinLocked,
}

impl Default for Pivot {
    fn default() -> Self {
        Pivot::Constant { x0: 0.0 }
    }
}

impl Pivot {
    /// Fixes the time dependence over `[0, t_f]`. Noise paths are drawn once
    /// from the stored seed on a grid that does not depend on the
    /// propagation step, then interpolated linearly.
    pub fn realize(&self, t_f: f64) -> Result<PivotPath> {
        Ok(match *self {
            Pivot::Constant { x0 } => PivotPath::Constant(x0),
            Pivot::LinearDrift { a, b } => PivotPath::Linear { a, b },
            Pivot::SpinLocked => PivotPath::SpinLocked,
            Pivot::Noisy {
                mean,
                sigma,
                tau,
                seed,
            } => {
                let ou = OrnsteinUhlenbeck::new(mean, sigma, tau)?;
                let h = (tau / 16.0).min(t_f / 1024.0);
                let n = (t_f / h).ceil() as usize;
                if n > MAX_NOISE_KNOTS {
                    return Err(Error::InvalidParameter(format!(
                        "correlation time {tau} too short to resolve over {t_f}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                PivotPath::Sampled {
                    step: t_f / n as f64,
                    values: ou.path(t_f, n, &mut rng),
                }
            }
        })
    }

    /// Pivot for the given arm at time `t`, realizing noise as needed.
    pub fn sample(&self, t: f64, spin: Spin, trajectory: &Trajectory) -> Result<f64> {
        let t_f = trajectory.duration();
        if t < 0.0 || t > t_f {
            return Err(Error::TimeOutOfRange { t, t_f });
        }
        Ok(self.realize(t_f)?.value(t, spin, trajectory))
    }

    pub fn with_seed(&self, new_seed: u64) -> Pivot {
        match *self {
            Pivot::Noisy {
                mean, sigma, tau, ..
            } => Pivot::Noisy {
                mean,
                sigma,
                tau,
                seed: new_seed,
            },
            ref other => other.clone(),
        }
    }
}

/// Realized pivot time dependence.
#[derive(Debug, Clone, PartialEq)]
pub enum PivotPath {
    Constant(f64),
    Linear { a: f64, b: f64 },
    Sampled { step: f64, values: Vec<f64> },
    SpinLocked,
}

impl PivotPath {
    pub fn value(&self, t: f64, spin: Spin, trajectory: &Trajectory) -> f64 {
        match self {
            PivotPath::Constant(x0) => *x0,
            PivotPath::Linear { a, b } => a + b * t,
            PivotPath::Sampled { step, values } => {
                let u = (t / step).max(0.0);
                let i = (u.floor() as usize).min(values.len() - 2);
                let w = u - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
            PivotPath::SpinLocked => spin.sign() * trajectory.eval_clamped(t, 0),
        }
    }

    /// `int_0^t x0(t') f(t') dt'` for the given arm, with `f = m alpha''`.
    pub fn x0f_integral(&self, spin: Spin, trajectory: &Trajectory, mass: f64, t: f64) -> f64 {
        let integrand = |s: f64| self.value(s, spin, trajectory) * mass * trajectory.eval_clamped(s, 2);
        match self {
            PivotPath::Sampled { step, values } => {
                let n = values.len() - 1;
                let mut breaks: Vec<f64> = (0..=n)
                    .map(|i| i as f64 * step)
                    .take_while(|&b| b < t)
                    .collect();
                breaks.push(t);
                quad::integrate_piecewise(integrand, &breaks)
            }
            _ => quad::integrate(integrand, 0.0, t, 1e-14),
        }
    }
}
