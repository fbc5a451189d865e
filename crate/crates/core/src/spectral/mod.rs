//! Uniform periodic grid, FFT workspaces and the stationary eigensolver for
//! `p^2/2m + U_tilted(x)`.

mod eigen;
mod tridiag;

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::trajectory::Trajectory;
use crate::units::PhysicalParams;

pub use eigen::{solve_stationary, solve_stationary_with, EigenMethod, EigenSolution, DENSE_LIMIT};

/// Default ceiling on grid size.
pub const MAX_POINTS: usize = 1 << 20;

/// Periodic grid `x_j = x_min + j dx`, `j = 0..n`, with `x_max = x_min + n dx`
/// excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 64 || !n_points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 64, got {n_points}"
            )));
        }
        if !(x_max > x_min) {
            return Err(Error::InvalidParameter(format!(
                "grid extent [{x_min}, {x_max}] is empty"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Symmetric grid `[-half_extent, half_extent)`.
    pub fn centered(half_extent: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_extent, half_extent, n_points)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn dk(&self) -> f64 {
        TAU / (self.x_max - self.x_min)
    }

    pub fn x(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_points).map(|j| self.x_min + j as f64 * dx).collect()
    }

    /// Wavenumbers in FFT order; the Nyquist bin is taken as negative.
    pub fn k(&self) -> Vec<f64> {
        let n = self.n_points as isize;
        let dk = self.dk();
        (0..n)
            .map(|m| if m < n / 2 { m as f64 * dk } else { (m - n) as f64 * dk })
            .collect()
    }

    pub fn k_max(&self) -> f64 {
        self.dk() * (self.n_points / 2) as f64
    }

    /// `sum conj(a) b dx`.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * self.dx()
    }

    pub fn norm(&self, a: &[C64]) -> f64 {
        (a.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx()).sqrt()
    }

    pub fn normalize(&self, a: &mut [C64]) {
        let n = self.norm(a);
        a.iter_mut().for_each(|z| *z /= n);
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Chooses a grid covering the swept region `[-max|alpha|, max|alpha|]`
/// plus eight state widths on each side, with `dx` at most a sixteenth of
/// the shortest relevant length divided by `oversample`.
pub fn build_grid(
    potential: &Potential,
    trajectory: &Trajectory,
    params: &PhysicalParams,
    width_hint: Option<f64>,
    oversample: f64,
    ceiling: usize,
) -> Result<Grid> {
    let osc = potential.oscillator_length(params.mass, params.hbar);
    let width = width_hint.unwrap_or(osc);
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidParameter(
            "cannot infer a state width; give a width hint".into(),
        ));
    }
    // equilibrium shift of the tilted trap
    let w = potential.curvature_frequency(params.mass);
    let tilt_shift = if w > 0.0 && potential.lattice_wavelength().is_none() {
        params.c.abs() / (params.mass * w * w)
    } else {
        0.0
    };
    let half = trajectory.max_displacement() + tilt_shift + 8.0 * width;
    let mut shortest = osc.min(width);
    if let Some(lambda) = potential.lattice_wavelength() {
        shortest = shortest.min(lambda);
    }
    let dx_target = shortest / 16.0 / oversample.max(1.0);
    let raw = (2.0 * half / dx_target).ceil() as usize;
    let n = raw.max(64).checked_next_power_of_two().unwrap_or(usize::MAX);
    if n > ceiling {
        return Err(Error::InfeasibleGrid {
            required: n,
            ceiling,
        });
    }
    let (lo, hi) = potential.domain();
    if -half < lo || half > hi {
        return Err(Error::DomainExceeded {
            x: if -half < lo { -half } else { half },
            lo,
            hi,
        });
    }
    Grid::centered(half, n)
}

/// Forward/inverse FFT pair with its own scratch buffer. One per
/// propagation task.
pub struct FftWork {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    n: usize,
}

impl FftWork {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); len],
            n,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&mut self, buf: &mut [C64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&mut self, buf: &mut [C64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    /// Multiplies by `g(k)` in Fourier space.
    pub fn apply_in_k<F: Fn(usize) -> C64>(&mut self, buf: &mut [C64], g: F) {
        self.forward(buf);
        buf.iter_mut().enumerate().for_each(|(m, z)| *z *= g(m));
        self.inverse(buf);
    }
}

/// `exp(-i hbar k^2 dt / 2m)` over the grid's wavenumbers (FFT order).
pub fn kinetic_phase(grid: &Grid, params: &PhysicalParams, dt: f64) -> Vec<C64> {
    let a = params.hbar * dt / (2.0 * params.mass);
    grid.k()
        .into_iter()
        .map(|k| C64::from_polar(1.0, -a * k * k))
        .collect()
}

/// Kinetic energy `hbar^2 (k - q)^2 / 2m` with a momentum offset `hbar q`.
pub fn kinetic_energies(grid: &Grid, params: &PhysicalParams, q: f64) -> Vec<f64> {
    let a = params.hbar * params.hbar / (2.0 * params.mass);
    grid.k().into_iter().map(|k| a * (k - q) * (k - q)).collect()
}

/// `psi(x + a)` by the Fourier shift theorem. Errors if amplitude above
/// `tol` would wrap around the periodic grid.
pub fn shift(grid: &Grid, work: &mut FftWork, psi: &[C64], a: f64, tol: f64) -> Result<Vec<C64>> {
    if a != 0.0 {
        let dx = grid.dx();
        let reach = (a.abs() / dx).ceil() as usize;
        let n = psi.len();
        let range = if a > 0.0 { 0..reach.min(n) } else { n - reach.min(n)..n };
        let leaked = psi[range].iter().map(|z| z.norm()).fold(0.0, f64::max);
        if leaked > tol {
            return Err(Error::ShiftAliasing {
                shift: a,
                amplitude: leaked,
            });
        }
    }
    let mut out = psi.to_vec();
    let k = grid.k();
    work.apply_in_k(&mut out, |m| C64::from_polar(1.0, k[m] * a));
    Ok(out)
}

/// Spectral first derivative `d psi / dx`.
pub fn derivative(grid: &Grid, work: &mut FftWork, psi: &[C64]) -> Vec<C64> {
    let n = psi.len();
    let k = grid.k();
    let mut out = psi.to_vec();
    // the Nyquist bin has no well-defined sign; drop it
    work.apply_in_k(&mut out, |m| if m == n / 2 { C64::new(0.0, 0.0) } else { C64::new(0.0, k[m]) });
    out
}

/// Largest `|psi|` at the two grid ends.
pub fn edge_amplitude(psi: &[C64]) -> f64 {
    psi[0].norm().max(psi[psi.len() - 1].norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::design_polynomial;
    use proptest::prelude::*;

    fn gaussian(grid: &Grid, x0: f64, w: f64) -> Vec<C64> {
        let mut psi: Vec<C64> = grid
            .x()
            .iter()
            .map(|x| C64::new((-(x - x0).powi(2) / (2.0 * w * w)).exp(), 0.0))
            .collect();
        grid.normalize(&mut psi);
        psi
    }

    #[test]
    fn fourier_consistency() {
        for n in [64, 1024, 4096] {
            let g = Grid::new(-3.7, 11.2, n).unwrap();
            assert!((g.dx() * g.dk() * n as f64 - TAU).abs() < 1e-12);
        }
        assert!(Grid::centered(1.0, 100).is_err());
        assert!(Grid::centered(1.0, 32).is_err());
    }

    #[test]
    fn harmonic_grid_without_transport() {
        let traj = design_polynomial(0.0, 1.0).unwrap();
        let p = PhysicalParams::natural(0.0);
        let g = build_grid(&Potential::harmonic(1.0, 1.0), &traj, &p, None, 1.0, MAX_POINTS).unwrap();
        assert!((g.x_max() - 8.0).abs() < 1e-12 && (g.x_min() + 8.0).abs() < 1e-12);
        assert!(g.len().is_power_of_two());
        assert!(g.dx() <= 1.0 / 16.0);
    }

    #[test]
    fn lattice_grid_covers_transport() {
        let traj = design_polynomial(5.0, 1.0).unwrap();
        let p = PhysicalParams::natural(0.0);
        let u = Potential::lattice(50.0, 1.0);
        let w = u.oscillator_length(1.0, 1.0);
        let g = build_grid(&u, &traj, &p, None, 1.0, MAX_POINTS).unwrap();
        assert!(5.0 + 8.0 * w <= g.x_max() + 1e-12);
        assert!(g.x_min() <= -(5.0 + 8.0 * w) + 1e-12);
        assert!(g.len().is_power_of_two());
        assert!(g.dx() <= w / 16.0);
    }

    #[test]
    fn infeasible_grid_is_reported() {
        let traj = design_polynomial(1e4, 1.0).unwrap();
        let p = PhysicalParams::natural(0.0);
        let err = build_grid(&Potential::harmonic(1.0, 1.0), &traj, &p, None, 1.0, 1 << 12).unwrap_err();
        assert!(matches!(err, Error::InfeasibleGrid { .. }));
    }

    #[test]
    fn kinetic_phase_is_unitary() {
        let g = Grid::centered(10.0, 256).unwrap();
        let p = PhysicalParams::natural(0.0);
        let phase = kinetic_phase(&g, &p, 1e-3);
        assert_eq!(phase[0], C64::new(1.0, 0.0));
        let worst = phase.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-15);
        let kmax = g.k_max();
        let nyq = phase[128];
        let oracle = C64::from_polar(1.0, -kmax * kmax * 5e-4);
        assert!((nyq - oracle).norm() < 1e-15);
        let tiny = kinetic_phase(&g, &p, 1e-20);
        assert!(tiny.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn shift_moves_gaussian() {
        let g = Grid::centered(12.0, 512).unwrap();
        let mut work = FftWork::new(512);
        let psi = gaussian(&g, 0.0, 0.7);
        let shifted = shift(&g, &mut work, &psi, 1.0, 1e-10).unwrap();
        let oracle = gaussian(&g, -1.0, 0.7);
        let err = shifted.iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        let edge = gaussian(&g, 11.0, 0.5);
        assert!(matches!(shift(&g, &mut work, &edge, -2.0, 1e-10), Err(Error::ShiftAliasing { .. })));
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = Grid::centered(10.0, 256).unwrap();
        let mut work = FftWork::new(256);
        let psi = gaussian(&g, 0.3, 1.0);
        let d = derivative(&g, &mut work, &psi);
        for ((x, p), dp) in g.x().iter().zip(&psi).zip(&d) {
            assert!((dp - p * (-(x - 0.3))).norm() < 1e-11);
        }
    }

    proptest! {
        #[test]
        fn discrete_parseval(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Grid::centered(5.0, 128).unwrap();
            let mut psi: Vec<C64> = (0..128).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            g.normalize(&mut psi);
            let mut work = FftWork::new(128);
            let mut spec = psi.clone();
            work.forward(&mut spec);
            // sum |psi_k|^2 dk / 2pi * dx^2 == sum |psi_j|^2 dx
            let norm_k = spec.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dx() * g.dx() * g.dk() / TAU;
            prop_assert!((norm_k - 1.0).abs() < 1e-12);
            let mut back = spec;
            work.inverse(&mut back);
            let err = back.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-14);
        }
    }
}
