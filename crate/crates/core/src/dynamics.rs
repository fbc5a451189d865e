//! Time evolution of the two spin arms.
//!
//! [`propagate_lab`] integrates the full lab-frame Hamiltonian
//! `p^2/2m - c x -+ (x - x0) f + U(x -+ alpha)` with Strang splitting on the
//! spectral grid. [`analytic_arm`] builds the closed-form solution from the
//! moving-frame eigenbasis, and [`to_moving_frame`] / [`from_moving_frame`]
//! apply the frame map `exp(+-i alpha p) exp(-+i m alpha' x)` (in units of
//! `hbar`), so the propagator can be checked against both.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::{readout, RunResult};
use crate::error::{Error, Result};
use crate::potentials::{Pivot, PivotPath, Potential};
use crate::quad;
use crate::spectral::{self, kinetic_phase, EigenSolution, FftWork, Grid};
use crate::trajectory::Trajectory;
use crate::units::PhysicalParams;
use crate::Spin;

/// Edge amplitude above which a run is considered to have hit the grid
/// boundary.
pub const CONTAINMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    Moving,
}

/// Wavefunction of one arm on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    pub psi: Vec<C64>,
    pub t: f64,
    pub spin: Spin,
    pub frame: Frame,
}

impl ArmState {
    pub fn new(psi: Vec<C64>, t: f64, spin: Spin, frame: Frame) -> Self {
        Self { psi, t, spin, frame }
    }
}

/// A value for each arm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinPair<T> {
    pub up: T,
    pub down: T,
}

impl<T> SpinPair<T> {
    pub fn get_ref(&self, spin: Spin) -> &T {
        match spin {
            Spin::Up => &self.up,
            Spin::Down => &self.down,
        }
    }

    pub fn from_fn<F: FnMut(Spin) -> T>(mut f: F) -> Self {
        Self {
            up: f(Spin::Up),
            down: f(Spin::Down),
        }
    }
}

impl<T: Copy> SpinPair<T> {
    pub fn get(&self, spin: Spin) -> T {
        *self.get_ref(spin)
    }
}

/// Accumulated purely time-dependent phases, in units of action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLedger {
    pub t: f64,
    /// `int F dt` with `F = m alpha'^2 / 2 +- f x0 -+ c alpha`.
    pub f_integral: SpinPair<f64>,
    /// `int Lambda dt` with `Lambda = +- f x0 -+ c alpha`.
    pub lambda_integral: SpinPair<f64>,
    /// `int x0 f dt`.
    pub x0f_integral: SpinPair<f64>,
}

/// Everything that drives an arm: the trap, its path, the pivot of the
/// compensating potentials and whether compensation is applied.
#[derive(Debug, Clone)]
pub struct Transport {
    pub potential: Potential,
    pub trajectory: Trajectory,
    pub pivot: PivotPath,
    pub params: PhysicalParams,
    pub compensation: bool,
}

impl Transport {
    pub fn new(
        potential: Potential,
        trajectory: Trajectory,
        pivot: &Pivot,
        params: PhysicalParams,
        compensation: bool,
    ) -> Result<Self> {
        potential.validate()?;
        let pivot = pivot.realize(trajectory.duration())?;
        Ok(Self {
            potential,
            trajectory,
            pivot,
            params,
            compensation,
        })
    }

    pub fn duration(&self) -> f64 {
        self.trajectory.duration()
    }

    /// Compensating force; identically zero when compensation is off.
    pub fn force(&self, t: f64) -> f64 {
        if self.compensation {
            self.params.mass * self.trajectory.eval_clamped(t, 2)
        } else {
            0.0
        }
    }

    pub fn pivot_at(&self, t: f64, spin: Spin) -> f64 {
        self.pivot.value(t, spin, &self.trajectory)
    }

    /// `Lambda = +- f x0 -+ c alpha`.
    pub fn lambda_term(&self, t: f64, spin: Spin) -> f64 {
        let s = spin.sign();
        s * self.force(t) * self.pivot_at(t, spin) - s * self.params.c * self.trajectory.eval_clamped(t, 0)
    }

    /// `F = m alpha'^2 / 2 + Lambda`.
    pub fn f_term(&self, t: f64, spin: Spin) -> f64 {
        let v = self.trajectory.eval_clamped(t, 1);
        0.5 * self.params.mass * v * v + self.lambda_term(t, spin)
    }

    fn breaks(&self, t: f64) -> Vec<f64> {
        match &self.pivot {
            PivotPath::Sampled { step, values } => {
                let mut b: Vec<f64> = (0..values.len())
                    .map(|i| i as f64 * step)
                    .take_while(|&x| x < t)
                    .collect();
                b.push(t);
                b
            }
            _ => {
                let n = 64;
                (0..=n).map(|i| t * i as f64 / n as f64).collect()
            }
        }
    }

    /// Time integrals of `F`, `Lambda` and `x0 f` from 0 to `t`.
    pub fn phase_ledger(&self, t: f64) -> PhaseLedger {
        let breaks = self.breaks(t);
        let integrate = |g: &dyn Fn(f64) -> f64| quad::integrate_piecewise(g, &breaks);
        PhaseLedger {
            t,
            f_integral: SpinPair::from_fn(|s| integrate(&|u| self.f_term(u, s))),
            lambda_integral: SpinPair::from_fn(|s| integrate(&|u| self.lambda_term(u, s))),
            x0f_integral: SpinPair::from_fn(|s| integrate(&|u| self.pivot_at(u, s) * self.force(u))),
        }
    }

    /// Step ceiling `min(0.02 / omega_eff, t_f / 2000)`.
    pub fn max_dt(&self) -> f64 {
        let w = self.potential.curvature_frequency(self.params.mass);
        let by_trap = if w > 0.0 { 0.02 / w } else { f64::INFINITY };
        by_trap.min(self.duration() / 2000.0)
    }

    /// Number of steps of at most `max_dt() * dt_scale` that tile `[0, t_f]`.
    pub fn steps_for(&self, dt_scale: f64) -> usize {
        (self.duration() / (self.max_dt() * dt_scale)).ceil().max(1.0) as usize
    }

    /// Copy with `t_f` stretched by `factor` at fixed displacement.
    pub fn slowed(&self, factor: f64, pivot: &Pivot) -> Result<Self> {
        Transport::new(
            self.potential.clone(),
            self.trajectory.stretched(factor)?,
            pivot,
            self.params,
            self.compensation,
        )
    }
}

/// Strang-split propagator for one arm on a fixed grid and step.
pub struct Propagator<'a> {
    transport: &'a Transport,
    grid: Grid,
    x: Vec<f64>,
    kinetic: Vec<C64>,
    work: FftWork,
    potential: Vec<f64>,
    kick: Vec<C64>,
    dt: f64,
    sampled_at: Option<(f64, Spin)>,
}

impl<'a> Propagator<'a> {
    pub fn new(transport: &'a Transport, grid: Grid, dt: f64) -> Self {
        let n = grid.len();
        Self {
            transport,
            grid,
            x: grid.x(),
            kinetic: kinetic_phase(&grid, &transport.params, dt),
            work: FftWork::new(n),
            potential: vec![0.0; n],
            kick: vec![C64::new(1.0, 0.0); n],
            dt,
            sampled_at: None,
        }
    }

    fn sample(&mut self, t: f64, spin: Spin) -> Result<()> {
        if let Some((ts, s)) = self.sampled_at {
            if s == spin && (ts - t).abs() <= 1e-9 * self.dt {
                return Ok(());
            }
        }
        let tr = self.transport;
        let alpha = tr.trajectory.eval_clamped(t, 0);
        let f = tr.force(t);
        let x0 = tr.pivot_at(t, spin);
        tr.potential
            .fill_total(tr.params.c, x0, f, &self.x, alpha, spin, &mut self.potential)?;
        let a = -0.5 * self.dt / tr.params.hbar;
        for (k, v) in self.kick.iter_mut().zip(&self.potential) {
            *k = C64::from_polar(1.0, a * v);
        }
        self.sampled_at = Some((t, spin));
        Ok(())
    }

    fn half_kick(&self, psi: &mut [C64]) {
        psi.iter_mut().zip(&self.kick).for_each(|(z, k)| *z *= k);
    }

    /// One step from `t` to `t + dt`: half potential kick, full kinetic
    /// drift, half potential kick, with the potential sampled at `t + dt/2`.
    pub fn step(&mut self, psi: &mut [C64], t: f64, spin: Spin) -> Result<()> {
        self.sample(t + 0.5 * self.dt, spin)?;
        self.half_kick(psi);
        self.work.forward(psi);
        psi.iter_mut().zip(&self.kinetic).for_each(|(z, k)| *z *= k);
        self.work.inverse(psi);
        self.half_kick(psi);
        Ok(())
    }

    /// Filters `psi` through a Gaussian time window of length `window`
    /// applied to the one-step map frozen at `t`, centred on the
    /// quasi-energy of `psi`. Components of the map whose quasi-energy
    /// differs by much more than `8 / window` are suppressed; the norm
    /// is restored afterwards.
    pub fn settle(&mut self, psi: &mut [C64], t: f64, spin: Spin, window: f64) -> Result<()> {
        if !(window > 0.0) {
            return Ok(());
        }
        let norm = self.grid.norm(psi);
        let mut cur = psi.to_vec();
        self.step(&mut cur, t, spin)?;
        let omega = -self.grid.inner(psi, &cur).arg() / self.dt;
        cur.copy_from_slice(psi);
        let n = (window / self.dt).ceil() as usize;
        let centre = 0.5 * n as f64;
        let sigma = n as f64 / 8.0;
        let mut acc = vec![C64::new(0.0, 0.0); psi.len()];
        for k in 0..=n {
            let w = (-0.5 * ((k as f64 - centre) / sigma).powi(2)).exp();
            let phase = C64::from_polar(w, omega * k as f64 * self.dt);
            acc.iter_mut().zip(&cur).for_each(|(a, z)| *a += phase * z);
            if k < n {
                self.step(&mut cur, t, spin)?;
            }
        }
        let scale = norm / self.grid.norm(&acc);
        psi.iter_mut().zip(&acc).for_each(|(z, a)| *z = a * scale);
        Ok(())
    }

    /// Runs `n_steps` steps, calling `observe` after every `stride` steps
    /// (and at the start).
    pub fn run<F>(&mut self, state: &ArmState, n_steps: usize, stride: usize, mut observe: F) -> Result<ArmState>
    where
        F: FnMut(&ArmState),
    {
        if state.frame != Frame::Lab {
            return Err(Error::InvalidParameter("propagation needs a lab-frame state".into()));
        }
        if state.psi.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "state has {} samples, grid has {}",
                state.psi.len(),
                self.grid.len()
            )));
        }
        let mut cur = state.clone();
        if stride > 0 {
            observe(&cur);
        }
        let t0 = state.t;
        for i in 0..n_steps {
            self.step(&mut cur.psi, cur.t, cur.spin)?;
            cur.t = t0 + (i + 1) as f64 * self.dt;
            let edge = spectral::edge_amplitude(&cur.psi);
            if edge > CONTAINMENT_TOL {
                return Err(Error::Containment { t: cur.t, amplitude: edge });
            }
            if stride > 0 && ((i + 1) % stride == 0 || i + 1 == n_steps) {
                observe(&cur);
            }
        }
        Ok(cur)
    }
}

/// Propagates a lab-frame state by `n_steps` steps of `dt`.
pub fn propagate_lab(
    state: &ArmState,
    transport: &Transport,
    grid: &Grid,
    dt: f64,
    n_steps: usize,
) -> Result<ArmState> {
    check_step(transport, dt)?;
    Propagator::new(transport, *grid, dt).run(state, n_steps, 0, |_| {})
}

pub(crate) fn check_step(transport: &Transport, dt: f64) -> Result<()> {
    let max_dt = transport.max_dt();
    if !(dt > 0.0) || dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::StepPolicy { dt, max_dt });
    }
    Ok(())
}

/// Propagates the shared initial state along both arms to `t_f`, the arms
/// running concurrently.
pub fn propagate_arms(
    initial: &[C64],
    transport: &Transport,
    grid: &Grid,
    n_steps: usize,
) -> Result<SpinPair<ArmState>> {
    let dt = transport.duration() / n_steps as f64;
    check_step(transport, dt)?;
    let run = |spin: Spin| {
        let start = ArmState::new(initial.to_vec(), 0.0, spin, Frame::Lab);
        Propagator::new(transport, *grid, dt).run(&start, n_steps, 0, |_| {})
    };
    let (up, down) = rayon::join(|| run(Spin::Up), || run(Spin::Down));
    Ok(SpinPair { up: up?, down: down? })
}

/// Lab frame to moving frame: removes the momentum kick, then shifts by
/// `+-alpha` so the trap sits at the origin.
pub fn to_moving_frame(
    state: &ArmState,
    alpha: f64,
    alpha_dot: f64,
    grid: &Grid,
    params: &PhysicalParams,
) -> Result<ArmState> {
    let s = state.spin.sign();
    let q = s * params.mass * alpha_dot / params.hbar;
    let kicked: Vec<C64> = grid
        .x()
        .iter()
        .zip(&state.psi)
        .map(|(x, z)| z * C64::from_polar(1.0, -q * x))
        .collect();
    let mut work = FftWork::new(grid.len());
    let psi = spectral::shift(grid, &mut work, &kicked, s * alpha, CONTAINMENT_TOL)?;
    Ok(ArmState::new(psi, state.t, state.spin, Frame::Moving))
}

/// Inverse of [`to_moving_frame`].
pub fn from_moving_frame(
    state: &ArmState,
    alpha: f64,
    alpha_dot: f64,
    grid: &Grid,
    params: &PhysicalParams,
) -> Result<ArmState> {
    let s = state.spin.sign();
    let q = s * params.mass * alpha_dot / params.hbar;
    let mut work = FftWork::new(grid.len());
    let shifted = spectral::shift(grid, &mut work, &state.psi, -s * alpha, CONTAINMENT_TOL)?;
    let psi = grid
        .x()
        .iter()
        .zip(shifted)
        .map(|(x, z)| z * C64::from_polar(1.0, q * x))
        .collect();
    Ok(ArmState::new(psi, state.t, state.spin, Frame::Lab))
}

/// Largest allowed `1 - sum |c_n|^2` when expanding in the eigenbasis.
pub const TRUNCATION_TOL: f64 = 1e-8;

/// Closed-form lab-frame arm at time `t`:
/// `exp(+-i m alpha' x) exp(-i int F) sum_n c_n exp(-i lambda_n t) phi_n(x -+ alpha)`.
pub fn analytic_arm(
    initial: &ArmState,
    transport: &Transport,
    t: f64,
    eigen: &EigenSolution,
) -> Result<(ArmState, PhaseLedger)> {
    let grid = eigen.grid;
    let coeffs = eigen.coefficients(&initial.psi);
    let captured: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let total = grid.norm(&initial.psi).powi(2);
    let residual = (total - captured).abs();
    if residual > TRUNCATION_TOL {
        return Err(Error::Truncation {
            residual,
            tolerance: TRUNCATION_TOL,
        });
    }
    let hbar = transport.params.hbar;
    let mut phi_t = vec![C64::new(0.0, 0.0); grid.len()];
    for ((c, lam), phi) in coeffs.iter().zip(&eigen.eigenvalues).zip(&eigen.eigenfunctions) {
        let c_t = c * C64::from_polar(1.0, -lam * t / hbar);
        phi_t.iter_mut().zip(phi).for_each(|(z, p)| *z += c_t * p);
    }
    let ledger = transport.phase_ledger(t);
    let spin = initial.spin;
    let (alpha, alpha_dot, _) = transport.trajectory.kinematics(t);
    let moving = ArmState::new(phi_t, t, spin, Frame::Moving);
    let mut lab = from_moving_frame(&moving, alpha, alpha_dot, &grid, &transport.params)?;
    let global = C64::from_polar(1.0, -ledger.f_integral.get(spin) / hbar);
    lab.psi.iter_mut().for_each(|z| *z *= global);
    Ok((lab, ledger))
}

/// `|<a|b>|` for normalized states.
pub fn fidelity(grid: &Grid, a: &[C64], b: &[C64]) -> f64 {
    grid.inner(a, b).norm()
}

/// Runs the arms with compensation off and `t_f` stretched by
/// `slow_factor`; the result approaches the compensated one as the
/// transport becomes adiabatic.
pub fn adiabatic_reference(
    transport: &Transport,
    pivot: &Pivot,
    slow_factor: f64,
    initial: &[C64],
    grid: &Grid,
    dt_scale: f64,
) -> Result<RunResult> {
    if !(slow_factor >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "slow factor must be >= 1, got {slow_factor}"
        )));
    }
    let mut slowed = transport.slowed(slow_factor, pivot)?;
    slowed.compensation = false;
    let n_steps = slowed.steps_for(dt_scale);
    let arms = propagate_arms(initial, &slowed, grid, n_steps)?;
    readout(&arms.up, &arms.down, grid, &slowed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::solve_stationary;
    use crate::trajectory::design_polynomial;

    fn harmonic_transport(c: f64, peak: f64, t_f: f64, compensation: bool) -> Transport {
        Transport::new(
            Potential::harmonic(1.0, 1.0),
            design_polynomial(peak, t_f).unwrap(),
            &Pivot::default(),
            PhysicalParams::natural(c),
            compensation,
        )
        .unwrap()
    }

    fn gaussian(grid: &Grid, x0: f64, w: f64) -> Vec<C64> {
        let mut psi: Vec<C64> = grid
            .x()
            .iter()
            .map(|x| C64::new((-(x - x0).powi(2) / (2.0 * w * w)).exp(), 0.0))
            .collect();
        grid.normalize(&mut psi);
        psi
    }

    fn centroid(grid: &Grid, psi: &[C64]) -> f64 {
        grid.x().iter().zip(psi).map(|(x, z)| x * z.norm_sqr()).sum::<f64>() * grid.dx()
    }

    #[test]
    fn stationary_state_only_gains_phase() {
        let grid = Grid::centered(10.0, 256).unwrap();
        let tr = harmonic_transport(0.0, 0.0, 2.0, true);
        let eig = solve_stationary(&grid, &tr.potential.eval_tilted(0.0, &grid.x()).unwrap(), &tr.params, 1).unwrap();
        let psi0 = eig.state(0).unwrap();
        let n = tr.steps_for(1.0);
        let end = propagate_lab(&ArmState::new(psi0.clone(), 0.0, Spin::Up, Frame::Lab), &tr, &grid, 2.0 / n as f64, n)
            .unwrap();
        assert!((fidelity(&grid, &psi0, &end.psi) - 1.0).abs() < 1e-8);
        assert!((grid.norm(&end.psi) - 1.0).abs() < 1e-10);
        let phase = grid.inner(&psi0, &end.psi).arg();
        assert!((phase + 0.5 * 2.0).abs() < 1e-6, "{phase}");
    }

    #[test]
    fn compensated_transport_returns_ground_state() {
        let grid = Grid::centered(12.0, 512).unwrap();
        let tr = harmonic_transport(0.01, 1.0, 10.0, true);
        let eig = solve_stationary(&grid, &tr.potential.eval_tilted(0.01, &grid.x()).unwrap(), &tr.params, 1).unwrap();
        let psi0 = eig.state(0).unwrap();
        let n = tr.steps_for(1.0);
        let arms = propagate_arms(&psi0, &tr, &grid, n).unwrap();
        for spin in Spin::BOTH {
            let f = fidelity(&grid, &psi0, &arms.get_ref(spin).psi);
            assert!((f - 1.0).abs() < 1e-6, "{spin:?}: {f}");
        }
    }

    #[test]
    fn centroid_follows_classical_motion() {
        // quadratic Hamiltonian: Ehrenfest is exact; compare with RK4 of
        // m x'' = -m w^2 (x - s alpha) + s f + c
        let grid = Grid::centered(14.0, 512).unwrap();
        let c = 0.05;
        let tr = harmonic_transport(c, 1.0, 10.0, false);
        let x_init = 0.7;
        let psi0 = gaussian(&grid, x_init, 1.0);
        let n = 20000;
        let dt = 10.0 / n as f64;
        let stride = 2000;
        let mut quantum = Vec::new();
        Propagator::new(&tr, grid, dt)
            .run(&ArmState::new(psi0, 0.0, Spin::Up, Frame::Lab), n, stride, |s| {
                quantum.push((s.t, centroid(&grid, &s.psi)))
            })
            .unwrap();
        let accel = |t: f64, x: f64| -(x - tr.trajectory.eval_clamped(t, 0)) + tr.force(t) + c;
        let (mut x, mut v, mut t) = (x_init, 0.0, 0.0);
        let h = 1e-3;
        let mut classical = vec![(0.0, x)];
        for i in 0..10000 {
            let k1 = (v, accel(t, x));
            let k2 = (v + 0.5 * h * k1.1, accel(t + 0.5 * h, x + 0.5 * h * k1.0));
            let k3 = (v + 0.5 * h * k2.1, accel(t + 0.5 * h, x + 0.5 * h * k2.0));
            let k4 = (v + h * k3.1, accel(t + h, x + h * k3.0));
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            t = (i + 1) as f64 * h;
            if (i + 1) % 1000 == 0 {
                classical.push((t, x));
            }
        }
        assert_eq!(quantum.len(), classical.len());
        for ((tq, xq), (tc, xc)) in quantum.iter().zip(&classical) {
            assert!((tq - tc).abs() < 1e-9);
            assert!((xq - xc).abs() < 1e-6, "t = {tq}: {xq} vs {xc}");
        }
    }

    #[test]
    fn frame_map_round_trip_and_shift_direction() {
        let grid = Grid::centered(12.0, 512).unwrap();
        let p = PhysicalParams::natural(0.0);
        let psi = gaussian(&grid, 0.0, 0.8);
        let lab = ArmState::new(psi.clone(), 0.0, Spin::Up, Frame::Lab);
        let same = to_moving_frame(&lab, 0.0, 0.0, &grid, &p).unwrap();
        assert!(same.psi.iter().zip(&psi).all(|(a, b)| (a - b).norm() < 1e-15));
        let moved = to_moving_frame(&lab, 1.0, 0.3, &grid, &p).unwrap();
        assert!((grid.norm(&moved.psi) - 1.0).abs() < 1e-12);
        assert!((centroid(&grid, &moved.psi) + 1.0).abs() < 1e-8);
        let back = from_moving_frame(&moved, 1.0, 0.3, &grid, &p).unwrap();
        let err = back.psi.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        let down = ArmState::new(psi, 0.0, Spin::Down, Frame::Lab);
        let moved = to_moving_frame(&down, 1.0, 0.0, &grid, &p).unwrap();
        assert!((centroid(&grid, &moved.psi) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ledger_difference_structure() {
        let tr = Transport::new(
            Potential::harmonic(1.0, 1.0),
            design_polynomial(1.0, 10.0).unwrap(),
            &Pivot::LinearDrift { a: 0.3, b: 0.05 },
            PhysicalParams::natural(0.02),
            true,
        )
        .unwrap();
        let t = 6.0;
        let l = tr.phase_ledger(t);
        let area = quad::integrate(|u| tr.trajectory.eval_clamped(u, 0), 0.0, t, 1e-14);
        let x0f = quad::integrate(|u| (0.3 + 0.05 * u) * tr.trajectory.eval_clamped(u, 2), 0.0, t, 1e-14);
        let diff = l.f_integral.up - l.f_integral.down;
        assert!((diff - (-2.0 * 0.02 * area + 2.0 * x0f)).abs() < 1e-10);
        assert!((l.x0f_integral.up - x0f).abs() < 1e-10);
    }

    #[test]
    fn step_policy_is_enforced() {
        let grid = Grid::centered(10.0, 128).unwrap();
        let tr = harmonic_transport(0.0, 1.0, 10.0, true);
        let psi = gaussian(&grid, 0.0, 1.0);
        let err = propagate_lab(&ArmState::new(psi, 0.0, Spin::Up, Frame::Lab), &tr, &grid, 0.1, 10).unwrap_err();
        assert!(matches!(err, Error::StepPolicy { .. }));
    }

    #[test]
    fn containment_violation_is_reported() {
        let grid = Grid::centered(4.0, 128).unwrap();
        let tr = harmonic_transport(0.0, 3.0, 10.0, true);
        let psi = gaussian(&grid, 0.0, 1.0);
        let n = tr.steps_for(1.0);
        let err = propagate_lab(&ArmState::new(psi, 0.0, Spin::Up, Frame::Lab), &tr, &grid, 10.0 / n as f64, n)
            .unwrap_err();
        assert!(matches!(err, Error::Containment { .. }));
    }
}
