//! Lewis–Riesenfeld invariants of the compensated arm Hamiltonians.
//!
//! For each arm the operator
//! `I = (p -+ m alpha')^2 / 2m + U~(x -+ alpha)`, with the tilted trap
//! `U~(y) = U(y) - c y`, is conserved by the compensated dynamics. Its
//! eigenstates are the moving-frame eigenfunctions mapped back to the lab,
//! and dressing them with the phase `theta_n = -(1/hbar) int (lambda_n + F) dt`
//! gives exact solutions.

use std::cell::RefCell;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_step, from_moving_frame, ArmState, Frame, Propagator, SpinPair, Transport};
use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::{self, EigenSolution, FftWork, Grid};
use crate::Spin;

/// The invariant of one arm, bound to a transport and grid.
pub struct InvariantOperator<'a> {
    transport: &'a Transport,
    grid: Grid,
    spin: Spin,
    x: Vec<f64>,
    k: Vec<f64>,
    work: FftWork,
}

impl<'a> InvariantOperator<'a> {
    pub fn new(transport: &'a Transport, grid: Grid, spin: Spin) -> Self {
        Self {
            transport,
            grid,
            spin,
            x: grid.x(),
            k: grid.k(),
            work: FftWork::new(grid.len()),
        }
    }

    /// `I(t) psi`.
    pub fn apply(&mut self, psi: &[C64], t: f64) -> Result<Vec<C64>> {
        if psi.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "state has {} samples, grid has {}",
                psi.len(),
                self.grid.len()
            )));
        }
        let tr = self.transport;
        let (alpha, alpha_dot, _) = tr.trajectory.kinematics(t);
        let (m, hbar) = (tr.params.mass, tr.params.hbar);
        let s = self.spin.sign();
        let mut kin = psi.to_vec();
        let k = &self.k;
        self.work.apply_in_k(&mut kin, |i| {
            let p = hbar * k[i] - s * m * alpha_dot;
            C64::new(p * p / (2.0 * m), 0.0)
        });
        let u = tr.potential.eval_tilted_shifted(tr.params.c, &self.x, alpha, self.spin)?;
        Ok(kin
            .iter()
            .zip(psi)
            .zip(&u)
            .map(|((kz, z), v)| kz + z * v)
            .collect())
    }

    /// `<psi| I(t) |psi>`.
    pub fn expectation(&mut self, psi: &[C64], t: f64) -> Result<f64> {
        let ipsi = self.apply(psi, t)?;
        Ok(self.grid.inner(psi, &ipsi).re)
    }
}

/// `I(t) psi` for one arm.
pub fn apply_invariant(psi: &[C64], t: f64, spin: Spin, transport: &Transport, grid: &Grid) -> Result<Vec<C64>> {
    InvariantOperator::new(transport, *grid, spin).apply(psi, t)
}

/// Time series of `<I>` along both arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub times: Vec<f64>,
    pub expectation: SpinPair<Vec<f64>>,
    /// `max_t |<I>(t) - <I>(0)| / |<I>(0)|` over both arms.
    pub max_relative_drift: f64,
    pub compensation: bool,
}

impl InvariantReport {
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

fn relative_drift(values: &[f64]) -> f64 {
    let start = values[0];
    let scale = start.abs().max(f64::MIN_POSITIVE);
    values.iter().map(|v| (v - start).abs() / scale).fold(0.0, f64::max)
}

/// Propagates both arms over `[0, t_f]` in `n_steps` steps and records `<I>`
/// about `samples` times along the way.
pub fn verify_invariance(
    transport: &Transport,
    grid: &Grid,
    initial: &[C64],
    n_steps: usize,
    samples: usize,
) -> Result<InvariantReport> {
    let dt = transport.duration() / n_steps as f64;
    check_step(transport, dt)?;
    let stride = (n_steps / samples.max(1)).max(1);
    let run = |spin: Spin| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut op = InvariantOperator::new(transport, *grid, spin);
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut failure = None;
        let start = ArmState::new(initial.to_vec(), 0.0, spin, Frame::Lab);
        Propagator::new(transport, *grid, dt).run(&start, n_steps, stride, |s| match op.expectation(&s.psi, s.t) {
            Ok(v) => {
                times.push(s.t);
                values.push(v);
            }
            Err(e) => failure = Some(e),
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok((times, values)),
        }
    };
    let (up, down) = rayon::join(|| run(Spin::Up), || run(Spin::Down));
    let ((times, up), (_, down)) = (up?, down?);
    let max_relative_drift = relative_drift(&up).max(relative_drift(&down));
    Ok(InvariantReport {
        times,
        expectation: SpinPair { up, down },
        max_relative_drift,
        compensation: transport.compensation,
    })
}

/// Invariant eigenstate `n` at time `t` in the lab frame, without the
/// Lewis–Riesenfeld phase.
pub fn invariant_eigenstate(eigen: &EigenSolution, n: usize, transport: &Transport, t: f64, spin: Spin) -> Result<ArmState> {
    let phi = eigen.state(n)?;
    let (alpha, alpha_dot, _) = transport.trajectory.kinematics(t);
    from_moving_frame(
        &ArmState::new(phi, t, spin, Frame::Moving),
        alpha,
        alpha_dot,
        &eigen.grid,
        &transport.params,
    )
}

/// `theta_n(t) = -(1/hbar) (lambda_n t + int_0^t F dt')`.
pub fn lr_phase_closed_form(eigenvalue: f64, transport: &Transport, t: f64, spin: Spin) -> f64 {
    let ledger = transport.phase_ledger(t);
    -(eigenvalue * t + ledger.f_integral.get(spin)) / transport.params.hbar
}

/// Dynamical mode `exp(i theta_n) |psi_n(t)>`, an exact solution of the
/// compensated arm.
pub fn dynamical_mode(eigen: &EigenSolution, n: usize, transport: &Transport, t: f64, spin: Spin) -> Result<ArmState> {
    let mut state = invariant_eigenstate(eigen, n, transport, t, spin)?;
    let theta = lr_phase_closed_form(eigen.eigenvalues[n], transport, t, spin);
    let phase = C64::from_polar(1.0, theta);
    state.psi.iter_mut().for_each(|z| *z *= phase);
    Ok(state)
}

/// Evaluates `<psi_n| i hbar d/dt - H |psi_n>` with the time derivative
/// taken analytically from the frame map.
struct MatrixElement<'a> {
    transport: &'a Transport,
    grid: Grid,
    spin: Spin,
    x: Vec<f64>,
    phi: Vec<C64>,
    dphi: Vec<C64>,
    kinetic: Vec<f64>,
    work: FftWork,
}

impl<'a> MatrixElement<'a> {
    fn new(eigen: &EigenSolution, n: usize, transport: &'a Transport, spin: Spin) -> Result<Self> {
        let grid = eigen.grid;
        let phi = eigen.state(n)?;
        let mut work = FftWork::new(grid.len());
        let dphi = spectral::derivative(&grid, &mut work, &phi);
        Ok(Self {
            transport,
            grid,
            spin,
            x: grid.x(),
            phi,
            dphi,
            kinetic: spectral::kinetic_energies(&grid, &transport.params, 0.0),
            work,
        })
    }

    fn at(&mut self, t: f64) -> Result<f64> {
        let tr = self.transport;
        let (m, hbar) = (tr.params.mass, tr.params.hbar);
        let s = self.spin.sign();
        let (alpha, alpha_dot, alpha_ddot) = tr.trajectory.kinematics(t);
        let shift = -s * alpha;
        let q = s * m * alpha_dot / hbar;
        // psi = e^{i q x} phi(x - s alpha)
        let phi = spectral::shift(&self.grid, &mut self.work, &self.phi, shift, 1e-8)?;
        let dphi = spectral::shift(&self.grid, &mut self.work, &self.dphi, shift, 1e-8)?;
        let carrier: Vec<C64> = self.x.iter().map(|x| C64::from_polar(1.0, q * x)).collect();
        let psi: Vec<C64> = phi.iter().zip(&carrier).map(|(p, e)| p * e).collect();
        // d/dt psi = (i s m alpha'' x / hbar) psi - s alpha' e^{iqx} phi'(x - s alpha)
        let dq = s * m * alpha_ddot / hbar;
        let dpsi: Vec<C64> = psi
            .iter()
            .zip(&dphi)
            .zip(&carrier)
            .zip(&self.x)
            .map(|(((p, d), e), x)| C64::new(0.0, dq * x) * p - s * alpha_dot * d * e)
            .collect();
        let mut hpsi = psi.clone();
        let kin = &self.kinetic;
        self.work.apply_in_k(&mut hpsi, |i| C64::new(kin[i], 0.0));
        let x0 = tr.pivot_at(t, self.spin);
        let f = tr.force(t);
        let v = tr
            .potential
            .eval_total(&tr.params, x0, f, &self.x, alpha, self.spin)?;
        let integrand: Vec<C64> = dpsi
            .iter()
            .zip(&hpsi)
            .zip(&psi)
            .zip(&v)
            .map(|(((d, h), p), v)| C64::new(0.0, hbar) * d - h - p * v)
            .collect();
        Ok(self.grid.inner(&psi, &integrand).re)
    }
}

/// Both evaluations of the Lewis–Riesenfeld phase for one mode and arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrPhase {
    pub n: usize,
    pub spin: Spin,
    pub t: f64,
    pub closed_form: f64,
    pub matrix_element: f64,
}

impl LrPhase {
    pub fn discrepancy(&self) -> f64 {
        (self.closed_form - self.matrix_element).abs()
    }
}

/// Lewis–Riesenfeld phase of mode `n` at time `t`, both from the closed
/// form and from time-integrating `<psi_n| i hbar d/dt - H |psi_n> / hbar`.
pub fn lr_phase(eigen: &EigenSolution, n: usize, transport: &Transport, t: f64, spin: Spin, panels: usize) -> Result<LrPhase> {
    if n >= eigen.len() {
        return Err(Error::IndexOutOfRange { n, available: eigen.len() });
    }
    let me = RefCell::new(MatrixElement::new(eigen, n, transport, spin)?);
    let panels = panels.max(1);
    let breaks: Vec<f64> = (0..=panels).map(|i| t * i as f64 / panels as f64).collect();
    let failure = RefCell::new(None);
    let integral = quad::integrate_piecewise(
        |u| match me.borrow_mut().at(u) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        &breaks,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(LrPhase {
        n,
        spin,
        t,
        closed_form: lr_phase_closed_form(eigen.eigenvalues[n], transport, t, spin),
        matrix_element: integral / transport.params.hbar,
    })
}
