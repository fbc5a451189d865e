use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sta_interferometer::dynamics::{
    analytic_arm, fidelity, propagate_lab, to_moving_frame, ArmState, Frame, Propagator, Transport,
};
use sta_interferometer::invariants::InvariantOperator;
use sta_interferometer::potentials::{Pivot, Potential};
use sta_interferometer::spectral::{solve_stationary, EigenSolution, Grid};
use sta_interferometer::trajectory::design_polynomial;
use sta_interferometer::units::PhysicalParams;
use sta_interferometer::Spin;

const C: f64 = 0.05;
const T_F: f64 = 6.0;

fn setup(compensation: bool) -> (Transport, Grid, EigenSolution) {
    let tr = Transport::new(
        Potential::harmonic(1.0, 1.0),
        design_polynomial(1.0, T_F).unwrap(),
        &Pivot::Constant { x0: 0.3 },
        PhysicalParams::natural(C),
        compensation,
    )
    .unwrap();
    let grid = Grid::centered(12.0, 256).unwrap();
    let u = tr.potential.eval_tilted(C, &grid.x()).unwrap();
    let eig = solve_stationary(&grid, &u, &tr.params, 8).unwrap();
    (tr, grid, eig)
}

fn random_superposition(eig: &EigenSolution, modes: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = eig.grid;
    let mut psi = vec![C64::new(0.0, 0.0); grid.len()];
    for phi in eig.eigenfunctions.iter().take(modes) {
        let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        psi.iter_mut().zip(phi).for_each(|(z, p)| *z += a * p);
    }
    grid.normalize(&mut psi);
    psi
}

fn distance(grid: &Grid, a: &[C64], b: &[C64]) -> f64 {
    let diff: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.norm(&diff)
}

#[test]
fn strang_splitting_is_second_order() {
    let (tr, grid, eig) = setup(true);
    let psi0 = random_superposition(&eig, 3, 11);
    let start = ArmState::new(psi0, 0.0, Spin::Up, Frame::Lab);
    let (exact, _) = analytic_arm(&start, &tr, T_F, &eig).unwrap();
    let errors: Vec<f64> = [150usize, 300, 600]
        .iter()
        .map(|&n| {
            let dt = T_F / n as f64;
            let end = Propagator::new(&tr, grid, dt).run(&start, n, 0, |_| {}).unwrap();
            distance(&grid, &end.psi, &exact.psi)
        })
        .collect();
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!((1.8..=2.2).contains(&order), "order {order} from {errors:?}");
    }
}

#[test]
fn lab_propagation_matches_moving_frame_solution() {
    let (tr, grid, eig) = setup(true);
    let psi0 = random_superposition(&eig, 4, 3);
    for spin in Spin::BOTH {
        let start = ArmState::new(psi0.clone(), 0.0, spin, Frame::Lab);
        let n = tr.steps_for(1.0);
        let end = propagate_lab(&start, &tr, &grid, T_F / n as f64, n).unwrap();
        let (alpha, alpha_dot, _) = tr.trajectory.kinematics(T_F);
        let moving = to_moving_frame(&end, alpha, alpha_dot, &grid, &tr.params).unwrap();
        let coeffs = eig.coefficients(&psi0);
        let mut phi = vec![C64::new(0.0, 0.0); grid.len()];
        for ((c, lam), f) in coeffs.iter().zip(&eig.eigenvalues).zip(&eig.eigenfunctions) {
            let ct = c * C64::from_polar(1.0, -lam * T_F);
            phi.iter_mut().zip(f).for_each(|(z, p)| *z += ct * p);
        }
        let fid = fidelity(&grid, &moving.psi, &phi);
        assert!(fid > 1.0 - 1e-6, "{spin:?}: fidelity {fid}");
    }
}

#[test]
fn superposition_reconstruction_matches_propagation() {
    let (tr, grid, eig) = setup(true);
    let psi0 = random_superposition(&eig, 5, 99);
    for spin in Spin::BOTH {
        let start = ArmState::new(psi0.clone(), 0.0, spin, Frame::Lab);
        let n = tr.steps_for(1.0);
        let end = propagate_lab(&start, &tr, &grid, T_F / n as f64, n).unwrap();
        let (exact, _) = analytic_arm(&start, &tr, T_F, &eig).unwrap();
        let fid = fidelity(&grid, &end.psi, &exact.psi);
        assert!(fid > 1.0 - 1e-6, "{spin:?}: fidelity {fid}");
    }
}

#[test]
fn invariant_matches_rest_frame_hamiltonian() {
    let (tr, grid, eig) = setup(true);
    for (seed, t) in [(1u64, 0.7), (2, 2.3), (3, 4.9)] {
        let psi = random_superposition(&eig, 6, seed);
        for spin in Spin::BOTH {
            let state = ArmState::new(psi.clone(), t, spin, Frame::Lab);
            let (alpha, alpha_dot, _) = tr.trajectory.kinematics(t);
            let moving = to_moving_frame(&state, alpha, alpha_dot, &grid, &tr.params).unwrap();
            let lab_value = InvariantOperator::new(&tr, grid, spin).expectation(&psi, t).unwrap();
            // I(0) has alpha = alpha' = 0 and so equals the rest-frame Hamiltonian.
            let rest_value = InvariantOperator::new(&tr, grid, spin).expectation(&moving.psi, 0.0).unwrap();
            assert!(
                (lab_value - rest_value).abs() < 1e-10 * rest_value.abs().max(1.0),
                "{spin:?} t={t}: {lab_value} vs {rest_value}"
            );
        }
    }
}

#[test]
fn rest_frame_energy_is_constant_under_compensation() {
    let (tr, grid, eig) = setup(true);
    let psi0 = random_superposition(&eig, 3, 5);
    let start = ArmState::new(psi0, 0.0, Spin::Down, Frame::Lab);
    let n = tr.steps_for(1.0 / 16.0);
    let mut energies = Vec::new();
    let mut op = InvariantOperator::new(&tr, grid, Spin::Down);
    Propagator::new(&tr, grid, T_F / n as f64)
        .run(&start, n, n / 12, |s| {
            let (alpha, alpha_dot, _) = tr.trajectory.kinematics(s.t);
            let moving = to_moving_frame(s, alpha, alpha_dot, &grid, &tr.params).unwrap();
            energies.push(op.expectation(&moving.psi, 0.0).unwrap());
        })
        .unwrap();
    let e0 = energies[0];
    let drift = energies.iter().map(|e| (e - e0).abs() / e0.abs()).fold(0.0, f64::max);
    assert!(drift < 1e-8, "relative drift {drift}");
}

#[test]
fn norm_is_conserved_over_a_run() {
    let (tr, grid, eig) = setup(false);
    let psi0 = random_superposition(&eig, 4, 8);
    let start = ArmState::new(psi0, 0.0, Spin::Up, Frame::Lab);
    let n = tr.steps_for(1.0);
    let end = propagate_lab(&start, &tr, &grid, T_F / n as f64, n).unwrap();
    assert!((grid.norm(&end.psi) - 1.0).abs() < 1e-10);
}
