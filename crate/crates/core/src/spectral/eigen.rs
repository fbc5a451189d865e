use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::tridiag::{eigenvectors, lowest_eigenvalues, Tridiagonalized};
use super::{kinetic_energies, FftWork, Grid};
use crate::error::{Error, Result};
use crate::units::PhysicalParams;

/// Largest grid solved by dense diagonalization under [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 4096;

const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Dense up to [`DENSE_LIMIT`] points, iterative above.
    Auto,
    /// Householder tridiagonalization of the full Fourier-grid Hamiltonian.
    Dense,
    /// Finite-difference starting guess refined by preconditioned block
    /// iteration on the FFT-applied Hamiltonian.
    Iterative,
}

/// Lowest eigenpairs of `p^2/2m + V` on a grid. Eigenfunctions are real
/// and normalized with `sum phi^2 dx = 1`; each is signed so that its
/// largest-magnitude sample is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub grid: Grid,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Largest relative residual `|H phi - lambda phi| / max(|lambda|, 1)`.
    pub max_residual: f64,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn state(&self, n: usize) -> Result<Vec<C64>> {
        self.eigenfunctions
            .get(n)
            .map(|phi| phi.iter().map(|&v| C64::new(v, 0.0)).collect())
            .ok_or(Error::IndexOutOfRange {
                n,
                available: self.len(),
            })
    }

    /// `<phi_n | psi>` for every retained state.
    pub fn coefficients(&self, psi: &[C64]) -> Vec<C64> {
        let dx = self.grid.dx();
        self.eigenfunctions
            .iter()
            .map(|phi| phi.iter().zip(psi).map(|(a, b)| b * *a).sum::<C64>() * dx)
            .collect()
    }

    /// Largest `|<phi_m|phi_n> - delta_mn|`.
    pub fn orthonormality_error(&self) -> f64 {
        let dx = self.grid.dx();
        let mut worst = 0.0f64;
        for (m, a) in self.eigenfunctions.iter().enumerate() {
            for (n, b) in self.eigenfunctions.iter().enumerate().skip(m) {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dx;
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Writes `x, phi_0, ..., phi_{n-1}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["x".to_string()];
        header.extend((0..self.len()).map(|n| format!("phi_{n}")));
        w.write_record(&header)?;
        for (j, x) in self.grid.x().iter().enumerate() {
            let mut row = vec![format!("{x:e}")];
            row.extend(self.eigenfunctions.iter().map(|phi| format!("{:e}", phi[j])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the CSV table and a JSON sidecar holding the eigenvalues.
    pub fn save(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(csv_path)?)?;
        let sidecar = serde_json::json!({
            "eigenvalues": self.eigenvalues,
            "n_points": self.grid.len(),
            "x_min": self.grid.x_min(),
            "x_max": self.grid.x_max(),
            "max_residual": self.max_residual,
        });
        std::fs::write(json_path, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

/// Lowest `n_states` eigenpairs of `p^2/2m + V` with the grid's periodic
/// spectral kinetic operator.
pub fn solve_stationary(
    grid: &Grid,
    potential: &[f64],
    params: &PhysicalParams,
    n_states: usize,
) -> Result<EigenSolution> {
    solve_stationary_with(grid, potential, params, n_states, EigenMethod::Auto)
}

pub fn solve_stationary_with(
    grid: &Grid,
    potential: &[f64],
    params: &PhysicalParams,
    n_states: usize,
    method: EigenMethod,
) -> Result<EigenSolution> {
    let n = grid.len();
    if potential.len() != n {
        return Err(Error::GridMismatch(format!(
            "potential has {} samples, grid has {n}",
            potential.len()
        )));
    }
    if n_states == 0 || n_states >= n / 4 {
        return Err(Error::InvalidParameter(format!(
            "requested {n_states} states on a {n}-point grid"
        )));
    }
    let method = match method {
        EigenMethod::Auto if n <= DENSE_LIMIT => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Iterative,
        m => m,
    };
    let (values, mut vectors) = match method {
        EigenMethod::Dense => dense(grid, potential, params, n_states),
        _ => iterative(grid, potential, params, n_states)?,
    };
    let scale = (1.0 / grid.dx()).sqrt();
    for v in vectors.iter_mut() {
        let (imax, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("nonempty");
        let s = if v[imax] < 0.0 { -scale } else { scale };
        v.iter_mut().for_each(|x| *x *= s);
    }
    let mut work = FftWork::new(n);
    let kin = kinetic_energies(grid, params, 0.0);
    let mut max_residual = 0.0f64;
    for (v, &lam) in vectors.iter().zip(&values) {
        let hv = apply_hamiltonian(&mut work, &kin, potential, v);
        let res: f64 = hv
            .iter()
            .zip(v)
            .map(|(h, x)| (h - lam * x).powi(2))
            .sum::<f64>()
            .sqrt()
            * grid.dx().sqrt();
        max_residual = max_residual.max(res / lam.abs().max(1.0));
    }
    if !(max_residual < RESIDUAL_TOL) {
        return Err(Error::Convergence {
            residual: max_residual,
        });
    }
    Ok(EigenSolution {
        grid: *grid,
        eigenvalues: values,
        eigenfunctions: vectors,
        max_residual,
    })
}

fn apply_hamiltonian(work: &mut FftWork, kin: &[f64], potential: &[f64], v: &[f64]) -> Vec<f64> {
    let mut buf: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    work.apply_in_k(&mut buf, |m| C64::new(kin[m], 0.0));
    buf.iter()
        .zip(potential)
        .zip(v)
        .map(|((t, u), x)| t.re + u * x)
        .collect()
}

/// First column of the circulant kinetic matrix, `T_j = (1/n) sum_k E(k) e^{i k x_j}`.
fn kinetic_column(grid: &Grid, params: &PhysicalParams) -> Vec<f64> {
    let n = grid.len();
    let mut buf: Vec<C64> = kinetic_energies(grid, params, 0.0)
        .into_iter()
        .map(|e| C64::new(e, 0.0))
        .collect();
    FftWork::new(n).inverse(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

fn dense(grid: &Grid, potential: &[f64], params: &PhysicalParams, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = grid.len();
    let col = kinetic_column(grid, params);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = if i >= j { i - j } else { n - (j - i) };
            a[i * n + j] = col[d];
        }
        a[i * n + i] += potential[i];
    }
    // symmetrize against rounding in the inverse FFT
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
    let tri = Tridiagonalized::reduce(a, n);
    let values = lowest_eigenvalues(&tri.diag, &tri.off, k);
    let mut vectors = eigenvectors(&tri.diag, &tri.off, &values);
    for v in vectors.iter_mut() {
        tri.back_transform(v);
    }
    (values, vectors)
}

/// Finite-difference eigenvectors refined by LOBPCG-style block iteration.
fn iterative(
    grid: &Grid,
    potential: &[f64],
    params: &PhysicalParams,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = grid.len();
    let dx = grid.dx();
    let block = k + 2.min(n / 8);
    let t = params.hbar * params.hbar / (2.0 * params.mass * dx * dx);
    let diag: Vec<f64> = potential.iter().map(|u| u + 2.0 * t).collect();
    let off = vec![-t; n - 1];
    let fd_values = lowest_eigenvalues(&diag, &off, block);
    let mut x = eigenvectors(&diag, &off, &fd_values);

    let mut work = FftWork::new(n);
    let kin = kinetic_energies(grid, params, 0.0);
    let vmin = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut theta = fd_values;
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        let hx: Vec<Vec<f64>> = x.iter().map(|v| apply_hamiltonian(&mut work, &kin, potential, v)).collect();
        let residuals: Vec<Vec<f64>> = hx
            .iter()
            .zip(&x)
            .zip(&theta)
            .map(|((h, v), l)| h.iter().zip(v).map(|(a, b)| a - l * b).collect())
            .collect();
        worst = residuals[..k]
            .iter()
            .zip(&theta)
            .map(|(r, l)| r.iter().map(|v| v * v).sum::<f64>().sqrt() / l.abs().max(1.0))
            .fold(0.0, f64::max);
        if worst < 1e-11 {
            break;
        }
        let shift = (theta[block - 1] - vmin).max(0.0) + 1.0;
        let w: Vec<Vec<f64>> = residuals
            .iter()
            .map(|r| {
                let mut buf: Vec<C64> = r.iter().map(|&v| C64::new(v, 0.0)).collect();
                work.apply_in_k(&mut buf, |m| C64::new(1.0 / (kin[m] + shift), 0.0));
                buf.into_iter().map(|z| z.re).collect()
            })
            .collect();
        let mut basis: Vec<Vec<f64>> = x.iter().chain(&w).chain(&p).cloned().collect();
        orthonormalize(&mut basis);
        let hb: Vec<Vec<f64>> = basis
            .iter()
            .map(|v| apply_hamiltonian(&mut work, &kin, potential, v))
            .collect();
        let m = basis.len();
        let mut small = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v: f64 = basis[i].iter().zip(&hb[j]).map(|(a, b)| a * b).sum();
                small[(i, j)] = v;
                small[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(small);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
        let mut new_x = Vec::with_capacity(block);
        let mut new_p = Vec::with_capacity(block);
        theta = Vec::with_capacity(block);
        for &col in order.iter().take(block) {
            let mut v = vec![0.0; n];
            let mut pv = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(i, col)];
                v.iter_mut().zip(b).for_each(|(a, bb)| *a += c * bb);
                if i >= block {
                    pv.iter_mut().zip(b).for_each(|(a, bb)| *a += c * bb);
                }
            }
            theta.push(eig.eigenvalues[col]);
            new_x.push(v);
            new_p.push(pv);
        }
        x = new_x;
        p = new_p;
    }
    if !(worst < RESIDUAL_TOL) {
        return Err(Error::Convergence { residual: worst });
    }
    x.truncate(k);
    theta.truncate(k);
    Ok((theta, x))
}

/// Modified Gram–Schmidt (twice), dropping vectors that become negligible.
fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        let n0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-10 * n0 {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    *vs = out;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Potential;

    fn harmonic(grid: &Grid, c: f64) -> Vec<f64> {
        Potential::harmonic(1.0, 1.0).eval_tilted(c, &grid.x()).unwrap()
    }

    #[test]
    fn harmonic_spectrum_dense() {
        let grid = Grid::centered(12.0, 1024).unwrap();
        let p = PhysicalParams::natural(0.0);
        let sol = solve_stationary(&grid, &harmonic(&grid, 0.0), &p, 11).unwrap();
        for (n, l) in sol.eigenvalues.iter().enumerate() {
            assert!((l - (n as f64 + 0.5)).abs() < 1e-8, "n = {n}: {l}");
        }
        assert!(sol.orthonormality_error() < 1e-10);
        assert!(sol.max_residual < 1e-8);
    }

    #[test]
    fn tilted_harmonic_shift() {
        let grid = Grid::centered(12.0, 512).unwrap();
        let c = 0.3;
        let p = PhysicalParams::natural(c);
        let sol = solve_stationary(&grid, &harmonic(&grid, c), &p, 6).unwrap();
        for (n, l) in sol.eigenvalues.iter().enumerate() {
            assert!((l - (n as f64 + 0.5 - c * c / 2.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn ground_state_is_nodeless() {
        let grid = Grid::centered(3.0, 256).unwrap();
        let p = PhysicalParams::natural(0.0);
        let u = Potential::lattice(20.0, 1.0).eval_tilted(0.5, &grid.x()).unwrap();
        let sol = solve_stationary(&grid, &u, &p, 3).unwrap();
        let phi = &sol.eigenfunctions[0];
        let peak = phi.iter().cloned().fold(0.0, f64::max);
        assert!(phi.iter().all(|v| *v > -1e-9 * peak));
    }

    #[test]
    fn iterative_matches_dense() {
        let grid = Grid::centered(10.0, 512).unwrap();
        let p = PhysicalParams::natural(0.1);
        let u: Vec<f64> = grid.x().iter().map(|x| 0.5 * x * x + 0.02 * x.powi(4) - 0.1 * x).collect();
        let dense = solve_stationary_with(&grid, &u, &p, 6, EigenMethod::Dense).unwrap();
        let iter = solve_stationary_with(&grid, &u, &p, 6, EigenMethod::Iterative).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&iter.eigenvalues) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        for (a, b) in dense.eigenfunctions.iter().zip(&iter.eigenfunctions) {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * grid.dx();
            assert!((dot.abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_dump_has_header() {
        let grid = Grid::centered(8.0, 128).unwrap();
        let p = PhysicalParams::natural(0.0);
        let sol = solve_stationary(&grid, &harmonic(&grid, 0.0), &p, 3).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,phi_0,phi_1,phi_2\n"));
        assert_eq!(text.lines().count(), 129);
    }

    #[test]
    fn rejects_mismatched_input() {
        let grid = Grid::centered(8.0, 128).unwrap();
        let p = PhysicalParams::natural(0.0);
        assert!(matches!(
            solve_stationary(&grid, &[0.0; 64], &p, 2),
            Err(Error::GridMismatch(_))
        ));
    }
}
