//! Symmetric tridiagonal eigenproblems: Householder reduction of dense
//! matrices, Sturm-sequence bisection for the lowest eigenvalues and inverse
//! iteration for their vectors.

/// Dense symmetric matrix reduced to tridiagonal form `Q^T A Q`, keeping the
/// Householder vectors to map eigenvectors back.
pub(super) struct Tridiagonalized {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    reflectors: Vec<Vec<f64>>,
}

impl Tridiagonalized {
    /// Consumes a row-major `n x n` symmetric matrix.
    pub fn reduce(mut a: Vec<f64>, n: usize) -> Self {
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![0.0; n];
        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1;
            let mut v: Vec<f64> = (k + 1..n).map(|i| a[i * n + k]).collect();
            let xnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            diag[k] = a[k * n + k];
            if xnorm == 0.0 {
                off[k] = 0.0;
                reflectors.push(vec![0.0; m]);
                continue;
            }
            let alpha = if v[0] > 0.0 { -xnorm } else { xnorm };
            v[0] -= alpha;
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= vnorm);
            off[k] = alpha;

            // p = A_sub v
            for (ii, pi) in p[..m].iter_mut().enumerate() {
                let row = &a[(k + 1 + ii) * n + k + 1..(k + 1 + ii) * n + n];
                *pi = row.iter().zip(&v).map(|(x, y)| x * y).sum();
            }
            let kk: f64 = p[..m].iter().zip(&v).map(|(x, y)| x * y).sum();
            // w = p - K v ; A_sub -= 2 (v w^T + w v^T)
            let w: Vec<f64> = p[..m].iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();
            for ii in 0..m {
                let (vi, wi) = (2.0 * v[ii], 2.0 * w[ii]);
                let row = &mut a[(k + 1 + ii) * n + k + 1..(k + 1 + ii) * n + n];
                for ((r, vj), wj) in row.iter_mut().zip(&v).zip(&w) {
                    *r -= vi * wj + wi * vj;
                }
            }
            reflectors.push(v);
        }
        if n >= 2 {
            diag[n - 2] = a[(n - 2) * n + n - 2];
            off[n - 2] = a[(n - 1) * n + n - 2];
        }
        if n >= 1 {
            diag[n - 1] = a[n * n - 1];
        }
        Self {
            diag,
            off,
            reflectors,
        }
    }

    /// Maps an eigenvector of the tridiagonal matrix back to the original
    /// basis.
    pub fn back_transform(&self, y: &mut [f64]) {
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            let tail = &mut y[k + 1..];
            let dot: f64 = tail.iter().zip(v).map(|(a, b)| a * b).sum();
            tail.iter_mut().zip(v).for_each(|(a, b)| *a -= 2.0 * dot * b);
        }
    }
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        if q.abs() < tiny {
            q = -tiny;
        }
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenvalues by bisection.
pub(super) fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;
    let norm = lo.abs().max(hi.abs());
    (0..k.min(n))
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            while b - a > 2.0 * f64::EPSILON * norm.max(a.abs().max(b.abs())) {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(diag, off, mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Solves `(T - shift) x = rhs` by LU with partial pivoting.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = diag.len();
    let eps = f64::EPSILON * diag.iter().chain(off).fold(1.0f64, |m, v| m.max(v.abs()));
    // U has three bands after pivoting
    let mut u0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut u1: Vec<f64> = off.to_vec();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut low: Vec<f64> = off.to_vec();
    low.push(0.0);
    let mut mult = vec![0.0; n];
    let mut swapped = vec![false; n];
    for i in 0..n.saturating_sub(1) {
        if low[i].abs() > u0[i].abs() {
            // swap rows i and i+1
            swapped[i] = true;
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = low[i];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            let m = a0 / u0[i];
            mult[i] = m;
            u0[i + 1] = a1 - m * u1[i];
            u1[i + 1] = a2 - m * u2[i];
        } else {
            if u0[i] == 0.0 {
                u0[i] = eps;
            }
            let m = low[i] / u0[i];
            mult[i] = m;
            u0[i + 1] -= m * u1[i];
        }
    }
    if u0[n - 1] == 0.0 {
        u0[n - 1] = eps;
    }
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            rhs.swap(i, i + 1);
        }
        rhs[i + 1] -= mult[i] * rhs[i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * rhs[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * rhs[i + 2];
        }
        rhs[i] = s / u0[i];
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Unit eigenvectors for the given (sorted) eigenvalues. Vectors whose
/// eigenvalues cluster are kept orthogonal to each other.
pub(super) fn eigenvectors(diag: &[f64], off: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let scale = diag.iter().chain(off).fold(0.0f64, |m, v| m.max(v.abs()));
    let cluster_gap = 1e-3 * scale.max(1.0);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    for (j, &lam) in values.iter().enumerate() {
        if j > 0 && lam - values[j - 1] > cluster_gap {
            cluster_start = j;
        }
        // deterministic, non-degenerate start vector
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (j as f64 + 1.7)).sin())
            .collect();
        normalize(&mut v);
        for _ in 0..4 {
            solve_shifted(diag, off, lam, &mut v);
            for prev in &out[cluster_start..j] {
                let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
            }
            normalize(&mut v);
        }
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_from(diag: &[f64], off: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = diag[i];
            if i + 1 < n {
                a[i * n + i + 1] = off[i];
                a[(i + 1) * n + i] = off[i];
            }
        }
        a
    }

    #[test]
    fn laplacian_spectrum() {
        // -d^2 with Dirichlet ends: 2 - 2 cos(j pi / (n+1))
        let n = 200;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let vals = lowest_eigenvalues(&diag, &off, 5);
        for (j, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
        let vecs = eigenvectors(&diag, &off, &vals);
        let a = dense_from(&diag, &off);
        for (v, lam) in vecs.iter().zip(&vals) {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                assert!((av - lam * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn householder_preserves_spectrum() {
        let n = 40;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5 + if i == j { i as f64 } else { 0.0 };
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let orig = a.clone();
        let tri = Tridiagonalized::reduce(a, n);
        let vals = lowest_eigenvalues(&tri.diag, &tri.off, 6);
        let vecs = eigenvectors(&tri.diag, &tri.off, &vals);
        for (mut y, lam) in vecs.into_iter().zip(&vals) {
            tri.back_transform(&mut y);
            for i in 0..n {
                let av: f64 = (0..n).map(|j| orig[i * n + j] * y[j]).sum();
                assert!((av - lam * y[i]).abs() < 1e-11, "residual at {i}");
            }
        }
    }

    #[test]
    fn degenerate_pair_stays_orthogonal() {
        // two decoupled identical blocks
        let diag = vec![2.0, 2.0, 2.0, 2.0, 2.0, 2.0];
        let off = vec![-1.0, -1.0, 0.0, -1.0, -1.0];
        let vals = lowest_eigenvalues(&diag, &off, 2);
        assert!((vals[0] - vals[1]).abs() < 1e-14);
        let vecs = eigenvectors(&diag, &off, &vals);
        let dot: f64 = vecs[0].iter().zip(&vecs[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
    }
}
