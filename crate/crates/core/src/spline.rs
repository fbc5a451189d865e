//! Cubic interpolating splines for tabulated potentials and trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndCondition {
    /// Zero second derivative.
    Natural,
    /// Prescribed first derivatives at the two ends.
    Clamped { start: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>, end: EndCondition) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::InvalidParameter(format!(
                "spline needs at least 3 matching samples, got {} x and {} y",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "spline abscissae must be strictly increasing".into(),
            ));
        }
        // tridiagonal system for the knot second derivatives
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        match end {
            EndCondition::Natural => {
                diag[0] = 1.0;
                diag[n - 1] = 1.0;
            }
            EndCondition::Clamped { start, end } => {
                let h0 = x[1] - x[0];
                diag[0] = h0 / 3.0;
                sup[0] = h0 / 6.0;
                rhs[0] = (y[1] - y[0]) / h0 - start;
                let hn = x[n - 1] - x[n - 2];
                sub[n - 1] = hn / 6.0;
                diag[n - 1] = hn / 3.0;
                rhs[n - 1] = end - (y[n - 1] - y[n - 2]) / hn;
            }
        }
        let m = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        Ok(Self { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::DomainExceeded { x, lo, hi });
        }
        let idx = self.x.partition_point(|&k| k <= x);
        Ok(idx.clamp(1, self.x.len() - 1) - 1)
    }

    /// Value (`order` 0), slope (1) or curvature (2) at `x`.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        let i = self.locate(x)?;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - x) / h;
        let b = (x - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        Ok(match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0,
            2 => a * m0 + b * m1,
            _ => 0.0,
        })
    }

    /// Exact integral of the spline over its whole domain.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let h = w[1] - w[0];
                0.5 * h * (self.y[i] + self.y[i + 1]) - h.powi(3) / 24.0 * (self.m[i] + self.m[i + 1])
            })
            .sum()
    }
}

/// Thomas algorithm; the matrices built here are diagonally dominant.
pub(crate) fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    out
}
