//! L2-regularized logistic regression.
//!
//! Minimizes `Σ log(1 + e^{zᵢ}) − yᵢ·zᵢ + λ/2·‖w‖²` with `zᵢ = w·xᵢ + b`;
//! the intercept is not penalized.

use serde::{Deserialize, Serialize};

use super::gbdt::sigmoid;
use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Newton direction with Armijo backtracking.
    Newton,
    /// Steepest descent with Armijo backtracking.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    pub lambda: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub solver: Solver,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tol: 1e-6,
            max_iterations: 10_000,
            solver: Solver::Newton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn objective(x: &Matrix, y: &[u8], w: &[f64], b: f64, lambda: f64) -> f64 {
    let data: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(r, &t)| {
            let z = dot(w, r) + b;
            softplus(z) - t as f64 * z
        })
        .sum();
    data + 0.5 * lambda * dot(w, w)
}

/// `(∂/∂w, ∂/∂b)`.
pub fn gradient(x: &Matrix, y: &[u8], w: &[f64], b: f64, lambda: f64) -> (Vec<f64>, f64) {
    let mut gw: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    let mut gb = 0.0;
    for (r, &t) in x.iter_rows().zip(y) {
        let e = sigmoid(dot(w, r) + b) - t as f64;
        for (g, v) in gw.iter_mut().zip(r) {
            *g += e * v;
        }
        gb += e;
    }
    (gw, gb)
}

fn norm(gw: &[f64], gb: f64) -> f64 {
    (dot(gw, gw) + gb * gb).sqrt()
}

/// Solves `A·x = b` for symmetric positive definite `A` (row-major, `n×n`).
fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(b)
}

fn newton_direction(x: &Matrix, w: &[f64], b: f64, lambda: f64, gw: &[f64], gb: f64) -> Option<(Vec<f64>, f64)> {
    let p = x.cols();
    let m = p + 1;
    let mut h = vec![0.0; m * m];
    for r in x.iter_rows() {
        let s = sigmoid(dot(w, r) + b);
        let s = s * (1.0 - s);
        for i in 0..p {
            let si = s * r[i];
            for j in 0..=i {
                h[i * m + j] += si * r[j];
            }
            h[p * m + i] += si;
        }
        h[p * m + p] += s;
    }
    for i in 0..m {
        for j in 0..i {
            h[j * m + i] = h[i * m + j];
        }
    }
    for i in 0..p {
        h[i * m + i] += lambda;
    }
    h[p * m + p] += 1e-12;
    let mut rhs: Vec<f64> = gw.iter().map(|g| -g).collect();
    rhs.push(-gb);
    let d = cholesky_solve(h, rhs, m)?;
    Some((d[..p].to_vec(), d[p]))
}

pub fn fit(x: &Matrix, y: &[u8], params: &LogRegParams) -> Result<LogRegModel> {
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::Training("logistic regression needs both classes".into()));
    }
    let p = x.cols();
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut f = objective(x, y, &w, b, params.lambda);
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let (mut gw, mut gb) = gradient(x, y, &w, b, params.lambda);
    while norm(&gw, gb) >= params.tol && iterations < params.max_iterations {
        iterations += 1;
        let (dw, db) = match params.solver {
            Solver::Newton => newton_direction(x, &w, b, params.lambda, &gw, gb)
                .unwrap_or_else(|| (gw.iter().map(|g| -g).collect(), -gb)),
            Solver::GradientDescent => (gw.iter().map(|g| -g).collect(), -gb),
        };
        let slope = dot(&gw, &dw) + gb * db;
        let mut t = match params.solver {
            Solver::Newton => 1.0,
            Solver::GradientDescent => (step * 2.0).min(1.0),
        };
        let mut accepted = false;
        while t > 1e-20 {
            let nw: Vec<f64> = w.iter().zip(&dw).map(|(a, d)| a + t * d).collect();
            let nb = b + t * db;
            let nf = objective(x, y, &nw, nb, params.lambda);
            if nf <= f + 1e-4 * t * slope {
                w = nw;
                b = nb;
                f = nf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        step = t;
        (gw, gb) = gradient(x, y, &w, b, params.lambda);
    }
    Ok(LogRegModel {
        weights: w,
        bias: b,
        iterations,
        gradient_norm: norm(&gw, gb),
    })
}

impl LogRegModel {
    /// Linear margin `w·x + b`.
    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }
}
