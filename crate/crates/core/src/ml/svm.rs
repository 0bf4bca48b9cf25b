//! C-SVC with an RBF kernel, solved by SMO with second-order working-set
//! selection on a precomputed kernel matrix.

use serde::{Deserialize, Serialize};

use super::matrix::{squared_distance, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (p · var(X))` over every training entry.
    Scale,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

impl Gamma {
    pub fn resolve(self, x: &Matrix) -> f64 {
        match self {
            Gamma::Fixed(g) => g,
            Gamma::Scale => {
                let var = x.pooled_variance();
                let p = x.cols().max(1) as f64;
                if var > 0.0 {
                    1.0 / (p * var)
                } else {
                    1.0 / p
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub bias: f64,
    pub support: Matrix,
    /// `αᵢ·yᵢ` for each support vector, `y ∈ {−1, +1}`.
    pub coef: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: SvmModel,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Maximal KKT violation `m(α) − M(α)` at exit.
    pub kkt_gap: f64,
}

const TAU: f64 = 1e-12;

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

pub fn fit(x: &Matrix, labels: &[u8], params: &SvmParams) -> Result<SvmFit> {
    let n = x.rows();
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::Training("SVM needs both classes".into()));
    }
    let gamma = params.gamma.resolve(x);
    let c = params.c;
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(gamma, x.row(i), x.row(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut kkt_gap;
    loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let b = g_max - v;
            if b > 0.0 {
                let a = k[i_sel * n + i_sel] + k[t * n + t] - 2.0 * k[i_sel * n + t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = t;
                }
            }
        }
        kkt_gap = g_max - g_min;
        if kkt_gap < params.tol || j_sel == usize::MAX || iterations >= params.max_iterations {
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k[i * n + i] + k[j * n + j] + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[i * n + i] + k[j * n + j] - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // Offset from free multipliers, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let model = SvmModel {
        gamma,
        bias: -rho,
        support: x.select_rows(&sv),
        coef: sv.iter().map(|&t| alpha[t] * y[t]).collect(),
    };
    Ok(SvmFit {
        model,
        alpha,
        iterations,
        kkt_gap,
    })
}

impl SvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support
            .iter_rows()
            .zip(&self.coef)
            .map(|(s, c)| c * rbf(self.gamma, s, row))
            .sum::<f64>()
            + self.bias
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let t = i as f64 * 0.7;
            rows.push(vec![t.cos() * 0.5 - 2.0, t.sin() * 0.5]);
            y.push(0);
            rows.push(vec![t.cos() * 0.5 + 2.0, t.sin() * 0.5]);
            y.push(1);
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn separates_blobs_and_meets_kkt() {
        let (x, y) = blobs();
        let fit = fit(&x, &y, &SvmParams::default()).unwrap();
        assert!(fit.kkt_gap < 1e-3);
        for i in 0..x.rows() {
            assert_eq!(u8::from(fit.model.decision(x.row(i)) > 0.0), y[i]);
        }
        let sum: f64 = fit.alpha.iter().zip(&y).map(|(a, &l)| if l == 1 { *a } else { -*a }).sum();
        assert!(sum.abs() < 1e-9);
        assert!(fit.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn scale_gamma_uses_pooled_variance() {
        let x = Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert_eq!(Gamma::Scale.resolve(&x), 0.5);
        assert_eq!(Gamma::Scale.resolve(&Matrix::from_rows(&[vec![1.0, 1.0]])), 0.5);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        assert!(fit(&x, &[1, 1], &SvmParams::default()).is_err());
    }
}
