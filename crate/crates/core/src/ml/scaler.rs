use serde::{Deserialize, Serialize};

use super::matrix::Matrix;

const MIN_STD: f64 = 1e-12;

/// Per-column z-score. Columns with zero spread keep their raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScore {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let (mean, std) = mean
            .into_iter()
            .zip(var)
            .map(|(m, v)| {
                let s = (v / n).sqrt();
                if s < MIN_STD {
                    (0.0, 1.0)
                } else {
                    (m, s)
                }
            })
            .unzip();
        Self { mean, std }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            let r = self.apply_row(x.row(i));
            out.row_mut(i).copy_from_slice(&r);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizes_and_passes_constants() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]);
        let s = ZScore::fit(&x);
        let t = s.apply(&x);
        let col: Vec<f64> = (0..3).map(|i| t.get(i, 0)).collect();
        let mean = col.iter().sum::<f64>() / 3.0;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
        assert!(mean.abs() < 1e-12 && (std - 1.0).abs() < 1e-12);
        assert!((0..3).all(|i| t.get(i, 1) == 5.0));
    }

    #[test]
    fn test_rows_use_training_statistics() {
        let s = ZScore::fit(&Matrix::from_rows(&[vec![0.0], vec![2.0]]));
        // A sentinel far outside the training range keeps its offset.
        assert_eq!(s.apply_row(&[1001.0]), vec![1000.0]);
    }
}
