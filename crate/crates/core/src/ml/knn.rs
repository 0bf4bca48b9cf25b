use serde::{Deserialize, Serialize};

use super::matrix::{squared_distance, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Euclidean k-nearest-neighbour vote. Equal distances are broken by
/// training order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<u8>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[u8], params: &KnnParams) -> Self {
        Self {
            k: params.k.clamp(1, x.rows().max(1)),
            x: x.clone(),
            y: y.to_vec(),
        }
    }

    /// Fraction of positive labels among the `k` nearest training rows.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self.x.iter_rows().enumerate().map(|(i, r)| (squared_distance(r, row), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d[..self.k].iter().filter(|(_, i)| self.y[*i] == 1).count() as f64 / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_fraction_and_index_ties() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![-1.0], vec![5.0]]);
        let m = KnnModel::fit(&x, &[1, 0, 1, 0], &KnnParams { k: 2 });
        // Rows 1 and 2 tie at distance 1 from the query; index 1 wins.
        assert_eq!(m.score_row(&[0.0]), 0.5);
        assert_eq!(m.score_row(&[-0.9]), 1.0);
        let all = KnnModel::fit(&x, &[1, 0, 1, 0], &KnnParams { k: 50 });
        assert_eq!(all.k, 4);
        assert_eq!(all.score_row(&[0.0]), 0.5);
    }
}
