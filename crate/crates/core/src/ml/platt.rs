//! Sigmoid calibration `p(s) = 1 / (1 + exp(A·s + B))`.
//!
//! Parameters minimize the cross-entropy against smoothed targets
//! `(N₊+1)/(N₊+2)` and `1/(N₋+2)`, using Newton steps with backtracking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

/// Per-sample smoothed targets.
pub fn targets(labels: &[u8]) -> Vec<f64> {
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    labels.iter().map(|&l| if l == 1 { hi } else { lo }).collect()
}

/// Cross-entropy of the sigmoid at `(a, b)` against `targets`.
pub fn nll(scores: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    scores
        .iter()
        .zip(targets)
        .map(|(&s, &t)| {
            let z = a * s + b;
            if z >= 0.0 {
                t * z + (-z).exp().ln_1p()
            } else {
                (t - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

impl Platt {
    pub fn fit(scores: &[f64], labels: &[u8]) -> Result<Platt> {
        if scores.len() != labels.len() {
            return Err(Error::Training("calibration scores and labels differ in length".into()));
        }
        let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
        let neg = labels.len() as f64 - pos;
        if pos == 0.0 || neg == 0.0 {
            return Err(Error::Training("calibration needs both classes".into()));
        }
        let (lo, hi) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            return Ok(Platt {
                a: 0.0,
                b: (neg / pos).ln(),
            });
        }
        let t = targets(labels);
        let mut a = 0.0;
        let mut b = ((neg + 1.0) / (pos + 1.0)).ln();
        let mut f = nll(scores, &t, a, b);
        let eps = 1e-11 * labels.len() as f64;
        for _ in 0..100 {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
            for (&s, &ti) in scores.iter().zip(&t) {
                let z = a * s + b;
                // p = P(y = 1), q = 1 − p.
                let (p, q) = if z >= 0.0 {
                    let e = (-z).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = z.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += s * s * d2;
                h22 += d2;
                h21 += s * d2;
                let d1 = ti - p;
                g1 += s * d1;
                g2 += d1;
            }
            if g1.abs() < eps && g2.abs() < eps {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            let mut moved = false;
            while step >= 1e-10 {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = nll(scores, &t, na, nb);
                if nf < f + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    f = nf;
                    moved = true;
                    break;
                }
                step /= 2.0;
            }
            if !moved {
                break;
            }
        }
        Ok(Platt { a, b })
    }

    pub fn probability(&self, score: f64) -> f64 {
        let z = self.a * score + self.b;
        let p = if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        };
        p.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    }
}

/// Calibrated outputs stay inside `(0, 1)`.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_scores_center_at_half() {
        let scores: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let p = Platt::fit(&scores, &labels).unwrap();
        assert!((p.probability(0.0) - 0.5).abs() < 0.01);
        assert!(p.a < 0.0);
        assert!(p.probability(-0.3) < p.probability(0.2));
    }

    #[test]
    fn constant_scores_match_base_rate() {
        let p = Platt::fit(&[0.4; 10], &[1, 1, 1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(p.a, 0.0);
        assert!((p.probability(123.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn output_is_bounded() {
        let p = Platt { a: -50.0, b: 0.0 };
        let hi = p.probability(100.0);
        let lo = p.probability(-100.0);
        assert!(hi < 1.0 && lo > 0.0);
    }
}
