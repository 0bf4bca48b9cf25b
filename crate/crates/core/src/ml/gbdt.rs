//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits a depth-limited tree to the gradient/hessian pair of the
//! current margins using second-order gain with L2 leaf shrinkage, and grows
//! it level by level over feature orders sorted once per fit.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::tree::{Node, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian mass on each side of a split.
    pub min_child_weight: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    pub base_margin: f64,
    pub trees: Vec<Tree>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Default)]
struct NodeStats {
    g: f64,
    h: f64,
}

#[derive(Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn grow(x: &Matrix, order: &[Vec<usize>], grad: &[f64], hess: &[f64], p: &GbdtParams) -> Tree {
    let n = x.rows();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    // Current node slot per sample; `usize::MAX` once the sample sits in a
    // finalized leaf.
    let mut at = vec![0usize; n];
    let mut frontier = vec![0usize];
    for depth in 0..=p.max_depth {
        let mut index = vec![usize::MAX; nodes.len()];
        for (k, &s) in frontier.iter().enumerate() {
            index[s] = k;
        }
        let lookup = |slot: usize| (slot != usize::MAX && index[slot] != usize::MAX).then(|| index[slot]);
        let mut totals = vec![NodeStats::default(); frontier.len()];
        for i in 0..n {
            if let Some(k) = lookup(at[i]) {
                totals[k].g += grad[i];
                totals[k].h += hess[i];
            }
        }
        let mut best: Vec<Option<BestSplit>> = vec![None; frontier.len()];
        if depth < p.max_depth {
            for (f, sorted) in order.iter().enumerate() {
                let mut left = vec![NodeStats::default(); frontier.len()];
                let mut last: Vec<Option<f64>> = vec![None; frontier.len()];
                for &i in sorted {
                    let Some(k) = lookup(at[i]) else { continue };
                    let v = x.get(i, f);
                    if let Some(prev) = last[k] {
                        if v > prev {
                            let l = left[k];
                            let t = totals[k];
                            let (rg, rh) = (t.g - l.g, t.h - l.h);
                            if l.h >= p.min_child_weight && rh >= p.min_child_weight {
                                let gain = score(l.g, l.h, p.lambda) + score(rg, rh, p.lambda) - score(t.g, t.h, p.lambda);
                                if gain > 1e-12 && best[k].is_none_or(|b| gain > b.gain) {
                                    let mid = prev + (v - prev) / 2.0;
                                    best[k] = Some(BestSplit {
                                        gain,
                                        feature: f,
                                        threshold: if mid < v { mid } else { prev },
                                    });
                                }
                            }
                        }
                    }
                    left[k].g += grad[i];
                    left[k].h += hess[i];
                    last[k] = Some(v);
                }
            }
        }
        let mut next = Vec::new();
        let mut child_of = vec![None; nodes.len()];
        for (k, &slot) in frontier.iter().enumerate() {
            match best[k] {
                Some(b) => {
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[slot] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left: l,
                        right: r,
                    };
                    child_of[slot] = Some((b.feature, b.threshold, l, r));
                    next.extend([l, r]);
                }
                None => {
                    let t = totals[k];
                    nodes[slot] = Node::Leaf {
                        value: -p.learning_rate * t.g / (t.h + p.lambda),
                    };
                }
            }
        }
        for i in 0..n {
            let split = if at[i] == usize::MAX { None } else { child_of[at[i]] };
            at[i] = match split {
                Some((f, t, l, r)) => {
                    if x.get(i, f) <= t {
                        l
                    } else {
                        r
                    }
                }
                None => usize::MAX,
            };
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Tree { nodes }
}

impl Gbdt {
    pub fn fit(x: &Matrix, y: &[u8], params: &GbdtParams) -> Gbdt {
        let n = x.rows();
        let rate = y.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        let base_margin = (rate / (1.0 - rate)).ln();
        let order: Vec<Vec<usize>> = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
                idx
            })
            .collect();
        let mut margin = vec![base_margin; n];
        let mut trees = Vec::with_capacity(params.n_trees);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..params.n_trees {
            for i in 0..n {
                let pr = sigmoid(margin[i]);
                grad[i] = pr - y[i] as f64;
                hess[i] = pr * (1.0 - pr);
            }
            let tree = grow(x, &order, &grad, &hess, params);
            for (i, m) in margin.iter_mut().enumerate() {
                *m += tree.predict(x.row(i));
            }
            trees.push(tree);
        }
        Gbdt { base_margin, trees }
    }

    /// Raw margin.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        self.base_margin + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}
