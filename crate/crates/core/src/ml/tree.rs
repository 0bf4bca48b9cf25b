//! Gini CART trees and the two forest variants built on them.
//!
//! `Best` scans every midpoint between consecutive distinct values (random
//! forest); `Random` draws one uniform threshold per feature (extra trees).
//! Features are visited in a shuffled order until `max_features`
//! non-constant ones have been scored, so a node only becomes a leaf when
//! every feature is constant on it.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::{par, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (p as f64).sqrt().floor() as usize,
            MaxFeatures::All => p,
            MaxFeatures::Count(c) => c.min(p),
        };
        m.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub rule: SplitRule,
    pub max_features: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

fn weighted_gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        0.0
    } else {
        let neg = total - pos;
        total - (pos * pos + neg * neg) / total
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn best_threshold(x: &Matrix, y: &[u8], samples: &[usize], feature: usize, min_leaf: usize, total_pos: f64) -> Option<(f64, f64)> {
    let mut vals: Vec<(f64, u8)> = samples.iter().map(|&i| (x.get(i, feature), y[i])).collect();
    vals.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let n = vals.len() as f64;
    let mut best: Option<(f64, f64)> = None;
    let mut left_pos = 0.0;
    for k in 0..vals.len() - 1 {
        left_pos += vals[k].1 as f64;
        if vals[k].0 == vals[k + 1].0 {
            continue;
        }
        let nl = (k + 1) as f64;
        if (k + 1) < min_leaf || vals.len() - (k + 1) < min_leaf {
            continue;
        }
        let imp = weighted_gini(left_pos, nl) + weighted_gini(total_pos - left_pos, n - nl);
        if best.is_none_or(|(_, b)| imp < b) {
            let (lo, hi) = (vals[k].0, vals[k + 1].0);
            let mid = lo + (hi - lo) / 2.0;
            best = Some((if mid < hi { mid } else { lo }, imp));
        }
    }
    best
}

fn random_threshold(
    x: &Matrix,
    y: &[u8],
    samples: &[usize],
    feature: usize,
    (lo, hi): (f64, f64),
    min_leaf: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, f64)> {
    let t = rng.random_range(lo..hi);
    let (mut nl, mut pl, mut pr) = (0usize, 0.0, 0.0);
    for &i in samples {
        let pos = y[i] as f64;
        if x.get(i, feature) <= t {
            nl += 1;
            pl += pos;
        } else {
            pr += pos;
        }
    }
    let nr = samples.len() - nl;
    if nl < min_leaf || nr < min_leaf {
        return None;
    }
    Some((t, weighted_gini(pl, nl as f64) + weighted_gini(pr, nr as f64)))
}

/// Grows one classification tree on `samples` (duplicates allowed); leaves
/// hold the positive fraction.
pub fn grow_classifier(x: &Matrix, y: &[u8], samples: Vec<usize>, params: &TreeParams, rng: &mut ChaCha8Rng) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, samples, 0usize)];
    let mut features: Vec<usize> = (0..x.cols()).collect();
    while let Some((slot, samples, depth)) = stack.pop() {
        let pos = samples.iter().filter(|&&i| y[i] == 1).count() as f64;
        let n = samples.len() as f64;
        let leaf = Node::Leaf { value: pos / n };
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        if pos == 0.0 || pos == n || samples.len() < 2 * params.min_samples_leaf.max(1) || !depth_ok {
            nodes[slot] = leaf;
            continue;
        }
        features.shuffle(rng);
        let mut best: Option<Candidate> = None;
        let mut scored = 0;
        for &f in &features {
            if scored >= params.max_features {
                break;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &samples {
                let v = x.get(i, f);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo >= hi {
                continue;
            }
            scored += 1;
            let found = match params.rule {
                SplitRule::Best => best_threshold(x, y, &samples, f, params.min_samples_leaf, pos),
                SplitRule::Random => random_threshold(x, y, &samples, f, (lo, hi), params.min_samples_leaf, rng),
            };
            if let Some((threshold, impurity)) = found {
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        let Some(c) = best else {
            nodes[slot] = leaf;
            continue;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| x.get(i, c.feature) <= c.threshold);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[slot] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left: li,
            right: ri,
        };
        stack.push((ri, right, depth + 1));
        stack.push((li, left, depth + 1));
    }
    Tree { nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub rule: SplitRule,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl ForestParams {
    pub fn random_forest() -> Self {
        Self {
            n_trees: 300,
            bootstrap: true,
            rule: SplitRule::Best,
            max_features: MaxFeatures::Sqrt,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }

    pub fn extra_trees() -> Self {
        Self {
            bootstrap: false,
            rule: SplitRule::Random,
            ..Self::random_forest()
        }
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        Self::random_forest()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(x: &Matrix, y: &[u8], params: &ForestParams, seed: u64) -> Forest {
        let tp = TreeParams {
            rule: params.rule,
            max_features: params.max_features.resolve(x.cols()),
            min_samples_leaf: params.min_samples_leaf,
            max_depth: params.max_depth,
        };
        let n = x.rows();
        let trees = par::map_range(params.n_trees, |t| {
            let mut rng = seed::rng(seed, &format!("tree/{t}"));
            let samples = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_classifier(x, y, samples, &tp, &mut rng)
        });
        Forest { trees }
    }

    /// Mean leaf probability.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}
