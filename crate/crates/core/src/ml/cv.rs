//! Stratified outer cross-validation, ablation over learner subsets, and
//! the leakage audit.
//!
//! Base-learner work depends only on `(outer fold, kind)`, never on the
//! other members of a configuration, so [`prepare`] computes it once and
//! every subset evaluated through [`evaluate_subset`] reuses it. The result
//! is identical to running each configuration on its own.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::folds::{split, stratified_kfold};
use super::learner::{canonical, config_key, LearnerKind};
use super::stack::{base_artifacts, combine_probabilities, fit_meta, BaseArtifacts, InnerRecord};
use super::table::FeatureTable;
use super::MlConfig;
use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, MetricSet};
use crate::{par, seed};

pub struct FoldArtifacts {
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub context: u64,
    /// In the order of [`CvArtifacts::kinds`].
    pub bases: Vec<BaseArtifacts>,
    pub test_probabilities: Vec<Vec<f64>>,
}

pub struct CvArtifacts {
    pub kinds: Vec<LearnerKind>,
    pub assignment: Vec<usize>,
    pub assignment_hash: String,
    pub folds: Vec<FoldArtifacts>,
}

pub fn assignment_hash(assignment: &[usize]) -> String {
    let mut h = Sha256::new();
    for &f in assignment {
        h.update((f as u32).to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

pub fn outer_assignment(cfg: &MlConfig, table: &FeatureTable, seed: u64) -> Result<Vec<usize>> {
    stratified_kfold(&table.labels, cfg.folds, seed::derive(seed, "outer/folds"))
}

/// Trains every `(outer fold, kind)` pair.
pub fn prepare(cfg: &MlConfig, kinds: &[LearnerKind], table: &FeatureTable, seed: u64) -> Result<CvArtifacts> {
    table.validate()?;
    let kinds = canonical(kinds);
    if kinds.is_empty() {
        return Err(Error::Input("at least one base learner is required".into()));
    }
    let assignment = outer_assignment(cfg, table, seed)?;
    let tasks: Vec<(usize, LearnerKind)> = (0..cfg.folds).flat_map(|f| kinds.iter().map(move |&k| (f, k))).collect();
    let mut results = par::try_map(&tasks, |&(f, kind)| -> Result<_> {
        let (train, test) = split(&assignment, f);
        let context = seed::derive(seed, &format!("outer/{f}"));
        let arts = base_artifacts(cfg, kind, &table.x, &table.labels, &train, context)?;
        let probs = arts.model.probabilities(&table.x.select_rows(&test));
        Ok((arts, probs))
    })?
    .into_iter();
    let mut folds = Vec::with_capacity(cfg.folds);
    for f in 0..cfg.folds {
        let (train, test) = split(&assignment, f);
        let mut bases = Vec::with_capacity(kinds.len());
        let mut test_probabilities = Vec::with_capacity(kinds.len());
        for _ in &kinds {
            let (a, p) = results.next().expect("one result per task");
            bases.push(a);
            test_probabilities.push(p);
        }
        folds.push(FoldArtifacts {
            fold: f,
            train,
            test,
            context: seed::derive(seed, &format!("outer/{f}")),
            bases,
            test_probabilities,
        });
    }
    Ok(CvArtifacts {
        kinds,
        assignment_hash: assignment_hash(&assignment),
        assignment,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_indices: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub predictions: Vec<u8>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    /// RBF width of the base SVM refit for this fold, when present.
    pub svm_gamma: Option<f64>,
    pub meta_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LeakageAudit {
    /// Predictions whose provenance was checked.
    pub checked: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config_key: String,
    pub kinds: Vec<LearnerKind>,
    pub n: usize,
    pub folds: Vec<FoldResult>,
    /// Metrics over the concatenated out-of-fold test predictions.
    pub pooled: Aggregate,
    /// Mean and population standard deviation of the per-fold metrics.
    pub fold_mean: MetricSet,
    pub fold_std: MetricSet,
    pub assignment_hash: String,
    pub leakage: LeakageAudit,
    #[serde(skip)]
    pub meta_records: Vec<Option<InnerRecord>>,
}

/// Evaluates the stack formed by `subset`, reusing prepared base artifacts.
pub fn evaluate_subset(arts: &CvArtifacts, subset: &[LearnerKind], table: &FeatureTable, cfg: &MlConfig) -> Result<EvaluationReport> {
    let subset = canonical(subset);
    let idx: Vec<usize> = subset
        .iter()
        .map(|k| {
            arts.kinds
                .iter()
                .position(|a| a == k)
                .ok_or_else(|| Error::Input(format!("{k} was not prepared")))
        })
        .collect::<Result<_>>()?;
    if idx.is_empty() {
        return Err(Error::Input("empty learner subset".into()));
    }
    let per_fold = par::try_map(&arts.folds, |fa| -> Result<_> {
        let probs_by_base: Vec<Vec<f64>> = idx.iter().map(|&i| fa.test_probabilities[i].clone()).collect();
        let (probabilities, meta_record, meta_gamma) = if idx.len() == 1 {
            (probs_by_base[0].clone(), None, None)
        } else {
            let refs: Vec<&BaseArtifacts> = idx.iter().map(|&i| &fa.bases[i]).collect();
            let meta = fit_meta(cfg, &refs, &table.labels, fa.context)?;
            (
                combine_probabilities(&probs_by_base, Some(&meta.model)),
                Some(meta.record),
                Some(meta.gamma),
            )
        };
        let labels: Vec<u8> = fa.test.iter().map(|&i| table.labels[i]).collect();
        let (metrics, confusion) = MetricSet::evaluate(&labels, &probabilities, cfg.threshold)?;
        let svm_gamma = idx
            .iter()
            .find(|&&i| arts.kinds[i] == LearnerKind::Svm)
            .and_then(|&i| fa.bases[i].model.learner.svm_gamma());
        Ok((
            FoldResult {
                fold: fa.fold,
                test_indices: fa.test.clone(),
                predictions: probabilities.iter().map(|&p| u8::from(p >= cfg.threshold)).collect(),
                probabilities,
                confusion,
                metrics,
                svm_gamma,
                meta_gamma,
            },
            meta_record,
        ))
    })?;
    let (folds, meta_records): (Vec<FoldResult>, Vec<Option<InnerRecord>>) = per_fold.into_iter().unzip();

    let mut all_labels = Vec::with_capacity(table.len());
    let mut all_probs = Vec::with_capacity(table.len());
    for f in &folds {
        all_labels.extend(f.test_indices.iter().map(|&i| table.labels[i]));
        all_probs.extend_from_slice(&f.probabilities);
    }
    let (pooled_metrics, pooled_cm) = MetricSet::evaluate(&all_labels, &all_probs, cfg.threshold)?;
    let sets: Vec<MetricSet> = folds.iter().map(|f| f.metrics).collect();
    let mean = MetricSet::mean(&sets).expect("at least one fold");
    let mean_arr = mean.to_array();
    let mut var = [0.0; 7];
    for s in &sets {
        for (v, (x, m)) in var.iter_mut().zip(s.to_array().iter().zip(&mean_arr)) {
            *v += (x - m).powi(2) / sets.len() as f64;
        }
    }
    let leakage = audit_leakage(arts, &subset, &meta_records);
    Ok(EvaluationReport {
        config_key: config_key(&subset),
        kinds: subset,
        n: table.len(),
        folds,
        pooled: Aggregate {
            confusion: pooled_cm,
            metrics: pooled_metrics,
        },
        fold_mean: mean,
        fold_std: MetricSet::from_array(var.map(f64::sqrt)),
        assignment_hash: arts.assignment_hash.clone(),
        leakage,
        meta_records,
    })
}

/// Outer cross-validation of one configuration.
pub fn evaluate_cv(cfg: &MlConfig, kinds: &[LearnerKind], table: &FeatureTable, seed: u64) -> Result<EvaluationReport> {
    let arts = prepare(cfg, kinds, table, seed)?;
    evaluate_subset(&arts, kinds, table, cfg)
}

/// Every non-empty subset of `kinds`, by bitmask order.
pub fn subsets(kinds: &[LearnerKind]) -> Vec<Vec<LearnerKind>> {
    let kinds = canonical(kinds);
    (1u32..(1 << kinds.len()))
        .map(|mask| {
            kinds
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &k)| k)
                .collect()
        })
        .collect()
}

pub fn ablate(cfg: &MlConfig, kinds: &[LearnerKind], table: &FeatureTable, seed: u64) -> Result<(CvArtifacts, Vec<EvaluationReport>)> {
    let arts = prepare(cfg, kinds, table, seed)?;
    let configs = subsets(kinds);
    let reports = par::try_map(&configs, |c| evaluate_subset(&arts, c, table, cfg))?;
    Ok((arts, reports))
}

fn mark(n: usize, rows: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in rows {
        m[i] = true;
    }
    m
}

fn record_sees(n: usize, rec: &InnerRecord) -> Vec<bool> {
    let mut seen = mark(n, &rec.trained_on);
    for c in &rec.calibration_trained_on {
        for &i in c {
            seen[i] = true;
        }
    }
    seen
}

/// Counts predictions produced by a model whose training rows, including
/// nested calibration rows, contain the predicted sample. Also flags out-of-
/// fold blocks that fail to cover each training row exactly once.
pub fn audit_leakage(arts: &CvArtifacts, subset: &[LearnerKind], meta_records: &[Option<InnerRecord>]) -> LeakageAudit {
    let n = arts.assignment.len();
    let mut audit = LeakageAudit::default();
    for (f, fa) in arts.folds.iter().enumerate() {
        let train = mark(n, &fa.train);
        for &t in &fa.test {
            audit.checked += 1;
            if train[t] {
                audit.violations += 1;
            }
        }
        for (k, base) in arts.kinds.iter().zip(&fa.bases) {
            if !subset.contains(k) {
                continue;
            }
            let final_seen = record_sees(n, &base.final_record);
            for &t in &fa.test {
                audit.checked += 1;
                if final_seen[t] {
                    audit.violations += 1;
                }
            }
            let mut covered = vec![0usize; n];
            for rec in &base.inner {
                let seen = record_sees(n, rec);
                for &h in &rec.held_out {
                    audit.checked += 1;
                    covered[h] += 1;
                    if seen[h] {
                        audit.violations += 1;
                    }
                }
            }
            for &r in &base.rows {
                if covered[r] != 1 {
                    audit.violations += 1;
                }
            }
        }
        if let Some(Some(meta)) = meta_records.get(f) {
            let seen = record_sees(n, meta);
            for &t in &fa.test {
                audit.checked += 1;
                if seen[t] {
                    audit.violations += 1;
                }
            }
        }
    }
    audit
}
