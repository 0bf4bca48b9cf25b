//! Out-of-fold stacking.
//!
//! Each base learner produces calibrated out-of-fold probabilities on the
//! training rows; an RBF-SVM, itself Platt-calibrated, is fit on that
//! `n × m` matrix. Base learners are then refit on every training row for
//! inference. A single-learner configuration uses the calibrated base
//! directly, without a meta level.

use serde::{Deserialize, Serialize};

use super::folds::{split, stratified_kfold};
use super::learner::{canonical, config_key, fit_calibrated, CalibratedModel, LearnerKind};
use super::matrix::Matrix;
use super::table::FeatureTable;
use super::MlConfig;
use crate::error::{Error, Result};
use crate::{par, seed};

/// Row sets behind one out-of-fold block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerRecord {
    pub held_out: Vec<usize>,
    pub trained_on: Vec<usize>,
    pub calibration_trained_on: Vec<Vec<usize>>,
}

/// Everything one base learner contributes for a given training set.
#[derive(Debug, Clone)]
pub struct BaseArtifacts {
    pub kind: LearnerKind,
    /// Global training rows; `oof[k]` belongs to `rows[k]`.
    pub rows: Vec<usize>,
    pub oof: Vec<f64>,
    pub inner: Vec<InnerRecord>,
    pub model: CalibratedModel,
    pub final_record: InnerRecord,
}

/// Out-of-fold assignment shared by every base on a training set.
pub fn oof_assignment(y: &[u8], rows: &[usize], folds: usize, context: u64) -> Result<Vec<usize>> {
    let sub: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    stratified_kfold(&sub, folds, seed::derive(context, "oof/folds"))
}

pub fn base_artifacts(cfg: &MlConfig, kind: LearnerKind, x: &Matrix, y: &[u8], rows: &[usize], context: u64) -> Result<BaseArtifacts> {
    let spec = cfg.spec(kind);
    let assignment = oof_assignment(y, rows, cfg.folds, context)?;
    let blocks = par::try_map_range(cfg.folds, |j| -> Result<_> {
        let (train, test) = split(&assignment, j);
        let train: Vec<usize> = train.iter().map(|&k| rows[k]).collect();
        let fit = fit_calibrated(
            &spec,
            x,
            y,
            &train,
            cfg.calibration_folds,
            seed::derive(context, &format!("{kind}/oof/{j}")),
        )?;
        let held: Vec<usize> = test.iter().map(|&k| rows[k]).collect();
        let probs = fit.model.probabilities(&x.select_rows(&held));
        Ok((test, probs, record(held, &fit)))
    })?;
    let mut oof = vec![f64::NAN; rows.len()];
    let mut inner = Vec::with_capacity(cfg.folds);
    for (positions, probs, rec) in blocks {
        for (&k, p) in positions.iter().zip(probs) {
            oof[k] = p;
        }
        inner.push(rec);
    }
    let fit = fit_calibrated(
        &spec,
        x,
        y,
        rows,
        cfg.calibration_folds,
        seed::derive(context, &format!("{kind}/final")),
    )?;
    Ok(BaseArtifacts {
        kind,
        rows: rows.to_vec(),
        oof,
        inner,
        final_record: record(Vec::new(), &fit),
        model: fit.model,
    })
}

fn record(held_out: Vec<usize>, fit: &super::learner::CalibratedFit) -> InnerRecord {
    InnerRecord {
        held_out,
        trained_on: fit.trained_on.clone(),
        calibration_trained_on: fit.calibration.iter().map(|(_, t)| t.clone()).collect(),
    }
}

/// Meta model fit on the columns of `bases` (all sharing the same rows).
pub struct MetaFit {
    pub model: CalibratedModel,
    pub record: InnerRecord,
    pub gamma: f64,
}

pub fn fit_meta(cfg: &MlConfig, bases: &[&BaseArtifacts], y: &[u8], context: u64) -> Result<MetaFit> {
    let rows = &bases[0].rows;
    let m = bases.len();
    let mut data = Vec::with_capacity(rows.len() * m);
    for k in 0..rows.len() {
        data.extend(bases.iter().map(|b| b.oof[k]));
    }
    let meta_x = Matrix::from_vec(rows.len(), m, data);
    let meta_y: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    let local: Vec<usize> = (0..rows.len()).collect();
    let key = config_key(&bases.iter().map(|b| b.kind).collect::<Vec<_>>());
    let fit = fit_calibrated(
        &cfg.meta_spec(),
        &meta_x,
        &meta_y,
        &local,
        cfg.calibration_folds,
        seed::derive(context, &format!("meta/{key}")),
    )?;
    let to_global = |v: &[usize]| v.iter().map(|&k| rows[k]).collect::<Vec<_>>();
    Ok(MetaFit {
        gamma: fit.model.learner.svm_gamma().unwrap_or(0.0),
        record: InnerRecord {
            held_out: Vec::new(),
            trained_on: to_global(&fit.trained_on),
            calibration_trained_on: fit.calibration.iter().map(|(_, t)| to_global(t)).collect(),
        },
        model: fit.model,
    })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub format_version: u32,
    pub schema_id: String,
    pub width: usize,
    pub kinds: Vec<LearnerKind>,
    pub bases: Vec<CalibratedModel>,
    /// Absent for single-learner configurations.
    pub meta: Option<CalibratedModel>,
    pub threshold: f64,
    pub seed: u64,
    /// Out-of-fold assignment over the training rows.
    pub fold_assignment: Vec<usize>,
    pub config: MlConfig,
}

/// Combines per-base probabilities through the meta level.
pub fn combine(bases: &[&CalibratedModel], meta: Option<&CalibratedModel>, x: &Matrix) -> Vec<f64> {
    let base_probs: Vec<Vec<f64>> = bases.iter().map(|b| b.probabilities(x)).collect();
    combine_probabilities(&base_probs, meta)
}

pub fn combine_probabilities(base_probs: &[Vec<f64>], meta: Option<&CalibratedModel>) -> Vec<f64> {
    match meta {
        None => base_probs[0].clone(),
        Some(m) => (0..base_probs[0].len())
            .map(|i| {
                let row: Vec<f64> = base_probs.iter().map(|p| p[i]).collect();
                m.probability_row(&row)
            })
            .collect(),
    }
}

/// Fits the stack on every row of `table`.
pub fn stack_fit(cfg: &MlConfig, kinds: &[LearnerKind], table: &FeatureTable, seed: u64) -> Result<StackedModel> {
    let kinds = canonical(kinds);
    if kinds.is_empty() {
        return Err(Error::Input("at least one base learner is required".into()));
    }
    let context = seed::derive(seed, "full");
    let rows: Vec<usize> = (0..table.len()).collect();
    let arts = par::try_map(&kinds, |&k| base_artifacts(cfg, k, &table.x, &table.labels, &rows, context))?;
    let meta = if arts.len() > 1 {
        let refs: Vec<&BaseArtifacts> = arts.iter().collect();
        Some(fit_meta(cfg, &refs, &table.labels, context)?.model)
    } else {
        None
    };
    Ok(StackedModel {
        format_version: MODEL_FORMAT_VERSION,
        schema_id: table.schema_id.clone(),
        width: table.width(),
        kinds,
        bases: arts.into_iter().map(|a| a.model).collect(),
        meta,
        threshold: cfg.threshold,
        seed,
        fold_assignment: oof_assignment(&table.labels, &rows, cfg.folds, context)?,
        config: cfg.clone(),
    })
}

impl StackedModel {
    /// Probabilities and thresholded labels.
    pub fn predict(&self, x: &Matrix) -> Result<(Vec<f64>, Vec<u8>)> {
        if x.cols() != self.width {
            return Err(Error::Schema {
                expected: format!("{} columns", self.width),
                found: format!("{} columns", x.cols()),
            });
        }
        let bases: Vec<&CalibratedModel> = self.bases.iter().collect();
        let p = combine(&bases, self.meta.as_ref(), x);
        let labels = p.iter().map(|&v| u8::from(v >= self.threshold)).collect();
        Ok((p, labels))
    }

    pub fn predict_table(&self, table: &FeatureTable) -> Result<(Vec<f64>, Vec<u8>)> {
        if table.schema_id != self.schema_id {
            return Err(Error::Schema {
                expected: self.schema_id.clone(),
                found: table.schema_id.clone(),
            });
        }
        self.predict(&table.x)
    }
}
