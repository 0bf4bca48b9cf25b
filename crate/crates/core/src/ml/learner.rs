//! Level-0 learner dispatch and nested Platt calibration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::folds::{split, stratified_kfold};
use super::gbdt::{Gbdt, GbdtParams};
use super::knn::{KnnModel, KnnParams};
use super::logreg::{self, LogRegModel, LogRegParams};
use super::matrix::Matrix;
use super::platt::Platt;
use super::scaler::ZScore;
use super::svm::{self, SvmModel, SvmParams};
use super::tree::{Forest, ForestParams};
use super::MlConfig;
use crate::error::{Error, Result};
use crate::{par, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Rf,
    Et,
    Svm,
    Logreg,
    Knn,
    Gbdt,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 6] = [
        LearnerKind::Rf,
        LearnerKind::Et,
        LearnerKind::Svm,
        LearnerKind::Logreg,
        LearnerKind::Knn,
        LearnerKind::Gbdt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Rf => "rf",
            LearnerKind::Et => "et",
            LearnerKind::Svm => "svm",
            LearnerKind::Logreg => "logreg",
            LearnerKind::Knn => "knn",
            LearnerKind::Gbdt => "gbdt",
        }
    }

    pub fn needs_standardization(self) -> bool {
        matches!(self, LearnerKind::Svm | LearnerKind::Logreg | LearnerKind::Knn)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Input(format!("unknown model '{s}' (expected rf, et, svm, logreg, knn, gbdt)")))
    }
}

/// Canonically ordered, deduplicated kinds joined with `+`.
pub fn config_key(kinds: &[LearnerKind]) -> String {
    canonical(kinds).iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
}

pub fn canonical(kinds: &[LearnerKind]) -> Vec<LearnerKind> {
    let mut v = kinds.to_vec();
    v.sort();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerParams {
    Forest(ForestParams),
    Svm(SvmParams),
    Logreg(LogRegParams),
    Knn(KnnParams),
    Gbdt(GbdtParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLearnerSpec {
    pub kind: LearnerKind,
    pub params: LearnerParams,
    pub needs_standardization: bool,
}

impl MlConfig {
    pub fn spec(&self, kind: LearnerKind) -> BaseLearnerSpec {
        let params = match kind {
            LearnerKind::Rf => LearnerParams::Forest(self.rf.clone()),
            LearnerKind::Et => LearnerParams::Forest(self.et.clone()),
            LearnerKind::Svm => LearnerParams::Svm(self.svm.clone()),
            LearnerKind::Logreg => LearnerParams::Logreg(self.logreg.clone()),
            LearnerKind::Knn => LearnerParams::Knn(self.knn.clone()),
            LearnerKind::Gbdt => LearnerParams::Gbdt(self.gbdt.clone()),
        };
        BaseLearnerSpec {
            kind,
            params,
            needs_standardization: kind.needs_standardization(),
        }
    }

    /// RBF-SVM over calibrated base probabilities, unscaled.
    pub fn meta_spec(&self) -> BaseLearnerSpec {
        BaseLearnerSpec {
            kind: LearnerKind::Svm,
            params: LearnerParams::Svm(self.meta.clone()),
            needs_standardization: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LearnerModel {
    Forest(Forest),
    Svm(SvmModel),
    Logreg(LogRegModel),
    Knn(KnnModel),
    Gbdt(Gbdt),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedLearner {
    pub kind: LearnerKind,
    pub scaler: Option<ZScore>,
    pub model: LearnerModel,
}

pub fn fit_learner(spec: &BaseLearnerSpec, x: &Matrix, y: &[u8], seed: u64) -> Result<TrainedLearner> {
    if x.rows() < 2 || y.iter().all(|&l| l == y[0]) {
        return Err(Error::Training(format!("{} needs at least two rows from both classes", spec.kind)));
    }
    let scaler = spec.needs_standardization.then(|| ZScore::fit(x));
    let scaled;
    let data = match &scaler {
        Some(s) => {
            scaled = s.apply(x);
            &scaled
        }
        None => x,
    };
    let model = match &spec.params {
        LearnerParams::Forest(p) => LearnerModel::Forest(Forest::fit(data, y, p, seed)),
        LearnerParams::Svm(p) => LearnerModel::Svm(svm::fit(data, y, p)?.model),
        LearnerParams::Logreg(p) => LearnerModel::Logreg(logreg::fit(data, y, p)?),
        LearnerParams::Knn(p) => LearnerModel::Knn(KnnModel::fit(data, y, p)),
        LearnerParams::Gbdt(p) => LearnerModel::Gbdt(Gbdt::fit(data, y, p)),
    };
    Ok(TrainedLearner {
        kind: spec.kind,
        scaler,
        model,
    })
}

impl TrainedLearner {
    pub fn width(&self) -> Option<usize> {
        self.scaler.as_ref().map(|s| s.mean.len())
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        let scaled;
        let row = match &self.scaler {
            Some(s) => {
                scaled = s.apply_row(row);
                &scaled[..]
            }
            None => row,
        };
        match &self.model {
            LearnerModel::Forest(m) => m.score_row(row),
            LearnerModel::Svm(m) => m.decision(row),
            LearnerModel::Logreg(m) => m.decision(row),
            LearnerModel::Knn(m) => m.score_row(row),
            LearnerModel::Gbdt(m) => m.score_row(row),
        }
    }

    pub fn score(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.score_row(r)).collect()
    }

    pub fn svm_gamma(&self) -> Option<f64> {
        match &self.model {
            LearnerModel::Svm(m) => Some(m.gamma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub learner: TrainedLearner,
    pub platt: Platt,
}

impl CalibratedModel {
    pub fn probability_row(&self, row: &[f64]) -> f64 {
        self.platt.probability(self.learner.score_row(row))
    }

    pub fn probabilities(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.probability_row(r)).collect()
    }
}

/// A calibrated model plus the global row sets every constituent fit saw.
#[derive(Debug, Clone)]
pub struct CalibratedFit {
    pub model: CalibratedModel,
    pub trained_on: Vec<usize>,
    /// `(held_out, trained_on)` for each internal calibration fold.
    pub calibration: Vec<(Vec<usize>, Vec<usize>)>,
}

/// Fits on `rows` of `x`: Platt parameters come from internal stratified
/// cross-validated scores, then the learner is refit on all of `rows`.
pub fn fit_calibrated(spec: &BaseLearnerSpec, x: &Matrix, y: &[u8], rows: &[usize], folds: usize, seed: u64) -> Result<CalibratedFit> {
    let sub_x = x.select_rows(rows);
    let sub_y: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    let assignment = stratified_kfold(&sub_y, folds, seed::derive(seed, "calibration/folds"))?;
    let parts = par::try_map_range(folds, |f| -> Result<_> {
        let (train, test) = split(&assignment, f);
        let model = fit_learner(
            spec,
            &sub_x.select_rows(&train),
            &train.iter().map(|&i| sub_y[i]).collect::<Vec<_>>(),
            seed::derive(seed, &format!("calibration/{f}")),
        )?;
        let scores = model.score(&sub_x.select_rows(&test));
        Ok((train, test, scores))
    })?;
    let mut scores = vec![0.0; rows.len()];
    let mut calibration = Vec::with_capacity(folds);
    for (train, test, s) in parts {
        for (&i, v) in test.iter().zip(s) {
            scores[i] = v;
        }
        calibration.push((
            test.iter().map(|&i| rows[i]).collect(),
            train.iter().map(|&i| rows[i]).collect(),
        ));
    }
    let platt = Platt::fit(&scores, &sub_y)?;
    let learner = fit_learner(spec, &sub_x, &sub_y, seed::derive(seed, "refit"))?;
    Ok(CalibratedFit {
        model: CalibratedModel { learner, platt },
        trained_on: rows.to_vec(),
        calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in LearnerKind::ALL {
            assert_eq!(k.name().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("xgb".parse::<LearnerKind>().is_err());
        assert_eq!(config_key(&[LearnerKind::Logreg, LearnerKind::Et, LearnerKind::Svm, LearnerKind::Et]), "et+svm+logreg");
    }

    #[test]
    fn standardization_flags() {
        let cfg = MlConfig::default();
        let flagged: Vec<_> = LearnerKind::ALL.into_iter().filter(|&k| cfg.spec(k).needs_standardization).collect();
        assert_eq!(flagged, vec![LearnerKind::Svm, LearnerKind::Logreg, LearnerKind::Knn]);
        assert!(!cfg.meta_spec().needs_standardization);
    }
}
