//! Run configuration: TOML file deep-merged over the defaults, then command
//! line overrides.

use std::path::{Path, PathBuf};

use prism_core::ml::{LearnerKind, MlConfig};
use prism_core::pipeline::PipelineConfig;
use prism_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Applied to the file stem; capture group 1 must be `0` or `1`.
    pub label_regex: String,
    /// Subdirectory fallback when no file stem matches.
    pub positive_dir: String,
    pub negative_dir: String,
    pub extensions: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            label_regex: r"_([01])$".into(),
            positive_dir: "1".into(),
            negative_dir: "0".into(),
            extensions: ["tif", "tiff", "png", "jpg", "jpeg", "bmp"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    /// Base learners for `train` and `evaluate`.
    pub models: Vec<LearnerKind>,
    /// Pool whose non-empty subsets `ablate` evaluates.
    pub ablation_models: Vec<LearnerKind>,
    pub ingest: IngestConfig,
    pub pipeline: PipelineConfig,
    pub ml: MlConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data"),
            out: PathBuf::from("out"),
            seed: 42,
            jobs: 0,
            models: vec![LearnerKind::Et, LearnerKind::Svm, LearnerKind::Logreg],
            ablation_models: LearnerKind::ALL.to_vec(),
            ingest: IngestConfig::default(),
            pipeline: PipelineConfig::default(),
            ml: MlConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

fn merge(base: &mut toml::Value, user: toml::Value) {
    match (base, user) {
        (toml::Value::Table(b), toml::Value::Table(u)) => {
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses `text` as a partial configuration. Keys absent from `text` keep
/// their default values, including inside nested sections.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let user: toml::Value = toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
    let mut merged = toml::Value::try_from(RunConfig::default()).map_err(|e| CliError::Other(e.into()))?;
    merge(&mut merged, user);
    let mut unknown = Vec::new();
    let cfg: RunConfig = serde_ignored::deserialize(merged, |path| unknown.push(path.to_string()))
        .map_err(|e| CliError::Input(format!("config: {e}")))?;
    if !unknown.is_empty() {
        return Err(CliError::Input(format!("config: unknown keys {}", unknown.join(", "))));
    }
    cfg.validated()
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// Comma- or plus-separated learner names, case-insensitive.
pub fn parse_models(list: &str) -> Result<Vec<LearnerKind>, CliError> {
    let kinds = list
        .split([',', '+'])
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<LearnerKind>().map_err(|e| CliError::Input(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        return Err(CliError::Input("empty model list".into()));
    }
    Ok(prism_core::ml::learner::canonical(&kinds))
}

impl RunConfig {
    pub fn validated(mut self) -> Result<Self, CliError> {
        if self.ml.folds < 2 || self.ml.calibration_folds < 2 {
            return Err(CliError::Input("fold counts must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.ml.threshold) {
            return Err(CliError::Input("threshold must lie in [0, 1]".into()));
        }
        if self.models.is_empty() || self.ablation_models.is_empty() {
            return Err(CliError::Input("at least one model is required".into()));
        }
        regex::Regex::new(&self.ingest.label_regex).map_err(|e| CliError::Input(format!("label_regex: {e}")))?;
        self.models = prism_core::ml::learner::canonical(&self.models);
        self.ablation_models = prism_core::ml::learner::canonical(&self.ablation_models);
        // The global seed drives every stochastic stage.
        self.pipeline.segmentation.seed = self.seed;
        Ok(self)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }
}
