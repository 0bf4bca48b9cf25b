//! Stage commands. Every stage reads and writes plain files under the output
//! root, so any stage can be rerun on its own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use prism_core::features::{FeatureSchema, FeatureVector};
use prism_core::ml::cv::{self, EvaluationReport};
use prism_core::ml::learner::config_key;
use prism_core::ml::{stack_fit, FeatureTable, LearnerKind, Matrix, StackedModel};
use prism_core::pipeline::{self, Processed};
use prism_core::segmentation::Provenance;
use prism_core::{par, seed, synth, zones};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::ingest::{self, ManifestEntry};
use crate::io::{csv_bytes, read, read_json, write_atomic, write_json, write_png};
use crate::plot;

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const LABEL_COLUMN: &str = "label";
pub const ID_COLUMN: &str = "image_id";

pub struct Paths {
    pub root: PathBuf,
}

impl Paths {
    pub fn new(cfg: &RunConfig) -> Self {
        Self { root: cfg.out.clone() }
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.csv")
    }
    pub fn masks(&self) -> PathBuf {
        self.root.join("masks")
    }
    pub fn overlays(&self) -> PathBuf {
        self.root.join("overlays")
    }
    pub fn segmentation(&self) -> PathBuf {
        self.root.join("segmentation.jsonl")
    }
    pub fn failures(&self) -> PathBuf {
        self.root.join("failures.log")
    }
    pub fn features(&self) -> PathBuf {
        self.root.join("features.csv")
    }
    pub fn schema(&self) -> PathBuf {
        self.root.join("features.schema.json")
    }
    pub fn flags(&self) -> PathBuf {
        self.root.join("feature_flags.csv")
    }
    pub fn model(&self) -> PathBuf {
        self.root.join("model.json")
    }
    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions.csv")
    }
    pub fn evaluation(&self) -> PathBuf {
        self.root.join("evaluation.json")
    }
    pub fn ablation_csv(&self) -> PathBuf {
        self.root.join("ablation.csv")
    }
    pub fn ablation_json(&self) -> PathBuf {
        self.root.join("ablation.json")
    }
    pub fn ablation_timings(&self) -> PathBuf {
        self.root.join("ablation_timings.csv")
    }
    pub fn plot_best(&self) -> PathBuf {
        self.root.join("ablation_best_by_k.svg")
    }
    pub fn plot_auc(&self) -> PathBuf {
        self.root.join("ablation_auc_by_k.svg")
    }
    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.md")
    }
}

/// `ET+SVM+LOGREG` style display name in canonical order.
pub fn configuration_name(kinds: &[LearnerKind]) -> String {
    config_key(kinds).to_ascii_uppercase()
}

// ---------------------------------------------------------------- ingest

pub fn ingest(cfg: &RunConfig) -> CliResult<Vec<ManifestEntry>> {
    let scan = ingest::scan(&cfg.dataset, &cfg.ingest)?;
    let (neg, pos) = scan.counts();
    log::info!("ingest: {} images ({neg} healthy, {pos} lymphoblast), {} excluded", scan.entries.len(), scan.skipped.len());
    write_atomic(&Paths::new(cfg).manifest(), &ingest::manifest_csv(&scan.entries)?)?;
    Ok(scan.entries)
}

/// Reads the manifest, ingesting first when it is absent and the dataset
/// directory exists.
pub fn manifest(cfg: &RunConfig) -> CliResult<Vec<ManifestEntry>> {
    let path = Paths::new(cfg).manifest();
    if path.exists() {
        ingest::read_manifest(&path)
    } else if cfg.dataset.is_dir() {
        ingest(cfg)
    } else {
        Err(CliError::Input(format!(
            "{} not found and dataset {} does not exist; run ingest first",
            path.display(),
            cfg.dataset.display()
        )))
    }
}

// ---------------------------------------------------------------- images

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRecord {
    pub image_id: String,
    pub label: u8,
    pub provenance: Provenance,
    pub nucleus_area: usize,
    pub equivalent_radius: f64,
    pub fitness: f64,
    pub circularity: f64,
    pub solidity: f64,
    pub proximal_area: usize,
    pub distal_area: usize,
    pub cell_area: usize,
    pub radii: (usize, usize),
}

struct ImageOutcome {
    record: SegmentationRecord,
    features: Option<FeatureVector>,
}

/// Zone label map: nucleus 255, proximal 170, distal 85, rest of cell 40.
pub fn label_map(z: &zones::ZonalDecomposition) -> image::GrayImage {
    let (w, h) = (z.nucleus.width(), z.nucleus.height());
    image::GrayImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        let v = if z.nucleus.get(x, y) {
            255
        } else if z.proximal.get(x, y) {
            170
        } else if z.distal.get(x, y) {
            85
        } else if z.cell.get(x, y) {
            40
        } else {
            0
        };
        image::Luma([v])
    })
}

fn record(e: &ManifestEntry, p: &Processed) -> SegmentationRecord {
    SegmentationRecord {
        image_id: e.image_id.clone(),
        label: e.label,
        provenance: p.nucleus.provenance,
        nucleus_area: p.nucleus.area,
        equivalent_radius: p.nucleus.equivalent_radius,
        fitness: p.nucleus.fitness,
        circularity: p.nucleus.shape.circularity,
        solidity: p.nucleus.shape.solidity,
        proximal_area: p.zones.proximal.count(),
        distal_area: p.zones.distal.count(),
        cell_area: p.zones.cell.count(),
        radii: p.zones.radii,
    }
}

fn write_visuals(paths: &Paths, id: &str, p: &Processed) -> CliResult<()> {
    write_png(&paths.masks().join(format!("{id}.png")), &image::DynamicImage::ImageLuma8(label_map(&p.zones)))?;
    let overlay = zones::render_overlay(&p.preprocessed.rgb, &p.zones)?.to_rgb8()?;
    write_png(&paths.overlays().join(format!("{id}.png")), &image::DynamicImage::ImageRgb8(overlay))
}

fn process_entry(cfg: &RunConfig, paths: &Paths, e: &ManifestEntry, visuals: bool, features: bool) -> Result<ImageOutcome, String> {
    let bytes = std::fs::read(&e.path).map_err(|err| format!("read: {err}"))?;
    let img = prism_core::imgproc::decode(&bytes).map_err(|err| err.to_string())?;
    let p = pipeline::segment_image(&img, &cfg.pipeline).map_err(|err| err.to_string())?;
    if visuals {
        write_visuals(paths, &e.image_id, &p).map_err(|err| err.to_string())?;
    }
    let features = if features {
        Some(pipeline::extract(&p, &FeatureSchema::standard()).map_err(|err| err.to_string())?)
    } else {
        None
    };
    Ok(ImageOutcome {
        record: record(e, &p),
        features,
    })
}

pub struct ImageRun {
    pub records: Vec<SegmentationRecord>,
    pub features: Vec<(String, u8, FeatureVector)>,
    pub failures: Vec<(String, String)>,
}

fn run_images(cfg: &RunConfig, entries: &[ManifestEntry], visuals: bool, features: bool) -> CliResult<ImageRun> {
    let paths = Paths::new(cfg);
    let t = Instant::now();
    let outcomes = par::map(entries, |e| process_entry(cfg, &paths, e, visuals, features));
    let mut run = ImageRun {
        records: Vec::new(),
        features: Vec::new(),
        failures: Vec::new(),
    };
    for (e, o) in entries.iter().zip(outcomes) {
        match o {
            Ok(o) => {
                if let Some(v) = o.features {
                    if !v.degraded_domains.is_empty() {
                        log::warn!("{}: degraded domains {:?}", e.image_id, v.degraded_domains);
                    }
                    run.features.push((e.image_id.clone(), e.label, v));
                }
                run.records.push(o.record);
            }
            Err(msg) => {
                log::warn!("{}: {msg}", e.image_id);
                run.failures.push((e.image_id.clone(), msg));
            }
        }
    }
    log::info!(
        "processed {} images in {:.1}s: {} ok, {} failed",
        entries.len(),
        t.elapsed().as_secs_f64(),
        run.records.len(),
        run.failures.len()
    );
    let mut log_text = String::new();
    for (id, msg) in &run.failures {
        log_text.push_str(&format!("{id}\t{msg}\n"));
    }
    write_atomic(&paths.failures(), log_text.as_bytes())?;
    if run.records.is_empty() {
        return Err(CliError::AllFailed(entries.len()));
    }
    Ok(run)
}

fn write_segmentation(paths: &Paths, records: &[SegmentationRecord]) -> CliResult<()> {
    let mut out = Vec::new();
    for r in records {
        out.extend(serde_json::to_vec(r).map_err(prism_core::Error::from)?);
        out.push(b'\n');
    }
    write_atomic(&paths.segmentation(), &out)
}

pub fn segment(cfg: &RunConfig) -> CliResult<ImageRun> {
    let entries = manifest(cfg)?;
    let run = run_images(cfg, &entries, true, false)?;
    write_segmentation(&Paths::new(cfg), &run.records)?;
    Ok(run)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFile {
    pub schema: FeatureSchema,
    /// Column order of `features.csv`.
    pub columns: Vec<String>,
    pub float_format: String,
}

fn write_features(paths: &Paths, rows: &[(String, u8, FeatureVector)]) -> CliResult<FeatureTable> {
    let schema = FeatureSchema::standard();
    let mut header: Vec<&str> = schema.names();
    header.push(LABEL_COLUMN);
    header.push(ID_COLUMN);
    let body = csv_bytes(
        &header,
        rows.iter().map(|(id, label, v)| {
            let mut rec: Vec<String> = v.values.iter().map(|x| x.to_string()).collect();
            rec.push(label.to_string());
            rec.push(id.clone());
            rec
        }),
    )?;
    write_atomic(&paths.features(), &body)?;
    write_json(
        &paths.schema(),
        &SchemaFile {
            columns: header.iter().map(|s| s.to_string()).collect(),
            schema: schema.clone(),
            float_format: "shortest round-trip decimal".into(),
        },
    )?;
    let flags = csv_bytes(
        &[ID_COLUMN, "degraded_domains"],
        rows.iter().map(|(id, _, v)| {
            let d: Vec<&str> = v.degraded_domains.iter().map(|d| d.tag()).collect();
            [id.clone(), d.join(";")]
        }),
    )?;
    write_atomic(&paths.flags(), &flags)?;
    pipeline::feature_table(&schema, rows.to_vec()).map_err(CliError::from)
}

pub fn extract(cfg: &RunConfig) -> CliResult<FeatureTable> {
    let entries = manifest(cfg)?;
    let run = run_images(cfg, &entries, false, true)?;
    write_features(&Paths::new(cfg), &run.features)
}

/// Segmentation visuals and features in one pass over the images.
pub fn segment_and_extract(cfg: &RunConfig) -> CliResult<FeatureTable> {
    let entries = manifest(cfg)?;
    let run = run_images(cfg, &entries, true, true)?;
    let paths = Paths::new(cfg);
    write_segmentation(&paths, &run.records)?;
    write_features(&paths, &run.features)
}

pub fn load_features(cfg: &RunConfig) -> CliResult<FeatureTable> {
    let paths = Paths::new(cfg);
    let schema_file: SchemaFile = read_json(&paths.schema())?;
    let standard = FeatureSchema::standard();
    if schema_file.schema.schema_id != standard.schema_id {
        return Err(prism_core::Error::Schema {
            expected: standard.schema_id,
            found: schema_file.schema.schema_id,
        }
        .into());
    }
    let bytes = read(&paths.features())?;
    let bad = |m: String| CliError::Input(format!("{}: {m}", paths.features().display()));
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    if header != schema_file.columns {
        return Err(bad("header does not match features.schema.json".into()));
    }
    let width = standard.len();
    let (mut ids, mut labels, mut data) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != width + 2 {
            return Err(bad(format!("row has {} fields, expected {}", rec.len(), width + 2)));
        }
        for j in 0..width {
            data.push(rec[j].parse::<f64>().map_err(|e| bad(format!("{}: {e}", &rec[j])))?);
        }
        labels.push(rec[width].parse::<u8>().map_err(|e| bad(e.to_string()))?);
        ids.push(rec[width + 1].to_string());
    }
    let n = ids.len();
    Ok(FeatureTable::new(
        standard.schema_id.clone(),
        standard.names().into_iter().map(String::from).collect(),
        ids,
        labels,
        Matrix::from_vec(n, width, data),
    )?)
}

// ---------------------------------------------------------------- learning

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub configuration: String,
    pub run_config: RunConfig,
    pub feature_table_hash: String,
    pub model: StackedModel,
}

pub fn train(cfg: &RunConfig) -> CliResult<ModelFile> {
    let table = load_features(cfg)?;
    let t = Instant::now();
    let model = stack_fit(&cfg.ml, &cfg.models, &table, cfg.seed)?;
    log::info!("trained {} on {} samples in {:.1}s", configuration_name(&cfg.models), table.len(), t.elapsed().as_secs_f64());
    let file = ModelFile {
        format_version: REPORT_FORMAT_VERSION,
        configuration: configuration_name(&model.kinds),
        run_config: cfg.clone(),
        feature_table_hash: table.content_hash(),
        model,
    };
    write_json(&Paths::new(cfg).model(), &file)?;
    Ok(file)
}

pub fn predict(cfg: &RunConfig, model_path: Option<&Path>) -> CliResult<Vec<f64>> {
    let paths = Paths::new(cfg);
    let file: ModelFile = read_json(model_path.unwrap_or(&paths.model()))?;
    let table = load_features(cfg)?;
    let (probs, preds) = file.model.predict_table(&table)?;
    let body = csv_bytes(
        &[ID_COLUMN, "probability", "prediction", LABEL_COLUMN],
        table
            .ids
            .iter()
            .zip(&probs)
            .zip(&preds)
            .zip(&table.labels)
            .map(|(((id, p), y), l)| [id.clone(), p.to_string(), y.to_string(), l.to_string()]),
    )?;
    write_atomic(&paths.predictions(), &body)?;
    Ok(probs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub format_version: u32,
    pub configuration: String,
    pub run_config: RunConfig,
    pub feature_table_hash: String,
    pub schema_id: String,
    pub report: EvaluationReport,
}

pub fn evaluate(cfg: &RunConfig) -> CliResult<EvaluationFile> {
    let table = load_features(cfg)?;
    let t = Instant::now();
    let report = cv::evaluate_cv(&cfg.ml, &cfg.models, &table, cfg.seed)?;
    if report.leakage.violations != 0 {
        return Err(CliError::Other(format!("leakage audit found {} violations", report.leakage.violations).into()));
    }
    let m = &report.pooled.metrics;
    log::info!(
        "{}: accuracy {:.4} mcc {:.4} auc {:.4} pr-auc {:.4} ({:.1}s)",
        configuration_name(&report.kinds),
        m.accuracy,
        m.mcc,
        m.auc_roc,
        m.pr_auc,
        t.elapsed().as_secs_f64()
    );
    let file = EvaluationFile {
        format_version: REPORT_FORMAT_VERSION,
        configuration: configuration_name(&report.kinds),
        run_config: cfg.clone(),
        feature_table_hash: table.content_hash(),
        schema_id: table.schema_id.clone(),
        report,
    };
    write_json(&Paths::new(cfg).evaluation(), &file)?;
    Ok(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub rank: usize,
    pub k: usize,
    pub configuration: String,
    pub pooled: prism_core::metrics::MetricSet,
    pub fold_mean: prism_core::metrics::MetricSet,
    pub fold_std: prism_core::metrics::MetricSet,
    pub assignment_hash: String,
    pub leakage_violations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationFile {
    pub format_version: u32,
    pub run_config: RunConfig,
    pub feature_table_hash: String,
    pub schema_id: String,
    pub pool: Vec<LearnerKind>,
    pub assignment_hash: String,
    pub rows: Vec<AblationRow>,
}

/// Sort key: pooled accuracy, then PR-AUC, both descending; name breaks ties.
fn rank_rows(rows: &mut [AblationRow]) {
    rows.sort_by(|a, b| {
        b.pooled
            .accuracy
            .total_cmp(&a.pooled.accuracy)
            .then(b.pooled.pr_auc.total_cmp(&a.pooled.pr_auc))
            .then(a.configuration.cmp(&b.configuration))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
}

pub const METRIC_NAMES: [&str; 7] = ["accuracy", "balanced_accuracy", "sensitivity", "specificity", "mcc", "auc_roc", "pr_auc"];

fn ablation_csv(rows: &[AblationRow]) -> CliResult<Vec<u8>> {
    let mut header = vec!["rank".to_string(), "k".into(), "configuration".into()];
    header.extend(METRIC_NAMES.iter().map(|m| m.to_string()));
    header.extend(METRIC_NAMES.iter().map(|m| format!("fold_mean_{m}")));
    header.extend(["assignment_hash".to_string(), "leakage_violations".into()]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_bytes(
        &header_refs,
        rows.iter().map(|r| {
            let mut rec = vec![r.rank.to_string(), r.k.to_string(), r.configuration.clone()];
            rec.extend(r.pooled.to_array().iter().map(|v| format!("{v:.6}")));
            rec.extend(r.fold_mean.to_array().iter().map(|v| format!("{v:.6}")));
            rec.push(r.assignment_hash.clone());
            rec.push(r.leakage_violations.to_string());
            rec
        }),
    )
}

pub fn ablate(cfg: &RunConfig) -> CliResult<AblationFile> {
    let table = load_features(cfg)?;
    let pool = cfg.ablation_models.clone();
    let t = Instant::now();
    let arts = cv::prepare(&cfg.ml, &pool, &table, cfg.seed)?;
    let base_seconds = t.elapsed().as_secs_f64();
    log::info!("ablation: base learners for {} folds trained in {base_seconds:.1}s", cfg.ml.folds);
    let configs = cv::subsets(&pool);
    let timed: Vec<(EvaluationReport, f64)> = par::try_map(&configs, |c| {
        let t = Instant::now();
        cv::evaluate_subset(&arts, c, &table, &cfg.ml).map(|r| (r, t.elapsed().as_secs_f64()))
    })?;
    let hash = arts.assignment_hash.clone();
    if let Some((r, _)) = timed.iter().find(|(r, _)| r.assignment_hash != hash) {
        return Err(CliError::Other(format!("{} used a different fold assignment", r.config_key).into()));
    }
    if let Some((r, _)) = timed.iter().find(|(r, _)| r.leakage.violations != 0) {
        return Err(CliError::Other(format!("{}: leakage audit found {} violations", r.config_key, r.leakage.violations).into()));
    }
    let mut rows: Vec<AblationRow> = timed
        .iter()
        .map(|(r, _)| AblationRow {
            rank: 0,
            k: r.kinds.len(),
            configuration: configuration_name(&r.kinds),
            pooled: r.pooled.metrics,
            fold_mean: r.fold_mean,
            fold_std: r.fold_std,
            assignment_hash: r.assignment_hash.clone(),
            leakage_violations: r.leakage.violations,
        })
        .collect();
    rank_rows(&mut rows);
    log::info!("ablation: {} configurations in {:.1}s", rows.len(), t.elapsed().as_secs_f64());
    let paths = Paths::new(cfg);
    write_atomic(&paths.ablation_csv(), &ablation_csv(&rows)?)?;
    let timing = csv_bytes(
        &["configuration", "seconds"],
        std::iter::once(["shared_base_training".to_string(), format!("{base_seconds:.3}")])
            .chain(timed.iter().map(|(r, s)| [configuration_name(&r.kinds), format!("{s:.3}")])),
    )?;
    write_atomic(&paths.ablation_timings(), &timing)?;
    let file = AblationFile {
        format_version: REPORT_FORMAT_VERSION,
        run_config: cfg.clone(),
        feature_table_hash: table.content_hash(),
        schema_id: table.schema_id.clone(),
        pool: arts.kinds.clone(),
        assignment_hash: hash,
        rows,
    };
    write_json(&paths.ablation_json(), &file)?;
    write_plots(&paths, &file)?;
    Ok(file)
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSummary {
    pub k: usize,
    pub best_configuration: String,
    pub accuracy: f64,
    pub mcc: f64,
    pub auc_roc: f64,
    pub pr_auc: f64,
}

/// Per ensemble size, the top-ranked configuration.
pub fn best_by_k(rows: &[AblationRow]) -> Vec<KSummary> {
    let mut best: BTreeMap<usize, &AblationRow> = BTreeMap::new();
    for r in rows {
        best.entry(r.k).and_modify(|b| if r.rank < b.rank { *b = r }).or_insert(r);
    }
    best.into_values()
        .map(|r| KSummary {
            k: r.k,
            best_configuration: r.configuration.clone(),
            accuracy: r.pooled.accuracy,
            mcc: r.pooled.mcc,
            auc_roc: r.pooled.auc_roc,
            pr_auc: r.pooled.pr_auc,
        })
        .collect()
}

fn write_plots(paths: &Paths, file: &AblationFile) -> CliResult<()> {
    let best = best_by_k(&file.rows);
    let ks: Vec<f64> = best.iter().map(|b| b.k as f64).collect();
    let series = [
        ("accuracy", best.iter().map(|b| b.accuracy).collect()),
        ("mcc", best.iter().map(|b| b.mcc).collect()),
        ("auc_roc", best.iter().map(|b| b.auc_roc).collect()),
        ("pr_auc", best.iter().map(|b| b.pr_auc).collect()),
    ];
    let svg = plot::line_chart("Best configuration per ensemble size", "k (base learners)", "metric", &ks, &series);
    write_atomic(&paths.plot_best(), svg.as_bytes())?;
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &file.rows {
        groups.entry(r.k).or_default().push(r.pooled.auc_roc);
    }
    let groups: Vec<(String, Vec<f64>)> = groups.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let svg = plot::strip_chart("AUC-ROC across configurations", "k (base learners)", "AUC-ROC", &groups);
    write_atomic(&paths.plot_auc(), svg.as_bytes())
}

fn metric_line(name: &str, m: &prism_core::metrics::MetricSet) -> String {
    format!(
        "| {name} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
        m.accuracy, m.balanced_accuracy, m.sensitivity, m.specificity, m.mcc, m.auc_roc, m.pr_auc
    )
}

/// Regenerates plots and `summary.md` from the saved reports.
pub fn report(cfg: &RunConfig) -> CliResult<String> {
    let paths = Paths::new(cfg);
    let evaluation: Option<EvaluationFile> = paths.evaluation().exists().then(|| read_json(&paths.evaluation())).transpose()?;
    let ablation: Option<AblationFile> = paths.ablation_json().exists().then(|| read_json(&paths.ablation_json())).transpose()?;
    if evaluation.is_none() && ablation.is_none() {
        return Err(CliError::Input(format!("no evaluation.json or ablation.json under {}", paths.root.display())));
    }
    let header = "| | accuracy | balanced | sensitivity | specificity | MCC | AUC-ROC | PR-AUC |\n|---|---|---|---|---|---|---|---|\n";
    let mut md = String::from("# Run summary\n\n");
    if let Some(e) = &evaluation {
        md.push_str(&format!(
            "## Evaluation: {}\n\n{} samples, {} folds, seed {}, feature table `{}`, fold assignment `{}`.\n\n",
            e.configuration,
            e.report.n,
            e.report.folds.len(),
            e.run_config.seed,
            e.feature_table_hash,
            e.report.assignment_hash
        ));
        md.push_str(header);
        md.push_str(&metric_line("pooled", &e.report.pooled.metrics));
        md.push_str(&metric_line("fold mean", &e.report.fold_mean));
        md.push_str(&metric_line("fold std", &e.report.fold_std));
        let c = &e.report.pooled.confusion;
        md.push_str(&format!(
            "\nConfusion (pooled): TP {} TN {} FP {} FN {}. Leakage audit: {} checks, {} violations.\n\n",
            c.tp, c.tn, c.fp, c.fn_, e.report.leakage.checked, e.report.leakage.violations
        ));
    }
    if let Some(a) = &ablation {
        write_plots(&paths, a)?;
        md.push_str(&format!("## Ablation over {} configurations\n\n", a.rows.len()));
        md.push_str("| k | best configuration | accuracy | MCC | AUC-ROC | PR-AUC |\n|---|---|---|---|---|---|\n");
        for b in best_by_k(&a.rows) {
            md.push_str(&format!(
                "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                b.k, b.best_configuration, b.accuracy, b.mcc, b.auc_roc, b.pr_auc
            ));
        }
        md.push_str("\nTop configurations:\n\n");
        md.push_str(header);
        for r in a.rows.iter().take(10) {
            md.push_str(&metric_line(&format!("{}. {}", r.rank, r.configuration), &r.pooled));
        }
        md.push('\n');
    }
    write_atomic(&paths.summary(), md.as_bytes())?;
    Ok(md)
}

// ---------------------------------------------------------------- synthetic

/// Writes `count` synthetic cells as `Im###_{label}.png` into the dataset
/// directory.
pub fn synth(cfg: &RunConfig, count: usize) -> CliResult<usize> {
    if count < 2 * cfg.ml.folds {
        return Err(CliError::Input(format!("at least {} images are needed for {} folds", 2 * cfg.ml.folds, cfg.ml.folds)));
    }
    let dir = cfg.dataset.clone();
    let corpus_seed = seed::derive(cfg.seed, "corpus");
    par::try_map_range(count, |i| {
        let c = synth::cell(i, &cfg.synth, corpus_seed);
        let rgb = c.image.to_rgb8()?;
        write_png(&dir.join(format!("{}.png", c.id)), &image::DynamicImage::ImageRgb8(rgb))
    })?;
    log::info!("synth: wrote {count} images to {}", dir.display());
    Ok(count)
}
