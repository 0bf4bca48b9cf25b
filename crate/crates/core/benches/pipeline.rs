//! Feature extraction and cross-validation under a one-thread pool versus the
//! default pool. `cargo bench --no-default-features` measures the purely
//! sequential build.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use prism_core::features::FeatureSchema;
use prism_core::ml::{evaluate_cv, LearnerKind, MlConfig};
use prism_core::pipeline::{self, PipelineConfig};
use prism_core::synth::{self, SynthConfig};

fn pools() -> [(String, rayon::ThreadPool); 2] {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let n = all.current_num_threads();
    [("1_thread".into(), one), (format!("{n}_threads"), all)]
}

fn extraction(c: &mut Criterion) {
    let cfg = PipelineConfig::default();
    let schema = FeatureSchema::standard();
    let images: Vec<_> = synth::corpus(16, &SynthConfig::default(), 7).into_iter().map(|c| c.image).collect();
    let mut g = c.benchmark_group("extract_16_images");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, pool) in pools() {
        g.bench_function(name, |b| b.iter(|| pool.install(|| pipeline::process_batch(&images, &cfg, &schema))));
    }
    g.finish();
}

fn cross_validation(c: &mut Criterion) {
    let cfg = PipelineConfig::default();
    let schema = FeatureSchema::standard();
    let rows = synth::corpus(60, &SynthConfig::default(), 11)
        .into_iter()
        .map(|c| pipeline::process_image(&c.image, &cfg, &schema).map(|(_, v)| (c.id, c.label, v)).unwrap())
        .collect();
    let table = pipeline::feature_table(&schema, rows).unwrap();
    let ml = MlConfig::default();
    let kinds = [LearnerKind::Et, LearnerKind::Svm, LearnerKind::Logreg];
    let mut g = c.benchmark_group("cv_et_svm_logreg_60_rows");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, pool) in pools() {
        g.bench_function(name, |b| b.iter(|| pool.install(|| evaluate_cv(&ml, &kinds, &table, 42).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, extraction, cross_validation);
criterion_main!(benches);
