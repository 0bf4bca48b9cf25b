use prism_core::ml::cv::{ablate, audit_leakage, evaluate_cv, prepare, subsets};
use prism_core::ml::learner::LearnerKind;
use prism_core::ml::{stack_fit, FeatureTable, Matrix, MlConfig};
use rand::Rng;

fn small_config() -> MlConfig {
    let mut cfg = MlConfig::default();
    cfg.rf.n_trees = 40;
    cfg.et.n_trees = 40;
    cfg.gbdt.n_trees = 40;
    cfg
}

/// Column 0 is the label plus noise; the rest is noise.
fn separable(n: usize, width: usize, seed: u64) -> FeatureTable {
    let mut rng = prism_core::seed::rng_from(seed);
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| {
            let mut r: Vec<f64> = (0..width).map(|_| rng.random_range(-1.0..1.0)).collect();
            r[0] = l as f64 * 4.0 + rng.random_range(-0.5..0.5);
            r
        })
        .collect();
    FeatureTable::new(
        "fixture".into(),
        (0..width).map(|j| format!("f{j}")).collect(),
        (0..n).map(|i| format!("s{i}")).collect(),
        labels,
        Matrix::from_rows(&rows),
    )
    .unwrap()
}

#[test]
fn report_shape_and_separable_accuracy() {
    let table = separable(500, 6, 1);
    let kinds = [LearnerKind::Et, LearnerKind::Svm, LearnerKind::Logreg];
    let r = evaluate_cv(&small_config(), &kinds, &table, 42).unwrap();
    assert_eq!(r.folds.len(), 5);
    assert_eq!(r.pooled.confusion.total(), 500);
    assert!(r.pooled.metrics.accuracy >= 0.99, "{}", r.pooled.metrics.accuracy);
    assert_eq!(r.leakage.violations, 0);
    assert!(r.leakage.checked > 500);
    assert!(r.folds.iter().all(|f| f.meta_gamma.is_some() && f.svm_gamma.is_some()));
}

#[test]
fn perfect_single_feature_stacks_to_full_accuracy() {
    let mut table = separable(120, 3, 2);
    for i in 0..table.len() {
        let v = table.labels[i] as f64;
        table.x.set(i, 0, v);
    }
    let r = evaluate_cv(&small_config(), &[LearnerKind::Rf, LearnerKind::Logreg], &table, 3).unwrap();
    assert_eq!(r.pooled.metrics.accuracy, 1.0);
}

#[test]
fn cached_ablation_matches_standalone_evaluation() {
    let table = separable(100, 4, 3);
    let cfg = small_config();
    let kinds = [LearnerKind::Et, LearnerKind::Svm, LearnerKind::Knn];
    let (_, reports) = ablate(&cfg, &kinds, &table, 9).unwrap();
    assert_eq!(reports.len(), 7);
    for r in &reports {
        let alone = evaluate_cv(&cfg, &r.kinds, &table, 9).unwrap();
        assert_eq!(alone, *r, "{}", r.config_key);
    }
    assert_eq!(subsets(&LearnerKind::ALL).len(), 63);
}

#[test]
fn evaluation_is_deterministic_and_seed_sensitive() {
    let table = separable(80, 4, 4);
    let cfg = small_config();
    let kinds = [LearnerKind::Rf, LearnerKind::Svm];
    let a = evaluate_cv(&cfg, &kinds, &table, 1).unwrap();
    let b = evaluate_cv(&cfg, &kinds, &table, 1).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = evaluate_cv(&cfg, &kinds, &table, 2).unwrap();
    assert_ne!(a.assignment_hash, c.assignment_hash);
}

#[test]
fn duplicated_sentinel_row_never_scores_itself() {
    let mut table = separable(60, 3, 5);
    // Row 0 duplicated with the opposite label.
    let mut rows: Vec<Vec<f64>> = table.x.iter_rows().map(|r| r.to_vec()).collect();
    rows.push(rows[0].clone());
    table.labels.push(1 - table.labels[0]);
    table.ids.push("sentinel".into());
    table.x = Matrix::from_rows(&rows);
    let cfg = small_config();
    let arts = prepare(&cfg, &[LearnerKind::Knn, LearnerKind::Logreg], &table, 7).unwrap();
    let sentinel = table.len() - 1;
    for fold in &arts.folds {
        for base in &fold.bases {
            for rec in &base.inner {
                if rec.held_out.contains(&sentinel) {
                    assert!(!rec.trained_on.contains(&sentinel));
                    assert!(rec.calibration_trained_on.iter().all(|c| !c.contains(&sentinel)));
                }
            }
            if fold.test.contains(&sentinel) {
                assert!(!base.final_record.trained_on.contains(&sentinel));
            }
        }
    }
    let audit = audit_leakage(&arts, &arts.kinds, &[]);
    assert_eq!(audit.violations, 0);
}

#[test]
fn audit_detects_planted_leak() {
    let table = separable(60, 3, 6);
    let cfg = small_config();
    let mut arts = prepare(&cfg, &[LearnerKind::Knn], &table, 7).unwrap();
    let t = arts.folds[0].test[0];
    arts.folds[0].bases[0].final_record.trained_on.push(t);
    assert_eq!(audit_leakage(&arts, &arts.kinds, &[]).violations, 1);
}

#[test]
fn stacked_model_predicts_in_unit_interval() {
    let table = separable(100, 4, 8);
    let cfg = small_config();
    let model = stack_fit(&cfg, &[LearnerKind::Et, LearnerKind::Svm, LearnerKind::Logreg], &table, 42).unwrap();
    assert_eq!(model.bases.len(), 3);
    let (p, labels) = model.predict_table(&table).unwrap();
    assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    assert_eq!(labels, table.labels);
    let mut rng = prism_core::seed::rng_from(1);
    let random = Matrix::from_vec(1000, 4, (0..4000).map(|_| rng.random_range(-10.0..10.0)).collect());
    let (q, _) = model.predict(&random).unwrap();
    assert!(q.iter().all(|&v| v > 0.0 && v < 1.0));
    assert_eq!(q, model.predict(&random).unwrap().0);
    assert!(model.predict(&Matrix::zeros(2, 3)).is_err());
    let json = serde_json::to_string(&model).unwrap();
    let back: prism_core::ml::StackedModel = serde_json::from_str(&json).unwrap();
    assert_eq!(back.predict(&random).unwrap().0, q);
}
