use prism_core::metrics::auc_roc;
use prism_core::ml::cv::evaluate_cv;
use prism_core::ml::learner::{fit_learner, LearnerKind};
use prism_core::ml::logreg::{gradient, objective};
use prism_core::ml::platt::{nll, targets, Platt};
use prism_core::ml::svm::{self, SvmParams};
use prism_core::ml::{FeatureTable, Matrix, MlConfig};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn xor_table(n: usize, seed: u64) -> FeatureTable {
    let mut rng = prism_core::seed::rng_from(seed);
    let noise = Normal::new(0.0, 0.25).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let (sx, sy) = (if i % 2 == 0 { 1.0 } else { -1.0 }, if (i / 2) % 2 == 0 { 1.0 } else { -1.0 });
        rows.push(vec![sx + noise.sample(&mut rng), sy + noise.sample(&mut rng)]);
        labels.push(u8::from(sx * sy < 0.0));
    }
    FeatureTable::new(
        "xor".into(),
        vec!["x".into(), "y".into()],
        (0..n).map(|i| format!("r{i}")).collect(),
        labels,
        Matrix::from_rows(&rows),
    )
    .unwrap()
}

#[test]
fn xor_separates_nonlinear_from_linear_learners() {
    let table = xor_table(200, 5);
    let cfg = MlConfig::default();
    for kind in LearnerKind::ALL {
        let acc = evaluate_cv(&cfg, &[kind], &table, 42).unwrap().pooled.metrics.accuracy;
        if kind == LearnerKind::Logreg {
            assert!(acc <= 0.60, "{kind}: {acc}");
        } else {
            assert!(acc >= 0.95, "{kind}: {acc}");
        }
    }
}

#[test]
fn separable_blobs_fit_training_data_for_every_kind() {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..60 {
        let t = i as f64 * 0.9;
        let c = if i % 2 == 0 { -3.0 } else { 3.0 };
        rows.push(vec![c + t.sin() * 0.5, t.cos() * 0.5]);
        labels.push((i % 2) as u8);
    }
    let x = Matrix::from_rows(&rows);
    let cfg = MlConfig::default();
    for kind in LearnerKind::ALL {
        let m = fit_learner(&cfg.spec(kind), &x, &labels, 1).unwrap();
        let m2 = fit_learner(&cfg.spec(kind), &x, &labels, 1).unwrap();
        let scores = m.score(&x);
        assert_eq!(scores, m2.score(&x));
        // Scores are oriented so higher means class 1.
        assert_eq!(auc_roc(&labels, &scores).unwrap(), 1.0, "{kind}");
    }
}

#[test]
fn single_class_training_fails() {
    let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
    let cfg = MlConfig::default();
    for kind in LearnerKind::ALL {
        assert!(fit_learner(&cfg.spec(kind), &x, &[0, 0, 0], 1).is_err());
    }
}

#[test]
fn platt_beats_every_grid_point() {
    let mut rng = prism_core::seed::rng_from(11);
    for _ in 0..5 {
        let n = 80;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let scores: Vec<f64> = labels.iter().map(|&l| l as f64 * 1.5 + rng.random_range(-1.5..1.5)).collect();
        let p = Platt::fit(&scores, &labels).unwrap();
        let t = targets(&labels);
        let fitted = nll(&scores, &t, p.a, p.b);
        for i in 0..=100 {
            for j in 0..=100 {
                let (a, b) = (-10.0 + 0.2 * i as f64, -10.0 + 0.2 * j as f64);
                assert!(fitted <= nll(&scores, &t, a, b) + 1e-12, "grid ({a}, {b})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn logistic_gradient_matches_central_differences(
        data in prop::collection::vec(-2.0f64..2.0, 30),
        w in prop::collection::vec(-1.0f64..1.0, 3),
        b in -1.0f64..1.0,
        lambda in 0.0f64..2.0,
    ) {
        let x = Matrix::from_vec(10, 3, data);
        let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let (gw, gb) = gradient(&x, &y, &w, b, lambda);
        let h = 1e-5;
        let mut analytic = gw.clone();
        analytic.push(gb);
        let mut numeric = Vec::new();
        for k in 0..4 {
            let shift = |d: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if k < 3 { w2[k] += d } else { b2 += d }
                objective(&x, &y, &w2, b2, lambda)
            };
            numeric.push((shift(h) - shift(-h)) / (2.0 * h));
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        prop_assert!(diff / scale < 1e-6, "relative error {}", diff / scale);
    }

    #[test]
    fn svm_meets_kkt_on_separable_data(offset in 1.0f64..3.0, pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 10..40)) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (i, (a, b)) in pts.iter().enumerate() {
            let side = if i % 2 == 0 { offset } else { -offset };
            rows.push(vec![a * 0.5 + side, *b]);
            y.push((i % 2 == 0) as u8);
        }
        let x = Matrix::from_rows(&rows);
        let params = SvmParams::default();
        let fit = svm::fit(&x, &y, &params).unwrap();
        prop_assert!(fit.kkt_gap < params.tol);
        // Margin conditions: y·f(x) ≥ 1 − tol off the box, ≤ 1 + tol at C.
        for i in 0..x.rows() {
            let yf = if y[i] == 1 { 1.0 } else { -1.0 } * fit.model.decision(x.row(i));
            let a = fit.alpha[i];
            if a <= 0.0 {
                prop_assert!(yf >= 1.0 - 2.0 * params.tol, "α=0 but yf={}", yf);
            } else if a >= params.c {
                prop_assert!(yf <= 1.0 + 2.0 * params.tol, "α=C but yf={}", yf);
            } else {
                prop_assert!((yf - 1.0).abs() <= 2.0 * params.tol, "free α but yf={}", yf);
            }
        }
    }

    #[test]
    fn calibration_preserves_ranking(scores in prop::collection::vec(-5.0f64..5.0, 20..60)) {
        let labels: Vec<u8> = scores.iter().enumerate().map(|(i, s)| u8::from(*s + (i % 3) as f64 - 1.0 > 0.0)).collect();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let p = Platt::fit(&scores, &labels).unwrap();
        let cal: Vec<f64> = scores.iter().map(|&s| p.probability(s)).collect();
        prop_assert!(cal.iter().all(|&v| v > 0.0 && v < 1.0));
        if p.a < 0.0 {
            prop_assert_eq!(auc_roc(&labels, &scores).unwrap(), auc_roc(&labels, &cal).unwrap());
        }
    }
}
