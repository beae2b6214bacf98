use fefi::learners::*;
use fefi::rng::rng_from_seed;
use fefi::synthgen::{generate_dataset, SyntheticSpec};
use fefi::{FefiError, Matrix};
use rand::Rng as _;

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn default_train(kind: LearnerKind, x: &Matrix, y: &[f64], seed: u64) -> TrainedModel {
    train(kind, &Hyperparams::default_for(kind), x, y, seed).unwrap()
}

fn svr_weights(m: &TrainedModel) -> (Vec<f64>, f64) {
    match m.state() {
        ModelState::LinearSvr(s) => (s.weights().to_vec(), s.intercept()),
        _ => unreachable!(),
    }
}

fn forest_trees(m: &TrainedModel) -> &[RegressionTree] {
    match m.state() {
        ModelState::RandomForest(f) | ModelState::ExtraTrees(f) => f.trees(),
        _ => unreachable!(),
    }
}

/// Coefficients reach 100, so the target spread dwarfs the 0.5 noise; the
/// bound is relative to the target standard deviation instead.
#[test]
fn random_forest_train_error_is_small_relative_to_target_spread() {
    for seed in 0..5 {
        let d = generate_dataset(&SyntheticSpec::benchmark(1, seed).unwrap()).unwrap();
        let m = default_train(LearnerKind::RandomForest, &d.features, &d.targets, seed);
        let mean = d.targets.iter().sum::<f64>() / d.targets.len() as f64;
        let spread = rmse(&vec![mean; d.targets.len()], &d.targets);
        assert!(m.train_score() < 0.2 * spread, "seed {seed}: {} vs {spread}", m.train_score());
        let pred = predict(&m, &d.features).unwrap();
        assert!((rmse(&pred, &d.targets) - m.train_score()).abs() < 1e-9);
    }
}

#[test]
fn linear_svr_reaches_noise_floor_on_linear_data() {
    let d = generate_dataset(&SyntheticSpec::benchmark(1, 0).unwrap()).unwrap();
    let m = default_train(LearnerKind::LinearSvr, &d.features, &d.targets, 0);
    assert!(m.train_score() < d.spec.noise_std * 1.5, "{}", m.train_score());
}

#[test]
fn linear_svr_recovers_slope() {
    let mut rng = rng_from_seed(4);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-5.0..5.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0]).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let m = default_train(LearnerKind::LinearSvr, &x, &y, 1);
    let (w, b) = svr_weights(&m);
    assert!((w[0] - 2.0).abs() < 0.05, "slope {}", w[0]);
    let pred = predict(&m, &x).unwrap();
    let worst = pred.iter().zip(&y).map(|(p, t)| (p - t).abs()).fold(0.0, f64::max);
    assert!(worst < 0.1 + 0.05, "max residual {worst}, intercept {b}");
}

#[test]
fn linear_svr_is_invariant_to_row_order() {
    let d = generate_dataset(&SyntheticSpec::benchmark(1, 3).unwrap()).unwrap();
    let rows: Vec<usize> = (0..300).collect();
    let x = d.features.select_rows(&rows);
    let y: Vec<f64> = rows.iter().map(|&i| d.targets[i] / 100.0).collect();
    let mut shuffled = rows.clone();
    shuffled.reverse();
    shuffled.rotate_left(17);
    let xs = x.select_rows(&shuffled);
    let ys: Vec<f64> = shuffled.iter().map(|&i| y[i]).collect();

    let hp = Hyperparams::LinearSvr(LinearSvrParams {
        tolerance: 1e-12,
        max_epochs: 100_000,
        ..Default::default()
    });
    let a = train(LearnerKind::LinearSvr, &hp, &x, &y, 5).unwrap();
    let b = train(LearnerKind::LinearSvr, &hp, &xs, &ys, 5).unwrap();
    let (wa, ba) = svr_weights(&a);
    let (wb, bb) = svr_weights(&b);
    for (p, q) in wa.iter().zip(&wb) {
        assert!((p - q).abs() < 1e-6, "{p} vs {q}");
    }
    assert!((ba - bb).abs() < 1e-6);
}

#[test]
fn single_instance_is_degenerate_for_every_learner() {
    let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
    for kind in LearnerKind::ALL {
        assert!(matches!(
            train(kind, &Hyperparams::default_for(kind), &x, &[1.0], 0),
            Err(FefiError::TrainingDegenerate(_))
        ));
    }
}

#[test]
fn non_finite_input_is_a_data_error() {
    let x = Matrix::from_rows(&[vec![1.0], vec![f64::NAN], vec![3.0]]).unwrap();
    let kind = LearnerKind::GradientBoosting;
    assert!(matches!(
        train(kind, &Hyperparams::default_for(kind), &x, &[1.0, 2.0, 3.0], 0),
        Err(FefiError::Data(_))
    ));
}

#[test]
fn mismatched_hyperparameters_and_invalid_values_are_rejected() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
    let hp = Hyperparams::default_for(LearnerKind::Mlp);
    assert!(train(LearnerKind::LinearSvr, &hp, &x, &[1.0, 2.0], 0).is_err());
    let zero = Hyperparams::GradientBoosting(GradientBoostingParams {
        n_stages: 0,
        ..Default::default()
    });
    assert!(matches!(zero.validate(), Err(FefiError::Parameter(_))));
}

#[test]
fn prediction_checks_column_count() {
    let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 1.0], vec![3.0, 0.5]]).unwrap();
    for kind in LearnerKind::ALL {
        let m = default_train(kind, &x, &[1.0, 2.0, 3.0], 0);
        let wide = Matrix::zeros(2, 3);
        assert!(matches!(predict(&m, &wide), Err(FefiError::Shape { .. })), "{kind}");
        let out = predict(&m, &x).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn tree_learners_predict_constant_targets_exactly() {
    let mut rng = rng_from_seed(2);
    let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random(), rng.random()]).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let y = vec![3.25; 40];
    for kind in [LearnerKind::GradientBoosting, LearnerKind::RandomForest, LearnerKind::ExtraTrees] {
        let m = default_train(kind, &x, &y, 1);
        assert!(predict(&m, &x).unwrap().iter().all(|p| *p == 3.25), "{kind}");
    }
}

#[test]
fn bootstrap_makes_seeds_matter_but_extra_trees_replay() {
    let d = generate_dataset(&SyntheticSpec::benchmark(1, 1).unwrap()).unwrap();
    let rows: Vec<usize> = (0..300).collect();
    let x = d.features.select_rows(&rows);
    let y: Vec<f64> = rows.iter().map(|&i| d.targets[i]).collect();
    let a = default_train(LearnerKind::RandomForest, &x, &y, 1);
    let b = default_train(LearnerKind::RandomForest, &x, &y, 2);
    assert_ne!(forest_trees(&a)[0], forest_trees(&b)[0]);
    let e1 = default_train(LearnerKind::ExtraTrees, &x, &y, 9);
    let e2 = default_train(LearnerKind::ExtraTrees, &x, &y, 9);
    assert_eq!(forest_trees(&e1), forest_trees(&e2));
}

#[test]
fn random_forest_importance_concentrates_on_the_only_signal() {
    let mut rng = rng_from_seed(6);
    let rows: Vec<Vec<f64>> = (0..500).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[1]).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let m = default_train(LearnerKind::RandomForest, &x, &y, 3);
    let imp = impurity_importance(&m).unwrap();
    assert!(imp[1] > 0.95, "{imp:?}");
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(imp.iter().all(|v| *v >= 0.0));

    let svr = default_train(LearnerKind::LinearSvr, &x, &y, 3);
    assert!(matches!(impurity_importance(&svr), Err(FefiError::UnsupportedMethod { .. })));
    let mlp = default_train(LearnerKind::Mlp, &x, &y, 3);
    assert!(matches!(impurity_importance(&mlp), Err(FefiError::UnsupportedMethod { .. })));
}

/// Greedy exhaustive CART: every feature, every midpoint, lowest SSE.
fn oracle_tree(rows: &[Vec<f64>], y: &[f64], idx: &[usize], depth: usize) -> Box<dyn Fn(&[f64]) -> f64> {
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
    let sse = |s: &[usize]| {
        let m = s.iter().map(|&i| y[i]).sum::<f64>() / s.len() as f64;
        s.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let parent = sse(idx);
    if depth == 0 || idx.len() < 2 || parent <= 1e-12 {
        return Box::new(move |_| mean);
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..rows[0].len() {
        let mut vals: Vec<f64> = idx.iter().map(|&i| rows[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][f] <= t);
            let total = sse(&l) + sse(&r);
            if best.is_none_or(|(b, _, _)| total < b - 1e-12) {
                best = Some((total, f, t));
            }
        }
    }
    let Some((total, f, t)) = best else {
        return Box::new(move |_| mean);
    };
    if total >= parent - 1e-12 {
        return Box::new(move |_| mean);
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][f] <= t);
    let left = oracle_tree(rows, y, &l, depth - 1);
    let right = oracle_tree(rows, y, &r, depth - 1);
    Box::new(move |row| if row[f] <= t { left(row) } else { right(row) })
}

#[test]
fn one_stage_boosting_matches_depth_three_oracle() {
    let mut rng = rng_from_seed(12);
    for case in 0..10 {
        let n = 20 + case;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| if r[0] > 0.4 { 2.0 } else { 0.0 } + if r[1] > 0.7 { 5.0 } else { 1.0 } + if r[0] > 0.8 { 1.5 } else { 0.0 })
            .collect();
        let hp = Hyperparams::GradientBoosting(GradientBoostingParams {
            n_stages: 1,
            ..Default::default()
        });
        let x = Matrix::from_rows(&rows).unwrap();
        let m = train(LearnerKind::GradientBoosting, &hp, &x, &y, 0).unwrap();
        let mean = y.iter().sum::<f64>() / n as f64;
        let residuals: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let all: Vec<usize> = (0..n).collect();
        let oracle = oracle_tree(&rows, &residuals, &all, 3);
        for row in &rows {
            let expected = mean + 0.1 * oracle(row);
            assert!((m.predict_row(row) - expected).abs() < 1e-9, "case {case}");
        }
    }
}

#[test]
fn model_dump_is_json() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    let m = default_train(LearnerKind::LinearSvr, &x, &[1.0, 2.0, 3.0], 0);
    let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    assert_eq!(v["kind"], "LinearSvr");
}
