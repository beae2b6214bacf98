use std::collections::BTreeMap;

use fefi::harness::{fuzzy_fusion, FeatureAggregation};
use fefi::importance::{FiMethod, FiSettings};
use fefi::learners::LearnerKind;
use fefi::pipeline::*;
use fefi::rulegen::build_training_pairs;
use fefi::synthgen::{generate_dataset, InteractionLevel, SyntheticDataset, SyntheticSpec};
use fefi::table::{DataSubset, FiRecord, FiTable};
use fefi::FefiError;

fn small_dataset(seed: u64) -> SyntheticDataset {
    generate_dataset(&SyntheticSpec {
        n_instances: 200,
        n_features: 5,
        informative_fraction: 0.6,
        noise_std: 0.5,
        interaction_level: InteractionLevel::Low,
        seed,
    })
    .unwrap()
}

fn light_settings() -> FiSettings {
    FiSettings {
        permutation_repeats: 2,
        shapley_samples: 16,
        shapley_eval_rows: 20,
    }
}

#[test]
fn record_count_matches_supported_combinations() {
    let data = small_dataset(3);
    let config = EnsembleConfig {
        k: 3,
        models: vec![LearnerKind::GradientBoosting, LearnerKind::LinearSvr],
        methods: FiMethod::ALL.to_vec(),
        settings: light_settings(),
    };
    let table = run_ensemble(&data, &config, DataSubset::Whole, 1).unwrap();
    // Impurity importance exists only for the tree ensemble.
    let cells: usize = config
        .models
        .iter()
        .map(|m| FiMethod::ALL.iter().filter(|f| f.supports(*m)).count())
        .sum();
    assert_eq!(table.records.len(), 5 * 3 * cells);
    assert!(table.records.iter().all(|r| (0.0..=1.0).contains(&r.coefficient)));
    let mut ids: Vec<usize> = table.records.iter().map(|r| r.sample_id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids, (0..9).collect::<Vec<_>>());
}

#[test]
fn single_model_single_method_two_folds() {
    let data = small_dataset(4);
    let config = EnsembleConfig {
        k: 2,
        models: vec![LearnerKind::RandomForest],
        methods: vec![FiMethod::Impurity],
        settings: light_settings(),
    };
    let run = run_ensemble_subsets(&data, &config, &DataSubset::ALL, 9).unwrap();
    assert_eq!(run.tables.len(), 3);
    for table in run.tables.values() {
        assert_eq!(table.records.len(), 10);
        for feature in 0..5 {
            assert_eq!(table.records.iter().filter(|r| r.feature == feature).count(), 2);
        }
    }
    assert_eq!(run.train_scores.len(), 2);
}

#[test]
fn ensemble_is_deterministic_and_seed_sensitive() {
    let data = small_dataset(5);
    let config = EnsembleConfig {
        k: 2,
        models: vec![LearnerKind::ExtraTrees, LearnerKind::Mlp],
        methods: vec![FiMethod::Permutation, FiMethod::ShapleySampling],
        settings: light_settings(),
    };
    let a = run_ensemble(&data, &config, DataSubset::Test, 11).unwrap();
    let b = run_ensemble(&data, &config, DataSubset::Test, 11).unwrap();
    let c = run_ensemble(&data, &config, DataSubset::Test, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn informative_features_outrank_noise() {
    let data = small_dataset(6);
    let config = EnsembleConfig {
        k: 3,
        models: vec![LearnerKind::GradientBoosting, LearnerKind::LinearSvr],
        methods: vec![FiMethod::Permutation],
        settings: light_settings(),
    };
    let table = run_ensemble(&data, &config, DataSubset::Whole, 2).unwrap();
    let fused = fuse_mean(&table).unwrap().fused;
    let truth = &data.ground_truth_importance;
    let top = (0..5).max_by(|&i, &j| truth[i].total_cmp(&truth[j])).unwrap();
    let noise: Vec<usize> = (0..5).filter(|&i| truth[i] == 0.0).collect();
    assert!(!noise.is_empty());
    for i in noise {
        assert!(fused[top] > fused[i], "{fused:?} vs {truth:?}");
    }
    let fuzzy = fuzzy_fusion(&table, FeatureAggregation::default()).unwrap();
    assert_eq!(fuzzy.fused.len(), 5);
    assert!(fuzzy.fused.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn bad_ensemble_parameters() {
    let data = small_dataset(7);
    let mut config = EnsembleConfig {
        k: 1,
        ..Default::default()
    };
    assert!(matches!(run_ensemble(&data, &config, DataSubset::Whole, 1), Err(FefiError::Parameter(_))));
    config.k = 2;
    config.models.clear();
    assert!(matches!(run_ensemble(&data, &config, DataSubset::Whole, 1), Err(FefiError::Parameter(_))));
    assert!(matches!(make_folds(3, 4, 0), Err(FefiError::Parameter(_))));
}

fn table_from(cells: &[(usize, usize, LearnerKind, f64)], truth: Vec<f64>) -> FiTable {
    let records = cells
        .iter()
        .map(|&(feature, sample_id, model, coefficient)| FiRecord {
            feature,
            sample_id,
            method: FiMethod::Permutation,
            model,
            coefficient,
        })
        .collect();
    FiTable::new(records, truth, DataSubset::Whole).unwrap()
}

fn pseudo_random(n: usize, mut state: u64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

#[test]
fn crisp_fusions_match_brute_force() {
    let values = pseudo_random(3 * 4 * 2, 99);
    let models = [LearnerKind::GradientBoosting, LearnerKind::Mlp];
    let mut cells = Vec::new();
    let mut it = values.iter();
    for f in 0..3 {
        for s in 0..4 {
            for m in models {
                cells.push((f, s, m, *it.next().unwrap()));
            }
        }
    }
    let table = table_from(&cells, vec![0.2, 0.5, 0.9]);
    let mean = fuse_mean(&table).unwrap().fused;
    let median = fuse_median(&table).unwrap().fused;
    let vote = fuse_majority_vote(&table).unwrap().fused;
    for f in 0..3 {
        let mut v: Vec<f64> = cells.iter().filter(|c| c.0 == f).map(|c| c.3).collect();
        v.sort_by(f64::total_cmp);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean[f] - m).abs() < 1e-12);
        assert!((median[f] - (v[3] + v[4]) / 2.0).abs() < 1e-12);
        let bins: Vec<usize> = v.iter().map(|x| if *x < 1.0 / 3.0 { 0 } else if *x < 2.0 / 3.0 { 1 } else { 2 }).collect();
        let counts: Vec<usize> = (0..3).map(|b| bins.iter().filter(|&&x| x == b).count()).collect();
        let best = *counts.iter().max().unwrap();
        let winners: Vec<usize> = (0..3).filter(|&b| counts[b] == best).collect();
        if winners.len() == 1 {
            let members: Vec<f64> = v.iter().zip(&bins).filter(|(_, b)| **b == winners[0]).map(|(x, _)| *x).collect();
            let expect = members.iter().sum::<f64>() / members.len() as f64;
            assert!((vote[f] - expect).abs() < 1e-12);
        }
        assert!((0.0..=1.0).contains(&vote[f]));
    }
}

#[test]
fn fusions_ignore_record_order() {
    let values = pseudo_random(4 * 3 * 3, 7);
    let models = [LearnerKind::GradientBoosting, LearnerKind::RandomForest, LearnerKind::LinearSvr];
    let mut cells = Vec::new();
    let mut it = values.iter();
    for f in 0..4 {
        for s in 0..3 {
            for m in models {
                cells.push((f, s, m, *it.next().unwrap()));
            }
        }
    }
    let truth = vec![0.1, 0.4, 0.7, 1.0];
    let table = table_from(&cells, truth.clone());
    let mut reversed = cells.clone();
    reversed.reverse();
    reversed.swap(0, 17);
    let shuffled = table_from(&reversed, truth);
    assert_eq!(fuse_mean(&table).unwrap(), fuse_mean(&shuffled).unwrap());
    assert_eq!(fuse_median(&table).unwrap(), fuse_median(&shuffled).unwrap());
    assert_eq!(fuse_majority_vote(&table).unwrap(), fuse_majority_vote(&shuffled).unwrap());
    for aggregation in [FeatureAggregation::MeanCoefficient, FeatureAggregation::MeanLikelihood] {
        let a = fuzzy_fusion(&table, aggregation).unwrap();
        let b = fuzzy_fusion(&shuffled, aggregation).unwrap();
        assert_eq!(a.fused, b.fused);
        assert_eq!(a.rulebase.rules, b.rulebase.rules);
    }
}

#[test]
fn training_pairs_drop_incomplete_cells() {
    let cells = [
        (0, 0, LearnerKind::GradientBoosting, 0.2),
        (0, 0, LearnerKind::Mlp, 0.3),
        (0, 1, LearnerKind::GradientBoosting, 0.4),
        (1, 0, LearnerKind::GradientBoosting, 0.9),
        (1, 0, LearnerKind::Mlp, 0.8),
    ];
    let table = table_from(&cells, vec![0.25, 0.85]);
    let set = build_training_pairs(&table);
    assert_eq!(set.models, vec![LearnerKind::GradientBoosting, LearnerKind::Mlp]);
    assert_eq!(set.pairs.len(), 2);
    assert_eq!(set.dropped, 1);
    assert_eq!(set.pairs[1].inputs, vec![0.9, 0.8]);
    assert_eq!(set.pairs[1].target, 0.85);
    let per_feature: BTreeMap<usize, usize> = set.pairs.iter().fold(BTreeMap::new(), |mut m, p| {
        *m.entry(p.feature).or_default() += 1;
        m
    });
    assert_eq!(per_feature[&0], 1);
}
