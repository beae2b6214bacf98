//! Resampling, the (model x fold x method) run matrix, and crisp fusion.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result, ResultExt};
use crate::importance::{compute_raw, normalize_importance, FiMethod, FiSettings, FiVector};
use crate::learners::{train, Hyperparams, LearnerKind};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::{mean, quantile_sorted};
use crate::synthgen::SyntheticDataset;
use crate::table::{DataSubset, FiRecord, FiTable};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold id of every instance.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffled round-robin assignment, so fold sizes differ by at most one.
pub fn make_folds(n_instances: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n_instances {
        return Err(FefiError::Parameter(format!(
            "k = {k} folds must satisfy 2 <= k <= n_instances = {n_instances}"
        )));
    }
    let mut order: Vec<usize> = (0..n_instances).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut assignments = vec![0; n_instances];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub k: usize,
    pub models: Vec<LearnerKind>,
    pub methods: Vec<FiMethod>,
    pub settings: FiSettings,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            k: DEFAULT_FOLDS,
            models: LearnerKind::ALL.to_vec(),
            methods: FiMethod::ALL.to_vec(),
            settings: FiSettings::default(),
        }
    }
}

/// Everything one ensemble run produced, one table per requested subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub tables: BTreeMap<DataSubset, FiTable>,
    pub vectors: BTreeMap<DataSubset, Vec<FiVector>>,
    /// Training RMSE per (model, fold).
    pub train_scores: Vec<(LearnerKind, usize, f64)>,
}

/// Trains `k` models per learner and extracts every supported importance on
/// each requested evaluation subset. Models are trained once and shared
/// across subsets.
pub fn run_ensemble_subsets(
    dataset: &SyntheticDataset,
    config: &EnsembleConfig,
    subsets: &[DataSubset],
    seed: u64,
) -> Result<EnsembleRun> {
    if config.models.is_empty() || config.methods.is_empty() {
        return Err(FefiError::Parameter("model and method sets must be nonempty".into()));
    }
    if subsets.is_empty() {
        return Err(FefiError::Parameter("at least one data subset is required".into()));
    }
    let mut models = config.models.clone();
    models.sort();
    models.dedup();
    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();
    let mut subsets = subsets.to_vec();
    subsets.sort();
    subsets.dedup();

    let plan = make_folds(dataset.n_instances(), config.k, derive_seed(seed, &[0]))?;
    let x = &dataset.features;
    let y = &dataset.targets;

    let tasks: Vec<(LearnerKind, usize)> = models
        .iter()
        .flat_map(|&m| (0..config.k).map(move |f| (m, f)))
        .collect();

    type TaskOutput = (f64, Vec<(DataSubset, FiVector)>);
    let outputs: Vec<TaskOutput> = tasks
        .par_iter()
        .map(|&(kind, fold)| -> Result<TaskOutput> {
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.fold_indices(fold);
            let x_train = x.select_rows(&train_idx);
            let y_train: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
            let model_seed = derive_seed(seed, &[1, kind as u64, fold as u64]);
            let model = train(kind, &Hyperparams::default_for(kind), &x_train, &y_train, model_seed)
                .context_with(|| format!("training {kind} on fold {fold}"))?;

            let mut vectors = Vec::new();
            for &subset in &subsets {
                let (xe, ye) = match subset {
                    DataSubset::Train => (x_train.clone(), y_train.clone()),
                    DataSubset::Test => (x.select_rows(&test_idx), test_idx.iter().map(|&i| y[i]).collect()),
                    DataSubset::Whole => (x.clone(), y.clone()),
                };
                for &method in &methods {
                    if !method.supports(kind) {
                        continue;
                    }
                    let fi_seed = derive_seed(seed, &[2, kind as u64, fold as u64, method as u64]);
                    let raw = compute_raw(method, &model, &xe, &ye, &config.settings, fi_seed)
                        .and_then(|raw| Ok((normalize_importance(&raw)?, raw)))
                        .context_with(|| format!("{method} importance of {kind}, fold {fold}, {subset} subset"))?;
                    vectors.push((
                        subset,
                        FiVector {
                            values: raw.0,
                            method,
                            model_kind: kind,
                            fold_id: fold,
                            raw_values: raw.1,
                        },
                    ));
                }
            }
            Ok((model.train_score(), vectors))
        })
        .collect::<Result<_>>()?;

    let mut run = EnsembleRun {
        tables: BTreeMap::new(),
        vectors: BTreeMap::new(),
        train_scores: Vec::with_capacity(tasks.len()),
    };
    let method_pos: BTreeMap<FiMethod, usize> = methods.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut records: BTreeMap<DataSubset, Vec<FiRecord>> = BTreeMap::new();
    for (&(kind, fold), (score, vectors)) in tasks.iter().zip(outputs) {
        run.train_scores.push((kind, fold, score));
        for (subset, v) in vectors {
            let sample_id = v.fold_id * methods.len() + method_pos[&v.method];
            let recs = records.entry(subset).or_default();
            for (feature, &coefficient) in v.values.iter().enumerate() {
                recs.push(FiRecord {
                    feature,
                    sample_id,
                    method: v.method,
                    model: v.model_kind,
                    coefficient,
                });
            }
            run.vectors.entry(subset).or_default().push(v);
        }
    }
    for subset in subsets {
        let recs = records.remove(&subset).unwrap_or_default();
        let table = FiTable::new(recs, dataset.ground_truth_importance.clone(), subset)?;
        run.tables.insert(subset, table);
    }
    Ok(run)
}

pub fn run_ensemble(
    dataset: &SyntheticDataset,
    config: &EnsembleConfig,
    subset: DataSubset,
    seed: u64,
) -> Result<FiTable> {
    let mut run = run_ensemble_subsets(dataset, config, &[subset], seed)?;
    Ok(run.tables.remove(&subset).expect("requested subset is present"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FusionStrategy {
    Mean,
    Median,
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrispFusionResult {
    pub strategy: FusionStrategy,
    /// Fused importance indexed by feature.
    pub fused: Vec<f64>,
}

/// Per-feature coefficients in ascending order, so fusion does not depend
/// on record order.
fn sorted_by_feature(table: &FiTable) -> Result<Vec<Vec<f64>>> {
    if table.is_empty() {
        return Err(FefiError::Coverage("fusion of an empty table".into()));
    }
    let mut groups = table.by_feature();
    for (j, g) in groups.iter_mut().enumerate() {
        if g.is_empty() {
            return Err(FefiError::Coverage(format!("feature {j} has no coefficients")));
        }
        g.sort_by(f64::total_cmp);
    }
    Ok(groups)
}

fn fuse_with(table: &FiTable, strategy: FusionStrategy, f: fn(&[f64]) -> f64) -> Result<CrispFusionResult> {
    let fused = sorted_by_feature(table)?.iter().map(|g| f(g)).collect();
    Ok(CrispFusionResult { strategy, fused })
}

pub fn fuse_mean(table: &FiTable) -> Result<CrispFusionResult> {
    fuse_with(table, FusionStrategy::Mean, mean)
}

pub fn fuse_median(table: &FiTable) -> Result<CrispFusionResult> {
    fuse_with(table, FusionStrategy::Median, |g| quantile_sorted(g, 0.5))
}

fn tercile(v: f64) -> usize {
    if v < 1.0 / 3.0 {
        0
    } else if v < 2.0 / 3.0 {
        1
    } else {
        2
    }
}

/// Tercile vote over sorted coefficients: the most populated bin wins and
/// its members are averaged. Ties go to the bin holding the overall mean,
/// else the tied bin nearest to it (lower bin on equal distance).
pub fn majority_vote(sorted: &[f64]) -> f64 {
    let mut bins: [Vec<f64>; 3] = Default::default();
    for &v in sorted {
        bins[tercile(v)].push(v);
    }
    let top = bins.iter().map(Vec::len).max().unwrap_or(0);
    let mean_bin = tercile(mean(sorted)) as isize;
    let winner = (0..3)
        .filter(|&b| bins[b].len() == top)
        .min_by_key(|&b| ((b as isize - mean_bin).abs(), b))
        .expect("at least one bin is populated");
    mean(&bins[winner])
}

pub fn fuse_majority_vote(table: &FiTable) -> Result<CrispFusionResult> {
    fuse_with(table, FusionStrategy::MajorityVote, majority_vote)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_of(features: &[&[f64]]) -> FiTable {
        let mut records = Vec::new();
        for (feature, coefs) in features.iter().enumerate() {
            for (s, &c) in coefs.iter().enumerate() {
                records.push(FiRecord {
                    feature,
                    sample_id: s,
                    method: FiMethod::Permutation,
                    model: LearnerKind::RandomForest,
                    coefficient: c,
                });
            }
        }
        FiTable::new(records, vec![0.5; features.len()], DataSubset::Whole).unwrap()
    }

    #[test]
    fn fold_examples() {
        let p = make_folds(4, 2, 3).unwrap();
        assert_eq!(p.fold_sizes(), vec![2, 2]);
        let mut all: Vec<usize> = p.fold_indices(0).into_iter().chain(p.fold_indices(1)).collect();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);

        let mut sizes = make_folds(5, 2, 3).unwrap().fold_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);

        let a = make_folds(2000, 5, 11).unwrap();
        assert_eq!(a.fold_sizes(), vec![400; 5]);
        assert_eq!(a, make_folds(2000, 5, 11).unwrap());

        assert!(matches!(make_folds(5, 1, 0), Err(FefiError::Parameter(_))));
        assert!(matches!(make_folds(5, 6, 0), Err(FefiError::Parameter(_))));
    }

    #[test]
    fn mean_and_median_examples() {
        let t = table_of(&[&[0.4, 0.4, 0.4], &[0.0, 1.0]]);
        let m = fuse_mean(&t).unwrap().fused;
        assert!((m[0] - 0.4).abs() < 1e-12 && m[1] == 0.5);
        assert_eq!(fuse_median(&t).unwrap().fused, vec![0.4, 0.5]);
    }

    #[test]
    fn majority_vote_examples() {
        let t = table_of(&[&[0.9, 0.95, 0.1], &[0.3, 0.3, 0.3], &[0.1, 0.5, 0.9]]);
        let fused = fuse_majority_vote(&t).unwrap().fused;
        assert!((fused[0] - 0.925).abs() < 1e-12);
        assert_eq!(fused[1], 0.3);
        assert_eq!(fused[2], 0.5);
    }

    #[test]
    fn uncovered_feature_is_a_coverage_error() {
        let mut t = table_of(&[&[0.2]]);
        t.ground_truth.push(0.1);
        assert!(matches!(fuse_mean(&t), Err(FefiError::Coverage(_))));
        let empty = FiTable::new(vec![], vec![0.5], DataSubset::Whole).unwrap();
        assert!(matches!(fuse_majority_vote(&empty), Err(FefiError::Coverage(_))));
    }
}
