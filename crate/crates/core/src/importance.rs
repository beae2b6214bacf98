//! Feature-importance estimators: permutation importance, sampled Shapley
//! values and tree impurity importance, plus max-normalization to [0, 1].

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result};
use crate::learners::{impurity_importance, LearnerKind, Regressor, TrainedModel};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FiMethod {
    Permutation,
    ShapleySampling,
    Impurity,
}

impl FiMethod {
    pub const ALL: [FiMethod; 3] = [FiMethod::Permutation, FiMethod::ShapleySampling, FiMethod::Impurity];

    pub fn short_name(self) -> &'static str {
        match self {
            FiMethod::Permutation => "PI",
            FiMethod::ShapleySampling => "SHAP",
            FiMethod::Impurity => "Gini",
        }
    }

    pub fn supports(self, kind: LearnerKind) -> bool {
        self != FiMethod::Impurity || kind.is_tree_based()
    }
}

impl fmt::Display for FiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for FiMethod {
    type Err = FefiError;

    fn from_str(s: &str) -> Result<Self> {
        FiMethod::ALL
            .into_iter()
            .find(|m| m.short_name().eq_ignore_ascii_case(s) || format!("{m:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| FefiError::Parameter(format!("unknown importance method `{s}`")))
    }
}

/// One normalized importance vector from a single (model, method, fold) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiVector {
    pub values: Vec<f64>,
    pub method: FiMethod,
    pub model_kind: LearnerKind,
    pub fold_id: usize,
    pub raw_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiSettings {
    pub permutation_repeats: usize,
    pub shapley_samples: usize,
    pub shapley_eval_rows: usize,
}

impl Default for FiSettings {
    fn default() -> Self {
        FiSettings {
            permutation_repeats: 5,
            shapley_samples: 128,
            shapley_eval_rows: 100,
        }
    }
}

fn rmse_of(predictions: impl Iterator<Item = f64>, y: &[f64]) -> f64 {
    let se: f64 = predictions.zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    (se / y.len() as f64).sqrt()
}

fn check_shape<M: Regressor + ?Sized>(model: &M, x: &Matrix) -> Result<()> {
    if x.cols() != model.n_features() {
        return Err(FefiError::shape(
            format!("{} columns", model.n_features()),
            format!("{} columns", x.cols()),
        ));
    }
    if x.rows() == 0 {
        return Err(FefiError::Parameter("importance needs at least one row".into()));
    }
    Ok(())
}

/// Mean RMSE increase over `n_repeats` shuffles of each column.
/// Negative values (shuffling helped) are returned as-is.
pub fn permutation_importance<M: Regressor + ?Sized>(
    model: &M,
    features: &Matrix,
    targets: &[f64],
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_shape(model, features)?;
    if targets.len() != features.rows() {
        return Err(FefiError::shape(format!("{} targets", features.rows()), format!("{} targets", targets.len())));
    }
    if n_repeats == 0 {
        return Err(FefiError::Parameter("n_repeats must be at least 1".into()));
    }
    let n = features.rows();
    let baseline = rmse_of(model.predict_rows(features).into_iter(), targets);
    let mut work = features.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(features.cols());
    for j in 0..features.cols() {
        let mut total = 0.0;
        for rep in 0..n_repeats {
            let mut rng = rng_from_seed(derive_seed(seed, &[j as u64, rep as u64]));
            perm.iter_mut().enumerate().for_each(|(i, p)| *p = i);
            perm.shuffle(&mut rng);
            for (i, &p) in perm.iter().enumerate() {
                work.set(i, j, features.get(p, j));
            }
            let permuted = rmse_of(model.predict_rows(&work).into_iter(), targets);
            total += permuted - baseline;
        }
        for i in 0..n {
            work.set(i, j, features.get(i, j));
        }
        out.push(total / n_repeats as f64);
    }
    Ok(out)
}

/// Sampled Shapley values for one instance with Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyEstimate {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Mean prediction of the sampled background rows (the efficiency baseline).
    pub baseline: f64,
}

/// Each sample draws a random feature ordering and a random background
/// row, then walks from the background row to the instance one feature at
/// a time; the prediction change at each step is that feature's marginal
/// contribution.
pub fn shapley_instance<M: Regressor + ?Sized>(
    model: &M,
    background: &Matrix,
    instance: &[f64],
    n_samples: usize,
    rng: &mut Rng,
) -> ShapleyEstimate {
    let d = instance.len();
    let mut order: Vec<usize> = (0..d).collect();
    let mut orders = Vec::with_capacity(n_samples * d);
    let mut walk = Vec::with_capacity(n_samples * (d + 1) * d);
    for _ in 0..n_samples {
        order.shuffle(rng);
        let z = rng.random_range(0..background.rows());
        let start = walk.len();
        walk.extend_from_slice(background.row(z));
        for &f in &order {
            walk.extend_from_within(walk.len() - d..);
            let last = walk.len() - d;
            walk[last + f] = instance[f];
        }
        debug_assert_eq!(walk.len() - start, (d + 1) * d);
        orders.extend_from_slice(&order);
    }
    let preds = model.predict_rows(&Matrix::from_vec(n_samples * (d + 1), d, walk).expect("walk shape"));
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut baseline = 0.0;
    for (s, chunk) in preds.chunks(d + 1).enumerate() {
        baseline += chunk[0];
        for (step, &f) in orders[s * d..(s + 1) * d].iter().enumerate() {
            let delta = chunk[step + 1] - chunk[step];
            sum[f] += delta;
            sum_sq[f] += delta * delta;
        }
    }
    let n = n_samples as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_errors = sum_sq
        .iter()
        .zip(&values)
        .map(|(sq, m)| {
            let var = if n_samples > 1 { ((sq - n * m * m) / (n - 1.0)).max(0.0) } else { 0.0 };
            (var / n).sqrt()
        })
        .collect();
    ShapleyEstimate {
        values,
        std_errors,
        baseline: baseline / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyTarget {
    Instance(usize),
    /// Mean absolute per-instance value over a fixed row subsample.
    Aggregate { eval_rows: usize },
}

pub const MIN_SHAPLEY_SAMPLES: usize = 10;

pub fn shapley_sampling<M: Regressor + ?Sized>(
    model: &M,
    features: &Matrix,
    target: ShapleyTarget,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_shape(model, features)?;
    if n_samples < MIN_SHAPLEY_SAMPLES {
        return Err(FefiError::Parameter(format!(
            "n_samples = {n_samples} is below the minimum of {MIN_SHAPLEY_SAMPLES}"
        )));
    }
    let n = features.rows();
    match target {
        ShapleyTarget::Instance(i) => {
            if i >= n {
                return Err(FefiError::Parameter(format!("instance {i} out of range for {n} rows")));
            }
            let mut rng = rng_from_seed(seed);
            Ok(shapley_instance(model, features, features.row(i), n_samples, &mut rng).values)
        }
        ShapleyTarget::Aggregate { eval_rows } => {
            let rows: Vec<usize> = if n <= eval_rows {
                (0..n).collect()
            } else {
                let mut picked = index::sample(&mut rng_from_seed(derive_seed(seed, &[0])), n, eval_rows).into_vec();
                picked.sort_unstable();
                picked
            };
            let mut total = vec![0.0; features.cols()];
            for (k, &i) in rows.iter().enumerate() {
                let mut rng = rng_from_seed(derive_seed(seed, &[1, k as u64]));
                let est = shapley_instance(model, features, features.row(i), n_samples, &mut rng);
                for (t, v) in total.iter_mut().zip(&est.values) {
                    *t += v.abs();
                }
            }
            let m = rows.len() as f64;
            Ok(total.into_iter().map(|t| t / m).collect())
        }
    }
}

/// Clamp negatives to 0, then divide by the maximum. All-zero stays all-zero.
pub fn normalize_importance(raw: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
        return Err(FefiError::Data(format!("non-finite importance value {bad}")));
    }
    let clamped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    let max = clamped.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(vec![0.0; raw.len()]);
    }
    Ok(clamped.into_iter().map(|v| v / max).collect())
}

/// Raw importances of `model` by `method` on the evaluation data.
pub fn compute_raw(
    method: FiMethod,
    model: &TrainedModel,
    features: &Matrix,
    targets: &[f64],
    settings: &FiSettings,
    seed: u64,
) -> Result<Vec<f64>> {
    match method {
        FiMethod::Permutation => permutation_importance(model, features, targets, settings.permutation_repeats, seed),
        FiMethod::ShapleySampling => shapley_sampling(
            model,
            features,
            ShapleyTarget::Aggregate {
                eval_rows: settings.shapley_eval_rows,
            },
            settings.shapley_samples,
            seed,
        ),
        FiMethod::Impurity => impurity_importance(model),
    }
}
