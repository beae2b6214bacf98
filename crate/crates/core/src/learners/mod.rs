//! From-scratch regression learners with a uniform train/predict surface.

pub mod boosting;
pub mod forest;
pub mod mlp;
pub mod svr;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result};
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;

pub use boosting::{GradientBoosting, GradientBoostingParams};
pub use forest::{Forest, ForestParams};
pub use mlp::{Mlp, MlpNetwork, MlpParams};
pub use svr::{LinearSvr, LinearSvrParams};
pub use tree::{RegressionTree, SplitCriterion, Splitter, TreeParams};

/// Anything that maps a feature row to a real prediction.
pub trait Regressor: Sync {
    fn n_features(&self) -> usize;

    fn predict_row(&self, row: &[f64]) -> f64;

    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features() {
            return Err(FefiError::shape(
                format!("{} columns", self.n_features()),
                format!("{} columns", x.cols()),
            ));
        }
        Ok(self.predict_rows(x))
    }

    /// Batch prediction without the shape check.
    fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).take(x.rows()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    GradientBoosting,
    RandomForest,
    ExtraTrees,
    LinearSvr,
    Mlp,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::GradientBoosting,
        LearnerKind::RandomForest,
        LearnerKind::ExtraTrees,
        LearnerKind::LinearSvr,
        LearnerKind::Mlp,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            LearnerKind::GradientBoosting => "GB",
            LearnerKind::RandomForest => "RF",
            LearnerKind::ExtraTrees => "ET",
            LearnerKind::LinearSvr => "SVR",
            LearnerKind::Mlp => "MLP",
        }
    }

    pub fn is_tree_based(self) -> bool {
        matches!(
            self,
            LearnerKind::GradientBoosting | LearnerKind::RandomForest | LearnerKind::ExtraTrees
        )
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LearnerKind {
    type Err = FefiError;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.short_name().eq_ignore_ascii_case(s) || format!("{k:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| FefiError::Parameter(format!("unknown learner `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hyperparams {
    GradientBoosting(GradientBoostingParams),
    RandomForest(ForestParams),
    ExtraTrees(ForestParams),
    LinearSvr(LinearSvrParams),
    Mlp(MlpParams),
}

impl Hyperparams {
    /// The fixed configuration used throughout the experiments.
    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::GradientBoosting => Hyperparams::GradientBoosting(Default::default()),
            LearnerKind::RandomForest => Hyperparams::RandomForest(ForestParams::random_forest()),
            LearnerKind::ExtraTrees => Hyperparams::ExtraTrees(ForestParams::extra_trees()),
            LearnerKind::LinearSvr => Hyperparams::LinearSvr(Default::default()),
            LearnerKind::Mlp => Hyperparams::Mlp(Default::default()),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            Hyperparams::GradientBoosting(_) => LearnerKind::GradientBoosting,
            Hyperparams::RandomForest(_) => LearnerKind::RandomForest,
            Hyperparams::ExtraTrees(_) => LearnerKind::ExtraTrees,
            Hyperparams::LinearSvr(_) => LearnerKind::LinearSvr,
            Hyperparams::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FefiError::Parameter(format!("{}: {m}", self.kind())));
        match self {
            Hyperparams::GradientBoosting(p) => {
                if p.n_stages == 0 {
                    return bad("n_stages must be at least 1");
                }
                if p.max_depth == 0 {
                    return bad("max_depth must be at least 1");
                }
                if p.min_samples_split < 2 {
                    return bad("min_samples_split must be at least 2");
                }
                if !(p.learning_rate > 0.0) {
                    return bad("learning_rate must be positive");
                }
            }
            Hyperparams::RandomForest(p) | Hyperparams::ExtraTrees(p) => {
                if p.n_trees == 0 {
                    return bad("n_trees must be at least 1");
                }
                if p.max_depth == Some(0) {
                    return bad("max_depth must be at least 1");
                }
                if p.min_samples_split < 2 {
                    return bad("min_samples_split must be at least 2");
                }
            }
            Hyperparams::LinearSvr(p) => {
                if !(p.tolerance > 0.0) {
                    return bad("tolerance must be positive");
                }
                if !(p.c > 0.0) {
                    return bad("C must be positive");
                }
                if !(p.epsilon >= 0.0) {
                    return bad("epsilon must be non-negative");
                }
                if p.max_epochs == 0 {
                    return bad("max_epochs must be at least 1");
                }
            }
            Hyperparams::Mlp(p) => {
                if p.hidden_size == 0 || p.epochs == 0 {
                    return bad("hidden_size and epochs must be at least 1");
                }
                if !(p.learning_rate > 0.0) {
                    return bad("learning_rate must be positive");
                }
                if !(p.l2 >= 0.0) {
                    return bad("l2 must be non-negative");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state")]
pub enum ModelState {
    GradientBoosting(GradientBoosting),
    RandomForest(Forest),
    ExtraTrees(Forest),
    LinearSvr(LinearSvr),
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    kind: LearnerKind,
    n_features: usize,
    state: ModelState,
    /// RMSE on the training rows.
    train_score: f64,
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn train_score(&self) -> f64 {
        self.train_score
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    /// Debug dump of the fitted structure; not a stable format.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Regressor for TrainedModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.state {
            ModelState::GradientBoosting(m) => m.predict_row(row),
            ModelState::RandomForest(m) | ModelState::ExtraTrees(m) => m.predict_row(row),
            ModelState::LinearSvr(m) => m.predict_row(row),
            ModelState::Mlp(m) => m.predict_row(row),
        }
    }

    fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        match &self.state {
            ModelState::GradientBoosting(m) => m.predict_rows(x),
            ModelState::RandomForest(m) | ModelState::ExtraTrees(m) => m.predict_rows(x),
            _ => x.iter_rows().map(|r| self.predict_row(r)).take(x.rows()).collect(),
        }
    }
}

/// Fits one learner. Deterministic for a fixed seed.
pub fn train(kind: LearnerKind, hp: &Hyperparams, features: &Matrix, targets: &[f64], seed: u64) -> Result<TrainedModel> {
    if hp.kind() != kind {
        return Err(FefiError::Parameter(format!(
            "hyperparameters for {} given to a {kind} learner",
            hp.kind()
        )));
    }
    hp.validate()?;
    if features.rows() != targets.len() {
        return Err(FefiError::shape(
            format!("{} targets", features.rows()),
            format!("{} targets", targets.len()),
        ));
    }
    if targets.len() < 2 {
        return Err(FefiError::TrainingDegenerate(format!(
            "{} training instance(s); at least 2 required",
            targets.len()
        )));
    }
    if features.cols() == 0 {
        return Err(FefiError::TrainingDegenerate("no feature columns".into()));
    }
    if !features.all_finite() || targets.iter().any(|v| !v.is_finite()) {
        return Err(FefiError::Data("non-finite training value".into()));
    }

    let mut rng = rng_from_seed(seed);
    let state = match hp {
        Hyperparams::GradientBoosting(p) => ModelState::GradientBoosting(GradientBoosting::fit(features, targets, p, &mut rng)),
        Hyperparams::RandomForest(p) => ModelState::RandomForest(Forest::fit(features, targets, p, Splitter::Best, &mut rng)),
        Hyperparams::ExtraTrees(p) => ModelState::ExtraTrees(Forest::fit(features, targets, p, Splitter::Random, &mut rng)),
        Hyperparams::LinearSvr(p) => ModelState::LinearSvr(LinearSvr::fit(features, targets, p, &mut rng)),
        Hyperparams::Mlp(p) => ModelState::Mlp(Mlp::fit(features, targets, p, &mut rng)),
    };
    let mut model = TrainedModel {
        kind,
        n_features: features.cols(),
        state,
        train_score: 0.0,
    };
    let pred = model.predict(features)?;
    let mse = pred.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / targets.len() as f64;
    model.train_score = mse.sqrt();
    Ok(model)
}

pub fn predict(model: &TrainedModel, features: &Matrix) -> Result<Vec<f64>> {
    model.predict(features)
}

/// Total squared-error reduction per feature, summed over every split,
/// averaged over trees and normalized to sum 1.
pub fn impurity_importance(model: &TrainedModel) -> Result<Vec<f64>> {
    let trees: &[RegressionTree] = match &model.state {
        ModelState::GradientBoosting(m) => m.stages(),
        ModelState::RandomForest(m) | ModelState::ExtraTrees(m) => m.trees(),
        _ => {
            return Err(FefiError::UnsupportedMethod {
                method: "impurity".into(),
                model: model.kind.to_string(),
            })
        }
    };
    let mut total = vec![0.0; model.n_features];
    for t in trees {
        for (acc, v) in total.iter_mut().zip(t.impurity_decrease()) {
            *acc += v;
        }
    }
    let n = trees.len() as f64;
    total.iter_mut().for_each(|v| *v /= n);
    Ok(tree::normalize_sum(total))
}
