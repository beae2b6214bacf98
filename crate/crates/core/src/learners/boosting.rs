use serde::{Deserialize, Serialize};

use super::tree::{FeatureColumns, RegressionTree, SplitCriterion, Splitter, TreeParams};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingParams {
    pub learning_rate: f64,
    pub n_stages: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub criterion: SplitCriterion,
}

impl Default for GradientBoostingParams {
    fn default() -> Self {
        GradientBoostingParams {
            learning_rate: 0.1,
            n_stages: 50,
            max_depth: 3,
            min_samples_split: 2,
            criterion: SplitCriterion::FriedmanMse,
        }
    }
}

/// Least-squares gradient boosting: each stage fits a tree to the current residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    stages: Vec<RegressionTree>,
}

impl GradientBoosting {
    pub fn fit(x: &Matrix, y: &[f64], params: &GradientBoostingParams, rng: &mut Rng) -> Self {
        let cols = FeatureColumns::new(x).with_sort_orders();
        let init = y.iter().sum::<f64>() / y.len() as f64;
        let mut current = vec![init; y.len()];
        let weights = vec![1.0; y.len()];
        let tree_params = TreeParams {
            max_depth: Some(params.max_depth),
            min_samples_split: params.min_samples_split,
            criterion: params.criterion,
            splitter: Splitter::Best,
        };
        let mut stages = Vec::with_capacity(params.n_stages);
        let mut residual = vec![0.0; y.len()];
        for _ in 0..params.n_stages {
            for ((r, &t), &c) in residual.iter_mut().zip(y).zip(&current) {
                *r = t - c;
            }
            let tree = RegressionTree::fit(&cols, &residual, &weights, tree_params, rng);
            for (i, c) in current.iter_mut().enumerate() {
                *c += params.learning_rate * tree.predict_row(x.row(i));
            }
            stages.push(tree);
        }
        GradientBoosting {
            init,
            learning_rate: params.learning_rate,
            stages,
        }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.init
            + self.learning_rate * self.stages.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    /// Stage-major batch prediction; equal to `predict_row` on every row.
    pub fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        let mut acc = vec![0.0; x.rows()];
        for t in &self.stages {
            for (a, row) in acc.iter_mut().zip(x.iter_rows()) {
                *a += t.predict_row(row);
            }
        }
        acc.into_iter().map(|a| self.init + self.learning_rate * a).collect()
    }

    pub fn stages(&self) -> &[RegressionTree] {
        &self.stages
    }
}
