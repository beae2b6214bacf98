use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{FeatureColumns, RegressionTree, SplitCriterion, Splitter, TreeParams};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn random_forest() -> Self {
        ForestParams {
            n_trees: 50,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: true,
        }
    }

    pub fn extra_trees() -> Self {
        ForestParams {
            bootstrap: false,
            ..Self::random_forest()
        }
    }
}

/// Averaging ensemble of regression trees: random forests use best splits
/// on bootstrap samples, extra trees use random thresholds on the full set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<RegressionTree>,
}

impl Forest {
    pub fn fit(x: &Matrix, y: &[f64], params: &ForestParams, splitter: Splitter, rng: &mut Rng) -> Self {
        let n = y.len();
        let cols = match splitter {
            Splitter::Best => FeatureColumns::new(x).with_sort_orders(),
            Splitter::Random => FeatureColumns::new(x),
        };
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            criterion: SplitCriterion::Mse,
            splitter,
        };
        let base: u64 = rng.random();
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut tree_rng = rng_from_seed(derive_seed(base, &[t as u64]));
                let mut weights = vec![0.0; n];
                if params.bootstrap {
                    for _ in 0..n {
                        weights[tree_rng.random_range(0..n)] += 1.0;
                    }
                } else {
                    weights.fill(1.0);
                }
                RegressionTree::fit(&cols, y, &weights, tree_params, &mut tree_rng)
            })
            .collect();
        Forest { trees }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Tree-major batch prediction; equal to `predict_row` on every row.
    pub fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        let mut acc = vec![0.0; x.rows()];
        for t in &self.trees {
            for (a, row) in acc.iter_mut().zip(x.iter_rows()) {
                *a += t.predict_row(row);
            }
        }
        let n = self.trees.len() as f64;
        acc.into_iter().map(|a| a / n).collect()
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }
}
