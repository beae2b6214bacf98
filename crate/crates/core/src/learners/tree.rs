//! CART regression trees shared by the boosting and forest learners.
//!
//! `Splitter::Best` searches every threshold between consecutive distinct
//! values using per-feature presorted sample lists that are stably
//! partitioned down the tree. `Splitter::Random` draws one uniform threshold
//! per feature between the node's min and max (extremely randomized trees).

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitCriterion {
    /// Plain variance (squared error) reduction.
    Mse,
    /// Friedman's improvement score, `n_l * n_r / (n_l + n_r) * (mean_l - mean_r)^2`.
    FriedmanMse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Splitter {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub criterion: SplitCriterion,
    pub splitter: Splitter,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            criterion: SplitCriterion::Mse,
            splitter: Splitter::Best,
        }
    }
}

const LEAF: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: u32,
    pub threshold: f64,
    /// Child indices; `0` marks a leaf since the root is never a child.
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

impl Node {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.left == LEAF
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
    /// Weighted squared-error reduction accumulated per split feature.
    impurity_decrease: Vec<f64>,
}

/// Column-major copy of a feature matrix with lazily usable sort orders.
pub struct FeatureColumns {
    columns: Vec<Vec<f64>>,
    n_rows: usize,
    sorted: Option<Vec<Vec<u32>>>,
}

impl FeatureColumns {
    pub fn new(x: &Matrix) -> Self {
        let columns = (0..x.cols()).map(|c| x.column(c)).collect();
        FeatureColumns {
            columns,
            n_rows: x.rows(),
            sorted: None,
        }
    }

    /// Precomputes per-feature ascending sample orders, reused by every
    /// best-split tree fitted on these columns.
    pub fn with_sort_orders(mut self) -> Self {
        let sorted = self
            .columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..self.n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect();
        self.sorted = Some(sorted);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Clone, Copy)]
struct NodeStats {
    weight: f64,
    sum: f64,
    sum_sq: f64,
}

impl NodeStats {
    fn sse(&self) -> f64 {
        if self.weight <= 0.0 {
            0.0
        } else {
            (self.sum_sq - self.sum * self.sum / self.weight).max(0.0)
        }
    }

    fn mean(&self) -> f64 {
        self.sum / self.weight
    }
}

struct CandidateSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn split_score(criterion: SplitCriterion, wl: f64, sl: f64, wr: f64, sr: f64) -> f64 {
    match criterion {
        // Maximising sl^2/wl + sr^2/wr minimises the children's summed SSE.
        SplitCriterion::Mse => sl * sl / wl + sr * sr / wr,
        SplitCriterion::FriedmanMse => {
            let diff = sl / wl - sr / wr;
            wl * wr * diff * diff / (wl + wr)
        }
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

struct Builder<'a> {
    cols: &'a FeatureColumns,
    y: &'a [f64],
    w: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
    decrease: Vec<f64>,
    // Best splitter: per-feature sample lists, each node owns a common range.
    sorted: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    // Random splitter: a single sample list.
    samples: Vec<u32>,
}

impl<'a> Builder<'a> {
    fn stats(&self, members: &[u32]) -> NodeStats {
        let mut s = NodeStats {
            weight: 0.0,
            sum: 0.0,
            sum_sq: 0.0,
        };
        for &i in members {
            let (w, y) = (self.w[i as usize], self.y[i as usize]);
            s.weight += w;
            s.sum += w * y;
            s.sum_sq += w * y * y;
        }
        s
    }

    fn constant_target(&self, members: &[u32]) -> bool {
        let first = self.y[members[0] as usize];
        members.iter().all(|&i| self.y[i as usize] == first)
    }

    fn push_leaf(&mut self, value: f64) -> u32 {
        self.nodes.push(Node {
            feature: 0,
            threshold: 0.0,
            left: LEAF,
            right: LEAF,
            value,
        });
        (self.nodes.len() - 1) as u32
    }

    fn should_stop(&self, members: &[u32], depth: usize) -> bool {
        members.len() < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|d| depth >= d)
            || self.constant_target(members)
    }

    fn best_split_sorted(&self, lo: usize, hi: usize, total: NodeStats) -> Option<CandidateSplit> {
        let mut best: Option<CandidateSplit> = None;
        for (f, order) in self.sorted.iter().enumerate() {
            let col = &self.cols.columns[f];
            let slice = &order[lo..hi];
            let (mut wl, mut sl) = (0.0, 0.0);
            for p in 0..slice.len() - 1 {
                let i = slice[p] as usize;
                wl += self.w[i];
                sl += self.w[i] * self.y[i];
                let (xa, xb) = (col[i], col[slice[p + 1] as usize]);
                if xa >= xb {
                    continue;
                }
                let wr = total.weight - wl;
                let sr = total.sum - sl;
                let score = split_score(self.params.criterion, wl, sl, wr, sr);
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(CandidateSplit {
                        feature: f,
                        threshold: midpoint(xa, xb),
                        score,
                    });
                }
            }
        }
        best
    }

    fn build_sorted(&mut self, lo: usize, hi: usize, depth: usize) -> u32 {
        let members = &self.sorted[0][lo..hi];
        let total = self.stats(members);
        if self.should_stop(members, depth) {
            return self.push_leaf(total.mean());
        }
        let Some(split) = self.best_split_sorted(lo, hi, total) else {
            return self.push_leaf(total.mean());
        };

        let col = &self.cols.columns[split.feature];
        let mut n_left = 0;
        for &i in &self.sorted[split.feature][lo..hi] {
            let left = col[i as usize] <= split.threshold;
            self.goes_left[i as usize] = left;
            n_left += left as usize;
        }
        for f in 0..self.sorted.len() {
            if f == split.feature {
                continue;
            }
            self.scratch.clear();
            let order = &mut self.sorted[f];
            let mut write = lo;
            for p in lo..hi {
                let i = order[p];
                if self.goes_left[i as usize] {
                    order[write] = i;
                    write += 1;
                } else {
                    self.scratch.push(i);
                }
            }
            order[write..hi].copy_from_slice(&self.scratch);
        }

        let mid = lo + n_left;
        let left_stats = self.stats(&self.sorted[0][lo..mid]);
        let right_stats = self.stats(&self.sorted[0][mid..hi]);
        self.decrease[split.feature] +=
            (total.sse() - left_stats.sse() - right_stats.sse()).max(0.0);

        let idx = self.push_leaf(total.mean());
        let left = self.build_sorted(lo, mid, depth + 1);
        let right = self.build_sorted(mid, hi, depth + 1);
        let node = &mut self.nodes[idx as usize];
        node.feature = split.feature as u32;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        idx
    }

    fn build_random(&mut self, lo: usize, hi: usize, depth: usize, rng: &mut Rng) -> u32 {
        let total = self.stats(&self.samples[lo..hi]);
        if self.should_stop(&self.samples[lo..hi], depth) {
            return self.push_leaf(total.mean());
        }

        let mut best: Option<CandidateSplit> = None;
        for f in 0..self.cols.n_features() {
            let col = &self.cols.columns[f];
            let members = &self.samples[lo..hi];
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in members {
                let v = col[i as usize];
                min = min.min(v);
                max = max.max(v);
            }
            if max <= min {
                continue;
            }
            let threshold = rng.random_range(min..max);
            let (mut wl, mut sl) = (0.0, 0.0);
            for &i in members {
                if col[i as usize] <= threshold {
                    wl += self.w[i as usize];
                    sl += self.w[i as usize] * self.y[i as usize];
                }
            }
            let (wr, sr) = (total.weight - wl, total.sum - sl);
            if wl <= 0.0 || wr <= 0.0 {
                continue;
            }
            let score = split_score(self.params.criterion, wl, sl, wr, sr);
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(CandidateSplit {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
        let Some(split) = best else {
            return self.push_leaf(total.mean());
        };

        let col = &self.cols.columns[split.feature];
        let members = &mut self.samples[lo..hi];
        let mut write = 0;
        for p in 0..members.len() {
            if col[members[p] as usize] <= split.threshold {
                members.swap(write, p);
                write += 1;
            }
        }
        let mid = lo + write;
        let left_stats = self.stats(&self.samples[lo..mid]);
        let right_stats = self.stats(&self.samples[mid..hi]);
        self.decrease[split.feature] +=
            (total.sse() - left_stats.sse() - right_stats.sse()).max(0.0);

        let idx = self.push_leaf(total.mean());
        let left = self.build_random(lo, mid, depth + 1, rng);
        let right = self.build_random(mid, hi, depth + 1, rng);
        let node = &mut self.nodes[idx as usize];
        node.feature = split.feature as u32;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        idx
    }
}

impl RegressionTree {
    /// Fits a tree on the samples with positive weight. Weights act as
    /// replication counts (bootstrap multiplicities).
    ///
    /// Panics if no sample has positive weight; callers validate inputs.
    pub fn fit(
        cols: &FeatureColumns,
        y: &[f64],
        weights: &[f64],
        params: TreeParams,
        rng: &mut Rng,
    ) -> RegressionTree {
        assert_eq!(y.len(), cols.n_rows());
        assert_eq!(weights.len(), cols.n_rows());
        let mut builder = Builder {
            cols,
            y,
            w: weights,
            params,
            nodes: Vec::new(),
            decrease: vec![0.0; cols.n_features()],
            sorted: Vec::new(),
            goes_left: Vec::new(),
            scratch: Vec::new(),
            samples: Vec::new(),
        };
        let in_bag = |i: &u32| weights[*i as usize] > 0.0;
        match params.splitter {
            Splitter::Best => {
                let global = match &cols.sorted {
                    Some(s) => s.clone(),
                    None => FeatureColumns::new_sorted_orders(cols),
                };
                builder.sorted = global
                    .into_iter()
                    .map(|order| order.into_iter().filter(in_bag).collect::<Vec<_>>())
                    .collect();
                let n = builder.sorted.first().map_or(0, Vec::len);
                assert!(n > 0, "tree needs at least one weighted sample");
                builder.goes_left = vec![false; cols.n_rows()];
                builder.build_sorted(0, n, 0);
            }
            Splitter::Random => {
                builder.samples = (0..cols.n_rows() as u32).filter(in_bag).collect();
                let n = builder.samples.len();
                assert!(n > 0, "tree needs at least one weighted sample");
                builder.build_random(0, n, 0, rng);
            }
        }
        RegressionTree {
            nodes: builder.nodes,
            n_features: cols.n_features(),
            impurity_decrease: builder.decrease,
        }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = &self.nodes[0];
        while !node.is_leaf() {
            let next = if row[node.feature as usize] <= node.threshold {
                node.left
            } else {
                node.right
            };
            node = &self.nodes[next as usize];
        }
        node.value
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    /// Raw per-feature squared-error reduction (not normalized).
    pub fn impurity_decrease(&self) -> &[f64] {
        &self.impurity_decrease
    }

    /// Impurity importances normalized to sum to 1 (all zero for a stump-free tree).
    pub fn feature_importances(&self) -> Vec<f64> {
        normalize_sum(self.impurity_decrease.clone())
    }
}

impl FeatureColumns {
    fn new_sorted_orders(cols: &FeatureColumns) -> Vec<Vec<u32>> {
        cols.columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..cols.n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect()
    }
}

pub(crate) fn normalize_sum(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
    v
}
