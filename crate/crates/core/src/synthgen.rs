//! Synthetic regression datasets with known ground-truth importances.
//!
//! Features are drawn as a rank-`r` product `G (n x r) * M (r x d)` plus a
//! small full-rank perturbation `0.01 * E (n x d)`, where `M` has orthonormal
//! rows scaled so the average column variance is one. `r` is the effective
//! rank chosen by the interaction level: a full-rank `M` is orthogonal, so
//! low-interaction features are independent, while small `r` forces strong
//! linear dependence between columns.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result};
use crate::learners::Regressor;
use crate::matrix::Matrix;
use crate::rng::{rng_from_seed, Rng};
use crate::stats::quantile_sorted;

/// Scale of the full-rank perturbation added to the low-rank features.
pub const PERTURBATION_SCALE: f64 = 0.01;
/// Informative coefficients are drawn uniformly from `(0, COEFFICIENT_SCALE)`.
pub const COEFFICIENT_SCALE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionLevel {
    Low,
    Medium,
    High,
}

impl InteractionLevel {
    pub fn effective_rank(self, n_features: usize) -> usize {
        match self {
            InteractionLevel::Low => n_features,
            InteractionLevel::Medium => n_features.div_ceil(2),
            InteractionLevel::High => n_features.div_ceil(5).max(2),
        }
    }
}

impl fmt::Display for InteractionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InteractionLevel::Low => "low",
            InteractionLevel::Medium => "medium",
            InteractionLevel::High => "high",
        };
        f.write_str(s)
    }
}

impl FromStr for InteractionLevel {
    type Err = FefiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(InteractionLevel::Low),
            "medium" | "moderate" => Ok(InteractionLevel::Medium),
            "high" => Ok(InteractionLevel::High),
            _ => Err(FefiError::Parameter(format!("unknown interaction level `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_instances: usize,
    pub n_features: usize,
    pub informative_fraction: f64,
    pub noise_std: f64,
    pub interaction_level: InteractionLevel,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The nine benchmark configurations (2000 instances each), numbered 1..=9.
    pub fn benchmark(id: usize, seed: u64) -> Result<Self> {
        use InteractionLevel::*;
        let (d, level, frac, noise) = match id {
            1 => (10, Low, 0.9, 0.5),
            2 => (30, Low, 0.9, 0.5),
            3 => (50, Low, 0.9, 0.5),
            4 => (10, Medium, 0.9, 0.5),
            5 => (10, High, 0.9, 0.5),
            6 => (10, Low, 0.2, 0.5),
            7 => (10, Low, 0.5, 0.5),
            8 => (10, Low, 0.9, 2.0),
            9 => (10, Low, 0.9, 5.0),
            _ => return Err(FefiError::Parameter(format!("benchmark dataset id {id} is not in 1..=9"))),
        };
        Ok(SyntheticSpec {
            n_instances: 2000,
            n_features: d,
            informative_fraction: frac,
            noise_std: noise,
            interaction_level: level,
            seed,
        })
    }

    pub fn n_informative(&self) -> usize {
        (self.informative_fraction * self.n_features as f64).round() as usize
    }

    pub fn effective_rank(&self) -> usize {
        self.interaction_level.effective_rank(self.n_features)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(FefiError::Parameter(m));
        if self.n_instances < 2 {
            return err(format!("n_instances = {} must be at least 2", self.n_instances));
        }
        if self.n_features < 2 {
            return err(format!("n_features = {} must be at least 2", self.n_features));
        }
        if !(self.informative_fraction > 0.0 && self.informative_fraction <= 1.0) {
            return err(format!(
                "informative_fraction = {} must lie in (0, 1]",
                self.informative_fraction
            ));
        }
        if self.n_informative() < 1 {
            return err(format!(
                "informative_fraction = {} selects no informative feature out of {}",
                self.informative_fraction, self.n_features
            ));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return err(format!("noise_std = {} must be finite and non-negative", self.noise_std));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub features: Matrix,
    pub targets: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub ground_truth_importance: Vec<f64>,
    pub spec: SyntheticSpec,
}

impl SyntheticDataset {
    pub fn n_instances(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

struct Structure {
    low_rank: DMatrix<f64>,
    perturbation: DMatrix<f64>,
    rng: Rng,
}

fn sample_structure(spec: &SyntheticSpec) -> Result<Structure> {
    spec.validate()?;
    let (n, d, r) = (spec.n_instances, spec.n_features, spec.effective_rank());
    let mut rng = rng_from_seed(spec.seed);
    let factors = gaussian_matrix(n, r, &mut rng);
    let basis = gaussian_matrix(d, r, &mut rng).qr().q();
    let mixing = basis.transpose() * (d as f64 / r as f64).sqrt();
    let low_rank = factors * mixing;
    let perturbation = gaussian_matrix(n, d, &mut rng) * PERTURBATION_SCALE;
    Ok(Structure {
        low_rank,
        perturbation,
        rng,
    })
}

fn to_matrix(m: &DMatrix<f64>) -> Matrix {
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.set(r, c, m[(r, c)]);
        }
    }
    out
}

/// The exact rank-`r` part of the feature matrix, before perturbation.
pub fn low_rank_component(spec: &SyntheticSpec) -> Result<Matrix> {
    Ok(to_matrix(&sample_structure(spec)?.low_rank))
}

pub fn generate_dataset(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    let Structure {
        low_rank,
        perturbation,
        mut rng,
    } = sample_structure(spec)?;
    let features = to_matrix(&(low_rank + perturbation));
    let d = spec.n_features;

    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng);
    let mut coefficients = vec![0.0; d];
    for &j in &order[..spec.n_informative()] {
        // Strictly positive so the informative count is exact.
        coefficients[j] = COEFFICIENT_SCALE * (1.0 - rng.random::<f64>());
    }

    let targets = features
        .iter_rows()
        .map(|row| {
            let signal: f64 = row.iter().zip(&coefficients).map(|(x, c)| x * c).sum();
            let noise: f64 = rng.sample(StandardNormal);
            signal + spec.noise_std * noise
        })
        .collect();

    let max = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let ground_truth_importance = coefficients.iter().map(|c| c.abs() / max).collect();

    Ok(SyntheticDataset {
        features,
        targets,
        coefficients,
        ground_truth_importance,
        spec: spec.clone(),
    })
}

/// Pearson correlation between every pair of columns.
pub fn pearson_matrix(features: &Matrix) -> Result<Vec<Vec<f64>>> {
    let (n, d) = (features.rows(), features.cols());
    if n < 2 {
        return Err(FefiError::Parameter(format!("{n} instance(s); correlation needs at least 2")));
    }
    let mut centered = Vec::with_capacity(d);
    for c in 0..d {
        let col = features.column(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        let dev: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let norm = dev.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(FefiError::DegenerateFeature { column: c });
        }
        centered.push(dev.into_iter().map(|v| v / norm).collect::<Vec<f64>>());
    }
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        out[i][i] = 1.0;
        for j in i + 1..d {
            let r: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = r.clamp(-1.0, 1.0);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}

/// Monte Carlo partial dependence: for each grid point, the mean prediction
/// over all rows with the indexed features overwritten by the grid values.
pub fn partial_dependence<M: Regressor + ?Sized>(
    model: &M,
    features: &Matrix,
    feature_indices: &[usize],
    grid: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let d = features.cols();
    if feature_indices.is_empty() || feature_indices.len() > 2 {
        return Err(FefiError::Parameter(format!(
            "partial dependence takes 1 or 2 features, got {}",
            feature_indices.len()
        )));
    }
    if let Some(&bad) = feature_indices.iter().find(|&&j| j >= d) {
        return Err(FefiError::Parameter(format!("feature index {bad} out of range for {d} features")));
    }
    if feature_indices.len() == 2 && feature_indices[0] == feature_indices[1] {
        return Err(FefiError::Parameter("partial dependence feature indices must be distinct".into()));
    }
    if grid.is_empty() {
        return Err(FefiError::Parameter("partial dependence grid is empty".into()));
    }
    if model.n_features() != d {
        return Err(FefiError::shape(format!("{} columns", model.n_features()), format!("{d} columns")));
    }
    let n = features.rows();
    if n == 0 {
        return Err(FefiError::Parameter("partial dependence needs at least one row".into()));
    }
    let mut buf = vec![0.0; d];
    grid.iter()
        .map(|point| {
            if point.len() != feature_indices.len() {
                return Err(FefiError::shape(
                    format!("{} values per grid point", feature_indices.len()),
                    format!("{} values", point.len()),
                ));
            }
            let mut total = 0.0;
            for row in features.iter_rows() {
                buf.copy_from_slice(row);
                for (&j, &v) in feature_indices.iter().zip(point) {
                    buf[j] = v;
                }
                total += model.predict_row(&buf);
            }
            Ok(total / n as f64)
        })
        .collect()
}

/// `n_grid` quantile-spaced values of one column.
pub fn quantile_grid(features: &Matrix, column: usize, n_grid: usize) -> Vec<f64> {
    let mut col = features.column(column);
    col.sort_by(f64::total_cmp);
    (0..n_grid)
        .map(|i| {
            let p = if n_grid == 1 { 0.5 } else { i as f64 / (n_grid - 1) as f64 };
            quantile_sorted(&col, p)
        })
        .collect()
}

/// Default number of grid points per feature for the H-statistic.
pub const H_GRID: usize = 20;

/// Friedman's pairwise interaction statistic on a quantile grid:
/// `H^2 = sum (PD_jk - PD_j - PD_k)^2 / sum PD_jk^2` over centered
/// partial-dependence values. Uses the first `n_mc` rows (all if larger).
pub fn friedman_h_pairwise<M: Regressor + ?Sized>(
    model: &M,
    features: &Matrix,
    pair: (usize, usize),
    n_grid: usize,
    n_mc: usize,
) -> Result<f64> {
    if n_grid < 2 {
        return Err(FefiError::Parameter(format!("n_grid = {n_grid} must be at least 2")));
    }
    if n_mc < 1 {
        return Err(FefiError::Parameter("n_mc must be at least 1".into()));
    }
    let (j, k) = pair;
    let d = features.cols();
    if j >= d || k >= d || j == k {
        return Err(FefiError::Parameter(format!("invalid feature pair ({j}, {k}) for {d} features")));
    }
    let rows: Vec<usize> = (0..features.rows().min(n_mc)).collect();
    let sample = features.select_rows(&rows);

    let gj = quantile_grid(features, j, n_grid);
    let gk = quantile_grid(features, k, n_grid);
    let pd_j = partial_dependence(model, &sample, &[j], &gj.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
    let pd_k = partial_dependence(model, &sample, &[k], &gk.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
    let joint_grid: Vec<Vec<f64>> = gj
        .iter()
        .flat_map(|&a| gk.iter().map(move |&b| vec![a, b]))
        .collect();
    let pd_jk = partial_dependence(model, &sample, &[j, k], &joint_grid)?;

    let center = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x - m).collect::<Vec<f64>>()
    };
    let (pd_j, pd_k, pd_jk) = (center(pd_j), center(pd_k), center(pd_jk));

    let mut num = 0.0;
    let mut den = 0.0;
    for (a, pj) in pd_j.iter().enumerate() {
        for (b, pk) in pd_k.iter().enumerate() {
            let joint = pd_jk[a * n_grid + b];
            num += (joint - pj - pk).powi(2);
            den += joint * joint;
        }
    }
    if den < 1e-12 {
        return Err(FefiError::IndeterminateH);
    }
    Ok((num / den).clamp(0.0, 1.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub pearson: Vec<Vec<f64>>,
    /// `((j, k), H)` for every feature pair, sorted by descending H.
    pub h_statistics: Vec<((usize, usize), f64)>,
}

/// Correlations plus H for every pair. Pairs whose joint partial dependence
/// is flat are reported with H = 0.
pub fn interaction_report<M: Regressor + ?Sized>(
    model: &M,
    features: &Matrix,
    n_grid: usize,
    n_mc: usize,
) -> Result<InteractionReport> {
    let pearson = pearson_matrix(features)?;
    let d = features.cols();
    let mut h_statistics = Vec::with_capacity(d * (d - 1) / 2);
    for j in 0..d {
        for k in j + 1..d {
            let h = match friedman_h_pairwise(model, features, (j, k), n_grid, n_mc) {
                Ok(h) => h,
                Err(FefiError::IndeterminateH) => 0.0,
                Err(e) => return Err(e),
            };
            h_statistics.push(((j, k), h));
        }
    }
    h_statistics.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(InteractionReport { pearson, h_statistics })
}

#[derive(Serialize, Deserialize)]
struct DatasetSidecar {
    spec: SyntheticSpec,
    coefficients: Vec<f64>,
    ground_truth_importance: Vec<f64>,
}

/// Writes `<stem>.csv` (header `f0..f{d-1},target`) and `<stem>.json`.
pub fn write_dataset(dataset: &SyntheticDataset, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| FefiError::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    let d = dataset.n_features();
    let mut header: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    header.push("target".into());
    w.write_record(&header)?;
    for (row, t) in dataset.features.iter_rows().zip(&dataset.targets) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(t.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| FefiError::io(&csv_path, e))?;

    let sidecar = DatasetSidecar {
        spec: dataset.spec.clone(),
        coefficients: dataset.coefficients.clone(),
        ground_truth_importance: dataset.ground_truth_importance.clone(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| FefiError::io(&json_path, e))
}

pub fn read_dataset(dir: &Path, stem: &str) -> Result<SyntheticDataset> {
    let json_path = dir.join(format!("{stem}.json"));
    let text = fs::read_to_string(&json_path).map_err(|e| FefiError::io(&json_path, e))?;
    let sidecar: DatasetSidecar = serde_json::from_str(&text)?;
    let d = sidecar.coefficients.len();

    let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
    let header = r.headers()?.clone();
    if header.len() != d + 1 || header.get(d) != Some("target") {
        return Err(FefiError::Data(format!("dataset header does not match {d} features plus target")));
    }
    let mut data = Vec::new();
    let mut targets = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| FefiError::Data(format!("unparseable value `{field}`")))?;
            if i == d {
                targets.push(v);
            } else {
                data.push(v);
            }
        }
    }
    Ok(SyntheticDataset {
        features: Matrix::from_vec(targets.len(), d, data)?,
        targets,
        coefficients: sidecar.coefficients,
        ground_truth_importance: sidecar.ground_truth_importance,
        spec: sidecar.spec,
    })
}
