//! The benchmark runner: (dataset x seed) cells, evaluation rows and
//! artifact files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fusion::{fuzzy_fusion, FuzzyFusion};
use super::metrics::{mae, rmse, wilcoxon_signed_rank};
use crate::error::{FefiError, Result, ResultExt};
use crate::fuzzy::{sample_curves, LinguisticPartition};
use crate::inference::{LikelihoodReport, CENTROID_GRID};
use crate::pipeline::{fuse_majority_vote, fuse_mean, fuse_median, run_ensemble_subsets};
use crate::rng::derive_seed;
use crate::rulegen::RuleBase;
use crate::synthgen::generate_dataset;
use crate::table::{DataSubset, FiTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Mean,
    MajorityVote,
    #[serde(rename = "FEFI")]
    Fefi,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Mean, Strategy::MajorityVote, Strategy::Fefi];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Mean => "Mean",
            Strategy::MajorityVote => "MajorityVote",
            Strategy::Fefi => "FEFI",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = FefiError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| FefiError::Data(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub dataset: usize,
    pub subset: DataSubset,
    pub strategy: Strategy,
    pub seed: u64,
    pub mae: f64,
    pub rmse: f64,
}

/// Everything computed for one data subset of one (dataset, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetOutcome {
    pub subset: DataSubset,
    pub table: FiTable,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub majority_vote: Vec<f64>,
    pub fuzzy: FuzzyFusion,
}

impl SubsetOutcome {
    pub fn fused(&self, strategy: Strategy) -> &[f64] {
        match strategy {
            Strategy::Mean => &self.mean,
            Strategy::MajorityVote => &self.majority_vote,
            Strategy::Fefi => &self.fuzzy.fused,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub dataset: usize,
    pub seed: u64,
    pub ground_truth: Vec<f64>,
    pub subsets: Vec<SubsetOutcome>,
    pub rows: Vec<EvaluationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub dataset: usize,
    pub subset: DataSubset,
    pub baseline: Strategy,
    /// Pairs of per-feature absolute errors pooled over seeds.
    pub pairs: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub rows: Vec<EvaluationRow>,
    pub significance: Vec<SignificanceRow>,
    pub cells: Vec<CellOutcome>,
}

/// Runs one (dataset, seed) cell for every configured subset.
pub fn run_cell(config: &ExperimentConfig, dataset_index: usize, seed: u64) -> Result<CellOutcome> {
    let choice = &config.datasets[dataset_index];
    let id = choice.id();
    let stage = |s: &'static str| move || format!("dataset {id}, seed {seed}, stage {s}");
    let spec = choice.spec(derive_seed(seed, &[id as u64, 0])).context_with(stage("generate"))?;
    let data = generate_dataset(&spec).context_with(stage("generate"))?;
    let run = run_ensemble_subsets(&data, &config.ensemble(), &config.subsets, derive_seed(seed, &[id as u64, 1]))
        .context_with(stage("ensemble"))?;

    let truth = &data.ground_truth_importance;
    let mut subsets = Vec::new();
    let mut rows = Vec::new();
    for (subset, table) in run.tables {
        let mean = fuse_mean(&table).context_with(stage("crisp fusion"))?.fused;
        let median = fuse_median(&table).context_with(stage("crisp fusion"))?.fused;
        let majority_vote = fuse_majority_vote(&table).context_with(stage("crisp fusion"))?.fused;
        let fuzzy = fuzzy_fusion(&table, config.aggregation).context_with(stage("fuzzy fusion"))?;
        let outcome = SubsetOutcome {
            subset,
            table,
            mean,
            median,
            majority_vote,
            fuzzy,
        };
        for strategy in Strategy::ALL {
            let fused = outcome.fused(strategy);
            rows.push(EvaluationRow {
                dataset: id,
                subset,
                strategy,
                seed,
                mae: mae(fused, truth)?,
                rmse: rmse(fused, truth)?,
            });
        }
        subsets.push(outcome);
    }
    Ok(CellOutcome {
        dataset: id,
        seed,
        ground_truth: truth.clone(),
        subsets,
        rows,
    })
}

fn sort_rows(rows: &mut [EvaluationRow]) {
    rows.sort_by(|a, b| {
        (a.dataset, a.subset, a.strategy, a.seed).cmp(&(b.dataset, b.subset, b.strategy, b.seed))
    });
}

/// FEFI against each crisp baseline, pooling per-feature absolute errors
/// over seeds. Cells with fewer than five pairs are skipped.
pub fn significance(cells: &[CellOutcome]) -> Vec<SignificanceRow> {
    let mut pooled: BTreeMap<(usize, DataSubset, Strategy), Vec<f64>> = BTreeMap::new();
    for cell in cells {
        for s in &cell.subsets {
            for strategy in Strategy::ALL {
                let errs = s.fused(strategy).iter().zip(&cell.ground_truth).map(|(p, t)| (p - t).abs());
                pooled.entry((cell.dataset, s.subset, strategy)).or_default().extend(errs);
            }
        }
    }
    let mut out = Vec::new();
    for (&(dataset, subset, strategy), fefi) in &pooled {
        if strategy != Strategy::Fefi {
            continue;
        }
        for baseline in [Strategy::Mean, Strategy::MajorityVote] {
            let base = &pooled[&(dataset, subset, baseline)];
            if let Ok(p_value) = wilcoxon_signed_rank(fefi, base) {
                out.push(SignificanceRow {
                    dataset,
                    subset,
                    baseline,
                    pairs: fefi.len(),
                    p_value,
                });
            }
        }
    }
    out
}

/// Runs every (dataset, seed) cell and writes all artifacts to the
/// configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let cells: Vec<(usize, u64)> = (0..config.datasets.len())
        .flat_map(|d| config.seeds.iter().map(move |&s| (d, s)))
        .collect();
    let cells: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(d, s)| run_cell(config, d, s))
        .collect::<Result<_>>()?;

    let mut rows: Vec<EvaluationRow> = cells.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    sort_rows(&mut rows);
    let significance = significance(&cells);

    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| FefiError::io(out, e))?;
    write_results(&out.join("results.csv"), &rows)?;
    write_significance(&out.join("significance.csv"), &significance)?;
    for cell in &cells {
        write_cell_artifacts(out, cell)?;
    }
    Ok(ExperimentOutcome {
        rows,
        significance,
        cells,
    })
}

pub fn write_results(path: &Path, rows: &[EvaluationRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "subset", "strategy", "seed", "mae", "rmse"])?;
    for r in rows {
        w.write_record([
            r.dataset.to_string(),
            r.subset.to_string(),
            r.strategy.to_string(),
            r.seed.to_string(),
            r.mae.to_string(),
            r.rmse.to_string(),
        ])?;
    }
    w.flush().map_err(|e| FefiError::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<EvaluationRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 6 {
            return Err(FefiError::Data(format!("results row has {} fields, expected 6", record.len())));
        }
        let num = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| FefiError::Data(format!("bad number `{}`", &record[i])))
        };
        let int = |i: usize| -> Result<u64> {
            record[i].parse().map_err(|_| FefiError::Data(format!("bad integer `{}`", &record[i])))
        };
        rows.push(EvaluationRow {
            dataset: int(0)? as usize,
            subset: record[1].parse()?,
            strategy: record[2].parse()?,
            seed: int(3)?,
            mae: num(4)?,
            rmse: num(5)?,
        });
    }
    Ok(rows)
}

fn write_significance(path: &Path, rows: &[SignificanceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "subset", "baseline", "pairs", "p_value"])?;
    for r in rows {
        w.write_record([
            r.dataset.to_string(),
            r.subset.to_string(),
            r.baseline.to_string(),
            r.pairs.to_string(),
            r.p_value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| FefiError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| FefiError::io(path, e))
}

#[derive(Serialize)]
struct PartitionExport<'a> {
    ml: &'a BTreeMap<crate::learners::LearnerKind, LinguisticPartition>,
    output: &'a LinguisticPartition,
    per_feature: BTreeMap<String, &'a LinguisticPartition>,
}

#[derive(Serialize)]
struct FusedExport<'a> {
    ground_truth: &'a [f64],
    mean: &'a [f64],
    median: &'a [f64],
    majority_vote: &'a [f64],
    fefi: &'a [f64],
}

fn write_cell_artifacts(dir: &Path, cell: &CellOutcome) -> Result<()> {
    let tag = format!("{}_{}", cell.dataset, cell.seed);
    let mut rules: BTreeMap<DataSubset, &RuleBase> = BTreeMap::new();
    let mut partitions = BTreeMap::new();
    let mut likelihoods: BTreeMap<DataSubset, &[LikelihoodReport]> = BTreeMap::new();
    let mut fused = BTreeMap::new();
    let mut rule_text = String::new();
    for s in &cell.subsets {
        let f = &s.fuzzy;
        rules.insert(s.subset, &f.rulebase);
        rule_text.push_str(&format!("# {} subset ({} tuples dropped)\n", s.subset, f.dropped_pairs));
        rule_text.push_str(&f.rulebase.to_text());
        rule_text.push('\n');
        partitions.insert(
            s.subset,
            PartitionExport {
                ml: &f.ml_partitions,
                output: &f.rulebase.output_partition,
                per_feature: f
                    .feature_partitions
                    .combined
                    .iter()
                    .map(|(j, p)| (j.to_string(), p))
                    .collect(),
            },
        );
        likelihoods.insert(s.subset, &f.reports);
        fused.insert(
            s.subset,
            FusedExport {
                ground_truth: &cell.ground_truth,
                mean: &s.mean,
                median: &s.median,
                majority_vote: &s.majority_vote,
                fefi: &f.fused,
            },
        );
        s.table.write(dir, &format!("fitable_{tag}_{}", s.subset))?;
        write_plotdata(&dir.join(format!("plotdata_{tag}_{}.csv", s.subset)), f)?;
    }
    write_json(&dir.join(format!("rules_{tag}.json")), &rules)?;
    let text_path = dir.join(format!("rules_{tag}.txt"));
    fs::write(&text_path, rule_text).map_err(|e| FefiError::io(&text_path, e))?;
    write_json(&dir.join(format!("partitions_{tag}.json")), &partitions)?;
    write_json(&dir.join(format!("likelihoods_{tag}.json")), &likelihoods)?;
    write_json(&dir.join(format!("fused_{tag}.json")), &fused)
}

/// Membership curves of every model partition and the output partition.
fn write_plotdata(path: &Path, fusion: &FuzzyFusion) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["partition", "x", "low", "moderate", "high"])?;
    let mut emit = |name: &str, p: &LinguisticPartition| -> Result<()> {
        for (x, d) in sample_curves(p, CENTROID_GRID) {
            w.write_record([
                name.to_string(),
                x.to_string(),
                d.low.to_string(),
                d.moderate.to_string(),
                d.high.to_string(),
            ])?;
        }
        Ok(())
    };
    for (model, p) in &fusion.ml_partitions {
        emit(model.short_name(), p)?;
    }
    emit("Output", &fusion.rulebase.output_partition)?;
    w.flush().map_err(|e| FefiError::io(path, e))
}

/// Seed-averaged MAE / RMSE per (dataset, subset, strategy).
pub fn summarize(rows: &[EvaluationRow]) -> BTreeMap<(usize, DataSubset, Strategy), (f64, f64, usize)> {
    let mut acc: BTreeMap<(usize, DataSubset, Strategy), (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry((r.dataset, r.subset, r.strategy)).or_default();
        e.0 += r.mae;
        e.1 += r.rmse;
        e.2 += 1;
    }
    for v in acc.values_mut() {
        v.0 /= v.2 as f64;
        v.1 /= v.2 as f64;
    }
    acc
}

/// One line per (dataset, subset): seed-averaged MAE and RMSE of each
/// strategy.
pub fn format_summary(rows: &[EvaluationRow]) -> String {
    let summary = summarize(rows);
    let mut out = format!(
        "{:<8} {:<6} {:>9} {:>9} {:>9}   {:>9} {:>9} {:>9}\n",
        "dataset", "subset", "MAE Mean", "MAE MV", "MAE FEFI", "RMSE Mean", "RMSE MV", "RMSE FEFI"
    );
    let mut keys: Vec<(usize, DataSubset)> = summary.keys().map(|&(d, s, _)| (d, s)).collect();
    keys.dedup();
    for (d, s) in keys {
        let get = |st: Strategy| summary.get(&(d, s, st)).copied();
        let cell = |v: Option<(f64, f64, usize)>, pick: fn((f64, f64, usize)) -> f64| {
            v.map_or_else(|| "-".to_string(), |v| format!("{:.3}", pick(v)))
        };
        let (m, v, f) = (get(Strategy::Mean), get(Strategy::MajorityVote), get(Strategy::Fefi));
        out.push_str(&format!(
            "{:<8} {:<6} {:>9} {:>9} {:>9}   {:>9} {:>9} {:>9}\n",
            d,
            s.as_str(),
            cell(m, |x| x.0),
            cell(v, |x| x.0),
            cell(f, |x| x.0),
            cell(m, |x| x.1),
            cell(v, |x| x.1),
            cell(f, |x| x.1),
        ));
    }
    out
}
