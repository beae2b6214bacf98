//! The stage-3 record set: one importance coefficient per
//! (feature, sample, method, model), plus per-feature ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result};
use crate::importance::FiMethod;
use crate::learners::LearnerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSubset {
    Train,
    Test,
    Whole,
}

impl DataSubset {
    pub const ALL: [DataSubset; 3] = [DataSubset::Train, DataSubset::Test, DataSubset::Whole];

    pub fn as_str(self) -> &'static str {
        match self {
            DataSubset::Train => "train",
            DataSubset::Test => "test",
            DataSubset::Whole => "whole",
        }
    }
}

impl fmt::Display for DataSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DataSubset {
    type Err = FefiError;

    fn from_str(s: &str) -> Result<Self> {
        DataSubset::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| FefiError::Parameter(format!("unknown data subset `{s}` (train|test|whole)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiRecord {
    pub feature: usize,
    /// Enumerates (fold, method) pairs: `fold * n_methods + method_position`.
    pub sample_id: usize,
    pub method: FiMethod,
    pub model: LearnerKind,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiTable {
    pub records: Vec<FiRecord>,
    /// Ground-truth importance indexed by feature.
    pub ground_truth: Vec<f64>,
    pub data_subset: DataSubset,
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl FiTable {
    pub fn new(records: Vec<FiRecord>, ground_truth: Vec<f64>, data_subset: DataSubset) -> Result<Self> {
        let table = FiTable {
            records,
            ground_truth,
            data_subset,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(y) = self.ground_truth.iter().find(|y| !in_unit(**y)) {
            return Err(FefiError::Data(format!("ground truth {y} outside [0, 1]")));
        }
        let mut seen = BTreeSet::new();
        for r in &self.records {
            if !in_unit(r.coefficient) {
                return Err(FefiError::Data(format!(
                    "coefficient {} for feature {} outside [0, 1]",
                    r.coefficient, r.feature
                )));
            }
            if r.feature >= self.ground_truth.len() {
                return Err(FefiError::Data(format!(
                    "record for feature {} but ground truth covers {} features",
                    r.feature,
                    self.ground_truth.len()
                )));
            }
            if !seen.insert((r.feature, r.sample_id, r.method, r.model)) {
                return Err(FefiError::Data(format!(
                    "duplicate coefficient for feature {}, sample {}, {} / {}",
                    r.feature, r.sample_id, r.method, r.model
                )));
            }
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.ground_truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn models(&self) -> Vec<LearnerKind> {
        self.records.iter().map(|r| r.model).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// All coefficients produced by one model, pooled over features and samples.
    pub fn model_column(&self, model: LearnerKind) -> Vec<f64> {
        self.records.iter().filter(|r| r.model == model).map(|r| r.coefficient).collect()
    }

    /// Coefficients per feature, in record order.
    pub fn by_feature(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.n_features()];
        for r in &self.records {
            out[r.feature].push(r.coefficient);
        }
        out
    }

    /// Coefficients grouped by (feature, model).
    pub fn by_feature_and_model(&self) -> BTreeMap<(usize, LearnerKind), Vec<f64>> {
        let mut out: BTreeMap<(usize, LearnerKind), Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            out.entry((r.feature, r.model)).or_default().push(r.coefficient);
        }
        out
    }

    /// Writes `<stem>.csv` (`feature,sample_id,method,model,coefficient`) and
    /// `<stem>.json` holding the ground truth and data subset.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| FefiError::io(dir, e))?;
        let path = dir.join(format!("{stem}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["feature", "sample_id", "method", "model", "coefficient"])?;
        for r in &self.records {
            w.write_record([
                r.feature.to_string(),
                r.sample_id.to_string(),
                r.method.to_string(),
                r.model.to_string(),
                r.coefficient.to_string(),
            ])?;
        }
        w.flush().map_err(|e| FefiError::io(&path, e))?;
        let sidecar = TableSidecar {
            data_subset: self.data_subset,
            ground_truth: self.ground_truth.clone(),
        };
        let json = dir.join(format!("{stem}.json"));
        fs::write(&json, serde_json::to_string_pretty(&sidecar)?).map_err(|e| FefiError::io(&json, e))
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let json = dir.join(format!("{stem}.json"));
        let text = fs::read_to_string(&json).map_err(|e| FefiError::io(&json, e))?;
        let sidecar: TableSidecar = serde_json::from_str(&text)?;
        let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
        let mut records = Vec::new();
        for row in r.records() {
            let row = row?;
            let field = |i: usize| row.get(i).ok_or_else(|| FefiError::Data(format!("missing column {i}")));
            let parse_err = |what: &str, v: &str| FefiError::Data(format!("bad {what} `{v}`"));
            records.push(FiRecord {
                feature: field(0)?.parse().map_err(|_| parse_err("feature", field(0).unwrap_or("")))?,
                sample_id: field(1)?.parse().map_err(|_| parse_err("sample_id", field(1).unwrap_or("")))?,
                method: field(2)?.parse()?,
                model: field(3)?.parse()?,
                coefficient: field(4)?.parse().map_err(|_| parse_err("coefficient", field(4).unwrap_or("")))?,
            });
        }
        FiTable::new(records, sidecar.ground_truth, sidecar.data_subset)
    }
}

#[derive(Serialize, Deserialize)]
struct TableSidecar {
    data_subset: DataSubset,
    ground_truth: Vec<f64>,
}
