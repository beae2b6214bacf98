//! Experiment configuration, loadable from JSON or TOML.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::fusion::FeatureAggregation;
use crate::error::{FefiError, Result};
use crate::importance::{FiMethod, FiSettings};
use crate::learners::LearnerKind;
use crate::pipeline::{EnsembleConfig, DEFAULT_FOLDS};
use crate::synthgen::{InteractionLevel, SyntheticSpec};
use crate::table::DataSubset;

fn parse_names<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: Display,
{
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

fn write_names<S: Serializer, T: Display>(items: &[T], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(items.iter().map(ToString::to_string))
}

/// A user-defined dataset; the replicate seed is supplied per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomDataset {
    pub id: usize,
    pub n_instances: usize,
    pub n_features: usize,
    pub informative_fraction: f64,
    pub noise_std: f64,
    pub interaction_level: InteractionLevel,
}

/// Either a benchmark id (1..=9) or a custom dataset description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetChoice {
    Benchmark(usize),
    Custom(CustomDataset),
}

impl DatasetChoice {
    pub fn id(&self) -> usize {
        match self {
            DatasetChoice::Benchmark(id) => *id,
            DatasetChoice::Custom(c) => c.id,
        }
    }

    pub fn spec(&self, seed: u64) -> Result<SyntheticSpec> {
        match self {
            DatasetChoice::Benchmark(id) => SyntheticSpec::benchmark(*id, seed),
            DatasetChoice::Custom(c) => {
                let spec = SyntheticSpec {
                    n_instances: c.n_instances,
                    n_features: c.n_features,
                    informative_fraction: c.informative_fraction,
                    noise_std: c.noise_std,
                    interaction_level: c.interaction_level,
                    seed,
                };
                spec.validate()?;
                Ok(spec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetChoice>,
    pub k: usize,
    #[serde(deserialize_with = "parse_names", serialize_with = "write_names")]
    pub models: Vec<LearnerKind>,
    #[serde(deserialize_with = "parse_names", serialize_with = "write_names")]
    pub methods: Vec<FiMethod>,
    #[serde(deserialize_with = "parse_names", serialize_with = "write_names")]
    pub subsets: Vec<DataSubset>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub aggregation: FeatureAggregation,
    pub importance: FiSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: (1..=9).map(DatasetChoice::Benchmark).collect(),
            k: DEFAULT_FOLDS,
            models: LearnerKind::ALL.to_vec(),
            methods: FiMethod::ALL.to_vec(),
            subsets: vec![DataSubset::Train, DataSubset::Test, DataSubset::Whole],
            seeds: vec![1, 2, 3, 4, 5],
            output_dir: PathBuf::from("results"),
            aggregation: FeatureAggregation::default(),
            importance: FiSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| FefiError::io(path, e))?;
        let config: ExperimentConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| FefiError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| FefiError::Config(format!("{}: {e}", path.display())))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(FefiError::Config(m.to_string()));
        if self.datasets.is_empty() {
            return fail("no datasets selected");
        }
        if self.models.is_empty() {
            return fail("no models selected");
        }
        if self.methods.is_empty() {
            return fail("no importance methods selected");
        }
        if self.subsets.is_empty() {
            return fail("no data subsets selected");
        }
        if self.seeds.is_empty() {
            return fail("no seeds selected");
        }
        let mut ids: Vec<usize> = self.datasets.iter().map(DatasetChoice::id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return fail("dataset ids must be unique");
        }
        if !self.methods.iter().any(|m| self.models.iter().all(|k| m.supports(*k))) {
            return fail("no selected importance method is supported by every selected model");
        }
        for d in &self.datasets {
            let spec = d.spec(0).map_err(|e| FefiError::Config(format!("dataset {}: {e}", d.id())))?;
            if self.k < 2 || self.k > spec.n_instances {
                return Err(FefiError::Config(format!(
                    "k = {} must lie in 2..={} for dataset {}",
                    self.k,
                    spec.n_instances,
                    d.id()
                )));
            }
        }
        if self.importance.permutation_repeats == 0 || self.importance.shapley_eval_rows == 0 {
            return fail("importance repeats and evaluation rows must be positive");
        }
        if self.importance.shapley_samples < 10 && self.methods.contains(&FiMethod::ShapleySampling) {
            return fail("shapley_samples must be at least 10");
        }
        Ok(())
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            k: self.k,
            models: self.models.clone(),
            methods: self.methods.clone(),
            settings: self.importance,
        }
    }
}
