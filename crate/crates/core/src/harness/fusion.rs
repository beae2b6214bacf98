//! End-to-end fuzzy fusion of one FiTable: partitions, rules, inference.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result, ResultExt};
use crate::fuzzy::{build_feature_partitions, build_ml_partitions, build_output_partition, Degrees, FeaturePartitions, LinguisticPartition};
use crate::inference::{centroid, infer_aligned, LikelihoodReport, INDETERMINATE_CRISP};
use crate::learners::LearnerKind;
use crate::rulegen::{build_training_pairs, generate_rules, RuleBase};
use crate::stats::mean;
use crate::table::FiTable;

/// How one feature's many coefficient tuples become a single inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureAggregation {
    /// Infer once on each model's mean coefficient for the feature.
    MeanCoefficient,
    /// Infer every complete tuple, average the likelihoods, then defuzzify.
    #[default]
    MeanLikelihood,
}

impl fmt::Display for FeatureAggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureAggregation::MeanCoefficient => "mean_coefficient",
            FeatureAggregation::MeanLikelihood => "mean_likelihood",
        })
    }
}

impl FromStr for FeatureAggregation {
    type Err = FefiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_coefficient" => Ok(FeatureAggregation::MeanCoefficient),
            "mean_likelihood" => Ok(FeatureAggregation::MeanLikelihood),
            _ => Err(FefiError::Config(format!("unknown feature aggregation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyFusion {
    pub ml_partitions: BTreeMap<LearnerKind, LinguisticPartition>,
    pub feature_partitions: FeaturePartitions,
    pub rulebase: RuleBase,
    pub reports: Vec<LikelihoodReport>,
    /// Defuzzified importance per feature.
    pub fused: Vec<f64>,
    /// Tuples dropped for missing model cells.
    pub dropped_pairs: usize,
}

pub fn fuzzy_fusion(table: &FiTable, aggregation: FeatureAggregation) -> Result<FuzzyFusion> {
    let ml_partitions = build_ml_partitions(table).context_with(|| "membership partitions".to_string())?;
    let feature_partitions = build_feature_partitions(table).context_with(|| "feature partitions".to_string())?;
    let output = build_output_partition(&table.ground_truth).context_with(|| "output partition".to_string())?;
    let training = build_training_pairs(table);
    let rulebase = generate_rules(&training, &ml_partitions, &output).context_with(|| "rule generation".to_string())?;

    let n = table.n_features();
    let mut per_feature: Vec<Vec<&[f64]>> = vec![Vec::new(); n];
    for pair in &training.pairs {
        per_feature[pair.feature].push(&pair.inputs);
    }
    let mut reports = Vec::with_capacity(n);
    for (feature, tuples) in per_feature.iter().enumerate() {
        if tuples.is_empty() {
            return Err(FefiError::Coverage(format!("feature {feature} has no complete coefficient tuple")));
        }
        let report = match aggregation {
            FeatureAggregation::MeanCoefficient => {
                let means: Vec<f64> = (0..rulebase.models.len())
                    .map(|m| mean(&tuples.iter().map(|t| t[m]).collect::<Vec<_>>()))
                    .collect();
                infer_aligned(feature, &means, &rulebase)?
            }
            FeatureAggregation::MeanLikelihood => {
                let each = tuples
                    .iter()
                    .map(|t| infer_aligned(feature, t, &rulebase))
                    .collect::<Result<Vec<_>>>()?;
                merge_reports(feature, &each, &rulebase)
            }
        };
        reports.push(report);
    }
    let fused = reports.iter().map(|r| r.crisp).collect();
    Ok(FuzzyFusion {
        ml_partitions,
        feature_partitions,
        rulebase,
        reports,
        fused,
        dropped_pairs: training.dropped,
    })
}

/// Averages likelihoods and per-rule strengths over several reports and
/// defuzzifies the averaged likelihoods.
fn merge_reports(feature: usize, reports: &[LikelihoodReport], rulebase: &RuleBase) -> LikelihoodReport {
    let k = reports.len() as f64;
    let avg = |f: fn(&Degrees) -> f64| reports.iter().map(|r| f(&r.likelihoods)).sum::<f64>() / k;
    let likelihoods = Degrees {
        low: avg(|d| d.low),
        moderate: avg(|d| d.moderate),
        high: avg(|d| d.high),
    };
    let mut strengths: BTreeMap<usize, f64> = BTreeMap::new();
    for r in reports {
        for &(i, s) in &r.fired_rules {
            *strengths.entry(i).or_default() += s / k;
        }
    }
    let (crisp, indeterminate) = match centroid(&likelihoods, &rulebase.output_partition) {
        Some(c) => (c, false),
        None => (INDETERMINATE_CRISP, true),
    };
    LikelihoodReport {
        feature,
        likelihoods,
        crisp,
        indeterminate,
        fired_rules: strengths.into_iter().collect(),
    }
}
