//! Wang–Mendel rule induction from (per-model coefficients, ground truth) pairs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result};
use crate::fuzzy::{Label, LinguisticPartition};
use crate::importance::FiMethod;
use crate::learners::LearnerKind;
use crate::table::FiTable;

/// One input-output example: every model's coefficient for a feature in one
/// (sample, method) cell, and that feature's ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub feature: usize,
    pub sample_id: usize,
    pub method: FiMethod,
    /// Aligned with `TrainingSet::models`.
    pub inputs: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub models: Vec<LearnerKind>,
    pub pairs: Vec<TrainingPair>,
    /// Cells skipped because some model has no coefficient there.
    pub dropped: usize,
}

/// One full-arity tuple per (feature, sample, method); incomplete cells are
/// dropped and counted. Pairs come out sorted by (feature, sample, method).
pub fn build_training_pairs(table: &FiTable) -> TrainingSet {
    let models = table.models();
    let position: BTreeMap<LearnerKind, usize> = models.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut cells: BTreeMap<(usize, usize, FiMethod), Vec<Option<f64>>> = BTreeMap::new();
    for r in &table.records {
        let cell = cells
            .entry((r.feature, r.sample_id, r.method))
            .or_insert_with(|| vec![None; models.len()]);
        cell[position[&r.model]] = Some(r.coefficient);
    }
    let mut pairs = Vec::with_capacity(cells.len());
    let mut dropped = 0;
    for ((feature, sample_id, method), values) in cells {
        match values.into_iter().collect::<Option<Vec<f64>>>() {
            Some(inputs) => pairs.push(TrainingPair {
                feature,
                sample_id,
                method,
                inputs,
                target: table.ground_truth[feature],
            }),
            None => dropped += 1,
        }
    }
    TrainingSet { models, pairs, dropped }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyRule {
    /// Conjunction of `model is label` clauses.
    pub antecedents: Vec<(LearnerKind, Label)>,
    pub consequent: Label,
    pub weight: usize,
}

impl FuzzyRule {
    pub fn labels(&self) -> Vec<Label> {
        self.antecedents.iter().map(|(_, l)| *l).collect()
    }

    pub fn describe(&self) -> String {
        let mut s = String::from("IF ");
        for (i, (model, label)) in self.antecedents.iter().enumerate() {
            if i > 0 {
                s.push_str(" AND ");
            }
            let _ = write!(s, "{model} is {label}");
        }
        let _ = write!(s, " THEN Output is {} [w={}]", self.consequent, self.weight);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    pub models: Vec<LearnerKind>,
    pub rules: Vec<FuzzyRule>,
    /// Rules removed by conflict resolution, kept for audit.
    pub eliminated: Vec<FuzzyRule>,
    pub partitions: BTreeMap<LearnerKind, LinguisticPartition>,
    pub output_partition: LinguisticPartition,
}

impl RuleBase {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.rules.iter().enumerate() {
            let _ = writeln!(out, "{:>3}. {}", i + 1, r.describe());
        }
        out
    }

    /// Sum of weights before conflict resolution; equals the number of training pairs.
    pub fn total_weight(&self) -> usize {
        self.rules.iter().chain(&self.eliminated).map(|r| r.weight).sum()
    }
}

/// Keeps the heaviest consequent for each antecedent tuple; weight ties go
/// to the lower consequent label. Returns `(kept, eliminated)`.
pub fn resolve_conflicts(candidates: Vec<FuzzyRule>) -> (Vec<FuzzyRule>, Vec<FuzzyRule>) {
    let mut groups: BTreeMap<Vec<(LearnerKind, Label)>, Vec<FuzzyRule>> = BTreeMap::new();
    for rule in candidates {
        groups.entry(rule.antecedents.clone()).or_default().push(rule);
    }
    let mut kept = Vec::with_capacity(groups.len());
    let mut eliminated = Vec::new();
    for (_, mut rules) in groups {
        rules.sort_by(|a, b| b.weight.cmp(&a.weight).then(a.consequent.cmp(&b.consequent)));
        let mut it = rules.into_iter();
        kept.extend(it.next());
        eliminated.extend(it);
    }
    (kept, eliminated)
}

pub fn generate_rules(
    training: &TrainingSet,
    ml_partitions: &BTreeMap<LearnerKind, LinguisticPartition>,
    output_partition: &LinguisticPartition,
) -> Result<RuleBase> {
    if training.pairs.is_empty() {
        return Err(FefiError::Coverage("no complete training pairs for rule generation".into()));
    }
    let partitions: Vec<&LinguisticPartition> = training
        .models
        .iter()
        .map(|m| {
            ml_partitions
                .get(m)
                .ok_or_else(|| FefiError::Coverage(format!("no membership partition for model {m}")))
        })
        .collect::<Result<_>>()?;

    let mut counts: BTreeMap<(Vec<(LearnerKind, Label)>, Label), usize> = BTreeMap::new();
    for pair in &training.pairs {
        let antecedents = training
            .models
            .iter()
            .zip(&partitions)
            .zip(&pair.inputs)
            .map(|((m, p), &v)| (*m, p.degrees(v).best_label()))
            .collect();
        let consequent = output_partition.degrees(pair.target).best_label();
        *counts.entry((antecedents, consequent)).or_default() += 1;
    }
    let candidates = counts
        .into_iter()
        .map(|((antecedents, consequent), weight)| FuzzyRule {
            antecedents,
            consequent,
            weight,
        })
        .collect();
    let (rules, eliminated) = resolve_conflicts(candidates);
    Ok(RuleBase {
        models: training.models.clone(),
        rules,
        eliminated,
        partitions: training.models.iter().map(|m| (*m, ml_partitions[m])).collect(),
        output_partition: *output_partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{DataSubset, FiRecord};
    use LearnerKind::*;

    fn rule(labels: [Label; 3], consequent: Label, weight: usize) -> FuzzyRule {
        FuzzyRule {
            antecedents: vec![(GradientBoosting, labels[0]), (RandomForest, labels[1]), (Mlp, labels[2])],
            consequent,
            weight,
        }
    }

    #[test]
    fn conflicting_rule_with_smaller_weight_is_eliminated() {
        use Label::*;
        let candidates = vec![
            rule([Low, Low, Low], Low, 5),
            rule([High, High, High], High, 5),
            rule([Moderate, Moderate, Low], Low, 4),
            rule([Moderate, Moderate, High], High, 4),
            rule([High, High, High], Moderate, 2),
        ];
        let (kept, eliminated) = resolve_conflicts(candidates);
        assert_eq!(kept.len(), 4);
        assert_eq!(eliminated, vec![rule([High, High, High], Moderate, 2)]);
        assert!(kept.contains(&rule([High, High, High], High, 5)));
    }

    #[test]
    fn weight_ties_go_to_lower_consequent() {
        use Label::*;
        let (kept, _) = resolve_conflicts(vec![rule([Low, Low, Low], High, 3), rule([Low, Low, Low], Moderate, 3)]);
        assert_eq!(kept, vec![rule([Low, Low, Low], Moderate, 3)]);
    }

    #[test]
    fn pairs_drop_incomplete_cells() {
        let mut records = Vec::new();
        for feature in 0..2 {
            for (method, models) in [
                (FiMethod::Permutation, vec![GradientBoosting, LinearSvr]),
                (FiMethod::Impurity, vec![GradientBoosting]),
            ] {
                for model in models {
                    records.push(FiRecord {
                        feature,
                        sample_id: 0,
                        method,
                        model,
                        coefficient: 0.5,
                    });
                }
            }
        }
        let table = FiTable::new(records, vec![1.0, 0.2], DataSubset::Whole).unwrap();
        let set = build_training_pairs(&table);
        assert_eq!(set.models, vec![GradientBoosting, LinearSvr]);
        assert_eq!(set.pairs.len(), 2);
        assert_eq!(set.dropped, 2);
        assert_eq!(set.pairs[1].target, 0.2);
    }
}
