//! Mamdani inference over a Wang–Mendel rule base.
//!
//! Rule strength is the minimum of the antecedent degrees, each output
//! label's likelihood is the maximum strength among rules concluding it,
//! and the crisp value is the centroid of the output membership functions
//! clipped at their likelihoods and joined by pointwise max.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result};
use crate::fuzzy::{Degrees, Label, LinguisticPartition};
use crate::learners::LearnerKind;
use crate::rulegen::{FuzzyRule, RuleBase};

/// Points in the defuzzification grid over [0, 1].
pub const CENTROID_GRID: usize = 1001;
/// Crisp value reported when no rule fires.
pub const INDETERMINATE_CRISP: f64 = 0.5;

pub fn fuzzify(value: f64, partition: &LinguisticPartition) -> Degrees {
    partition.degrees(value)
}

pub fn fuzzy_and(degrees: &[f64]) -> f64 {
    degrees.iter().copied().fold(1.0, f64::min)
}

pub fn fuzzy_or(degrees: &[f64]) -> f64 {
    degrees.iter().copied().fold(0.0, f64::max)
}

pub fn fuzzy_not(degree: f64) -> f64 {
    1.0 - degree
}

/// AND-combined strength of a rule given each model's fuzzified input.
pub fn rule_strength(rule: &FuzzyRule, degrees: &BTreeMap<LearnerKind, Degrees>) -> Result<f64> {
    let mut strength: f64 = 1.0;
    for (model, label) in &rule.antecedents {
        let d = degrees
            .get(model)
            .ok_or_else(|| FefiError::InferenceInput(format!("no membership degrees for model {model}")))?;
        strength = strength.min(d.get(*label));
    }
    Ok(strength)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodReport {
    pub feature: usize,
    #[serde(flatten)]
    pub likelihoods: Degrees,
    pub crisp: f64,
    pub indeterminate: bool,
    /// `(rule index, strength)` for every rule with positive strength.
    pub fired_rules: Vec<(usize, f64)>,
}

/// Per-label likelihood: the maximum strength among rules with that
/// consequent, 0 when none.
pub fn aggregate(strengths: &[(Label, f64)]) -> Degrees {
    let mut out = Degrees {
        low: 0.0,
        moderate: 0.0,
        high: 0.0,
    };
    for &(label, s) in strengths {
        let slot = match label {
            Label::Low => &mut out.low,
            Label::Moderate => &mut out.moderate,
            Label::High => &mut out.high,
        };
        *slot = slot.max(s);
    }
    out
}

/// Centroid of the clipped-and-aggregated output region, or `None` when
/// the region is empty.
pub fn centroid(likelihoods: &Degrees, output: &LinguisticPartition) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..CENTROID_GRID {
        let t = i as f64 / (CENTROID_GRID - 1) as f64;
        let mu = Label::ALL
            .iter()
            .map(|&l| likelihoods.get(l).min(output.get(l).degree(t)))
            .fold(0.0, f64::max);
        num += t * mu;
        den += mu;
    }
    (den > 0.0).then(|| num / den)
}

/// Inference with inputs aligned to `rulebase.models`.
pub fn infer_aligned(feature: usize, values: &[f64], rulebase: &RuleBase) -> Result<LikelihoodReport> {
    if values.len() != rulebase.models.len() {
        return Err(FefiError::InferenceInput(format!(
            "{} input values for {} models",
            values.len(),
            rulebase.models.len()
        )));
    }
    let degrees: BTreeMap<LearnerKind, Degrees> = rulebase
        .models
        .iter()
        .zip(values)
        .map(|(m, &v)| (*m, fuzzify(v, &rulebase.partitions[m])))
        .collect();
    evaluate(feature, &degrees, rulebase)
}

pub fn infer(feature: usize, values: &BTreeMap<LearnerKind, f64>, rulebase: &RuleBase) -> Result<LikelihoodReport> {
    let aligned: Vec<f64> = rulebase
        .models
        .iter()
        .map(|m| {
            values
                .get(m)
                .copied()
                .ok_or_else(|| FefiError::InferenceInput(format!("no coefficient for model {m}")))
        })
        .collect::<Result<_>>()?;
    infer_aligned(feature, &aligned, rulebase)
}

fn evaluate(feature: usize, degrees: &BTreeMap<LearnerKind, Degrees>, rulebase: &RuleBase) -> Result<LikelihoodReport> {
    let mut fired = Vec::with_capacity(rulebase.rules.len());
    let mut fired_rules = Vec::new();
    for (i, rule) in rulebase.rules.iter().enumerate() {
        let s = rule_strength(rule, degrees)?;
        if s > 0.0 {
            fired_rules.push((i, s));
        }
        fired.push((rule.consequent, s));
    }
    let likelihoods = aggregate(&fired);
    let (crisp, indeterminate) = match centroid(&likelihoods, &rulebase.output_partition) {
        Some(c) => (c, false),
        None => (INDETERMINATE_CRISP, true),
    };
    Ok(LikelihoodReport {
        feature,
        likelihoods,
        crisp,
        indeterminate,
        fired_rules,
    })
}

fn percent(v: f64) -> String {
    format!("{:.0}%", v * 100.0)
}

/// Human-readable account of a report: label likelihoods, the crisp value
/// read against the output partition, and the strongest fired rules.
pub fn explain(report: &LikelihoodReport, rulebase: &RuleBase) -> String {
    let mut out = String::new();
    if report.indeterminate || report.fired_rules.is_empty() {
        let _ = writeln!(
            out,
            "Feature {}: importance is indeterminate (no rule fired for these coefficients).",
            report.feature
        );
        return out;
    }
    let lik = report.likelihoods;
    let _ = writeln!(
        out,
        "Feature {}: {} likelihood of low importance, {} likelihood of moderate importance, {} likelihood of high importance.",
        report.feature,
        percent(lik.low),
        percent(lik.moderate),
        percent(lik.high)
    );
    let context = rulebase.output_partition.degrees(report.crisp);
    let label = context.best_label();
    let _ = writeln!(
        out,
        "Fused importance {:.2} carries a {} likelihood of {} importance relative to the whole feature set.",
        report.crisp,
        percent(context.get(label)),
        label
    );
    let mut fired = report.fired_rules.clone();
    fired.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let _ = writeln!(out, "Strongest rules:");
    for (i, s) in fired.into_iter().take(3) {
        let _ = writeln!(out, "  {} (strength {:.2})", rulebase.rules[i].describe(), s);
    }
    out
}
