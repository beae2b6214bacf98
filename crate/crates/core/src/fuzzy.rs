//! Membership functions and boxplot-driven linguistic partitions.
//!
//! A partition is built from a five-number summary: `low = Z(min, median)`,
//! `moderate = Triangular(q1, median, q3)`, `high = S(median, max)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FefiError, Result};
use crate::learners::LearnerKind;
use crate::stats::{median, quantile_sorted};
use crate::table::FiTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Low,
    Moderate,
    High,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Low, Label::Moderate, Label::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Low => "low",
            Label::Moderate => "moderate",
            Label::High => "high",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum MembershipFunction {
    /// Quadratic-spline Z curve: 1 up to `a`, 0 from `b`.
    Z { a: f64, b: f64 },
    Triangular { a: f64, b: f64, c: f64 },
    /// Mirror of `Z`: 0 up to `a`, 1 from `b`.
    S { a: f64, b: f64 },
}

impl MembershipFunction {
    pub fn degree(&self, x: f64) -> f64 {
        match *self {
            MembershipFunction::Z { a, b } => {
                if x <= a {
                    1.0
                } else if x >= b {
                    0.0
                } else if x <= (a + b) / 2.0 {
                    1.0 - 2.0 * ((x - a) / (b - a)).powi(2)
                } else {
                    2.0 * ((b - x) / (b - a)).powi(2)
                }
            }
            MembershipFunction::S { a, b } => {
                if x >= b {
                    1.0
                } else if x <= a {
                    0.0
                } else if x <= (a + b) / 2.0 {
                    2.0 * ((x - a) / (b - a)).powi(2)
                } else {
                    1.0 - 2.0 * ((b - x) / (b - a)).powi(2)
                }
            }
            // A collapsed edge (a == b or b == c) leaves only the peak at 1.
            MembershipFunction::Triangular { a, b, c } => {
                if x == b {
                    1.0
                } else if x < b {
                    if x <= a {
                        0.0
                    } else {
                        (x - a) / (b - a)
                    }
                } else if x >= c {
                    0.0
                } else {
                    (c - x) / (c - b)
                }
            }
        }
    }

    /// Lowest and highest parameter; the closure of the support for non-degenerate shapes.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            MembershipFunction::Z { a, b } | MembershipFunction::S { a, b } => (a, b),
            MembershipFunction::Triangular { a, c, .. } => (a, c),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            MembershipFunction::Z { a, b } | MembershipFunction::S { a, b } => vec![a, b],
            MembershipFunction::Triangular { a, b, c } => vec![a, b, c],
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            MembershipFunction::Z { .. } => "z",
            MembershipFunction::Triangular { .. } => "triangular",
            MembershipFunction::S { .. } => "s",
        }
    }
}

/// Membership degrees of one value in the three labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degrees {
    pub low: f64,
    pub moderate: f64,
    pub high: f64,
}

impl Degrees {
    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::Low => self.low,
            Label::Moderate => self.moderate,
            Label::High => self.high,
        }
    }

    /// The label with the largest degree; ties go to the lower label.
    pub fn best_label(&self) -> Label {
        let mut best = Label::Low;
        for label in [Label::Moderate, Label::High] {
            if self.get(label) > self.get(best) {
                best = label;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumberSummary {
    pub fn is_degenerate(&self) -> bool {
        self.min == self.max
    }
}

/// Boxplot summary with type-7 quartiles.
pub fn five_number_summary(values: &[f64]) -> Result<FiveNumberSummary> {
    if values.is_empty() {
        return Err(FefiError::Parameter("five-number summary of an empty list".into()));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(FefiError::Parameter(format!("value {v} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(FiveNumberSummary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionSource {
    PerModel { model: LearnerKind },
    /// `model: None` marks the combination over all models.
    PerFeature { feature: usize, model: Option<LearnerKind> },
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinguisticPartition {
    pub low: MembershipFunction,
    pub moderate: MembershipFunction,
    pub high: MembershipFunction,
    pub source: PartitionSource,
}

/// Half-widths used to widen a zero-width summary.
pub const DEGENERATE_WIDTH: f64 = 0.1;
pub const DEGENERATE_TRIANGLE_WIDTH: f64 = 0.05;

impl LinguisticPartition {
    pub fn get(&self, label: Label) -> &MembershipFunction {
        match label {
            Label::Low => &self.low,
            Label::Moderate => &self.moderate,
            Label::High => &self.high,
        }
    }

    pub fn degrees(&self, x: f64) -> Degrees {
        Degrees {
            low: self.low.degree(x),
            moderate: self.moderate.degree(x),
            high: self.high.degree(x),
        }
    }

    pub fn to_export(&self) -> Vec<ExportedMembership> {
        Label::ALL
            .into_iter()
            .map(|l| {
                let mf = self.get(l);
                ExportedMembership {
                    label: l,
                    shape: mf.shape_name().to_string(),
                    params: mf.params(),
                }
            })
            .collect()
    }
}

/// `{label, shape, params}` triple for plotting and audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedMembership {
    pub label: Label,
    pub shape: String,
    pub params: Vec<f64>,
}

pub fn partition_from_summary(s: &FiveNumberSummary, source: PartitionSource) -> LinguisticPartition {
    if s.is_degenerate() {
        let m = s.median;
        return LinguisticPartition {
            low: MembershipFunction::Z {
                a: (m - DEGENERATE_WIDTH).max(0.0),
                b: m,
            },
            moderate: MembershipFunction::Triangular {
                a: (m - DEGENERATE_TRIANGLE_WIDTH).max(0.0),
                b: m,
                c: (m + DEGENERATE_TRIANGLE_WIDTH).min(1.0),
            },
            high: MembershipFunction::S {
                a: m,
                b: (m + DEGENERATE_WIDTH).min(1.0),
            },
            source,
        };
    }
    LinguisticPartition {
        low: MembershipFunction::Z { a: s.min, b: s.median },
        moderate: MembershipFunction::Triangular {
            a: s.q1,
            b: s.median,
            c: s.q3,
        },
        high: MembershipFunction::S { a: s.median, b: s.max },
        source,
    }
}

pub fn partition_from_values(values: &[f64], source: PartitionSource) -> Result<LinguisticPartition> {
    Ok(partition_from_summary(&five_number_summary(values)?, source))
}

/// One partition per model column, from that model's pooled coefficients.
pub fn build_ml_partitions(table: &FiTable) -> Result<BTreeMap<LearnerKind, LinguisticPartition>> {
    let models = table.models();
    if models.is_empty() {
        return Err(FefiError::Coverage("table has no model columns".into()));
    }
    models
        .into_iter()
        .map(|m| {
            let column = table.model_column(m);
            if column.is_empty() {
                return Err(FefiError::Coverage(format!("model {m} has no coefficients")));
            }
            Ok((m, partition_from_values(&column, PartitionSource::PerModel { model: m })?))
        })
        .collect()
}

/// Lower parameters combine by min and upper parameters by max; the
/// triangular peak is the median of the peaks.
pub fn combine_partitions(parts: &[LinguisticPartition], source: PartitionSource) -> Result<LinguisticPartition> {
    if parts.is_empty() {
        return Err(FefiError::Coverage("no partitions to combine".into()));
    }
    let fold_two = |pick: fn(&LinguisticPartition) -> (f64, f64)| {
        parts.iter().map(pick).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        })
    };
    let (za, zb) = fold_two(|p| p.low.bounds());
    let (sa, sb) = fold_two(|p| p.high.bounds());
    let (ta, tc) = fold_two(|p| p.moderate.bounds());
    let peaks: Vec<f64> = parts
        .iter()
        .map(|p| match p.moderate {
            MembershipFunction::Triangular { b, .. } => b,
            other => other.bounds().0,
        })
        .collect();
    Ok(LinguisticPartition {
        low: MembershipFunction::Z { a: za, b: zb },
        moderate: MembershipFunction::Triangular {
            a: ta,
            b: median(&peaks).clamp(ta, tc),
            c: tc,
        },
        high: MembershipFunction::S { a: sa, b: sb },
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePartitions {
    /// Partition of one feature's coefficients from one model.
    pub per_model: BTreeMap<(usize, LearnerKind), LinguisticPartition>,
    /// Per-feature combination over all models.
    pub combined: BTreeMap<usize, LinguisticPartition>,
}

pub fn build_feature_partitions(table: &FiTable) -> Result<FeaturePartitions> {
    if table.is_empty() {
        return Err(FefiError::Coverage("feature partitions need a nonempty table".into()));
    }
    let mut per_model = BTreeMap::new();
    for ((feature, model), values) in table.by_feature_and_model() {
        let source = PartitionSource::PerFeature {
            feature,
            model: Some(model),
        };
        per_model.insert((feature, model), partition_from_values(&values, source)?);
    }
    let mut combined = BTreeMap::new();
    for feature in 0..table.n_features() {
        let parts: Vec<LinguisticPartition> = per_model
            .range((feature, LearnerKind::ALL[0])..=(feature, LearnerKind::ALL[4]))
            .map(|(_, p)| *p)
            .collect();
        if parts.is_empty() {
            return Err(FefiError::Coverage(format!("feature {feature} has no coefficients")));
        }
        combined.insert(
            feature,
            combine_partitions(&parts, PartitionSource::PerFeature { feature, model: None })?,
        );
    }
    Ok(FeaturePartitions { per_model, combined })
}

/// Partition of the ground-truth importances over the whole feature set.
pub fn build_output_partition(ground_truth: &[f64]) -> Result<LinguisticPartition> {
    partition_from_values(ground_truth, PartitionSource::Output)
}

/// Samples every membership curve on an evenly spaced grid over [0, 1].
pub fn sample_curves(partition: &LinguisticPartition, points: usize) -> Vec<(f64, Degrees)> {
    (0..points)
        .map(|i| {
            let x = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
            (x, partition.degrees(x))
        })
        .collect()
}
