//! Agreement metrics per (binning, comparison, feature) and their summaries.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Comparison, FeatureTable, MaskVariant};
use crate::similarity::{lins_ccc, pearson, spearman, summarize, MetricSummary, PairedSample, SimilarityError};

pub const METRICS: [&str; 3] = ["pearson", "spearman", "lins_ccc"];

fn error_code(e: &SimilarityError) -> &'static str {
    match e {
        SimilarityError::ZeroVariance | SimilarityError::TooFewPairs(_) => "zero_variance",
        SimilarityError::LengthMismatch { .. } => "length_mismatch",
        SimilarityError::NonFinite(_) => "non_finite",
        SimilarityError::EmptyInput => "empty_input",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAgreement {
    pub feature: String,
    pub n_pairs: usize,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub lins_ccc: Option<f64>,
    /// Metric name -> error code for undefined metrics.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

impl FeatureAgreement {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "pearson" => self.pearson,
            "spearman" => self.spearman,
            "lins_ccc" => self.lins_ccc,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBlock {
    pub binning: String,
    pub comparison: Comparison,
    pub features: Vec<FeatureAgreement>,
    /// Metric name -> summary over the features where the metric is defined.
    pub summaries: BTreeMap<String, Option<MetricSummary<f64>>>,
}

impl ComparisonBlock {
    pub fn feature(&self, name: &str) -> Option<&FeatureAgreement> {
        self.features.iter().find(|f| f.feature == name)
    }
}

/// Paired values of `feature` across images that carry both variants.
pub fn paired_values(
    table: &FeatureTable,
    binning: &str,
    feature: &str,
    comparison: Comparison,
) -> Vec<(String, f64, f64)> {
    let (a, b) = comparison.variants();
    let mut lookup: HashMap<(&str, MaskVariant), f64> = HashMap::new();
    for row in table.rows.iter().filter(|r| r.binning == binning && r.feature == feature) {
        lookup.insert((row.image_id.as_str(), row.mask_variant), row.value);
    }
    table
        .image_ids()
        .into_iter()
        .filter_map(|id| {
            let x = *lookup.get(&(id.as_str(), a))?;
            let y = *lookup.get(&(id.as_str(), b))?;
            Some((id, x, y))
        })
        .collect()
}

fn agreement(feature: &str, pairs: &[(String, f64, f64)]) -> FeatureAgreement {
    let x: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let mut errors = BTreeMap::new();
    let mut values = [None; 3];
    match PairedSample::new(x, y) {
        Ok(sample) => {
            let results = [pearson(&sample), spearman(&sample), lins_ccc(&sample)];
            for ((slot, result), name) in values.iter_mut().zip(results).zip(METRICS) {
                match result {
                    Ok(v) => *slot = Some(v),
                    Err(e) => {
                        errors.insert(name.to_string(), error_code(&e).to_string());
                    }
                }
            }
        }
        // fewer than two images: every metric is undefined
        Err(e) => {
            for name in METRICS {
                errors.insert(name.to_string(), error_code(&e).to_string());
            }
        }
    }
    FeatureAgreement {
        feature: feature.to_string(),
        n_pairs: pairs.len(),
        pearson: values[0],
        spearman: values[1],
        lins_ccc: values[2],
        errors,
    }
}

/// Summary per metric over the block's feature agreements.
pub fn summarize_block(features: &[FeatureAgreement], threshold: f64) -> BTreeMap<String, Option<MetricSummary<f64>>> {
    METRICS
        .iter()
        .map(|&m| {
            let values: Vec<f64> = features.iter().filter_map(|f| f.metric(m)).collect();
            (m.to_string(), summarize(&values, threshold).ok())
        })
        .collect()
}

/// Computes every (binning, comparison) block from a feature table.
pub fn compare_features(
    table: &FeatureTable,
    binnings: &[String],
    comparisons: &[Comparison],
    threshold: f64,
) -> Vec<ComparisonBlock> {
    let features = table.features();
    let mut blocks = Vec::new();
    for binning in binnings {
        for &comparison in comparisons {
            let agreements: Vec<FeatureAgreement> = features
                .iter()
                .map(|f| agreement(f, &paired_values(table, binning, f, comparison)))
                .collect();
            blocks.push(ComparisonBlock {
                binning: binning.clone(),
                comparison,
                summaries: summarize_block(&agreements, threshold),
                features: agreements,
            });
        }
    }
    blocks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: "binrobust".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Full run report: provenance plus one block per (binning, comparison).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub tool: ToolInfo,
    pub provenance: serde_json::Value,
    pub results: Vec<ComparisonBlock>,
}

impl RobustnessReport {
    pub fn block(&self, binning: &str, comparison: Comparison) -> Option<&ComparisonBlock> {
        self.results
            .iter()
            .find(|b| b.binning == binning && b.comparison == comparison)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
