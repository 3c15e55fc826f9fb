//! End-to-end robustness experiment: ingestion, extraction, comparison and
//! report emission.

mod config;
mod extract;
mod manifest;
mod report;
mod scatter;
mod table;

use std::path::Path;

use serde_json::json;
use thiserror::Error;

pub use config::{Comparison, ExperimentConfig, MaskVariant, SpacingTarget};
pub use extract::{
    extract_features, prepare, resolve_spacing, surviving_levels_stable, Exclusion, Extraction, PreparedImage,
    Subject,
};
pub use manifest::{ingest_manifest, parse_manifest, write_manifest, ManifestEntry, MANIFEST_HEADER};
pub use report::{
    compare_features, paired_values, summarize_block, ComparisonBlock, FeatureAgreement, RobustnessReport,
    ToolInfo, METRICS,
};
pub use scatter::{binning_slug, emit_scatter, ScatterRow, ScatterTable};
pub use table::{FeatureRow, FeatureTable, FEATURE_TABLE_HEADER};

use crate::io::read_image;
use crate::quantize::{DEFAULT_BIN_COUNT, DEFAULT_BIN_WIDTH};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: String, message: String },
    #[error("duplicate image_id {0:?}")]
    DuplicateId(String),
    #[error("image file for {image_id:?} not readable: {message}")]
    MissingFile { image_id: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("all {0} images were excluded")]
    AllImagesExcluded(usize),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("unknown binning {0:?}")]
    UnknownBinning(String),
}

impl PipelineError {
    /// True for errors caused by the invocation rather than the data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

/// Loads every manifest image. A missing or unreadable file is fatal.
pub fn load_subjects(entries: &[ManifestEntry]) -> Result<Vec<Subject>, PipelineError> {
    entries
        .iter()
        .map(|e| {
            let image = read_image::<f64>(&e.image_path, e.spacing).map_err(|err| PipelineError::MissingFile {
                image_id: e.image_id.clone(),
                message: err.to_string(),
            })?;
            Ok(Subject {
                image_id: e.image_id.clone(),
                image,
                bbox: e.bbox,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub table: FeatureTable,
    pub report: RobustnessReport,
}

/// Provenance block recorded in every report.
pub fn provenance(cfg: &ExperimentConfig, extraction: &Extraction) -> serde_json::Value {
    json!({
        "config": cfg,
        "binning_labels": cfg.binning_specs.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "defaults": {
            "n_bins": DEFAULT_BIN_COUNT,
            "static_bin_width": DEFAULT_BIN_WIDTH,
            "static_width_origin": 0.0,
            "ngldm_alpha": 0,
            "ngldm_distance": 1,
            "normalization": [0.0, 255.0],
            "target_area_change": 0.2,
            "threshold": crate::similarity::DEFAULT_THRESHOLD,
        },
        "rules": {
            "pipeline_order": "resample, normalize, perturb, quantize, extract",
            "perturbation": "first threshold crossing; erode until area <= (1-d)*A, dilate until area >= (1+d)*A",
            "structuring_element": format!("square {0}x{0}", cfg.structuring_element.side()),
            "dynamic_binning_edges": "re-derived per mask variant",
            "static_binning_edges": "fixed, independent of mask",
            "resampling": "image: interpolating cubic B-spline (or bilinear), edge-clamped; mask: nearest neighbor",
            "normalization": "min-max over the whole resampled image; constant images map to lo",
            "ngldm_dependence_index": "j = dependent neighbors + 1; neighbors outside the ROI excluded",
            "ccc_moments": "population (1/n)",
            "summary_std_dev": "sample (n-1)",
            "threshold_count": "strictly greater than threshold",
        },
        "target_spacing": extraction.target_spacing,
        "n_images": extraction.included.len() + extraction.excluded.len(),
        "n_included": extraction.included.len(),
        "n_excluded": extraction.excluded.len(),
        "excluded": extraction.excluded,
    })
}

/// Builds the report for an extraction.
pub fn build_report(cfg: &ExperimentConfig, extraction: &Extraction) -> RobustnessReport {
    let binnings: Vec<String> = cfg.binning_specs.iter().map(ToString::to_string).collect();
    RobustnessReport {
        tool: ToolInfo::default(),
        provenance: provenance(cfg, extraction),
        results: compare_features(&extraction.table, &binnings, &cfg.comparisons, cfg.threshold),
    }
}

/// Extracts features for every subject and computes the agreement report.
pub fn run_experiment(subjects: &[Subject], cfg: &ExperimentConfig) -> Result<ExperimentOutput, PipelineError> {
    let extraction = extract_features(subjects, cfg)?;
    let report = build_report(cfg, &extraction);
    Ok(ExperimentOutput {
        table: extraction.table,
        report,
    })
}

/// `run_experiment` over a manifest file.
pub fn run_manifest(manifest: &Path, cfg: &ExperimentConfig) -> Result<ExperimentOutput, PipelineError> {
    cfg.validate()?;
    let entries = ingest_manifest(manifest)?;
    if entries.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let subjects = load_subjects(&entries)?;
    run_experiment(&subjects, cfg)
}
