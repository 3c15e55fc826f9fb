//! Per-image preprocessing, mask perturbation and NGLDM feature extraction.

use rayon::prelude::*;
use serde::Serialize;

use super::{ExperimentConfig, FeatureRow, FeatureTable, MaskVariant, PipelineError, SpacingTarget};
use crate::imagecore::{
    bbox_to_mask, median_spacing, normalize_minmax, resample_image_with, resample_mask, BBox, Image2D, Mask2D,
    Spacing,
};
use crate::morphology::perturb_to_area_with;
use crate::ngldm::{compute_ngldm, feature_vector};
use crate::quantize::quantize;

/// One annotated image entering the pipeline.
#[derive(Debug, Clone)]
pub struct Subject {
    pub image_id: String,
    pub image: Image2D<f64>,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub image_id: String,
    pub reason: String,
}

/// Preprocessed image with its ROI variants.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    pub image: Image2D<f64>,
    pub masks: Vec<(MaskVariant, Mask2D)>,
}

impl PreparedImage {
    pub fn mask(&self, variant: MaskVariant) -> Option<&Mask2D> {
        self.masks.iter().find(|(v, _)| *v == variant).map(|(_, m)| m)
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub table: FeatureTable,
    pub target_spacing: Spacing,
    pub included: Vec<String>,
    pub excluded: Vec<Exclusion>,
}

pub fn resolve_spacing(subjects: &[Subject], target: SpacingTarget) -> Result<Spacing, PipelineError> {
    match target {
        SpacingTarget::Explicit(s) => Ok(s),
        SpacingTarget::Auto => {
            let spacings: Vec<Spacing> = subjects.iter().map(|s| s.image.spacing()).collect();
            median_spacing(&spacings).map_err(|_| PipelineError::EmptyCorpus)
        }
    }
}

/// Resamples, normalizes and builds the mask variants the config needs.
/// The error string becomes the exclusion reason.
pub fn prepare(subject: &Subject, target: Spacing, cfg: &ExperimentConfig) -> Result<PreparedImage, String> {
    let src = &subject.image;
    let mask = bbox_to_mask(subject.bbox, src.width(), src.height()).map_err(|e| e.to_string())?;
    let image = resample_image_with(src, target, cfg.interpolation).map_err(|e| e.to_string())?;
    let mask = resample_mask(&mask, src.spacing(), target).map_err(|e| e.to_string())?;
    if mask.is_empty() {
        return Err("mask vanished after resampling".into());
    }
    let (lo, hi) = cfg.normalization;
    let image = normalize_minmax(&image, lo, hi).map_err(|e| e.to_string())?;
    let mut masks = Vec::new();
    for variant in cfg.needed_variants() {
        let m = match cfg.target_ratio(variant) {
            None => mask.clone(),
            Some(ratio) => perturb_to_area_with(&mask, ratio, cfg.structuring_element)
                .map_err(|e| format!("{variant} mask: {e}"))?
                .mask,
        };
        masks.push((variant, m));
    }
    Ok(PreparedImage { image, masks })
}

fn extract_one(subject: &Subject, target: Spacing, cfg: &ExperimentConfig) -> Result<Vec<FeatureRow>, String> {
    let prepared = prepare(subject, target, cfg)?;
    let mut rows = Vec::new();
    for (variant, mask) in &prepared.masks {
        for spec in &cfg.binning_specs {
            // dynamic specs re-derive their edges from this mask variant
            let levels = quantize(&prepared.image, mask, spec).map_err(|e| e.to_string())?;
            let m = compute_ngldm(&levels, mask, cfg.ngldm).map_err(|e| e.to_string())?;
            let features = feature_vector::<f64>(&m).map_err(|e| e.to_string())?;
            let binning = spec.to_string();
            rows.extend(features.iter().map(|(name, value)| FeatureRow {
                image_id: subject.image_id.clone(),
                mask_variant: *variant,
                binning: binning.clone(),
                feature: name.to_string(),
                value,
            }));
        }
    }
    Ok(rows)
}

/// Extracts features for every subject. Images that fail (empty box,
/// vanished or saturated perturbation) are excluded, not fatal.
pub fn extract_features(subjects: &[Subject], cfg: &ExperimentConfig) -> Result<Extraction, PipelineError> {
    cfg.validate()?;
    if subjects.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let mut ids = std::collections::HashSet::new();
    if let Some(dup) = subjects.iter().find(|s| !ids.insert(s.image_id.as_str())) {
        return Err(PipelineError::DuplicateId(dup.image_id.clone()));
    }
    let target = resolve_spacing(subjects, cfg.target_spacing)?;
    let results: Vec<Result<Vec<FeatureRow>, String>> =
        subjects.par_iter().map(|s| extract_one(s, target, cfg)).collect();

    let mut table = FeatureTable::default();
    let mut included = Vec::new();
    let mut excluded = Vec::new();
    for (subject, result) in subjects.iter().zip(results) {
        match result {
            Ok(rows) => {
                table.rows.extend(rows);
                included.push(subject.image_id.clone());
            }
            Err(reason) => {
                log::warn!("excluding {}: {reason}", subject.image_id);
                excluded.push(Exclusion {
                    image_id: subject.image_id.clone(),
                    reason,
                });
            }
        }
    }
    if included.is_empty() {
        return Err(PipelineError::AllImagesExcluded(excluded.len()));
    }
    Ok(Extraction {
        table,
        target_spacing: target,
        included,
        excluded,
    })
}

/// True when every pixel of `perturbed` inside `original` keeps its level.
pub fn surviving_levels_stable(
    image: &Image2D<f64>,
    original: &Mask2D,
    perturbed: &Mask2D,
    spec: &crate::quantize::BinningSpec,
) -> Result<bool, PipelineError> {
    let both = original
        .intersection(perturbed)
        .ok_or_else(|| PipelineError::Config("mask shapes differ".into()))?;
    let a = quantize(image, original, spec).map_err(|e| PipelineError::Config(e.to_string()))?;
    let b = quantize(image, perturbed, spec).map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(both
        .bits()
        .iter()
        .enumerate()
        .all(|(i, &k)| !k || a.levels()[i] == b.levels()[i]))
}
