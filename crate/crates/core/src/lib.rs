//! Radiomics robustness toolkit: NGLDM texture features under dynamic and
//! static gray-level binning, area-targeted mask perturbation, and agreement
//! metrics between original and perturbed extractions.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiations.

pub mod imagecore;
pub mod io;
pub mod morphology;
pub mod ngldm;
pub mod num;
pub mod phantom;
pub mod pipeline;
pub mod quantize;
pub mod similarity;

pub use imagecore::{bbox_to_mask, median_spacing, normalize_minmax, resample_image, resample_mask, BBox, Mask2D, Spacing};
pub use morphology::{dilate, erode, perturb_to_area, PerturbResult, StructuringElement};
pub use ngldm::{compute_ngldm, feature_vector, lde, ldlgle, Ngldm, NgldmParams, FEATURE_NAMES};
pub use num::Real;
pub use quantize::{quantize, BinningSpec, LevelImage};
pub use similarity::{lins_ccc, pearson, spearman, summarize};

pub type Image = imagecore::Image2D<f64>;
pub type Image32 = imagecore::Image2D<f32>;
pub type Sample = similarity::PairedSample<f64>;
pub type Sample32 = similarity::PairedSample<f32>;
pub type Summary = similarity::MetricSummary<f64>;
pub type Features = ngldm::FeatureVector<f64>;
