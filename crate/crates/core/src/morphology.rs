//! Binary erosion/dilation and area-targeted mask perturbation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::Mask2D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphologyError {
    #[error("structuring element side must be odd and >= 3, got {0}")]
    InvalidElement(usize),
    #[error("target area ratio must be positive, finite and != 1, got {0}")]
    InvalidRatio(f64),
    #[error("mask is empty")]
    EmptyMask,
    #[error("erosion emptied the mask after {iterations} iterations before reaching the target area")]
    VanishedMask { iterations: usize },
    #[error("dilation filled the image after {iterations} iterations before reaching the target area")]
    SaturatedMask { iterations: usize },
}

/// Square footprint centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    side: usize,
}

impl Default for StructuringElement {
    fn default() -> Self {
        StructuringElement { side: 3 }
    }
}

impl StructuringElement {
    pub fn square(side: usize) -> Result<Self, MorphologyError> {
        if side < 3 || side.is_multiple_of(2) {
            return Err(MorphologyError::InvalidElement(side));
        }
        Ok(StructuringElement { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    fn radius(&self) -> usize {
        self.side / 2
    }
}

/// Per-row running test over a `2r+1` window along x, then along y. A square
/// footprint is separable, so `all` (erosion) and `any` (dilation) decompose.
fn separable(mask: &Mask2D, r: usize, erode: bool) -> Mask2D {
    let (w, h) = (mask.width(), mask.height());
    let pass = |src: &[bool], w: usize, h: usize, horizontal: bool| -> Vec<bool> {
        let mut out = vec![false; w * h];
        let (len, lines) = if horizontal { (w, h) } else { (h, w) };
        let idx = |line: usize, k: usize| if horizontal { line * w + k } else { k * w + line };
        for line in 0..lines {
            // prefix count of set pixels along the line
            let mut prefix = vec![0usize; len + 1];
            for k in 0..len {
                prefix[k + 1] = prefix[k] + src[idx(line, k)] as usize;
            }
            for k in 0..len {
                let lo = k.saturating_sub(r);
                let hi = (k + r).min(len - 1);
                let set = prefix[hi + 1] - prefix[lo];
                out[idx(line, k)] = if erode {
                    // out-of-image counts as unset
                    k >= r && k + r < len && set == 2 * r + 1
                } else {
                    set > 0
                };
            }
        }
        out
    };
    let horizontal = pass(mask.bits(), w, h, true);
    let bits = pass(&horizontal, w, h, false);
    Mask2D::new(w, h, bits).expect("shape preserved")
}

/// Binary erosion; pixels outside the image count as unset, so borders erode.
pub fn erode(mask: &Mask2D, se: StructuringElement) -> Mask2D {
    separable(mask, se.radius(), true)
}

/// Binary dilation clipped to the image extent.
pub fn dilate(mask: &Mask2D, se: StructuringElement) -> Mask2D {
    separable(mask, se.radius(), false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbResult {
    pub mask: Mask2D,
    pub iterations: usize,
    /// Area after / area before.
    pub achieved_ratio: f64,
}

/// Erodes (ratio < 1) or dilates (ratio > 1) until the area first crosses
/// `target_ratio * original_area`, using the default 3x3 element.
pub fn perturb_to_area(mask: &Mask2D, target_ratio: f64) -> Result<PerturbResult, MorphologyError> {
    perturb_to_area_with(mask, target_ratio, StructuringElement::default())
}

pub fn perturb_to_area_with(
    mask: &Mask2D,
    target_ratio: f64,
    se: StructuringElement,
) -> Result<PerturbResult, MorphologyError> {
    if !(target_ratio.is_finite() && target_ratio > 0.0 && target_ratio != 1.0) {
        return Err(MorphologyError::InvalidRatio(target_ratio));
    }
    let original = mask.area();
    if original == 0 {
        return Err(MorphologyError::EmptyMask);
    }
    let threshold = target_ratio * original as f64;
    let shrink = target_ratio < 1.0;
    let mut current = mask.clone();
    let mut iterations = 0;
    loop {
        let next = if shrink { erode(&current, se) } else { dilate(&current, se) };
        iterations += 1;
        let area = next.area();
        if shrink && area == 0 {
            return Err(MorphologyError::VanishedMask { iterations });
        }
        let crossed = if shrink {
            area as f64 <= threshold
        } else {
            area as f64 >= threshold
        };
        if crossed {
            return Ok(PerturbResult {
                achieved_ratio: area as f64 / original as f64,
                mask: next,
                iterations,
            });
        }
        if !shrink && (next.is_full() || next == current) {
            return Err(MorphologyError::SaturatedMask { iterations });
        }
        current = next;
    }
}

/// Number of 3x3 erosions a `side`x`side` square needs before its area first
/// drops to `ratio` of the original, or `None` if it vanishes first.
pub fn erosion_depth_for_ratio(side: usize, ratio: f64) -> Option<usize> {
    let target = ratio * (side * side) as f64;
    (1..).take_while(|k| 2 * k < side).find(|k| {
        let s = side - 2 * k;
        (s * s) as f64 <= target
    })
}
