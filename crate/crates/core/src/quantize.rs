//! Gray-level discretization under dynamic (per-ROI) and static binning.
//!
//! Levels are 1-based; level 0 marks pixels outside the region of interest
//! and is never read downstream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{Image2D, Mask2D};
use crate::num::Real;

pub const DEFAULT_BIN_COUNT: u32 = 32;
pub const DEFAULT_BIN_WIDTH: f64 = 25.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error("region of interest is empty")]
    EmptyRoi,
    #[error("mask is {mask_w}x{mask_h} but image is {img_w}x{img_h}")]
    ShapeMismatch {
        img_w: usize,
        img_h: usize,
        mask_w: usize,
        mask_h: usize,
    },
    #[error("invalid binning spec: {0}")]
    InvalidSpec(String),
}

/// Gray-level discretization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinningSpec {
    /// `n_bins` equal bins spanning the ROI's own intensity range.
    Dynamic { n_bins: u32 },
    /// `n_bins` equal bins over a fixed `[lo, hi]`; out-of-range values clamp.
    StaticRange { n_bins: u32, lo: f64, hi: f64 },
    /// Fixed-width bins anchored at `origin`.
    StaticWidth { width: f64, origin: f64 },
}

impl BinningSpec {
    pub fn validate(&self) -> Result<(), QuantizeError> {
        let bad = |msg: String| Err(QuantizeError::InvalidSpec(msg));
        match *self {
            BinningSpec::Dynamic { n_bins: 0 } => bad("n_bins must be >= 1".into()),
            BinningSpec::StaticRange { n_bins: 0, .. } => bad("n_bins must be >= 1".into()),
            BinningSpec::StaticRange { lo, hi, .. } if !(lo.is_finite() && hi.is_finite() && hi > lo) => {
                bad(format!("range must satisfy hi > lo, got [{lo}, {hi}]"))
            }
            BinningSpec::StaticWidth { width, origin } if !(width.is_finite() && width > 0.0 && origin.is_finite()) => {
                bad(format!("bin width must be positive, got {width}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, BinningSpec::Dynamic { .. })
    }
}

impl fmt::Display for BinningSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinningSpec::Dynamic { n_bins } => write!(f, "dynamic:{n_bins}"),
            BinningSpec::StaticRange { n_bins, lo, hi } => write!(f, "static:{lo},{hi},{n_bins}"),
            BinningSpec::StaticWidth { width, origin } => write!(f, "static-width:{width},{origin}"),
        }
    }
}

impl FromStr for BinningSpec {
    type Err = QuantizeError;

    /// Parses `dynamic:N`, `static:LO,HI,N` or `static-width:W[,ORIGIN]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = |why: &str| QuantizeError::InvalidSpec(format!("{s:?}: {why}"));
        let (kind, args) = s.trim().split_once(':').ok_or_else(|| invalid("missing ':'"))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let real = |a: &str| a.parse::<f64>().map_err(|_| invalid("expected a number"));
        let count = |a: &str| a.parse::<u32>().map_err(|_| invalid("expected a bin count"));
        let spec = match (kind.trim(), args.as_slice()) {
            ("dynamic", [n]) => BinningSpec::Dynamic { n_bins: count(n)? },
            ("static", [lo, hi, n]) => BinningSpec::StaticRange {
                n_bins: count(n)?,
                lo: real(lo)?,
                hi: real(hi)?,
            },
            ("static-width", [w]) => BinningSpec::StaticWidth {
                width: real(w)?,
                origin: 0.0,
            },
            ("static-width", [w, o]) => BinningSpec::StaticWidth {
                width: real(w)?,
                origin: real(o)?,
            },
            ("dynamic" | "static" | "static-width", _) => return Err(invalid("wrong number of arguments")),
            _ => return Err(invalid("unknown binning kind")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Quantized gray levels; 0 outside the ROI, `1..=n_levels` inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelImage {
    width: usize,
    height: usize,
    levels: Vec<u32>,
    n_levels: u32,
}

impl LevelImage {
    /// Builds a level image directly; `levels` is row-major.
    pub fn new(width: usize, height: usize, levels: Vec<u32>, n_levels: u32) -> Result<Self, QuantizeError> {
        if width * height != levels.len() || width == 0 || height == 0 {
            return Err(QuantizeError::InvalidSpec(format!(
                "level buffer of {} values does not fit {width}x{height}",
                levels.len()
            )));
        }
        if n_levels == 0 {
            return Err(QuantizeError::InvalidSpec("n_levels must be >= 1".into()));
        }
        Ok(LevelImage {
            width,
            height,
            levels,
            n_levels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_levels(&self) -> u32 {
        self.n_levels
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.levels[y * self.width + x]
    }
}

/// `min(n, floor((x - lo) * n / (hi - lo)) + 1)`, clamped below at 1.
#[inline]
fn equal_bin<T: Real>(x: T, lo: T, hi: T, n: u32) -> u32 {
    let nf = T::from_u32(n).expect("bin count fits scalar");
    let pos = ((x - lo) * nf / (hi - lo)).floor();
    if pos < T::zero() {
        1
    } else {
        pos.to_u32().map_or(n, |p| p.saturating_add(1).min(n))
    }
}

#[inline]
fn width_bin<T: Real>(x: T, width: T, origin: T) -> u32 {
    let pos = ((x - origin) / width).floor();
    if pos < T::zero() {
        1
    } else {
        pos.to_u32().map_or(u32::MAX, |p| p.saturating_add(1))
    }
}

/// Discretizes the ROI of `img` according to `spec`.
pub fn quantize<T: Real>(img: &Image2D<T>, roi: &Mask2D, spec: &BinningSpec) -> Result<LevelImage, QuantizeError> {
    spec.validate()?;
    if !roi.same_shape(img) {
        return Err(QuantizeError::ShapeMismatch {
            img_w: img.width(),
            img_h: img.height(),
            mask_w: roi.width(),
            mask_h: roi.height(),
        });
    }
    let inside = || {
        img.pixels()
            .iter()
            .zip(roi.bits())
            .filter_map(|(&p, &m)| m.then_some(p))
    };
    let (min, max) = inside().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| (lo.min(p), hi.max(p)));
    if min > max {
        return Err(QuantizeError::EmptyRoi);
    }

    let assign = |f: &dyn Fn(T) -> u32| -> Vec<u32> {
        img.pixels()
            .iter()
            .zip(roi.bits())
            .map(|(&p, &m)| if m { f(p) } else { 0 })
            .collect()
    };
    let (levels, n_levels) = match *spec {
        BinningSpec::Dynamic { n_bins } => {
            if max == min {
                (assign(&|_| 1), 1)
            } else {
                (assign(&|p| equal_bin(p, min, max, n_bins)), n_bins)
            }
        }
        BinningSpec::StaticRange { n_bins, lo, hi } => {
            let (lo, hi) = (T::lit(lo), T::lit(hi));
            (assign(&|p| equal_bin(p, lo, hi, n_bins)), n_bins)
        }
        BinningSpec::StaticWidth { width, origin } => {
            let (width, origin) = (T::lit(width), T::lit(origin));
            let levels = assign(&|p| width_bin(p, width, origin));
            let top = levels.iter().copied().max().unwrap_or(1).max(1);
            (levels, top)
        }
    };
    LevelImage::new(img.width(), img.height(), levels, n_levels)
}
