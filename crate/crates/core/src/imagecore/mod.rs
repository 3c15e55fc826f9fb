//! Raster types, bounding-box masks, spatial resampling and intensity
//! normalization.

mod resample;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

pub use resample::{resample_image, resample_image_with, resample_mask, Interpolation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer holds {got} values, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("pixel spacing must be finite and positive, got ({x}, {y})")]
    InvalidSpacing { x: f64, y: f64 },
    #[error("pixel at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("bounding box lies entirely outside the {width}x{height} image")]
    EmptyRegion { width: usize, height: usize },
    #[error("bounding box must be at least 1x1, got {bw}x{bh}")]
    EmptyBox { bw: usize, bh: usize },
    #[error("resampling to spacing ({x}, {y}) yields a degenerate grid")]
    DegenerateTarget { x: f64, y: f64 },
    #[error("normalization range must satisfy hi > lo, got [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("cannot take the median of an empty list of spacings")]
    EmptyCorpus,
}

/// Physical pixel size in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub x: f64,
    pub y: f64,
}

impl Spacing {
    pub fn new(x: f64, y: f64) -> Result<Self, ImageError> {
        if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
            return Err(ImageError::InvalidSpacing { x, y });
        }
        Ok(Spacing { x, y })
    }

    pub fn isotropic(s: f64) -> Result<Self, ImageError> {
        Self::new(s, s)
    }
}

/// Single-channel raster with row-major pixels and physical spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D<T> {
    width: usize,
    height: usize,
    spacing: Spacing,
    pixels: Vec<T>,
}

impl<T: Real> Image2D<T> {
    pub fn new(
        width: usize,
        height: usize,
        spacing: Spacing,
        pixels: Vec<T>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        let spacing = Spacing::new(spacing.x, spacing.y)?;
        if pixels.len() != width * height {
            return Err(ImageError::BufferSize {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if let Some(index) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(ImageError::NonFinite { index });
        }
        Ok(Image2D {
            width,
            height,
            spacing,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, spacing: Spacing, value: T) -> Result<Self, ImageError> {
        Self::new(width, height, spacing, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        spacing: Spacing,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, spacing, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    /// Smallest and largest pixel values.
    pub fn min_max(&self) -> (T, T) {
        self.pixels
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            })
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Image2D<U> {
        Image2D {
            width: self.width,
            height: self.height,
            spacing: self.spacing,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }
}

/// Binary region of interest, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask2D {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask2D {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if bits.len() != width * height {
            return Err(ImageError::BufferSize {
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(Mask2D {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, ImageError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn full(width: usize, height: usize) -> Result<Self, ImageError> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, ImageError> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Number of set pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn same_shape<T>(&self, img: &Image2D<T>) -> bool {
        self.width == img.width && self.height == img.height
    }

    /// Pixel-wise AND of two masks of equal shape.
    pub fn intersection(&self, other: &Mask2D) -> Option<Mask2D> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        Some(Mask2D {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn complement(&self) -> Mask2D {
        Mask2D {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask2D) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

/// Rectangular annotation in pixel coordinates. The origin may lie outside
/// the image; the box is clamped when rasterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: i64,
    pub y0: i64,
    pub bw: usize,
    pub bh: usize,
}

impl BBox {
    pub fn new(x0: i64, y0: i64, bw: usize, bh: usize) -> Self {
        BBox { x0, y0, bw, bh }
    }
}

/// Rasterizes the intersection of `bbox` with a `width`x`height` extent.
pub fn bbox_to_mask(bbox: BBox, width: usize, height: usize) -> Result<Mask2D, ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::EmptyDimensions { width, height });
    }
    if bbox.bw == 0 || bbox.bh == 0 {
        return Err(ImageError::EmptyBox {
            bw: bbox.bw,
            bh: bbox.bh,
        });
    }
    let clamp_span = |start: i64, len: usize, extent: usize| -> Option<(usize, usize)> {
        let end = start.saturating_add(len as i64).min(extent as i64);
        let start = start.max(0);
        (start < end).then_some((start as usize, end as usize))
    };
    let ((xa, xb), (ya, yb)) = match (
        clamp_span(bbox.x0, bbox.bw, width),
        clamp_span(bbox.y0, bbox.bh, height),
    ) {
        (Some(xs), Some(ys)) => (xs, ys),
        _ => return Err(ImageError::EmptyRegion { width, height }),
    };
    Mask2D::from_fn(width, height, |x, y| (xa..xb).contains(&x) && (ya..yb).contains(&y))
}

/// Affine map of the image's `[min, max]` onto `[lo, hi]`. Constant images
/// map to `lo`.
pub fn normalize_minmax<T: Real>(img: &Image2D<T>, lo: T, hi: T) -> Result<Image2D<T>, ImageError> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(ImageError::InvalidRange {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let (min, max) = img.min_max();
    if max <= min {
        return Ok(img.map(|_| lo));
    }
    let range = max - min;
    let out_range = hi - lo;
    Ok(img.map(|p| {
        if p == max {
            hi
        } else {
            lo + (p - min) / range * out_range
        }
    }))
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Component-wise median of pixel spacings.
pub fn median_spacing(spacings: &[Spacing]) -> Result<Spacing, ImageError> {
    if spacings.is_empty() {
        return Err(ImageError::EmptyCorpus);
    }
    let mut xs: Vec<f64> = spacings.iter().map(|s| s.x).collect();
    let mut ys: Vec<f64> = spacings.iter().map(|s| s.y).collect();
    Spacing::new(median_of(&mut xs), median_of(&mut ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Spacing {
        Spacing::isotropic(1.0).unwrap()
    }

    #[test]
    fn image_invariants_enforced() {
        assert!(matches!(
            Image2D::<f64>::new(0, 3, unit(), vec![]),
            Err(ImageError::EmptyDimensions { .. })
        ));
        assert!(matches!(
            Image2D::new(2, 2, unit(), vec![0.0f64; 3]),
            Err(ImageError::BufferSize { expected: 4, got: 3 })
        ));
        assert!(matches!(
            Image2D::new(1, 1, unit(), vec![f64::NAN]),
            Err(ImageError::NonFinite { index: 0 })
        ));
        assert!(Spacing::new(0.0, 1.0).is_err());
    }

    #[test]
    fn bbox_full_image() {
        assert_eq!(bbox_to_mask(BBox::new(0, 0, 4, 4), 4, 4).unwrap().area(), 16);
    }

    #[test]
    fn bbox_interior() {
        let m = bbox_to_mask(BBox::new(1, 1, 2, 2), 4, 4).unwrap();
        assert_eq!(m.area(), 4);
        assert!(m.get(1, 1) && m.get(2, 2) && !m.get(0, 0) && !m.get(3, 3));
    }

    #[test]
    fn bbox_clamped_to_extent() {
        let m = bbox_to_mask(BBox::new(3, 3, 4, 4), 4, 4).unwrap();
        assert_eq!(m.area(), 1);
        assert!(m.get(3, 3));
        let m = bbox_to_mask(BBox::new(-2, 1, 4, 10), 4, 4).unwrap();
        assert_eq!(m.area(), 2 * 3);
    }

    #[test]
    fn bbox_outside_is_error() {
        assert!(matches!(
            bbox_to_mask(BBox::new(4, 0, 2, 2), 4, 4),
            Err(ImageError::EmptyRegion { .. })
        ));
        assert!(matches!(
            bbox_to_mask(BBox::new(-3, 0, 3, 2), 4, 4),
            Err(ImageError::EmptyRegion { .. })
        ));
    }

    #[test]
    fn normalize_midpoint() {
        let img = Image2D::new(3, 1, unit(), vec![0.0, 5.0, 10.0]).unwrap();
        let n = normalize_minmax(&img, 0.0, 255.0).unwrap();
        assert_eq!(n.pixels(), &[0.0, 127.5, 255.0]);
    }

    #[test]
    fn normalize_identity_on_full_range() {
        let img = Image2D::new(4, 1, unit(), vec![0.0, 17.0, 128.25, 255.0]).unwrap();
        let n = normalize_minmax(&img, 0.0, 255.0).unwrap();
        assert_eq!(n.pixels(), img.pixels());
    }

    #[test]
    fn normalize_constant_maps_to_lo() {
        let img = Image2D::filled(3, 2, unit(), 7.0f32).unwrap();
        let n = normalize_minmax(&img, 0.0, 255.0).unwrap();
        assert!(n.pixels().iter().all(|&p| p == 0.0));
        assert!(normalize_minmax(&img, 1.0, 1.0).is_err());
    }

    #[test]
    fn median_spacing_cases() {
        let s = |v: f64| Spacing::isotropic(v).unwrap();
        assert_eq!(median_spacing(&[s(0.07)]).unwrap(), s(0.07));
        assert_eq!(median_spacing(&[s(3.0), s(1.0), s(2.0)]).unwrap(), s(2.0));
        assert_eq!(median_spacing(&[s(1.0), s(2.0)]).unwrap(), s(1.5));
        assert_eq!(median_spacing(&[]), Err(ImageError::EmptyCorpus));
        let mixed = [Spacing::new(1.0, 4.0).unwrap(), Spacing::new(3.0, 2.0).unwrap()];
        assert_eq!(median_spacing(&mixed).unwrap(), Spacing::new(2.0, 3.0).unwrap());
    }
}
