//! Deterministic synthetic corpus: band-limited noise textures with a
//! rectangular annotation, optionally with a bright rim just inside the box.
//!
//! Every image draws from its own ChaCha8 stream `(seed, index)`, so the
//! corpus is reproducible and images can be generated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{BBox, Image2D, Spacing};
use crate::morphology::erosion_depth_for_ratio;

/// Upper bound of emitted intensities.
pub const MAX_INTENSITY: f64 = 1023.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhantomError {
    #[error("invalid phantom config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Texture {
    /// White noise smoothed by a Gaussian of `correlation_length` pixels.
    SmoothNoise { correlation_length: f64 },
    /// Smooth noise posterized into `classes` tissue intensities (0 keeps
    /// it continuous), whose outer `rim_width` pixels inside the box are
    /// multiplied by `rim_gain`, putting the ROI maximum in the rim.
    BrightRim {
        correlation_length: f64,
        rim_width: usize,
        rim_gain: f64,
        classes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomConfig {
    pub seed: u64,
    pub n_images: usize,
    pub image_size: usize,
    pub bbox_size: usize,
    pub texture: Texture,
    pub base_spacing: Spacing,
}

impl PhantomConfig {
    /// The bright-rim corpus used for the binning comparison: 100 images of
    /// 256x256 with a 128x128 box.
    pub fn bright_rim(seed: u64) -> Self {
        PhantomConfig {
            seed,
            n_images: 100,
            image_size: 256,
            bbox_size: 128,
            texture: Texture::BrightRim {
                correlation_length: 2.0,
                rim_width: 3,
                rim_gain: 2.0,
                classes: 5,
            },
            base_spacing: Spacing { x: 0.07, y: 0.07 },
        }
    }

    pub fn smooth_noise(seed: u64) -> Self {
        PhantomConfig {
            texture: Texture::SmoothNoise { correlation_length: 2.0 },
            ..Self::bright_rim(seed)
        }
    }

    /// Free pixels kept around the box so that dilation has room to grow.
    fn margin(&self) -> usize {
        self.bbox_size / 8 + 2
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: String| Err(PhantomError::InvalidConfig(m));
        if self.n_images == 0 {
            return bad("n_images must be >= 1".into());
        }
        if self.bbox_size < 3 || self.bbox_size >= self.image_size {
            return bad(format!(
                "bbox_size must be in 3..image_size, got {} with image_size {}",
                self.bbox_size, self.image_size
            ));
        }
        if self.bbox_size + 2 * self.margin() > self.image_size {
            return bad(format!("image_size {} leaves no margin around the box", self.image_size));
        }
        if Spacing::new(self.base_spacing.x, self.base_spacing.y).is_err() {
            return bad("base_spacing must be positive".into());
        }
        let corr = match self.texture {
            Texture::SmoothNoise { correlation_length } => correlation_length,
            Texture::BrightRim {
                correlation_length,
                rim_width,
                rim_gain,
                classes,
            } => {
                if classes == 1 {
                    return bad("classes must be 0 (continuous) or >= 2".into());
                }
                if !(rim_gain.is_finite() && rim_gain > 1.0) {
                    return bad(format!("rim_gain must be > 1, got {rim_gain}"));
                }
                let depth = erosion_depth_for_ratio(self.bbox_size, 0.8).unwrap_or(0);
                if rim_width == 0 || rim_width > depth {
                    return bad(format!(
                        "rim_width must be in 1..={depth} so a 20% erosion removes the rim, got {rim_width}"
                    ));
                }
                correlation_length
            }
        };
        if !(corr.is_finite() && corr > 0.0) {
            return bad(format!("correlation_length must be positive, got {corr}"));
        }
        Ok(())
    }
}

/// One generated image with its annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomImage {
    pub image_id: String,
    pub image: Image2D<f64>,
    pub bbox: BBox,
}

pub fn generate_corpus(cfg: &PhantomConfig) -> Result<Vec<PhantomImage>, PhantomError> {
    cfg.validate()?;
    Ok((0..cfg.n_images)
        .into_par_iter()
        .map(|i| generate_one(cfg, i))
        .collect())
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable convolution with edge clamping.
fn blur(data: &[f64], n: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let clamp = |v: i64| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            tmp[y * n + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * data[y * n + clamp(x as i64 + k as i64 - r)])
                .sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            out[y * n + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp(y as i64 + k as i64 - r) * n + x])
                .sum();
        }
    }
    out
}

fn rescale_unit(values: &mut [f64]) {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    for v in values.iter_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

fn generate_one(cfg: &PhantomConfig, index: usize) -> PhantomImage {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let n = cfg.image_size;

    let corr = match cfg.texture {
        Texture::SmoothNoise { correlation_length } | Texture::BrightRim { correlation_length, .. } => {
            correlation_length
        }
    };
    // texture scale varies per image so features spread across the corpus
    let sigma = corr * rng.gen_range(0.4..2.0);
    let noise: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
    let mut texture = blur(&noise, n, &gaussian_kernel(sigma));
    rescale_unit(&mut texture);

    let m = cfg.margin();
    let span = n - cfg.bbox_size - 2 * m;
    let x0 = m + rng.gen_range(0..=span);
    let y0 = m + rng.gen_range(0..=span);
    let bbox = BBox::new(x0 as i64, y0 as i64, cfg.bbox_size, cfg.bbox_size);

    let pixels = match cfg.texture {
        Texture::SmoothNoise { .. } => {
            let lo: f64 = rng.gen_range(50.0..400.0);
            let hi = (lo + rng.gen_range(200.0..600.0)).min(MAX_INTENSITY);
            texture.iter().map(|t| lo + t * (hi - lo)).collect()
        }
        Texture::BrightRim {
            rim_width,
            rim_gain,
            classes,
            ..
        } => {
            if classes >= 2 {
                let k = classes as f64;
                for t in texture.iter_mut() {
                    *t = (*t * k).floor().min(k - 1.0) / (k - 1.0);
                }
            }
            // hi / lo < gain keeps every rim pixel above every other pixel,
            // gain * hi <= MAX_INTENSITY keeps the rim in range
            let ratio = 1.0 + (rim_gain - 1.0) * rng.gen_range(0.3..0.8);
            let lo = MAX_INTENSITY / (rim_gain * ratio) * rng.gen_range(0.5..1.0);
            let hi = lo * ratio;
            let (x1, y1) = (x0 + cfg.bbox_size, y0 + cfg.bbox_size);
            let in_rim = |x: usize, y: usize| {
                (x0..x1).contains(&x)
                    && (y0..y1).contains(&y)
                    && [x - x0, x1 - 1 - x, y - y0, y1 - 1 - y].into_iter().min().unwrap() < rim_width
            };
            texture
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let v = lo + t * (hi - lo);
                    if in_rim(k % n, k / n) {
                        v * rim_gain
                    } else {
                        v
                    }
                })
                .collect()
        }
    };
    let image = Image2D::new(n, n, cfg.base_spacing, pixels).expect("finite phantom pixels");
    PhantomImage {
        image_id: format!("phantom_{index:04}"),
        image,
        bbox,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::bbox_to_mask;
    use crate::morphology::perturb_to_area;

    fn small(texture: Texture) -> PhantomConfig {
        PhantomConfig {
            seed: 11,
            n_images: 5,
            image_size: 64,
            bbox_size: 24,
            texture,
            base_spacing: Spacing { x: 0.1, y: 0.1 },
        }
    }

    fn rim() -> Texture {
        Texture::BrightRim {
            correlation_length: 1.5,
            rim_width: 1,
            rim_gain: 2.0,
            classes: 0,
        }
    }

    #[test]
    fn deterministic_and_counted() {
        let cfg = small(rim());
        let a = generate_corpus(&cfg).unwrap();
        let b = generate_corpus(&cfg).unwrap();
        assert_eq!(a.len(), 5);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.bbox, q.bbox);
            let bits = |img: &Image2D<f64>| img.pixels().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&p.image), bits(&q.image));
        }
        let other = generate_corpus(&PhantomConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a[0].image, other[0].image);
    }

    #[test]
    fn intensities_in_range() {
        for texture in [rim(), Texture::SmoothNoise { correlation_length: 2.0 }] {
            for p in generate_corpus(&small(texture)).unwrap() {
                let (lo, hi) = p.image.min_max();
                assert!(lo >= 0.0 && hi <= MAX_INTENSITY, "{lo} {hi}");
            }
        }
    }

    #[test]
    fn rim_holds_roi_maximum() {
        let cfg = small(Texture::BrightRim {
            correlation_length: 1.5,
            rim_width: 1,
            rim_gain: 2.0,
            classes: 4,
        });
        for p in generate_corpus(&cfg).unwrap() {
            let (x0, y0, b) = (p.bbox.x0 as usize, p.bbox.y0 as usize, p.bbox.bw);
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for y in y0..y0 + b {
                for x in x0..x0 + b {
                    if p.image.get(x, y) > best.0 {
                        best = (p.image.get(x, y), x, y);
                    }
                }
            }
            let (_, x, y) = best;
            let border = [x - x0, x0 + b - 1 - x, y - y0, y0 + b - 1 - y].into_iter().min().unwrap();
            assert!(border < 1, "argmax at ({x},{y}) is {border} px inside the border");

            let roi = bbox_to_mask(p.bbox, p.image.width(), p.image.height()).unwrap();
            let eroded = perturb_to_area(&roi, 0.8).unwrap().mask;
            let max_over = |m: &crate::imagecore::Mask2D| {
                p.image
                    .pixels()
                    .iter()
                    .zip(m.bits())
                    .filter(|(_, &b)| b)
                    .fold(f64::NEG_INFINITY, |a, (&v, _)| a.max(v))
            };
            assert!(max_over(&eroded) < max_over(&roi));
        }
    }

    #[test]
    fn invalid_configs() {
        let base = small(rim());
        let cases = [
            PhantomConfig { n_images: 0, ..base },
            PhantomConfig { bbox_size: 64, ..base },
            PhantomConfig {
                texture: Texture::BrightRim {
                    correlation_length: 1.0,
                    rim_width: 0,
                    rim_gain: 2.0,
                    classes: 0,
                },
                ..base
            },
            PhantomConfig {
                texture: Texture::BrightRim {
                    correlation_length: 1.0,
                    rim_width: 1,
                    rim_gain: 1.0,
                    classes: 0,
                },
                ..base
            },
            PhantomConfig {
                texture: Texture::BrightRim {
                    correlation_length: 1.0,
                    rim_width: 5,
                    rim_gain: 2.0,
                    classes: 0,
                },
                ..base
            },
            PhantomConfig {
                texture: Texture::BrightRim {
                    correlation_length: 1.0,
                    rim_width: 1,
                    rim_gain: 2.0,
                    classes: 1,
                },
                ..base
            },
            PhantomConfig {
                texture: Texture::SmoothNoise { correlation_length: 0.0 },
                ..base
            },
        ];
        for cfg in cases {
            assert!(matches!(generate_corpus(&cfg), Err(PhantomError::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn kernel_normalized() {
        let k = gaussian_kernel(1.7);
        assert_eq!(k.len(), 2 * 6 + 1);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
