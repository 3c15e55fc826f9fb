//! Image file formats: 8/16-bit grayscale PNG and a raw float32 format.
//!
//! The raw format is an ASCII header line
//! `P_RAWF32 <width> <height> <spacing_x> <spacing_y>\n` followed by
//! `width * height` little-endian `f32` values in row-major order.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use image::{ImageBuffer, Luma};
use thiserror::Error;

use crate::imagecore::{Image2D, ImageError, Spacing};
use crate::num::Real;

pub const RAW_MAGIC: &str = "P_RAWF32";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: malformed raw header: {reason}")]
    BadHeader { path: String, reason: String },
    #[error("{path}: unsupported image ({0})", .reason)]
    Unsupported { path: String, reason: String },
    #[error("{path}: {source}")]
    Decode { path: String, source: image::ImageError },
    #[error("{path}: {source}")]
    Image { path: String, source: ImageError },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_raw<T: Real>(img: &Image2D<T>, path: &Path) -> Result<(), IoError> {
    let mut buf = Vec::with_capacity(64 + 4 * img.pixels().len());
    let s = img.spacing();
    writeln!(buf, "{RAW_MAGIC} {} {} {} {}", img.width(), img.height(), s.x, s.y).expect("write to Vec");
    for p in img.pixels() {
        buf.extend_from_slice(&p.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    }
    fs::write(path, buf).map_err(io_err(path))
}

pub fn read_raw<T: Real>(path: &Path) -> Result<Image2D<T>, IoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header).map_err(io_err(path))?;
    let bad = |reason: &str| IoError::BadHeader {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let header = std::str::from_utf8(&header).map_err(|_| bad("header is not ASCII"))?;
    if !header.ends_with('\n') {
        return Err(bad("missing newline after header"));
    }
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [magic, w, h, sx, sy] = fields.as_slice() else {
        return Err(bad("expected 5 header fields"));
    };
    if *magic != RAW_MAGIC {
        return Err(bad("wrong magic"));
    }
    let w: usize = w.parse().map_err(|_| bad("width"))?;
    let h: usize = h.parse().map_err(|_| bad("height"))?;
    let sx: f64 = sx.parse().map_err(|_| bad("spacing_x"))?;
    let sy: f64 = sy.parse().map_err(|_| bad("spacing_y"))?;
    let n = w.checked_mul(h).ok_or_else(|| bad("dimensions overflow"))?;

    let mut payload = Vec::new();
    reader.read_to_end(&mut payload).map_err(io_err(path))?;
    if payload.len() != 4 * n {
        return Err(bad(&format!("payload holds {} bytes, expected {}", payload.len(), 4 * n)));
    }
    let pixels = payload
        .chunks_exact(4)
        .map(|c| T::from_f32(f32::from_le_bytes([c[0], c[1], c[2], c[3]])).unwrap_or_else(T::nan))
        .collect();
    let image_err = |source| IoError::Image {
        path: path.display().to_string(),
        source,
    };
    let spacing = Spacing::new(sx, sy).map_err(image_err)?;
    Image2D::new(w, h, spacing, pixels).map_err(image_err)
}

/// Reads an 8- or 16-bit single-channel PNG; pixel values are the stored
/// code values. PNG carries no spacing, so the caller supplies it.
pub fn read_png<T: Real>(path: &Path, spacing: Spacing) -> Result<Image2D<T>, IoError> {
    let decoded = image::open(path).map_err(|source| IoError::Decode {
        path: path.display().to_string(),
        source,
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<T> = match decoded {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| T::from_u8(v).unwrap()).collect(),
        image::DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|v| T::from_u16(v).unwrap()).collect(),
        other => {
            return Err(IoError::Unsupported {
                path: path.display().to_string(),
                reason: format!("{:?} is not single-channel 8/16-bit", other.color()),
            })
        }
    };
    Image2D::new(w, h, spacing, pixels).map_err(|source| IoError::Image {
        path: path.display().to_string(),
        source,
    })
}

fn encode_err(path: &Path) -> impl FnOnce(image::ImageError) -> IoError + '_ {
    move |source| IoError::Decode {
        path: path.display().to_string(),
        source,
    }
}

/// Writes pixel values rounded and clamped to `0..=255`.
pub fn write_png8<T: Real>(img: &Image2D<T>, path: &Path) -> Result<(), IoError> {
    let raw: Vec<u8> = img
        .pixels()
        .iter()
        .map(|p| p.as_f64().round().clamp(0.0, 255.0) as u8)
        .collect();
    ImageBuffer::<Luma<u8>, _>::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer sized to image")
        .save(path)
        .map_err(encode_err(path))
}

/// Writes pixel values rounded and clamped to `0..=65535`.
pub fn write_png16<T: Real>(img: &Image2D<T>, path: &Path) -> Result<(), IoError> {
    let raw: Vec<u16> = img
        .pixels()
        .iter()
        .map(|p| p.as_f64().round().clamp(0.0, 65535.0) as u16)
        .collect();
    ImageBuffer::<Luma<u16>, _>::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer sized to image")
        .save(path)
        .map_err(encode_err(path))
}

/// Dispatches on extension: `.png` or anything else as raw float32.
pub fn read_image<T: Real>(path: &Path, spacing: Spacing) -> Result<Image2D<T>, IoError> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        read_png(path, spacing)
    } else {
        // the manifest spacing wins over the header
        let img: Image2D<T> = read_raw(path)?;
        Image2D::new(img.width(), img.height(), spacing, img.into_pixels()).map_err(|source| IoError::Image {
            path: path.display().to_string(),
            source,
        })
    }
}
