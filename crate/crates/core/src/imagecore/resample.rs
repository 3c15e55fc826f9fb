//! Grid resampling. Output pixel `k` has its center at `(k + 0.5) * spacing`
//! in physical space; positions outside the source grid clamp to the edge.

use serde::{Deserialize, Serialize};

use super::{Image2D, ImageError, Mask2D, Spacing};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Interpolating cubic B-spline (prefiltered coefficients).
    #[default]
    CubicBSpline,
    /// Bilinear, kept for cross-checking the spline path.
    Linear,
}

/// Output length along one axis: `round(n * source / target)`, at least 1.
fn output_len(n: usize, source: f64, target: f64) -> Option<usize> {
    let len = (n as f64 * source / target).round();
    if !len.is_finite() || len > (u32::MAX as f64) {
        return None;
    }
    Some((len as usize).max(1))
}

/// Source index coordinate of output sample `k`.
#[inline]
fn source_coord(k: usize, source: f64, target: f64) -> f64 {
    (k as f64 + 0.5) * target / source - 0.5
}

/// Solves for B-spline coefficients `c` such that
/// `(c[k-1] + 4 c[k] + c[k+1]) / 6 = f[k]` with edge-clamped `c`.
struct Prefilter<T> {
    // Thomas algorithm: modified super-diagonal and pivots.
    upper: Vec<T>,
    pivot: Vec<T>,
}

impl<T: Real> Prefilter<T> {
    fn new(n: usize) -> Self {
        let one = T::one();
        let four = T::lit(4.0);
        let five = T::lit(5.0);
        let mut upper = vec![T::zero(); n];
        let mut pivot = vec![T::zero(); n];
        if n == 1 {
            pivot[0] = T::lit(6.0);
            return Prefilter { upper, pivot };
        }
        let diag = |i: usize| if i == 0 || i == n - 1 { five } else { four };
        pivot[0] = diag(0);
        upper[0] = one / pivot[0];
        for i in 1..n {
            pivot[i] = diag(i) - upper[i - 1];
            upper[i] = one / pivot[i];
        }
        Prefilter { upper, pivot }
    }

    fn coefficients(&self, samples: &[T], out: &mut [T]) {
        let n = samples.len();
        let six = T::lit(6.0);
        // forward sweep: sub-diagonal and super-diagonal entries are 1
        out[0] = six * samples[0] / self.pivot[0];
        for i in 1..n {
            out[i] = (six * samples[i] - out[i - 1]) / self.pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            out[i] = out[i] - self.upper[i] * out[i + 1];
        }
    }
}

#[inline]
fn cubic_bspline_weights<T: Real>(t: T) -> [T; 4] {
    let one = T::one();
    let sixth = T::lit(1.0 / 6.0);
    let t2 = t * t;
    let t3 = t2 * t;
    let s = one - t;
    [
        s * s * s * sixth,
        (T::lit(3.0) * t3 - T::lit(6.0) * t2 + T::lit(4.0)) * sixth,
        (T::lit(-3.0) * t3 + T::lit(3.0) * t2 + T::lit(3.0) * t + one) * sixth,
        t3 * sixth,
    ]
}

fn eval_spline<T: Real>(coeffs: &[T], u: f64) -> T {
    let n = coeffs.len() as i64;
    let u = u.clamp(0.0, (n - 1) as f64);
    let base = u.floor() as i64;
    let w = cubic_bspline_weights(T::lit(u - base as f64));
    let at = |i: i64| coeffs[i.clamp(0, n - 1) as usize];
    w[0] * at(base - 1) + w[1] * at(base) + w[2] * at(base + 1) + w[3] * at(base + 2)
}

fn eval_linear<T: Real>(samples: &[T], u: f64) -> T {
    let n = samples.len();
    let u = u.clamp(0.0, (n - 1) as f64);
    let base = (u.floor() as usize).min(n - 1);
    let t = T::lit(u - base as f64);
    let next = samples[(base + 1).min(n - 1)];
    samples[base] * (T::one() - t) + next * t
}

/// Resamples every line of `data` (lines of length `n`, `count` of them,
/// consecutive elements `stride` apart, lines `line_step` apart).
struct Lines {
    n: usize,
    count: usize,
    stride: usize,
    line_step: usize,
}

#[allow(clippy::too_many_arguments)]
fn resample_lines<T: Real>(
    data: &[T],
    lines: &Lines,
    new_n: usize,
    source: f64,
    target: f64,
    method: Interpolation,
    out_stride: usize,
    out_line_step: usize,
    out: &mut [T],
) {
    let prefilter = matches!(method, Interpolation::CubicBSpline).then(|| Prefilter::<T>::new(lines.n));
    let coords: Vec<f64> = (0..new_n).map(|k| source_coord(k, source, target)).collect();
    let mut line = vec![T::zero(); lines.n];
    let mut coeffs = vec![T::zero(); lines.n];
    for l in 0..lines.count {
        for (i, v) in line.iter_mut().enumerate() {
            *v = data[l * lines.line_step + i * lines.stride];
        }
        if let Some(pf) = &prefilter {
            pf.coefficients(&line, &mut coeffs);
        }
        for (k, &u) in coords.iter().enumerate() {
            out[l * out_line_step + k * out_stride] = match method {
                Interpolation::CubicBSpline => eval_spline(&coeffs, u),
                Interpolation::Linear => eval_linear(&line, u),
            };
        }
    }
}

/// Resamples `img` onto the grid with `target` spacing using the
/// interpolating cubic B-spline.
pub fn resample_image<T: Real>(img: &Image2D<T>, target: Spacing) -> Result<Image2D<T>, ImageError> {
    resample_image_with(img, target, Interpolation::CubicBSpline)
}

/// Separable resampling; an axis whose spacing already matches is copied
/// untouched.
pub fn resample_image_with<T: Real>(
    img: &Image2D<T>,
    target: Spacing,
    method: Interpolation,
) -> Result<Image2D<T>, ImageError> {
    let target = Spacing::new(target.x, target.y)?;
    let src = img.spacing();
    let degenerate = || ImageError::DegenerateTarget {
        x: target.x,
        y: target.y,
    };
    let new_w = output_len(img.width(), src.x, target.x).ok_or_else(degenerate)?;
    let new_h = output_len(img.height(), src.y, target.y).ok_or_else(degenerate)?;
    let (w, h) = (img.width(), img.height());

    let mut current = img.pixels().to_vec();
    let mut cur_w = w;
    if src.x != target.x {
        let mut out = vec![T::zero(); new_w * h];
        let lines = Lines {
            n: w,
            count: h,
            stride: 1,
            line_step: w,
        };
        resample_lines(&current, &lines, new_w, src.x, target.x, method, 1, new_w, &mut out);
        current = out;
        cur_w = new_w;
    }
    if src.y != target.y {
        let mut out = vec![T::zero(); cur_w * new_h];
        let lines = Lines {
            n: h,
            count: cur_w,
            stride: cur_w,
            line_step: 1,
        };
        resample_lines(&current, &lines, new_h, src.y, target.y, method, cur_w, 1, &mut out);
        current = out;
    }
    Image2D::new(new_w, new_h, target, current)
}

/// Nearest-neighbor resampling of a mask defined on a grid with `source`
/// spacing.
pub fn resample_mask(mask: &Mask2D, source: Spacing, target: Spacing) -> Result<Mask2D, ImageError> {
    let source = Spacing::new(source.x, source.y)?;
    let target = Spacing::new(target.x, target.y)?;
    let degenerate = || ImageError::DegenerateTarget {
        x: target.x,
        y: target.y,
    };
    let new_w = output_len(mask.width(), source.x, target.x).ok_or_else(degenerate)?;
    let new_h = output_len(mask.height(), source.y, target.y).ok_or_else(degenerate)?;
    let nearest = |k: usize, n: usize, s: f64, t: f64| -> usize {
        if s == t {
            return k.min(n - 1);
        }
        let u = source_coord(k, s, t);
        ((u + 0.5).floor().max(0.0) as usize).min(n - 1)
    };
    let xs: Vec<usize> = (0..new_w)
        .map(|k| nearest(k, mask.width(), source.x, target.x))
        .collect();
    let ys: Vec<usize> = (0..new_h)
        .map(|k| nearest(k, mask.height(), source.y, target.y))
        .collect();
    Mask2D::from_fn(new_w, new_h, |x, y| mask.get(xs[x], ys[y]))
}
