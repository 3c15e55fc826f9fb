//! Neighboring gray-level dependence matrix and its feature family.
//!
//! `s(i, j)` counts ROI pixels of gray level `i` that have `j - 1` dependent
//! neighbors: ROI pixels within Chebyshev distance `distance` whose level
//! differs by at most `alpha`. Feature formulas follow the IBSI definitions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::Mask2D;
use crate::num::Real;
use crate::quantize::LevelImage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NgldmError {
    #[error("region of interest is empty")]
    EmptyRoi,
    #[error("matrix holds no counts")]
    EmptyMatrix,
    #[error("mask is {mask_w}x{mask_h} but level image is {img_w}x{img_h}")]
    ShapeMismatch {
        img_w: usize,
        img_h: usize,
        mask_w: usize,
        mask_h: usize,
    },
    #[error("level {level} at ({x}, {y}) is outside 1..={n_levels}")]
    LevelOutOfRange { x: usize, y: usize, level: u32, n_levels: u32 },
    #[error("invalid NGLDM parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgldmParams {
    /// Gray-level tolerance for dependence.
    pub alpha: u32,
    /// Chebyshev neighborhood radius.
    pub distance: u32,
}

impl Default for NgldmParams {
    fn default() -> Self {
        NgldmParams { alpha: 0, distance: 1 }
    }
}

impl NgldmParams {
    /// Number of dependence bins: the full `(2d+1)^2` neighborhood.
    pub fn max_dependence(&self) -> usize {
        let side = 2 * self.distance as usize + 1;
        side * side
    }
}

/// Dense `n_levels x max_dependence` count matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ngldm {
    n_levels: usize,
    max_dependence: usize,
    counts: Vec<u64>,
    total: u64,
}

impl Ngldm {
    /// Builds a matrix from row-major counts (`counts[(i-1) * max_dependence + (j-1)]`).
    pub fn from_counts(n_levels: usize, max_dependence: usize, counts: Vec<u64>) -> Result<Self, NgldmError> {
        if n_levels == 0 || max_dependence == 0 || counts.len() != n_levels * max_dependence {
            return Err(NgldmError::InvalidParams(format!(
                "{} counts do not fit a {n_levels}x{max_dependence} matrix",
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(Ngldm {
            n_levels,
            max_dependence,
            counts,
            total,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn max_dependence(&self) -> usize {
        self.max_dependence
    }

    /// Total count `N_s`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `s(i, j)` with 1-based indices; zero outside the stored extent.
    pub fn get(&self, level: usize, dependence: usize) -> u64 {
        if level == 0 || dependence == 0 || level > self.n_levels || dependence > self.max_dependence {
            return 0;
        }
        self.counts[(level - 1) * self.max_dependence + dependence - 1]
    }

    fn row(&self, level: usize) -> &[u64] {
        let start = (level - 1) * self.max_dependence;
        &self.counts[start..start + self.max_dependence]
    }

    /// Row sums `s_i`, indexed by `level - 1`.
    pub fn level_totals(&self) -> Vec<u64> {
        (1..=self.n_levels).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Column sums `s_j`, indexed by `dependence - 1`.
    pub fn dependence_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.max_dependence];
        for chunk in self.counts.chunks(self.max_dependence) {
            for (t, &c) in totals.iter_mut().zip(chunk) {
                *t += c;
            }
        }
        totals
    }

    /// Reorders gray-level rows: row `i` of the result is row `perm[i-1]` of `self`
    /// (`perm` is a 1-based permutation of `1..=n_levels`).
    pub fn permute_levels(&self, perm: &[usize]) -> Result<Ngldm, NgldmError> {
        let mut seen = vec![false; self.n_levels];
        if perm.len() != self.n_levels
            || !perm
                .iter()
                .all(|&p| p >= 1 && p <= self.n_levels && !std::mem::replace(&mut seen[p - 1], true))
        {
            return Err(NgldmError::InvalidParams("not a permutation of the gray levels".into()));
        }
        let counts = perm.iter().flat_map(|&p| self.row(p).iter().copied()).collect();
        Ngldm::from_counts(self.n_levels, self.max_dependence, counts)
    }
}

/// Counts, for every ROI pixel, its dependent ROI neighbors.
pub fn compute_ngldm(levels: &LevelImage, roi: &Mask2D, params: NgldmParams) -> Result<Ngldm, NgldmError> {
    if params.distance == 0 {
        return Err(NgldmError::InvalidParams("distance must be >= 1".into()));
    }
    let (w, h) = (levels.width(), levels.height());
    if roi.width() != w || roi.height() != h {
        return Err(NgldmError::ShapeMismatch {
            img_w: w,
            img_h: h,
            mask_w: roi.width(),
            mask_h: roi.height(),
        });
    }
    let n_levels = levels.n_levels() as usize;
    let max_dep = params.max_dependence();
    let mut counts = vec![0u64; n_levels * max_dep];
    let d = params.distance as usize;
    let mut any = false;
    for y in 0..h {
        let (ya, yb) = (y.saturating_sub(d), (y + d).min(h - 1));
        for x in 0..w {
            if !roi.get(x, y) {
                continue;
            }
            let center = levels.get(x, y);
            if center == 0 || center as usize > n_levels {
                return Err(NgldmError::LevelOutOfRange {
                    x,
                    y,
                    level: center,
                    n_levels: levels.n_levels(),
                });
            }
            any = true;
            let (xa, xb) = (x.saturating_sub(d), (x + d).min(w - 1));
            let mut dependent = 0usize;
            for ny in ya..=yb {
                for nx in xa..=xb {
                    if (nx, ny) != (x, y) && roi.get(nx, ny) && levels.get(nx, ny).abs_diff(center) <= params.alpha {
                        dependent += 1;
                    }
                }
            }
            counts[(center as usize - 1) * max_dep + dependent] += 1;
        }
    }
    if !any {
        return Err(NgldmError::EmptyRoi);
    }
    Ngldm::from_counts(n_levels, max_dep, counts)
}

fn check_nonempty(m: &Ngldm) -> Result<(), NgldmError> {
    if m.total == 0 {
        Err(NgldmError::EmptyMatrix)
    } else {
        Ok(())
    }
}

/// Low dependence emphasis `(1/N_s) sum s(i,j) / j^2`. Computed from column
/// totals, so it is exactly invariant to reordering gray levels.
pub fn lde<T: Real>(m: &Ngldm) -> Result<T, NgldmError> {
    check_nonempty(m)?;
    let sum = m
        .dependence_totals()
        .iter()
        .enumerate()
        .map(|(jm1, &c)| {
            let j = T::from_count(jm1 + 1);
            T::from_u64(c).unwrap() / (j * j)
        })
        .fold(T::zero(), |a, b| a + b);
    Ok(sum / T::from_u64(m.total).unwrap())
}

/// Low dependence low gray-level emphasis `(1/N_s) sum s(i,j) / (i^2 j^2)`.
pub fn ldlgle<T: Real>(m: &Ngldm) -> Result<T, NgldmError> {
    check_nonempty(m)?;
    Ok(weighted_mean(m, |i: T, j: T| T::one() / (i * i * j * j)))
}

/// `(1/N_s) sum_{i,j} s(i,j) * weight(i, j)`.
fn weighted_mean<T: Real>(m: &Ngldm, weight: impl Fn(T, T) -> T) -> T {
    let mut sum = T::zero();
    for i in 1..=m.n_levels {
        let fi = T::from_count(i);
        for (jm1, &c) in m.row(i).iter().enumerate() {
            if c > 0 {
                sum = sum + T::from_u64(c).unwrap() * weight(fi, T::from_count(jm1 + 1));
            }
        }
    }
    sum / T::from_u64(m.total).unwrap()
}

/// Output names of [`feature_vector`], in emission order.
pub const FEATURE_NAMES: [&str; 16] = [
    "lde",
    "hde",
    "lgce",
    "hgce",
    "ldlgle",
    "ldhgle",
    "hdlgle",
    "hdhgle",
    "glnu",
    "glnu_norm",
    "dcnu",
    "dcnu_norm",
    "dc_energy",
    "dc_entropy",
    "gl_var",
    "dc_var",
];

/// Named feature values in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    values: Vec<(&'static str, T)>,
}

impl<T: Real> FeatureVector<T> {
    pub fn get(&self, name: &str) -> Option<T> {
        self.values.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, T)> + '_ {
        self.values.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The full NGLDM feature family.
pub fn feature_vector<T: Real>(m: &Ngldm) -> Result<FeatureVector<T>, NgldmError> {
    check_nonempty(m)?;
    let n_s = T::from_u64(m.total).unwrap();
    let sq = |v: T| v * v;

    let level_totals = m.level_totals();
    let dep_totals = m.dependence_totals();
    let sum_sq = |totals: &[u64]| {
        totals
            .iter()
            .map(|&c| sq(T::from_u64(c).unwrap()))
            .fold(T::zero(), |a, b| a + b)
    };
    let glnu = sum_sq(&level_totals) / n_s;
    let dcnu = sum_sq(&dep_totals) / n_s;

    let mut energy = T::zero();
    let mut entropy = T::zero();
    let mut mean_i = T::zero();
    let mut mean_j = T::zero();
    for i in 1..=m.n_levels {
        for (jm1, &c) in m.row(i).iter().enumerate() {
            if c == 0 {
                continue;
            }
            let p = T::from_u64(c).unwrap() / n_s;
            energy = energy + p * p;
            entropy = entropy - p * p.log2();
            mean_i = mean_i + p * T::from_count(i);
            mean_j = mean_j + p * T::from_count(jm1 + 1);
        }
    }
    let gl_var = weighted_mean(m, |i: T, _| sq(i - mean_i));
    let dc_var = weighted_mean(m, |_, j: T| sq(j - mean_j));

    let values = vec![
        ("lde", lde(m)?),
        ("hde", weighted_mean(m, |_, j: T| j * j)),
        ("lgce", weighted_mean(m, |i: T, _| T::one() / (i * i))),
        ("hgce", weighted_mean(m, |i: T, _| i * i)),
        ("ldlgle", ldlgle(m)?),
        ("ldhgle", weighted_mean(m, |i: T, j: T| i * i / (j * j))),
        ("hdlgle", weighted_mean(m, |i: T, j: T| j * j / (i * i))),
        ("hdhgle", weighted_mean(m, |i: T, j: T| i * i * j * j)),
        ("glnu", glnu),
        ("glnu_norm", glnu / n_s),
        ("dcnu", dcnu),
        ("dcnu_norm", dcnu / n_s),
        ("dc_energy", energy),
        // -0.0 for a single-cell matrix
        ("dc_entropy", entropy + T::zero()),
        ("gl_var", gl_var),
        ("dc_var", dc_var),
    ];
    debug_assert!(values.iter().map(|(n, _)| *n).eq(FEATURE_NAMES));
    Ok(FeatureVector { values })
}
