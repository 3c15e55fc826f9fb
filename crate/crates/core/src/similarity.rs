//! Agreement metrics between paired feature values and their summaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("paired sample needs equal lengths, got {x} and {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("paired sample needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("value at index {0} is not finite")]
    NonFinite(usize),
    #[error("correlation undefined: a variable has zero variance")]
    ZeroVariance,
    #[error("cannot summarize an empty list")]
    EmptyInput,
}

/// Equal-length paired observations with at least two pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Real> PairedSample<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self, SimilarityError> {
        if x.len() != y.len() {
            return Err(SimilarityError::LengthMismatch { x: x.len(), y: y.len() });
        }
        if x.len() < 2 {
            return Err(SimilarityError::TooFewPairs(x.len()));
        }
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(SimilarityError::NonFinite(i));
        }
        Ok(PairedSample { x, y })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn swapped(&self) -> Self {
        PairedSample {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// Population means, variances and covariance.
struct Moments<T> {
    mean_x: T,
    mean_y: T,
    var_x: T,
    var_y: T,
    cov: T,
}

fn moments<T: Real>(x: &[T], y: &[T]) -> Moments<T> {
    let n = T::from_count(x.len());
    let mean_x = x.iter().copied().sum::<T>() / n;
    let mean_y = y.iter().copied().sum::<T>() / n;
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    Moments {
        mean_x,
        mean_y,
        var_x: sxx / n,
        var_y: syy / n,
        cov: sxy / n,
    }
}

fn correlation<T: Real>(x: &[T], y: &[T]) -> Result<T, SimilarityError> {
    let m = moments(x, y);
    if m.var_x <= T::zero() || m.var_y <= T::zero() {
        return Err(SimilarityError::ZeroVariance);
    }
    let r = m.cov / (m.var_x.sqrt() * m.var_y.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Pearson product-moment correlation.
pub fn pearson<T: Real>(s: &PairedSample<T>) -> Result<T, SimilarityError> {
    correlation(&s.x, &s.y)
}

/// 1-based ranks; tied values share their mean rank.
pub fn average_ranks<T: Real>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = T::from_count(start + 1 + end) / T::lit(2.0);
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman<T: Real>(s: &PairedSample<T>) -> Result<T, SimilarityError> {
    correlation(&average_ranks(&s.x), &average_ranks(&s.y))
}

/// Lin's concordance correlation coefficient with population moments.
/// Two equal constants give 1; two different constants give 0.
pub fn lins_ccc<T: Real>(s: &PairedSample<T>) -> Result<T, SimilarityError> {
    let m = moments(&s.x, &s.y);
    let shift = m.mean_x - m.mean_y;
    let denom = m.var_x + m.var_y + shift * shift;
    if denom <= T::zero() {
        return Ok(T::one());
    }
    let ccc = T::lit(2.0) * m.cov / denom;
    Ok(ccc.max(-T::one()).min(T::one()))
}

pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// Summary statistics over a list of metric values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub minimum: T,
    pub median: T,
    pub mean: T,
    pub maximum: T,
    /// Sample standard deviation (n - 1 divisor; 0 for a single value).
    pub std_dev: T,
    /// Count strictly above `threshold`.
    pub n_above_threshold: usize,
    pub threshold: T,
    pub n_total: usize,
}

pub fn summarize<T: Real>(values: &[T], threshold: T) -> Result<MetricSummary<T>, SimilarityError> {
    if values.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SimilarityError::NonFinite(i));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / T::lit(2.0)
    };
    let mean = values.iter().copied().sum::<T>() / T::from_count(n);
    let std_dev = if n > 1 {
        let ss = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
        (ss / T::from_count(n - 1)).sqrt()
    } else {
        T::zero()
    };
    Ok(MetricSummary {
        minimum: sorted[0],
        median,
        mean,
        maximum: sorted[n - 1],
        std_dev,
        n_above_threshold: values.iter().filter(|&&v| v > threshold).count(),
        threshold,
        n_total: n,
    })
}
