use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::imagecore::{Interpolation, Spacing};
use crate::morphology::StructuringElement;
use crate::ngldm::NgldmParams;
use crate::quantize::BinningSpec;
use crate::similarity::DEFAULT_THRESHOLD;

/// ROI variant a feature was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskVariant {
    Original,
    Eroded,
    Dilated,
}

impl MaskVariant {
    pub const ALL: [MaskVariant; 3] = [MaskVariant::Original, MaskVariant::Eroded, MaskVariant::Dilated];

    pub fn as_str(&self) -> &'static str {
        match self {
            MaskVariant::Original => "original",
            MaskVariant::Eroded => "eroded",
            MaskVariant::Dilated => "dilated",
        }
    }
}

impl fmt::Display for MaskVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskVariant {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaskVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown mask variant {s:?}")))
    }
}

/// Which pair of mask variants is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    OrigVsEroded,
    OrigVsDilated,
    ErodedVsDilated,
}

impl Comparison {
    pub const ALL: [Comparison; 3] = [
        Comparison::OrigVsEroded,
        Comparison::OrigVsDilated,
        Comparison::ErodedVsDilated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Comparison::OrigVsEroded => "orig_vs_eroded",
            Comparison::OrigVsDilated => "orig_vs_dilated",
            Comparison::ErodedVsDilated => "eroded_vs_dilated",
        }
    }

    /// (reference, perturbed) variants.
    pub fn variants(&self) -> (MaskVariant, MaskVariant) {
        match self {
            Comparison::OrigVsEroded => (MaskVariant::Original, MaskVariant::Eroded),
            Comparison::OrigVsDilated => (MaskVariant::Original, MaskVariant::Dilated),
            Comparison::ErodedVsDilated => (MaskVariant::Eroded, MaskVariant::Dilated),
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Comparison {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Comparison::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| PipelineError::Config(format!("unknown comparison {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingTarget {
    /// Median spacing over the corpus.
    #[default]
    Auto,
    Explicit(Spacing),
}

impl FromStr for SpacingTarget {
    type Err = PipelineError;

    /// `auto` or `X,Y` in millimeters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "auto" {
            return Ok(SpacingTarget::Auto);
        }
        let bad = || PipelineError::Config(format!("spacing must be `auto` or `X,Y`, got {s:?}"));
        let (x, y) = s.split_once(',').ok_or_else(bad)?;
        let x: f64 = x.trim().parse().map_err(|_| bad())?;
        let y: f64 = y.trim().parse().map_err(|_| bad())?;
        Spacing::new(x, y)
            .map(SpacingTarget::Explicit)
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub binning_specs: Vec<BinningSpec>,
    /// Fractional area change; masks are perturbed to `1 - d` and `1 + d`.
    pub target_area_change: f64,
    pub target_spacing: SpacingTarget,
    pub ngldm: NgldmParams,
    /// Output intensity range `(lo, hi)` of the min-max normalization.
    pub normalization: (f64, f64),
    pub comparisons: Vec<Comparison>,
    pub interpolation: Interpolation,
    pub structuring_element: StructuringElement,
    pub threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            binning_specs: vec![
                BinningSpec::Dynamic { n_bins: 32 },
                BinningSpec::StaticRange {
                    n_bins: 32,
                    lo: 0.0,
                    hi: 255.0,
                },
            ],
            target_area_change: 0.2,
            target_spacing: SpacingTarget::Auto,
            ngldm: NgldmParams::default(),
            normalization: (0.0, 255.0),
            comparisons: Comparison::ALL.to_vec(),
            interpolation: Interpolation::CubicBSpline,
            structuring_element: StructuringElement::default(),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.binning_specs.is_empty() {
            return bad("at least one binning spec is required".into());
        }
        for spec in &self.binning_specs {
            spec.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        let labels: Vec<String> = self.binning_specs.iter().map(ToString::to_string).collect();
        if (1..labels.len()).any(|i| labels[..i].contains(&labels[i])) {
            return bad("binning specs must be distinct".into());
        }
        if !(self.target_area_change > 0.0 && self.target_area_change < 1.0) {
            return bad(format!(
                "target area change must be in (0, 1), got {}",
                self.target_area_change
            ));
        }
        let (lo, hi) = self.normalization;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return bad(format!("normalization range must satisfy hi > lo, got [{lo}, {hi}]"));
        }
        if self.comparisons.is_empty() {
            return bad("at least one comparison is required".into());
        }
        if self.ngldm.distance == 0 {
            return bad("NGLDM distance must be >= 1".into());
        }
        Ok(())
    }

    /// Mask variants the configured comparisons need, in canonical order.
    pub fn needed_variants(&self) -> Vec<MaskVariant> {
        MaskVariant::ALL
            .into_iter()
            .filter(|v| {
                self.comparisons.iter().any(|c| {
                    let (a, b) = c.variants();
                    a == *v || b == *v
                })
            })
            .collect()
    }

    pub fn target_ratio(&self, variant: MaskVariant) -> Option<f64> {
        match variant {
            MaskVariant::Original => None,
            MaskVariant::Eroded => Some(1.0 - self.target_area_change),
            MaskVariant::Dilated => Some(1.0 + self.target_area_change),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_enums() {
        assert_eq!("orig_vs_dilated".parse::<Comparison>().unwrap(), Comparison::OrigVsDilated);
        assert!("orig".parse::<Comparison>().is_err());
        assert_eq!("eroded".parse::<MaskVariant>().unwrap(), MaskVariant::Eroded);
        assert_eq!("auto".parse::<SpacingTarget>().unwrap(), SpacingTarget::Auto);
        assert_eq!(
            "0.07,0.1".parse::<SpacingTarget>().unwrap(),
            SpacingTarget::Explicit(Spacing::new(0.07, 0.1).unwrap())
        );
        assert!("0,1".parse::<SpacingTarget>().is_err());
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let cases = [
            ExperimentConfig {
                binning_specs: vec![],
                ..Default::default()
            },
            ExperimentConfig {
                target_area_change: 1.0,
                ..Default::default()
            },
            ExperimentConfig {
                normalization: (5.0, 5.0),
                ..Default::default()
            },
            ExperimentConfig {
                comparisons: vec![],
                ..Default::default()
            },
            ExperimentConfig {
                binning_specs: vec![BinningSpec::Dynamic { n_bins: 8 }, BinningSpec::Dynamic { n_bins: 8 }],
                ..Default::default()
            },
        ];
        for cfg in cases {
            assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        }
    }

    #[test]
    fn needed_variants_follow_comparisons() {
        let cfg = ExperimentConfig {
            comparisons: vec![Comparison::OrigVsEroded],
            ..Default::default()
        };
        assert_eq!(cfg.needed_variants(), vec![MaskVariant::Original, MaskVariant::Eroded]);
        let cfg = ExperimentConfig {
            comparisons: vec![Comparison::ErodedVsDilated],
            ..Default::default()
        };
        assert_eq!(cfg.needed_variants(), vec![MaskVariant::Eroded, MaskVariant::Dilated]);
    }
}
