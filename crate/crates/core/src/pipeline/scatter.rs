//! Original-vs-perturbed scatter data with an optional SVG rendering.

use std::fmt::Write;

use serde::Serialize;

use super::report::paired_values;
use super::{Comparison, FeatureTable, PipelineError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub image_id: String,
    pub value_original: f64,
    pub value_perturbed: f64,
    pub binning: String,
    pub feature: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterTable {
    pub feature: String,
    pub binning: String,
    pub comparison: Comparison,
    pub rows: Vec<ScatterRow>,
}

/// Builds the scatter for one feature/binning/comparison from a feature table.
/// For `eroded_vs_dilated` the "original" column holds the eroded value.
pub fn emit_scatter(
    table: &FeatureTable,
    feature: &str,
    binning: &str,
    comparison: Comparison,
) -> Result<ScatterTable, PipelineError> {
    if !table.rows.iter().any(|r| r.feature == feature) {
        return Err(PipelineError::UnknownFeature(feature.to_string()));
    }
    if !table.rows.iter().any(|r| r.binning == binning) {
        return Err(PipelineError::UnknownBinning(binning.to_string()));
    }
    let rows = paired_values(table, binning, feature, comparison)
        .into_iter()
        .map(|(image_id, x, y)| ScatterRow {
            image_id,
            value_original: x,
            value_perturbed: y,
            binning: binning.to_string(),
            feature: feature.to_string(),
        })
        .collect();
    Ok(ScatterTable {
        feature: feature.to_string(),
        binning: binning.to_string(),
        comparison,
        rows,
    })
}

/// Filename-safe binning label: `static:0,255,32` -> `static-0-255-32`.
pub fn binning_slug(binning: &str) -> String {
    binning
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '-' })
        .collect()
}

impl ScatterTable {
    /// `scatter_<feature>_<binning>`, with the comparison appended unless it
    /// is the default original-vs-eroded pairing.
    pub fn file_stem(&self) -> String {
        let mut stem = format!("scatter_{}_{}", self.feature, binning_slug(&self.binning));
        if self.comparison != Comparison::OrigVsEroded {
            stem.push('_');
            stem.push_str(self.comparison.as_str());
        }
        stem
    }

    pub fn to_csv(&self) -> Result<String, PipelineError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["image_id", "value_original", "value_perturbed", "binning", "feature"])
                .map_err(|e| PipelineError::Io(e.to_string()))?;
        }
        for row in &self.rows {
            w.serialize(row).map_err(|e| PipelineError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| PipelineError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fraction of points with `|y - x| <= rel_band * max(|x|, |y|)`.
    pub fn fraction_within_band(&self, rel_band: f64) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let inside = self
            .rows
            .iter()
            .filter(|r| {
                let scale = r.value_original.abs().max(r.value_perturbed.abs());
                (r.value_perturbed - r.value_original).abs() <= rel_band * scale
            })
            .count();
        inside as f64 / self.rows.len() as f64
    }

    /// Self-contained SVG scatter with the identity line.
    pub fn to_svg(&self) -> String {
        const SIZE: f64 = 480.0;
        const PAD: f64 = 56.0;
        let values = self.rows.iter().flat_map(|r| [r.value_original, r.value_perturbed]);
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi <= lo {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        let span = hi - lo;
        let (lo, hi) = (lo - 0.05 * span, hi + 0.05 * span);
        let plot = SIZE - 2.0 * PAD;
        let px = |v: f64| PAD + (v - lo) / (hi - lo) * plot;
        let py = |v: f64| SIZE - PAD - (v - lo) / (hi - lo) * plot;

        let (ref_name, pert_name) = self.comparison.variants();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{PAD}" y="{PAD}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            px(lo),
            py(lo),
            px(hi),
            py(hi)
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue" fill-opacity="0.7"><title>{}</title></circle>"#,
                px(r.value_original),
                py(r.value_perturbed),
                xml_escape(&r.image_id)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{} ({})</text>"#,
            SIZE / 2.0,
            PAD / 2.0,
            xml_escape(&self.feature),
            xml_escape(&self.binning)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{ref_name}</text>"#,
            SIZE / 2.0,
            SIZE - PAD / 3.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{0}" y="{1}" text-anchor="middle" transform="rotate(-90 {0} {1})">{pert_name}</text>"#,
            PAD / 3.0,
            SIZE / 2.0
        );
        for (v, label) in [(lo, format!("{lo:.3}")), (hi, format!("{hi:.3}"))] {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{label}</text>"#, px(v), SIZE - PAD + 16.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, PAD - 4.0, py(v));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{FeatureRow, MaskVariant};

    fn table() -> FeatureTable {
        let rows = [("a", 1.0, 1.05), ("b", 2.0, 2.5)]
            .iter()
            .flat_map(|&(id, o, e)| {
                [(MaskVariant::Original, o), (MaskVariant::Eroded, e)].map(|(v, value)| FeatureRow {
                    image_id: id.into(),
                    mask_variant: v,
                    binning: "static:0,255,32".into(),
                    feature: "lde".into(),
                    value,
                })
            })
            .collect();
        FeatureTable { rows }
    }

    #[test]
    fn rows_and_files() {
        let s = emit_scatter(&table(), "lde", "static:0,255,32", Comparison::OrigVsEroded).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.file_stem(), "scatter_lde_static-0-255-32");
        let csv = s.to_csv().unwrap();
        assert!(csv.starts_with("image_id,value_original,value_perturbed,binning,feature\n"));
        assert!(csv.contains("a,1.0,1.05,\"static:0,255,32\",lde"));
        assert_eq!(s.fraction_within_band(0.1), 0.5);
        let svg = s.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(
            emit_scatter(&table(), "glcm_contrast", "static:0,255,32", Comparison::OrigVsEroded),
            Err(PipelineError::UnknownFeature(_))
        ));
        assert!(matches!(
            emit_scatter(&table(), "lde", "dynamic:32", Comparison::OrigVsEroded),
            Err(PipelineError::UnknownBinning(_))
        ));
    }
}
