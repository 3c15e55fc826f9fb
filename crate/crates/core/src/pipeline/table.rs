//! Long-format feature table: `image_id,mask_variant,binning,feature,value`.

use serde::{Deserialize, Serialize};

use super::{MaskVariant, PipelineError};

pub const FEATURE_TABLE_HEADER: [&str; 5] = ["image_id", "mask_variant", "binning", "feature", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub image_id: String,
    pub mask_variant: MaskVariant,
    pub binning: String,
    pub feature: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn to_csv(&self) -> Result<String, PipelineError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| PipelineError::Io(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record(FEATURE_TABLE_HEADER)
                .map_err(|e| PipelineError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| PipelineError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, PipelineError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.deserialize() {
            let row: FeatureRow = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                PipelineError::Parse {
                    line,
                    column: "record".into(),
                    message: e.to_string(),
                }
            })?;
            rows.push(row);
        }
        Ok(FeatureTable { rows })
    }

    /// Distinct values of a column in first-appearance order.
    fn distinct<'a>(&'a self, key: impl Fn(&'a FeatureRow) -> &'a str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for row in &self.rows {
            let k = key(row);
            if !out.iter().any(|o| o == k) {
                out.push(k.to_string());
            }
        }
        out
    }

    pub fn image_ids(&self) -> Vec<String> {
        self.distinct(|r| &r.image_id)
    }

    pub fn binnings(&self) -> Vec<String> {
        self.distinct(|r| &r.binning)
    }

    pub fn features(&self) -> Vec<String> {
        self.distinct(|r| &r.feature)
    }
}
