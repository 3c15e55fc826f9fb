//! Corpus manifest CSV: `image_id,image_path,spacing_x,spacing_y,x0,y0,bw,bh,label`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::PipelineError;
use crate::imagecore::{BBox, Spacing};

pub const MANIFEST_HEADER: [&str; 9] = [
    "image_id",
    "image_path",
    "spacing_x",
    "spacing_y",
    "x0",
    "y0",
    "bw",
    "bh",
    "label",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub image_path: PathBuf,
    pub spacing: Spacing,
    pub bbox: BBox,
    pub label: Option<String>,
}

fn parse_error(line: u64, column: &str, message: impl Into<String>) -> PipelineError {
    PipelineError::Parse {
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Parses manifest text. Relative image paths are resolved against `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<ManifestEntry>, PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_error(1, "header", e.to_string()))?
        .clone();
    let index_of = |name: &str| headers.iter().position(|h| h == name);
    let mut columns = [0usize; 8];
    for (slot, name) in columns.iter_mut().zip(&MANIFEST_HEADER[..8]) {
        *slot = index_of(name).ok_or_else(|| parse_error(1, name, "missing column"))?;
    }
    let label_col = index_of("label");

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, "record", e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<&str, PipelineError> {
            let name = MANIFEST_HEADER[k];
            record
                .get(columns[k])
                .ok_or_else(|| parse_error(line, name, "missing field"))
        };
        fn number<T: std::str::FromStr>(line: u64, name: &str, raw: &str) -> Result<T, PipelineError> {
            raw.parse()
                .map_err(|_| parse_error(line, name, format!("expected a number, got {raw:?}")))
        }
        let image_id = field(0)?.to_string();
        if image_id.is_empty() {
            return Err(parse_error(line, "image_id", "empty id"));
        }
        if !seen.insert(image_id.clone()) {
            return Err(PipelineError::DuplicateId(image_id));
        }
        let path = PathBuf::from(field(1)?);
        let image_path = if path.is_absolute() { path } else { base_dir.join(path) };
        let sx: f64 = number(line, "spacing_x", field(2)?)?;
        let sy: f64 = number(line, "spacing_y", field(3)?)?;
        let spacing = Spacing::new(sx, sy).map_err(|e| parse_error(line, "spacing_x", e.to_string()))?;
        let bbox = BBox::new(
            number(line, "x0", field(4)?)?,
            number(line, "y0", field(5)?)?,
            number(line, "bw", field(6)?)?,
            number(line, "bh", field(7)?)?,
        );
        if bbox.bw == 0 || bbox.bh == 0 {
            return Err(parse_error(line, "bw", "box must be at least 1x1"));
        }
        let label = label_col
            .and_then(|c| record.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        entries.push(ManifestEntry {
            image_id,
            image_path,
            spacing,
            bbox,
            label,
        });
    }
    Ok(entries)
}

pub fn ingest_manifest(path: &Path) -> Result<Vec<ManifestEntry>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

/// Renders entries back to manifest CSV; paths are written as given.
pub fn write_manifest(entries: &[ManifestEntry]) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| PipelineError::Io(e.to_string());
    w.write_record(MANIFEST_HEADER).map_err(csv_err)?;
    for e in entries {
        w.write_record([
            e.image_id.clone(),
            e.image_path.display().to_string(),
            e.spacing.x.to_string(),
            e.spacing.y.to_string(),
            e.bbox.x0.to_string(),
            e.bbox.y0.to_string(),
            e.bbox.bw.to_string(),
            e.bbox.bh.to_string(),
            e.label.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
