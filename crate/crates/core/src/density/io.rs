use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClusterLabels, DensityError};

/// One row of the persisted label table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub record_id: String,
    pub label: i64,
    pub strength: f64,
}

pub fn label_rows(ids: &[String], labels: &ClusterLabels) -> Vec<LabelRow> {
    assert_eq!(ids.len(), labels.labels.len(), "one id per label");
    ids.iter()
        .zip(labels.labels.iter().zip(&labels.strengths))
        .map(|(id, (&label, &strength))| LabelRow {
            record_id: id.clone(),
            label,
            strength,
        })
        .collect()
}

fn io_err(e: impl std::fmt::Display) -> DensityError {
    DensityError::Io(e.to_string())
}

/// Writes `record_id,label,strength` rows with a header.
pub fn write_labels(path: impl AsRef<Path>, rows: &[LabelRow]) -> Result<(), DensityError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path).map_err(io_err)?));
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabelRow>, DensityError> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path).map_err(io_err)?));
    r.deserialize().map(|row| row.map_err(io_err)).collect()
}
