//! Atlas bundle: 2D points joined with topics, label layers and legends.

mod binary;
mod bundle;
mod colors;
mod layers;
mod search;

use thiserror::Error;

pub use binary::{decode_points, encode_points, PackedPoint, POINT_RECORD_BYTES};
pub use bundle::{
    build_bundle, color_tables, read_bundle, snippet, write_bundle, AtlasBundle, AtlasPoint, BundleInputs, Provenance,
    FORMAT_VERSION, SNIPPET_CHARS,
};
pub use colors::{ColorMode, ColorTable, LegendEntry, NOISE_COLOR};
pub use layers::{build_label_layers, LabelLayer, LayerLabel, MAX_COARSE_LABELS};
pub use search::{parse_fields, search, SearchField};

#[derive(Debug, Error, PartialEq)]
pub enum AtlasError {
    #[error("{artifact} misaligned with corpus: missing {missing:?}, unknown {unknown:?}, duplicate {duplicate:?}")]
    Misaligned {
        artifact: &'static str,
        missing: Vec<String>,
        unknown: Vec<String>,
        duplicate: Vec<String>,
    },
    #[error("non-finite coordinates for {0:?}")]
    NonFinite(Vec<String>),
    #[error("points reference unknown topics: {0:?}")]
    UnknownTopic(Vec<String>),
    #[error("{count} legend keys for color mode {mode} exceed the u16 index range")]
    TooManyKeys { mode: ColorMode, count: usize },
    #[error("unsupported bundle format version {0}")]
    Version(u32),
    #[error("invalid bundle: {0}")]
    Invalid(String),
    #[error("bundle parse error: {0}")]
    Parse(String),
    #[error("bundle i/o: {0}")]
    Io(String),
}
