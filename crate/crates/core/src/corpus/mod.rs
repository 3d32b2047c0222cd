//! Corpus artifacts: record manifest, app catalog, generated descriptions and
//! binary embedding matrices, all keyed and row-aligned by record id.

mod catalog;
mod descriptions;
mod embedding;
mod manifest;
mod validate;

use std::path::PathBuf;

pub use catalog::{join_catalog, load_catalog, AnnotatedCorpus, AppCatalog, AppCatalogEntry, AppInfo, UNKNOWN_CATEGORY};
pub use descriptions::{append_descriptions, load_descriptions, prompt_hash, DescriptionRecord, DescriptionStore, DESCRIPTION_PROMPT};
pub use embedding::{read_embeddings, write_embeddings, EmbeddingKind, EmbeddingMatrix, EMBEDDING_MAGIC, EMBEDDING_VERSION};
pub use manifest::{load_manifest, parse_manifest, write_manifest, Corpus, ScreenRecord};
pub use validate::{validate_alignment, AlignmentReport};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { id: String, line: u64 },
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("duplicate catalog entry for package {0:?}")]
    DuplicatePackage(String),
    #[error("line {line}: duplicate description for ({record_id}, {model_id}, {prompt_hash})")]
    DuplicateDescription {
        line: u64,
        record_id: String,
        model_id: String,
        prompt_hash: String,
    },
    #[error("bad magic bytes, not an embedding file")]
    BadMagic,
    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown embedding kind tag {0}")]
    UnknownKind(u8),
    #[error("embedding file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("id table has {found} entries, header says n = {expected}")]
    IdTableLength { expected: u64, found: u64 },
    #[error("trailing bytes after id table")]
    TrailingBytes,
    #[error("invalid embedding matrix: {0}")]
    InvalidMatrix(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CorpusError>;
