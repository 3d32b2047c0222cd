//! Exact cosine retrieval in the image and description embedding spaces.

mod index;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::CosineIndex;

pub const DEFAULT_TEMPLATE: &str = "An image with {query} content";
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("query has dimension {found}, index has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("k={k} is outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("{ids} ids for {rows} rows")]
    IdCount { ids: usize, rows: usize },
    #[error("query text is empty")]
    EmptyQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    ImageEmbedding,
    DescriptionEmbedding,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ImageEmbedding => "image_embedding",
            Self::DescriptionEmbedding => "description_embedding",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub raw: String,
    /// `{query}` is replaced by `raw`; `None` embeds `raw` verbatim.
    pub template: Option<String>,
    pub k: usize,
}

impl Query {
    pub fn new(raw: impl Into<String>) -> Self {
        Self {
            raw: raw.into(),
            template: Some(DEFAULT_TEMPLATE.into()),
            k: DEFAULT_K,
        }
    }

    pub fn text(&self) -> String {
        match &self.template {
            Some(t) => t.replace("{query}", &self.raw),
            None => self.raw.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.raw.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        if self.k == 0 {
            return Err(RetrievalError::BadK { k: 0, n: 0 });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub record_id: String,
    pub score: f64,
    pub source: Space,
    /// 1-based.
    pub rank: usize,
}

/// Ranked hits for one space.
pub fn search<T: crate::Scalar>(
    index: &CosineIndex<T>,
    query: &[T],
    k: usize,
    source: Space,
) -> Result<Vec<RetrievalHit>, RetrievalError> {
    Ok(index
        .topk(query, k)?
        .into_iter()
        .enumerate()
        .map(|(r, (row, score))| RetrievalHit {
            record_id: index.ids()[row].clone(),
            score: score.as_f64(),
            source,
            rank: r + 1,
        })
        .collect())
}

/// Text-to-vector encoder for one space.
pub trait QueryEmbedder: Send + Sync {
    fn embed_query(&self, space: Space, text: &str) -> Result<Vec<f32>, String>;
}

/// Side-by-side results; a failed space carries its error and the other
/// space is still reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualResult {
    pub query: String,
    pub image_space: Result<Vec<RetrievalHit>, String>,
    pub description_space: Result<Vec<RetrievalHit>, String>,
}

impl DualResult {
    pub fn warnings(&self) -> Vec<String> {
        [(&self.image_space, Space::ImageEmbedding), (&self.description_space, Space::DescriptionEmbedding)]
            .into_iter()
            .filter_map(|(r, s)| r.as_ref().err().map(|e| format!("{s}: {e}")))
            .collect()
    }
}

/// Embeds the query text once per space and searches each index
/// independently.
pub fn retrieve_dual(
    query: &Query,
    image: &CosineIndex<f32>,
    description: &CosineIndex<f32>,
    embedder: &dyn QueryEmbedder,
) -> Result<DualResult, RetrievalError> {
    query.validate()?;
    let text = query.text();
    let run = |space: Space, index: &CosineIndex<f32>| -> Result<Vec<RetrievalHit>, String> {
        let v = embedder.embed_query(space, &text)?;
        search(index, &v, query.k.min(index.len()), space).map_err(|e| e.to_string())
    };
    let (image_space, description_space) = rayon::join(
        || run(Space::ImageEmbedding, image),
        || run(Space::DescriptionEmbedding, description),
    );
    Ok(DualResult {
        query: text,
        image_space,
        description_space,
    })
}

/// Fraction of the first `k` ranked ids that are relevant; `k` larger than
/// the list counts missing positions as misses.
pub fn precision_at_k(ranked: &[String], relevant: &HashSet<String>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    ranked.iter().take(k).filter(|id| relevant.contains(*id)).count() as f64 / k as f64
}
