//! Hierarchical density clustering over a reduced embedding space.

mod core;
mod hierarchy;
mod io;
mod mst;
mod select;
mod validity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::core::{core_distances, mutual_reachability};
pub use io::{label_rows, read_labels, write_labels, LabelRow};
pub use hierarchy::{condense, single_linkage, CondensedEntry, CondensedTree, Merge};
pub use mst::{mst, MstEdge};
pub use select::{select_eom, stabilities, ClusterLabels, NOISE};
pub use validity::validity_score;

use crate::scalar::Scalar;
use crate::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("need more than min_samples={min_samples} points, got {n}")]
    TooFewPoints { n: usize, min_samples: usize },
    #[error("validity needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("label table i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    #[default]
    Eom,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("eom")
    }
}

impl FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "eom" => Ok(Self::Eom),
            other => Err(format!("unsupported cluster selection {other:?} (only eom)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub selection: Selection,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 400,
            min_samples: 20,
            selection: Selection::Eom,
        }
    }
}

impl HdbscanParams {
    pub fn validate(&self) -> Result<(), DensityError> {
        if self.min_cluster_size < 2 {
            return Err(DensityError::InvalidParams("min_cluster_size must be at least 2".into()));
        }
        if self.min_samples < 1 {
            return Err(DensityError::InvalidParams("min_samples must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Clustering<T> {
    pub tree: CondensedTree<T>,
    pub labels: ClusterLabels,
}

/// Full pipeline: core distances, spanning tree, hierarchy, condensation and
/// excess-of-mass selection.
pub fn hdbscan<T: Scalar>(x: &Matrix<T>, params: &HdbscanParams) -> Result<Clustering<T>, DensityError> {
    params.validate()?;
    if !x.is_finite() {
        return Err(DensityError::NonFinite);
    }
    let cores = core_distances(x, params.min_samples)?;
    let edges = mst(x, &cores);
    let merges = single_linkage(x.rows(), &edges);
    let tree = condense(x.rows(), &merges, params.min_cluster_size);
    let labels = select_eom(&tree);
    Ok(Clustering { tree, labels })
}
