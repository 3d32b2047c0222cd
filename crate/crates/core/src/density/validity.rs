use std::collections::BTreeMap;

use rayon::prelude::*;

use super::core::{core_distances, mutual_reachability};
use super::mst::mst;
use super::{DensityError, NOISE};
use crate::scalar::{squared_euclidean, Scalar};
use crate::Matrix;

/// Relative density-based validity in `[-1, 1]`.
///
/// Per cluster, sparseness is the largest mutual-reachability edge of the
/// cluster's own spanning tree and separation is the smallest
/// mutual-reachability distance to a point of another cluster. Each cluster
/// contributes `(sep - sparse) / max(sep, sparse)` weighted by its share of
/// all points, noise included.
pub fn validity_score<T: Scalar>(x: &Matrix<T>, labels: &[i64], min_samples: usize) -> Result<f64, DensityError> {
    let n = x.rows();
    assert_eq!(labels.len(), n, "one label per row");
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l != NOISE {
            groups.entry(l).or_default().push(i);
        }
    }
    if groups.len() < 2 {
        return Err(DensityError::TooFewClusters(groups.len()));
    }
    let members: Vec<usize> = groups.values().flatten().copied().collect();
    let sub = x.select_rows(&members);
    let k = min_samples.min(sub.rows() - 1).max(1);
    let sub_cores = core_distances(&sub, k)?;
    let mut cores = vec![T::zero(); n];
    for (pos, &i) in members.iter().enumerate() {
        cores[i] = sub_cores[pos];
    }
    let mr = |i: usize, j: usize| mutual_reachability(squared_euclidean(x.row(i), x.row(j)).sqrt(), cores[i], cores[j]);

    let per_cluster: Vec<(usize, f64)> = groups
        .par_iter()
        .map(|(&label, idx)| {
            let sparse = if idx.len() < 2 {
                0.0
            } else {
                let local = x.select_rows(idx);
                let local_cores: Vec<T> = idx.iter().map(|&i| cores[i]).collect();
                mst(&local, &local_cores).iter().map(|e| e.weight.as_f64()).fold(0.0, f64::max)
            };
            let mut sep = f64::INFINITY;
            for &i in idx {
                for &j in &members {
                    if labels[j] != label {
                        sep = sep.min(mr(i, j).as_f64());
                    }
                }
            }
            let denom = sep.max(sparse);
            let v = if denom > 0.0 { (sep - sparse) / denom } else { 0.0 };
            (idx.len(), v)
        })
        .collect();
    Ok(per_cluster.iter().map(|&(size, v)| size as f64 / n as f64 * v).sum())
}
