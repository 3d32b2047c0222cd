use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ManifoldError, Metric};
use crate::scalar::{squared_euclidean, Scalar};
use crate::Matrix;

/// Exact k-nearest-neighbour lists, self excluded, ascending by distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnGraph<T> {
    n: usize,
    k: usize,
    indices: Vec<usize>,
    distances: Vec<T>,
}

impl<T: Scalar> KnnGraph<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[T] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }
}

/// Distance between two rows that have already been prepared for `metric`
/// (see [`prepare_rows`]).
#[inline]
pub(crate) fn prepared_distance<T: Scalar>(metric: Metric, a: &[T], b: &[T]) -> T {
    match metric {
        // unit vectors: 1 - cos = |a - b|^2 / 2, exactly 0 for identical rows
        Metric::Cosine => squared_euclidean(a, b) * T::of(0.5),
        Metric::Euclidean => squared_euclidean(a, b).sqrt(),
    }
}

/// L2-normalized copy for cosine; plain copy for euclidean.
pub(crate) fn prepare_rows<T: Scalar>(x: &Matrix<T>, metric: Metric) -> Result<Matrix<T>, ManifoldError> {
    match metric {
        Metric::Euclidean => Ok(x.clone()),
        Metric::Cosine => {
            let mut out = x.clone();
            for i in 0..out.rows() {
                if !crate::scalar::normalize_in_place(out.row_mut(i)) {
                    return Err(ManifoldError::ZeroNormRow(i));
                }
            }
            Ok(out)
        }
    }
}

#[inline]
fn by_distance_then_index<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// Exact kNN by full scan. Ties are broken by the smaller row index.
pub fn knn_graph<T: Scalar>(x: &Matrix<T>, k: usize, metric: Metric) -> Result<KnnGraph<T>, ManifoldError> {
    let n = x.rows();
    if k == 0 || n <= k {
        return Err(ManifoldError::TooFewPoints { n, k });
    }
    if !x.is_finite() {
        return Err(ManifoldError::NonFinite);
    }
    let prepared = prepare_rows(x, metric)?;
    let rows: Vec<Vec<(T, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = prepared.row(i);
            let mut cand: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (prepared_distance(metric, xi, prepared.row(j)), j))
                .collect();
            cand.select_nth_unstable_by(k - 1, by_distance_then_index);
            cand.truncate(k);
            cand.sort_unstable_by(by_distance_then_index);
            cand
        })
        .collect();
    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for row in rows {
        for (d, j) in row {
            indices.push(j);
            distances.push(d);
        }
    }
    Ok(KnnGraph {
        n,
        k,
        indices,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_unit_vectors_use_lower_index() {
        let x = Matrix::from_rows(&[[1.0f64, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let g = knn_graph(&x, 1, Metric::Cosine).unwrap();
        assert_eq!(g.neighbors(0), [1]);
        assert_eq!(g.neighbors(1), [0]);
        assert_eq!(g.neighbors(2), [0]);
        for i in 0..3 {
            assert_eq!(g.distances(i), [1.0]);
        }
    }

    #[test]
    fn duplicate_rows_are_mutual_neighbours_at_zero() {
        let x = Matrix::from_rows(&[[0.3f32, 0.7, 0.1], [5.0, 1.0, 2.0], [0.3, 0.7, 0.1], [1.0, 9.0, 0.5]]);
        for metric in [Metric::Cosine, Metric::Euclidean] {
            let g = knn_graph(&x, 1, metric).unwrap();
            assert_eq!(g.neighbors(0), [2]);
            assert_eq!(g.neighbors(2), [0]);
            assert_eq!(g.distances(0), [0.0]);
            assert_eq!(g.distances(2), [0.0]);
        }
    }

    #[test]
    fn rejects_k_not_below_n_and_zero_rows() {
        let x = Matrix::from_rows(&[[1.0f64, 0.0], [0.0, 1.0]]);
        assert!(matches!(knn_graph(&x, 2, Metric::Euclidean), Err(ManifoldError::TooFewPoints { n: 2, k: 2 })));
        let z = Matrix::from_rows(&[[1.0f64, 0.0], [0.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(knn_graph(&z, 1, Metric::Cosine), Err(ManifoldError::ZeroNormRow(1))));
    }
}
