use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::KnnGraph;
use crate::scalar::Scalar;

/// Absolute tolerance on the bandwidth equation.
pub const SMOOTH_KNN_TOLERANCE: f64 = 1e-5;
const SMOOTH_KNN_MAX_ITER: usize = 200;
/// Lower clamp on sigma, as a fraction of the row's mean distance.
const MIN_SIGMA_SCALE: f64 = 1e-3;

/// Per-point local connectivity and bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalScale {
    pub rho: f64,
    pub sigma: f64,
    /// `true` when sigma sits on the lower clamp instead of solving the
    /// bandwidth equation.
    pub clamped: bool,
}

/// `sum_j exp(-max(0, d_j - rho) / sigma)`.
pub fn membership_sum(distances: &[f64], rho: f64, sigma: f64) -> f64 {
    distances
        .iter()
        .map(|&d| {
            let gap = d - rho;
            if gap <= 0.0 {
                1.0
            } else {
                (-gap / sigma).exp()
            }
        })
        .sum()
}

/// Finds rho (smallest positive distance) and sigma such that the membership
/// sum equals `log2(k)`. `distances` must be sorted ascending.
pub fn smooth_knn<T: Scalar>(distances: &[T], k: usize) -> LocalScale {
    let d: Vec<f64> = distances.iter().map(|v| v.as_f64()).collect();
    let target = (k as f64).log2();
    let rho = d.iter().copied().find(|&v| v > 0.0).unwrap_or(0.0);
    let mean = if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 };
    let floor = MIN_SIGMA_SCALE * mean;
    // the sum tends to this count as sigma -> 0; at or above the target the
    // equation has no positive solution
    let at_rho = d.iter().filter(|&&v| v <= rho).count() as f64;
    if at_rho >= target {
        return LocalScale {
            rho,
            sigma: floor.max(f64::MIN_POSITIVE),
            clamped: true,
        };
    }

    let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
    let mut solved = false;
    for _ in 0..SMOOTH_KNN_MAX_ITER {
        let lhs = membership_sum(&d, rho, mid);
        if (lhs - target).abs() <= SMOOTH_KNN_TOLERANCE {
            solved = true;
            break;
        }
        if lhs > target {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { 0.5 * (lo + hi) };
        }
    }
    if !solved || mid < floor {
        LocalScale {
            rho,
            sigma: floor.max(f64::MIN_POSITIVE),
            clamped: true,
        }
    } else {
        LocalScale {
            rho,
            sigma: mid,
            clamped: false,
        }
    }
}

/// Directed membership strengths `(i, j, w_ij)` for every kNN edge.
pub fn directed_weights<T: Scalar>(knn: &KnnGraph<T>) -> Vec<(usize, usize, T)> {
    let mut out = Vec::with_capacity(knn.n() * knn.k());
    for i in 0..knn.n() {
        let scale = smooth_knn(knn.distances(i), knn.k());
        for (&j, &d) in knn.neighbors(i).iter().zip(knn.distances(i)) {
            let gap = d.as_f64() - scale.rho;
            let w = if gap <= 0.0 { 1.0 } else { (-gap / scale.sigma).exp() };
            out.push((i, j, T::of(w)));
        }
    }
    out
}

/// Symmetric sparse graph with weights in (0, 1]; each unordered pair is
/// stored once with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyGraph<T> {
    n: usize,
    edges: Vec<(usize, usize, T)>,
}

impl<T: Scalar> FuzzyGraph<T> {
    /// Builds from undirected edges; zero weights are dropped, duplicates and
    /// self loops are rejected by panicking.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Self {
        let mut map = BTreeMap::new();
        for (i, j, w) in edges {
            assert!(i != j && i < n && j < n, "invalid edge ({i}, {j})");
            assert!(w >= T::zero() && w <= T::one(), "weight out of range");
            if w > T::zero() {
                let prev = map.insert((i.min(j), i.max(j)), w);
                assert!(prev.is_none(), "duplicate edge ({i}, {j})");
            }
        }
        Self {
            n,
            edges: map.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unordered edges `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map_or(T::zero(), |p| self.edges[p].2)
    }

    /// Both orientations of every edge, ordered by (head, tail).
    pub fn directed(&self) -> Vec<(usize, usize, T)> {
        let mut out: Vec<_> = self.edges.iter().flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)]).collect();
        out.sort_unstable_by_key(|e| (e.0, e.1));
        out
    }

    /// Weighted degree of every vertex.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for &(i, j, w) in &self.edges {
            deg[i] += w.as_f64();
            deg[j] += w.as_f64();
        }
        deg
    }
}

/// Probabilistic t-conorm symmetrization `S = W + W^T - W o W^T`.
pub fn fuzzy_union<T: Scalar>(n: usize, directed: &[(usize, usize, T)]) -> FuzzyGraph<T> {
    let mut pairs: BTreeMap<(usize, usize), (T, T)> = BTreeMap::new();
    for &(i, j, w) in directed {
        if i == j {
            continue;
        }
        let slot = pairs.entry((i.min(j), i.max(j))).or_insert((T::zero(), T::zero()));
        if i < j {
            slot.0 = w;
        } else {
            slot.1 = w;
        }
    }
    let edges = pairs
        .into_iter()
        .map(|((i, j), (a, b))| (i, j, (a + b - a * b).min(T::one())))
        .filter(|e| e.2 > T::zero())
        .collect();
    FuzzyGraph { n, edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent scalar bisection on sigma for the bandwidth equation.
    fn bisect_sigma(d: &[f64], rho: f64, target: f64) -> f64 {
        let (mut lo, mut hi) = (1e-9, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if membership_sum(d, rho, mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn equal_distances_hit_lower_clamp() {
        let s = smooth_knn(&[2.0f64; 5], 5);
        assert!(s.clamped);
        assert_eq!(s.rho, 2.0);
        assert!((s.sigma - 2e-3).abs() < 1e-15);
    }

    #[test]
    fn two_neighbours_hit_lower_clamp() {
        let s = smooth_knn(&[1.0f64, 2.0], 2);
        assert!(s.clamped);
        assert_eq!(s.rho, 1.0);
        assert!((s.sigma - 1.5e-3).abs() < 1e-15);
    }

    #[test]
    fn three_neighbours_match_bisection_oracle() {
        let d = [1.0f64, 2.0, 3.0];
        let s = smooth_knn(&d, 3);
        assert!(!s.clamped);
        let oracle = bisect_sigma(&d, 1.0, 3f64.log2());
        // closed form: u + u^2 = log2(3) - 1 with u = exp(-1/sigma)
        assert!((oracle - 1.133_192_814).abs() < 1e-8, "oracle {oracle}");
        let residual = (membership_sum(&d, s.rho, s.sigma) - 3f64.log2()).abs();
        assert!(residual <= 1e-5, "residual {residual}");
        assert!((s.sigma - oracle).abs() < 1e-4);
    }

    #[test]
    fn union_rules() {
        let g = fuzzy_union(3, &[(0, 1, 1.0f64), (1, 2, 0.5), (2, 1, 0.5)]);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 0), 1.0);
        assert_eq!(g.weight(1, 2), 0.75);
        assert_eq!(g.weight(0, 2), 0.0);
        assert_eq!(g.edges().len(), 2);
        let zero = fuzzy_union(2, &[(0, 1, 0.0f64), (1, 0, 0.0)]);
        assert!(zero.is_empty());
    }
}
