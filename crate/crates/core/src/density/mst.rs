use serde::{Deserialize, Serialize};

use super::core::mutual_reachability;
use crate::scalar::{squared_euclidean, Scalar};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge<T> {
    pub a: usize,
    pub b: usize,
    pub weight: T,
}

impl<T: Scalar> MstEdge<T> {
    /// Total order used for every tie-break: weight, then (min, max) index.
    pub fn key(&self) -> (T, usize, usize) {
        (self.weight, self.a.min(self.b), self.a.max(self.b))
    }
}

#[inline]
fn less<T: Scalar>(w1: T, a1: usize, b1: usize, w2: T, a2: usize, b2: usize) -> bool {
    let k1 = (a1.min(b1), a1.max(b1));
    let k2 = (a2.min(b2), a2.max(b2));
    w1 < w2 || (w1 == w2 && k1 < k2)
}

/// Minimum spanning tree of the complete mutual-reachability graph by Prim's
/// algorithm in O(n^2) time and O(n) memory. Edges come out in insertion
/// order; ties resolve by (min index, max index).
pub fn mst<T: Scalar>(x: &Matrix<T>, cores: &[T]) -> Vec<MstEdge<T>> {
    let n = x.rows();
    assert_eq!(cores.len(), n, "one core distance per point");
    if n < 2 {
        return Vec::new();
    }
    let dist = |i: usize, j: usize| mutual_reachability(squared_euclidean(x.row(i), x.row(j)).sqrt(), cores[i], cores[j]);
    let mut in_tree = vec![false; n];
    let mut best = vec![T::infinity(); n];
    let mut from = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut pick = usize::MAX;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d = dist(current, v);
            if from[v] == usize::MAX || less(d, current, v, best[v], from[v], v) {
                best[v] = d;
                from[v] = current;
            }
            if pick == usize::MAX || less(best[v], from[v], v, best[pick], from[pick], pick) {
                pick = v;
            }
        }
        in_tree[pick] = true;
        edges.push(MstEdge {
            a: from[pick],
            b: pick,
            weight: best[pick],
        });
        current = pick;
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_one_edge() {
        let x = Matrix::from_rows(&[[0.0f64, 0.0], [3.0, 4.0]]);
        let e = mst(&x, &[0.0, 0.0]);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].weight, 5.0);
    }

    #[test]
    fn unit_square_uses_three_sides() {
        let x = Matrix::from_rows(&[[0.0f64, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let e = mst(&x, &[0.0; 4]);
        assert_eq!(e.len(), 3);
        assert_eq!(e.iter().map(|e| e.weight).sum::<f64>(), 3.0);
        // tie-break picks (0,1), (1,2) then (0,3) over (2,3)
        let mut keys: Vec<_> = e.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        keys.sort();
        assert_eq!(keys, [(0, 1), (0, 3), (1, 2)]);
    }
}
