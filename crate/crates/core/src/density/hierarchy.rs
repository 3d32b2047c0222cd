//! Single-linkage merge sequence and its condensed tree.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::mst::MstEdge;
use crate::scalar::Scalar;

/// One agglomeration step. Nodes `0..n` are points; merge `k` creates node
/// `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge<T> {
    pub left: usize,
    pub right: usize,
    pub distance: T,
    pub size: usize,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    node: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            node: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Merge sequence from MST edges processed in ascending (weight, min, max)
/// order.
pub fn single_linkage<T: Scalar>(n: usize, edges: &[MstEdge<T>]) -> Vec<Merge<T>> {
    let mut sorted = edges.to_vec();
    sorted.sort_by(|x, y| x.key().partial_cmp(&y.key()).expect("finite weights"));
    let mut uf = UnionFind::new(n);
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for e in sorted {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        if ra == rb {
            continue;
        }
        let (na, nb) = (uf.node[ra], uf.node[rb]);
        let size = uf.size[ra] + uf.size[rb];
        let (big, small) = if uf.size[ra] >= uf.size[rb] { (ra, rb) } else { (rb, ra) };
        uf.parent[small] = big;
        uf.size[big] = size;
        uf.node[big] = n + merges.len();
        merges.push(Merge {
            left: na.min(nb),
            right: na.max(nb),
            distance: e.weight,
            size,
        });
    }
    merges
}

/// Condensed tree row: `child` is a point id (`< n_points`) or a cluster id
/// (`>= n_points`); `lambda` is the density at which it leaves `parent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedEntry<T> {
    pub parent: usize,
    pub child: usize,
    pub lambda: T,
    pub child_size: usize,
}

/// Cluster hierarchy keeping only splits where both sides have at least
/// `min_cluster_size` points. The root cluster id is `n_points`; child
/// cluster ids are always larger than their parent's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree<T> {
    pub n_points: usize,
    pub min_cluster_size: usize,
    pub entries: Vec<CondensedEntry<T>>,
}

impl<T: Scalar> CondensedTree<T> {
    pub fn root(&self) -> usize {
        self.n_points
    }

    pub fn is_cluster(&self, node: usize) -> bool {
        node >= self.n_points
    }

    /// Number of cluster nodes including the root.
    pub fn n_clusters(&self) -> usize {
        1 + self.entries.iter().filter(|e| self.is_cluster(e.child)).count()
    }

    pub fn cluster_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.n_points..self.n_points + self.n_clusters()
    }

    /// Parent of every node, `None` for the root.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.n_points + self.n_clusters()];
        for e in &self.entries {
            p[e.child] = Some(e.parent);
        }
        p
    }

    /// Lambda at which each cluster was born (0 for the root).
    pub fn birth_lambdas(&self) -> Vec<T> {
        let mut b = vec![T::zero(); self.n_clusters()];
        for e in &self.entries {
            if self.is_cluster(e.child) {
                b[e.child - self.n_points] = e.lambda;
            }
        }
        b
    }

    /// Cluster children of `cluster`, ascending.
    pub fn child_clusters(&self, cluster: usize) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .entries
            .iter()
            .filter(|e| e.parent == cluster && self.is_cluster(e.child))
            .map(|e| e.child)
            .collect();
        c.sort_unstable();
        c
    }

    /// Size of each cluster at birth.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_clusters()];
        s[0] = self.n_points;
        for e in &self.entries {
            if self.is_cluster(e.child) {
                s[e.child - self.n_points] = e.child_size;
            }
        }
        s
    }

    /// Points whose final parent lies in the subtree of `cluster`.
    pub fn points_under(&self, cluster: usize) -> Vec<usize> {
        let parents = self.parents();
        let mut out: Vec<usize> = (0..self.n_points)
            .filter(|&p| {
                let mut cur = parents[p];
                while let Some(c) = cur {
                    if c == cluster {
                        return true;
                    }
                    cur = parents[c];
                }
                false
            })
            .collect();
        out.sort_unstable();
        out
    }
}

fn lambda_of(distance: f64, zero_cap: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        zero_cap
    }
}

/// Condenses a single-linkage merge sequence over `n` points.
pub fn condense<T: Scalar>(n: usize, merges: &[Merge<T>], min_cluster_size: usize) -> CondensedTree<T> {
    let mut tree = CondensedTree {
        n_points: n,
        min_cluster_size,
        entries: Vec::new(),
    };
    if n == 0 {
        return tree;
    }
    if merges.is_empty() {
        // single point: it never leaves the root
        return tree;
    }
    // zero-distance merges get a lambda above every finite one
    let min_pos = merges
        .iter()
        .map(|m| m.distance.as_f64())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let zero_cap = if min_pos.is_finite() { 1e3 / min_pos } else { 1.0 };

    let size_of = |node: usize| if node < n { 1 } else { merges[node - n].size };
    let leaves_under = |node: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = &merges[x - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out.sort_unstable();
        out
    };

    let top = n + merges.len() - 1;
    let mut relabel = vec![0usize; n + merges.len()];
    relabel[top] = n;
    let mut next_label = n + 1;
    let mut queue = VecDeque::from([top]);
    while let Some(node) = queue.pop_front() {
        if node < n {
            continue;
        }
        let m = merges[node - n];
        let lambda = T::of(lambda_of(m.distance.as_f64(), zero_cap));
        let parent = relabel[node];
        let (ls, rs) = (size_of(m.left), size_of(m.right));
        let big = |s: usize| s >= min_cluster_size;
        match (big(ls), big(rs)) {
            (true, true) => {
                for (child, size) in [(m.left, ls), (m.right, rs)] {
                    relabel[child] = next_label;
                    tree.entries.push(CondensedEntry {
                        parent,
                        child: next_label,
                        lambda,
                        child_size: size,
                    });
                    next_label += 1;
                    queue.push_back(child);
                }
            }
            (false, false) => {
                for side in [m.left, m.right] {
                    for p in leaves_under(side) {
                        tree.entries.push(CondensedEntry {
                            parent,
                            child: p,
                            lambda,
                            child_size: 1,
                        });
                    }
                }
            }
            (l_big, _) => {
                let (keep, drop) = if l_big { (m.left, m.right) } else { (m.right, m.left) };
                for p in leaves_under(drop) {
                    tree.entries.push(CondensedEntry {
                        parent,
                        child: p,
                        lambda,
                        child_size: 1,
                    });
                }
                relabel[keep] = parent;
                queue.push_back(keep);
            }
        }
    }
    tree
}
