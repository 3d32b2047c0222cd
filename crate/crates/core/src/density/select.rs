use serde::{Deserialize, Serialize};

use super::hierarchy::CondensedTree;
use crate::scalar::Scalar;

pub const NOISE: i64 = -1;

/// Flat clustering read off a condensed tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabels {
    /// Per point, `-1` for noise.
    pub labels: Vec<i64>,
    /// Per point in `[0, 1]`; 0 for noise.
    pub strengths: Vec<f64>,
    /// Per label.
    pub stabilities: Vec<f64>,
    /// Condensed-tree node of each label.
    pub nodes: Vec<usize>,
}

impl ClusterLabels {
    pub fn n_clusters(&self) -> usize {
        self.nodes.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn members(&self, label: i64) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }
}

/// Per-cluster stability, indexed by `cluster - n_points`.
pub fn stabilities<T: Scalar>(tree: &CondensedTree<T>) -> Vec<f64> {
    let birth = tree.birth_lambdas();
    let mut s = vec![0.0; tree.n_clusters()];
    for e in &tree.entries {
        let c = e.parent - tree.n_points;
        s[c] += (e.lambda.as_f64() - birth[c].as_f64()) * e.child_size as f64;
    }
    s
}

/// Excess-of-mass selection. The root is eligible only when it has no
/// cluster children.
pub fn select_eom<T: Scalar>(tree: &CondensedTree<T>) -> ClusterLabels {
    let n = tree.n_points;
    let nc = tree.n_clusters();
    let stab = stabilities(tree);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for e in &tree.entries {
        if tree.is_cluster(e.child) {
            children[e.parent - n].push(e.child - n);
        }
    }
    let mut selected = vec![false; nc];
    let mut subtree = stab.clone();
    // children always carry larger ids than their parents
    for c in (1..nc).rev() {
        if children[c].is_empty() {
            selected[c] = true;
            continue;
        }
        let below: f64 = children[c].iter().map(|&k| subtree[k]).sum();
        if stab[c] >= below {
            selected[c] = true;
            let mut stack = children[c].clone();
            while let Some(k) = stack.pop() {
                selected[k] = false;
                stack.extend_from_slice(&children[k]);
            }
        } else {
            subtree[c] = below;
        }
    }
    if nc > 0 && children[0].is_empty() {
        selected[0] = true;
    }

    let nodes: Vec<usize> = (0..nc).filter(|&c| selected[c]).map(|c| c + n).collect();
    let mut label_of = vec![NOISE; nc];
    let mut parent = vec![usize::MAX; nc];
    for e in &tree.entries {
        if tree.is_cluster(e.child) {
            parent[e.child - n] = e.parent - n;
        }
    }
    for (l, &node) in nodes.iter().enumerate() {
        label_of[node - n] = l as i64;
    }
    for c in 1..nc {
        if label_of[c] == NOISE {
            label_of[c] = label_of[parent[c]];
        }
    }

    let mut labels = vec![NOISE; n];
    let mut point_lambda = vec![0.0f64; n];
    let mut covered = vec![false; n];
    for e in &tree.entries {
        if e.child < n {
            labels[e.child] = label_of[e.parent - n];
            point_lambda[e.child] = e.lambda.as_f64();
            covered[e.child] = true;
        }
    }
    if nc > 0 && selected[0] {
        // a lone point never leaves the root
        for (p, l) in labels.iter_mut().enumerate() {
            if !covered[p] {
                *l = 0;
            }
        }
    }
    let mut lambda_max = vec![0.0f64; nodes.len()];
    for p in 0..n {
        if labels[p] != NOISE {
            let l = labels[p] as usize;
            lambda_max[l] = lambda_max[l].max(point_lambda[p]);
        }
    }
    let strengths = (0..n)
        .map(|p| match labels[p] {
            NOISE => 0.0,
            l => {
                let m = lambda_max[l as usize];
                if m > 0.0 && covered[p] {
                    (point_lambda[p] / m).clamp(0.0, 1.0)
                } else {
                    1.0
                }
            }
        })
        .collect();
    let stabilities = nodes.iter().map(|&node| subtree[node - n].max(0.0)).collect();
    ClusterLabels {
        labels,
        strengths,
        stabilities,
        nodes,
    }
}
