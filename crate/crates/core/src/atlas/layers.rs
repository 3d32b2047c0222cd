use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::density::{ClusterLabels, CondensedTree, NOISE};
use crate::scalar::Scalar;
use crate::topics::Topic;
use crate::Matrix;

/// Most labels shown at the coarsest zoom level.
pub const MAX_COARSE_LABELS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerLabel {
    pub text: String,
    pub x: f64,
    pub y: f64,
    /// Ascending.
    pub topic_ids: Vec<i64>,
    /// Member points.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelLayer {
    /// 0 is the coarsest.
    pub layer: usize,
    pub labels: Vec<LayerLabel>,
}

/// Groups topics by cutting the condensed tree at density thresholds.
///
/// Cutting at `t` puts each topic under its deepest ancestor born at a
/// lambda `<= t`. The finest layer holds one label per topic; coarser layers
/// pick the cut whose group count is largest without exceeding a geometric
/// target that starts at [`MAX_COARSE_LABELS`]. Layers with identical
/// grouping collapse. A merged group takes the label of its largest topic
/// and is anchored at the centroid of its member points.
pub fn build_label_layers<T: Scalar>(
    tree: &CondensedTree<T>,
    labels: &ClusterLabels,
    topics: &[Topic],
    layout: &Matrix<T>,
    max_layers: usize,
) -> Vec<LabelLayer> {
    assert_eq!(layout.rows(), labels.labels.len(), "layout rows match labels");
    let n_topics = labels.n_clusters();
    if n_topics == 0 {
        return Vec::new();
    }
    let n = tree.n_points;
    let parents = tree.parents();
    let birth = tree.birth_lambdas();
    // root-first ancestor chain of each topic's node, with birth lambdas
    let chains: Vec<Vec<(usize, f64)>> = labels
        .nodes
        .iter()
        .map(|&node| {
            let mut chain = vec![node];
            while let Some(p) = parents[*chain.last().expect("non-empty")] {
                chain.push(p);
            }
            chain.reverse();
            chain.into_iter().map(|c| (c, birth[c - n].as_f64())).collect()
        })
        .collect();
    let group_at = |t: f64| -> Vec<usize> {
        chains
            .iter()
            .map(|chain| chain.iter().take_while(|(_, b)| *b <= t).last().map_or(chain[0].0, |c| c.0))
            .collect()
    };
    let count = |g: &[usize]| g.iter().collect::<BTreeSet<_>>().len();

    let mut groupings: Vec<Vec<usize>> = Vec::new();
    if n_topics > MAX_COARSE_LABELS {
        let mut cuts: Vec<f64> = chains.iter().flatten().map(|c| c.1).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let options: Vec<(usize, Vec<usize>)> = cuts
            .iter()
            .map(|&t| {
                let g = group_at(t);
                (count(&g), canonical(&g))
            })
            .collect();
        let coarse = max_layers.saturating_sub(1).max(1);
        let ratio = (n_topics as f64 / MAX_COARSE_LABELS as f64).powf(1.0 / coarse as f64);
        for i in 0..coarse {
            let target = (MAX_COARSE_LABELS as f64 * ratio.powi(i as i32)).floor() as usize;
            // first maximum: the coarsest cut reaching that count
            let best = options
                .iter()
                .filter(|(c, _)| *c <= target)
                .fold(None::<&(usize, Vec<usize>)>, |acc, o| match acc {
                    Some(a) if a.0 >= o.0 => Some(a),
                    _ => Some(o),
                });
            if let Some((_, g)) = best {
                groupings.push(g.clone());
            }
        }
    }
    if max_layers > 1 || groupings.is_empty() {
        groupings.push((0..n_topics).collect());
    }
    groupings.dedup();

    // per-topic point statistics
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); n_topics];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l != NOISE {
            let row = layout.row(i);
            let s = &mut sums[l as usize];
            s.0 += row[0].as_f64();
            s.1 += row.get(1).map_or(0.0, |v| v.as_f64());
            s.2 += 1;
        }
    }
    let topic_label: BTreeMap<i64, &str> = topics.iter().map(|t| (t.topic_id, t.label.as_str())).collect();

    groupings
        .into_iter()
        .enumerate()
        .map(|(layer, grouping)| {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (topic, &g) in grouping.iter().enumerate() {
                groups.entry(g).or_default().push(topic);
            }
            let labels = groups
                .into_values()
                .map(|members| {
                    let (sx, sy, size) = members
                        .iter()
                        .fold((0.0, 0.0, 0), |a, &t| (a.0 + sums[t].0, a.1 + sums[t].1, a.2 + sums[t].2));
                    let largest = *members
                        .iter()
                        .max_by(|&&a, &&b| sums[a].2.cmp(&sums[b].2).then(b.cmp(&a)))
                        .expect("non-empty group");
                    let denom = size.max(1) as f64;
                    LayerLabel {
                        text: topic_label
                            .get(&(largest as i64))
                            .map_or_else(|| format!("Topic {largest}"), |s| s.to_string()),
                        x: sx / denom,
                        y: sy / denom,
                        topic_ids: members.iter().map(|&t| t as i64).collect(),
                        size,
                    }
                })
                .collect();
            LabelLayer { layer, labels }
        })
        .collect()
}

/// Relabels group ids by first appearance so equal partitions compare equal.
fn canonical(g: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    g.iter()
        .map(|x| {
            let next = map.len();
            *map.entry(*x).or_insert(next)
        })
        .collect()
}
