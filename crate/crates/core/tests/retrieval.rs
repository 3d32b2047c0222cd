use std::collections::HashSet;

use atlas_core::retrieval::{
    precision_at_k, retrieve_dual, search, CosineIndex, Query, QueryEmbedder, RetrievalError, Space, DEFAULT_K,
};
use atlas_core::rng::seeded;
use atlas_core::Matrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_index(n: usize, d: usize, seed: u64) -> (Vec<String>, Matrix<f32>) {
    let mut rng = seeded(seed);
    let data: Vec<f32> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    // ids deliberately not in row order
    let ids = (0..n).map(|i| format!("rec{:06}", (i * 7919) % n)).collect();
    (ids, Matrix::from_vec(n, d, data))
}

fn oracle(ids: &[String], m: &Matrix<f32>, q: &[f32], k: usize) -> Vec<String> {
    let qn = q.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
    let mut scored: Vec<(f64, &String)> = (0..m.rows())
        .map(|i| {
            let r = m.row(i);
            let rn = r.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
            let dot: f64 = r.iter().zip(q).map(|(a, b)| *a as f64 * *b as f64).sum();
            (dot / (rn * qn), &ids[i])
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
    scored.into_iter().take(k).map(|s| s.1.clone()).collect()
}

#[test]
fn self_query_ranks_first() {
    let (ids, m) = random_index(100, 32, 1);
    let q = m.row(7).to_vec();
    let idx = CosineIndex::new(ids.clone(), m).unwrap();
    let hits = search(&idx, &q, 3, Space::ImageEmbedding).unwrap();
    assert_eq!(hits[0].record_id, ids[7]);
    assert!((hits[0].score - 1.0).abs() < 1e-6);
    assert_eq!(hits.iter().map(|h| h.rank).collect::<Vec<_>>(), [1, 2, 3]);
    assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn orthogonal_query_orders_by_id() {
    let m = Matrix::from_rows(&[[1.0f32, 0.0, 0.0], [0.0, 2.0, 0.0], [3.0, 1.0, 0.0]]);
    let ids = vec!["c".to_string(), "a".into(), "b".into()];
    let idx = CosineIndex::new(ids, m).unwrap();
    let hits = search(&idx, &[0.0, 0.0, 5.0], 3, Space::DescriptionEmbedding).unwrap();
    assert_eq!(hits.iter().map(|h| h.record_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
    assert!(hits.iter().all(|h| h.score.abs() < 1e-6));
}

#[test]
fn matches_full_sort_oracle() {
    let (ids, m) = random_index(10_000, 256, 2);
    let idx = CosineIndex::new(ids.clone(), m.clone()).unwrap();
    let mut rng = seeded(3);
    for _ in 0..5 {
        let q: Vec<f32> = (0..256).map(|_| StandardNormal.sample(&mut rng)).collect();
        let got: Vec<String> = search(&idx, &q, 20, Space::ImageEmbedding).unwrap().into_iter().map(|h| h.record_id).collect();
        assert_eq!(got, oracle(&ids, &m, &q, 20));
    }
}

#[test]
fn exact_on_small_sweeps() {
    let mut rng = seeded(4);
    for (n, d, k) in [(50, 3, 50), (500, 512, 50), (1000, 17, 1), (2000, 64, 33)] {
        let (ids, m) = random_index(n, d, rng.random());
        let idx = CosineIndex::new(ids.clone(), m.clone()).unwrap();
        let q: Vec<f32> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let got: Vec<String> = search(&idx, &q, k, Space::ImageEmbedding).unwrap().into_iter().map(|h| h.record_id).collect();
        assert_eq!(got, oracle(&ids, &m, &q, k), "n={n} d={d} k={k}");
    }
}

#[test]
fn positive_scaling_keeps_ranking() {
    let (ids, m) = random_index(3000, 48, 5);
    let idx = CosineIndex::new(ids, m).unwrap();
    let q: Vec<f32> = (0..48).map(|i| (i as f32).sin()).collect();
    let base = idx.topk(&q, 25).unwrap();
    for c in [0.5f32, 2.0, 64.0] {
        let scaled: Vec<f32> = q.iter().map(|v| v * c).collect();
        let r: Vec<usize> = idx.topk(&scaled, 25).unwrap().iter().map(|h| h.0).collect();
        assert_eq!(r, base.iter().map(|h| h.0).collect::<Vec<_>>());
    }
}

#[test]
fn tied_scores_break_by_record_id() {
    let m = Matrix::from_rows(&[[1.0f32, 0.0], [2.0, 0.0], [0.5, 0.0], [0.0, 1.0]]);
    let ids = vec!["z".to_string(), "m".into(), "a".into(), "b".into()];
    let idx = CosineIndex::new(ids, m).unwrap();
    let hits = search(&idx, &[1.0, 0.0], 2, Space::ImageEmbedding).unwrap();
    assert_eq!(hits.iter().map(|h| h.record_id.as_str()).collect::<Vec<_>>(), ["a", "m"]);
}

#[test]
fn rejects_bad_requests() {
    let (ids, m) = random_index(10, 4, 6);
    let idx = CosineIndex::new(ids, m).unwrap();
    assert_eq!(idx.topk(&[1.0; 3], 2), Err(RetrievalError::Dimension { expected: 4, found: 3 }));
    assert_eq!(idx.topk(&[1.0; 4], 11), Err(RetrievalError::BadK { k: 11, n: 10 }));
    assert!(CosineIndex::new(vec!["a".into()], Matrix::<f32>::zeros(2, 2)).is_err());
}

struct Fixed;

impl QueryEmbedder for Fixed {
    fn embed_query(&self, space: Space, text: &str) -> Result<Vec<f32>, String> {
        let seed = text.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
        let mut rng = seeded(seed);
        match space {
            Space::ImageEmbedding => Ok((0..16).map(|_| StandardNormal.sample(&mut rng)).collect()),
            Space::DescriptionEmbedding => Err("description endpoint down".into()),
        }
    }
}

#[test]
fn dual_retrieval_reports_each_space() {
    let (ids, m) = random_index(200, 16, 7);
    let image = CosineIndex::new(ids.clone(), m.clone()).unwrap();
    let (ids2, m2) = random_index(200, 16, 8);
    let desc = CosineIndex::new(ids2, m2).unwrap();
    let q = Query::new("cat");
    assert_eq!(q.text(), "An image with cat content");
    assert_eq!(q.k, DEFAULT_K);
    let r = retrieve_dual(&q, &image, &desc, &Fixed).unwrap();
    let qv = Fixed.embed_query(Space::ImageEmbedding, "An image with cat content").unwrap();
    let got: Vec<String> = r.image_space.as_ref().unwrap().iter().map(|h| h.record_id.clone()).collect();
    assert_eq!(got, oracle(&ids, &m, &qv, 5));
    assert!(r.description_space.is_err());
    assert_eq!(r.warnings().len(), 1);

    let raw = Query {
        template: None,
        ..Query::new("cat")
    };
    assert_eq!(raw.text(), "cat");
    assert!(retrieve_dual(&Query::new("  "), &image, &desc, &Fixed).is_err());
}

#[test]
fn precision_counts_relevant_prefix() {
    let ranked: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
    let rel: HashSet<String> = ["a", "c", "z"].iter().map(|s| s.to_string()).collect();
    assert_eq!(precision_at_k(&ranked, &rel, 5), 0.4);
    assert_eq!(precision_at_k(&ranked, &rel, 1), 1.0);
    assert_eq!(precision_at_k(&ranked[..2], &rel, 4), 0.25);
}
