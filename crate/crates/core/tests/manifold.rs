use atlas_core::manifold::{
    directed_weights, fit_ab, fuzzy_graph, knn_graph, membership_sum, reduce, smooth_knn, tsne_2d, Metric, TsneParams,
    UmapParams,
};
use atlas_core::rng::seeded;
use atlas_core::synth::{planted_blobs, BlobSpec};
use atlas_core::{Matrix, Matrix64};
use rand::Rng;

fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix64 {
    let mut rng = seeded(seed);
    Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    1.0 - dot / (na * nb)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn knn_matches_brute_force() {
    let x = random_matrix(200, 12, 11);
    for (metric, dist) in [(Metric::Euclidean, euclidean as fn(&[f64], &[f64]) -> f64), (Metric::Cosine, cosine_distance)] {
        let g = knn_graph(&x, 15, metric).unwrap();
        for i in 0..200 {
            let mut all: Vec<(f64, usize)> = (0..200).filter(|&j| j != i).map(|j| (dist(x.row(i), x.row(j)), j)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let oracle: Vec<usize> = all[..15].iter().map(|p| p.1).collect();
            assert_eq!(g.neighbors(i), oracle.as_slice(), "{metric} row {i}");
            for (got, want) in g.distances(i).iter().zip(&all[..15]) {
                assert!((got - want.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn fuzzy_graph_is_symmetric_with_unit_interval_weights() {
    let x = random_matrix(300, 8, 12);
    let g = fuzzy_graph(&x, 10, Metric::Euclidean).unwrap();
    for &(i, j, w) in g.edges() {
        assert!(i < j);
        assert!(w > 0.0 && w <= 1.0);
        assert_eq!(g.weight(i, j), g.weight(j, i));
    }
    let knn = knn_graph(&x, 10, Metric::Euclidean).unwrap();
    let target = 10f64.log2();
    for i in 0..300 {
        let d: Vec<f64> = knn.distances(i).to_vec();
        let s = smooth_knn(&d, 10);
        if !s.clamped {
            assert!((membership_sum(&d, s.rho, s.sigma) - target).abs() <= 1e-5);
        }
    }
    assert_eq!(directed_weights(&knn).len(), 3000);
}

fn one_nn_accuracy(y: &Matrix64, labels: &[i64]) -> f64 {
    let n = y.rows();
    let hits = (0..n)
        .filter(|&i| {
            let nn = (0..n)
                .filter(|&j| j != i)
                .min_by(|&a, &b| euclidean(y.row(i), y.row(a)).total_cmp(&euclidean(y.row(i), y.row(b))))
                .unwrap();
            labels[nn] == labels[i]
        })
        .count();
    hits as f64 / n as f64
}

#[test]
fn two_blobs_in_two_dimensions_keep_membership() {
    let p = planted_blobs::<f64>(&BlobSpec { blobs: 2, per_blob: 200, dim: 16, noise: 0, seed: 3, ..Default::default() });
    let params = UmapParams { n_components: 2, n_neighbors: 15, n_epochs: 200, ..Default::default() };
    let layout = reduce(&p.data, &params).unwrap();
    assert!(layout.is_finite());
    let acc = one_nn_accuracy(&layout.coords, &p.labels);
    assert!(acc >= 0.95, "1-NN accuracy {acc}");
}

fn within_between(y: &Matrix64, labels: &[i64]) -> (f64, f64) {
    let (mut w, mut nw, mut b, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..y.rows() {
        for j in i + 1..y.rows() {
            let d = euclidean(y.row(i), y.row(j));
            if labels[i] == labels[j] {
                w += d;
                nw += 1;
            } else {
                b += d;
                nb += 1;
            }
        }
    }
    (w / nw as f64, b / nb as f64)
}

#[test]
fn reduction_preserves_blob_structure() {
    let p = planted_blobs::<f64>(&BlobSpec { blobs: 3, per_blob: 200, dim: 32, noise: 0, seed: 4, ..Default::default() });
    let params = UmapParams { n_neighbors: 15, n_epochs: 200, ..Default::default() };
    let layout = reduce(&p.data, &params).unwrap();
    assert_eq!((layout.n(), layout.dim()), (600, 10));
    let (within, between) = within_between(&layout.coords, &p.labels);
    assert!(within < between, "within {within} between {between}");
}

#[test]
fn two_stage_reduction_reaches_target_dimension() {
    let p = planted_blobs::<f32>(&BlobSpec { blobs: 2, per_blob: 100, dim: 16, noise: 0, seed: 5, ..Default::default() });
    let params = UmapParams { n_neighbors: 10, n_epochs: 50, two_stage_components: Some(6), n_components: 3, ..Default::default() };
    let layout = reduce(&p.data, &params).unwrap();
    assert_eq!(layout.dim(), 3);
    assert!(layout.is_finite());
}

#[test]
fn tsne_projection_is_seeded() {
    let p = planted_blobs::<f64>(&BlobSpec { blobs: 3, per_blob: 40, dim: 10, noise: 0, seed: 6, ..Default::default() });
    let params = TsneParams { perplexity: 10.0, n_iter: 400, ..Default::default() };
    let a = tsne_2d(&p.data, &params).unwrap();
    let b = tsne_2d(&p.data, &params).unwrap();
    assert_eq!(a.layout.to_bytes(), b.layout.to_bytes());
    assert!(one_nn_accuracy(&a.layout.coords, &p.labels) >= 0.95);
}

#[test]
fn fitted_curve_is_stable() {
    let c = fit_ab(0.05).unwrap();
    assert!(c.eval(0.025) >= 0.9);
    assert_eq!(c, fit_ab(0.05).unwrap());
}
