//! Planted-structure generators for tests, benchmarks and demo corpora.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::seeded;
use crate::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub blobs: usize,
    pub per_blob: usize,
    pub dim: usize,
    /// Standard deviation of each blob around its center.
    pub spread: f64,
    /// Distance of each center from the origin.
    pub radius: f64,
    /// Points drawn uniformly from the bounding box of the blobs.
    pub noise: usize,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            blobs: 8,
            per_blob: 562,
            dim: 64,
            spread: 1.0,
            radius: 12.0,
            noise: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planted<T> {
    pub data: Matrix<T>,
    /// Blob index per row; `-1` for background noise.
    pub labels: Vec<i64>,
    pub centers: Matrix<T>,
}

/// Isotropic Gaussian blobs with centers at random directions plus uniform
/// background points. Rows are shuffled.
pub fn planted_blobs<T: Scalar>(spec: &BlobSpec) -> Planted<T> {
    let mut rng = seeded(spec.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut centers = Vec::with_capacity(spec.blobs * spec.dim);
    for _ in 0..spec.blobs {
        let v: Vec<f64> = (0..spec.dim).map(|_| std.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        centers.extend(v.iter().map(|x| x / norm * spec.radius));
    }
    let n = spec.blobs * spec.per_blob + spec.noise;
    let mut rows: Vec<(Vec<f64>, i64)> = Vec::with_capacity(n);
    for b in 0..spec.blobs {
        let c = &centers[b * spec.dim..(b + 1) * spec.dim];
        for _ in 0..spec.per_blob {
            rows.push((c.iter().map(|&m| m + spec.spread * std.sample(&mut rng)).collect(), b as i64));
        }
    }
    let (mut lo, mut hi) = (vec![f64::INFINITY; spec.dim], vec![f64::NEG_INFINITY; spec.dim]);
    for (r, _) in &rows {
        for j in 0..spec.dim {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    if rows.is_empty() {
        lo.fill(-spec.radius);
        hi.fill(spec.radius);
    }
    for _ in 0..spec.noise {
        rows.push(((0..spec.dim).map(|j| rng.random_range(lo[j]..=hi[j])).collect(), -1));
    }
    for i in (1..rows.len()).rev() {
        let j = rng.random_range(0..=i);
        rows.swap(i, j);
    }
    let labels = rows.iter().map(|r| r.1).collect();
    let data = rows.into_iter().flat_map(|r| r.0).map(T::of).collect();
    Planted {
        data: Matrix::from_vec(n, spec.dim, data),
        labels,
        centers: Matrix::from_vec(spec.blobs, spec.dim, centers.into_iter().map(T::of).collect()),
    }
}
