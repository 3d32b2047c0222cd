use std::time::Instant;

use atlas_core::density::{hdbscan, HdbscanParams};
use atlas_core::manifold::{reduce, UmapParams};
use atlas_core::metrics::adjusted_rand_index;
use atlas_core::synth::{planted_blobs, BlobSpec};

fn main() {
    for seed in 0..3u64 {
        let t = Instant::now();
        let p = planted_blobs::<f32>(&BlobSpec { per_blob: 562, noise: 500, seed, ..Default::default() });
        let params = UmapParams { rng_seed: seed, ..Default::default() };
        let layout = reduce(&p.data, &params).unwrap();
        let t1 = t.elapsed();
        let c = hdbscan(&layout.coords, &HdbscanParams { min_cluster_size: 50, min_samples: 10, ..Default::default() }).unwrap();
        let (a, b): (Vec<i64>, Vec<i64>) = p.labels.iter().zip(&c.labels.labels).filter(|(&t, _)| t >= 0).map(|(&t, &l)| (t, l)).unzip();
        println!("seed {seed}: reduce {:?} total {:?} clusters {} noise {} ari {:.4}", t1, t.elapsed(), c.labels.n_clusters(), c.labels.noise_count(), adjusted_rand_index(&a, &b));
    }
}
