//! Dimensionality reduction: UMAP for the clustering space and exact t-SNE
//! for the 2D map.

mod curve;
mod fuzzy;
mod knn;
mod sgd;
mod spectral;
mod tsne;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use curve::{fit_ab, fit_rms, CurveParams};
pub use fuzzy::{directed_weights, fuzzy_union, membership_sum, smooth_knn, FuzzyGraph, LocalScale, SMOOTH_KNN_TOLERANCE};
pub use knn::{knn_graph, KnnGraph};
pub use sgd::{attractive_coeff, repulsive_coeff, sampled_pair_gradient, sampled_pair_objective, REPULSION_EPS};
pub use tsne::{conditional_probabilities, joint_probabilities, kl_divergence, kl_gradient, tsne_2d, TsneParams, TsneResult};

use crate::scalar::Scalar;
use crate::Matrix;

/// Largest vertex count initialized spectrally; larger graphs start from a
/// seeded uniform layout.
pub const SPECTRAL_INIT_MAX_POINTS: usize = 5_000;
const RANDOM_INIT_RANGE: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum ManifoldError {
    #[error("need more than k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("row {0} has zero norm, cosine distance undefined")]
    ZeroNormRow(usize),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("curve fit did not converge")]
    FitDidNotConverge,
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("{n} points exceed the exact t-SNE cap of {cap}; use a 2-component UMAP reduction instead")]
    TooManyPointsForExact { n: usize, cap: usize },
    #[error("perplexity {perplexity} must be positive and below n/3 (n = {n})")]
    PerplexityTooLarge { perplexity: f64, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cosine => "cosine",
            Self::Euclidean => "euclidean",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(format!("unknown metric {other:?} (expected cosine or euclidean)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UmapParams {
    pub n_components: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub negative_sample_rate: usize,
    pub n_epochs: usize,
    pub metric: Metric,
    pub rng_seed: u64,
    /// When set, first reduce to this many components, then to
    /// `n_components` (euclidean in the intermediate space).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_stage_components: Option<usize>,
}

impl Default for UmapParams {
    fn default() -> Self {
        Self {
            n_components: 10,
            n_neighbors: 50,
            min_dist: 0.05,
            negative_sample_rate: 20,
            n_epochs: 1000,
            metric: Metric::Cosine,
            rng_seed: 42,
            two_stage_components: None,
        }
    }
}

impl UmapParams {
    pub fn validate(&self) -> Result<(), ManifoldError> {
        let bad = |m: &str| Err(ManifoldError::InvalidParams(m.to_owned()));
        if self.n_neighbors < 2 {
            return bad("n_neighbors must be >= 2");
        }
        if !(self.min_dist > 0.0 && self.min_dist < 1.0) {
            return bad("min_dist must lie in (0, 1)");
        }
        if self.n_components < 1 {
            return bad("n_components must be >= 1");
        }
        if self.n_epochs < 1 {
            return bad("n_epochs must be >= 1");
        }
        if self.two_stage_components == Some(0) {
            return bad("two_stage_components must be >= 1");
        }
        Ok(())
    }
}

/// Low-dimensional coordinates, one row per input point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout<T> {
    pub coords: Matrix<T>,
}

impl<T: Scalar> Layout<T> {
    pub fn n(&self) -> usize {
        self.coords.rows()
    }

    pub fn dim(&self) -> usize {
        self.coords.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.is_finite()
    }

    /// Little-endian bytes of every coordinate, for determinism checks.
    pub fn to_bytes(&self) -> Vec<u8>
    where
        T: Into<f64>,
    {
        self.coords.as_slice().iter().flat_map(|v| (*v).into().to_le_bytes()).collect()
    }
}

fn random_init<T: Scalar>(n: usize, dim: usize, seed: u64) -> Layout<T> {
    let mut rng = crate::rng::seeded(seed);
    let data = (0..n * dim)
        .map(|_| T::of(rng.random_range(-RANDOM_INIT_RANGE..RANDOM_INIT_RANGE)))
        .collect();
    Layout {
        coords: Matrix::from_vec(n, dim, data),
    }
}

/// Starting layout: spectral (rescaled to `[0, 10]` per axis, plus a tiny
/// seeded jitter) for graphs up to [`SPECTRAL_INIT_MAX_POINTS`] vertices,
/// uniform in `[-10, 10]` otherwise or when the spectral route is undefined.
pub fn initial_layout<T: Scalar>(graph: &FuzzyGraph<T>, dim: usize, seed: u64) -> Layout<T> {
    let n = graph.n();
    if n <= SPECTRAL_INIT_MAX_POINTS {
        let mut rng = crate::rng::seeded(seed ^ 0x5bec_7a1e);
        if let Some(emb) = spectral::spectral_embedding(graph, dim, &mut rng) {
            let mut out = vec![0.0f64; n * dim];
            for c in 0..dim {
                let col = (0..n).map(|i| emb[i * dim + c]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
                let span = if hi > lo { hi - lo } else { 1.0 };
                for i in 0..n {
                    let jitter = rng.random_range(-1e-4..1e-4);
                    out[i * dim + c] = 10.0 * (emb[i * dim + c] - lo) / span + jitter;
                }
            }
            return Layout {
                coords: Matrix::from_vec(n, dim, out.into_iter().map(T::of).collect()),
            };
        }
    }
    random_init(n, dim, seed)
}

/// Optimizes a layout of `graph` from [`initial_layout`].
pub fn optimize_layout<T: Scalar>(graph: &FuzzyGraph<T>, params: &UmapParams) -> Result<Layout<T>, ManifoldError> {
    params.validate()?;
    if graph.is_empty() {
        return Err(ManifoldError::EmptyGraph);
    }
    let curve = fit_ab(params.min_dist)?;
    let mut layout = initial_layout(graph, params.n_components, params.rng_seed);
    optimize_layout_from(graph, params, curve, &mut layout);
    Ok(layout)
}

/// Optimizes an explicit starting layout in place.
pub fn optimize_layout_from<T: Scalar>(graph: &FuzzyGraph<T>, params: &UmapParams, curve: CurveParams, layout: &mut Layout<T>) {
    sgd::optimize(
        graph,
        layout,
        sgd::SgdSettings {
            n_epochs: params.n_epochs,
            negative_sample_rate: params.negative_sample_rate,
            seed: params.rng_seed,
            curve,
        },
    );
}

/// kNN graph, local scaling and fuzzy union in one step.
pub fn fuzzy_graph<T: Scalar>(x: &Matrix<T>, n_neighbors: usize, metric: Metric) -> Result<FuzzyGraph<T>, ManifoldError> {
    let knn = knn_graph(x, n_neighbors, metric)?;
    Ok(fuzzy_union(x.rows(), &directed_weights(&knn)))
}

/// UMAP reduction of `x` to `params.n_components` dimensions.
pub fn reduce<T: Scalar>(x: &Matrix<T>, params: &UmapParams) -> Result<Layout<T>, ManifoldError> {
    params.validate()?;
    if let Some(mid) = params.two_stage_components {
        let first = UmapParams {
            n_components: mid,
            two_stage_components: None,
            ..params.clone()
        };
        let intermediate = reduce(x, &first)?;
        let second = UmapParams {
            metric: Metric::Euclidean,
            two_stage_components: None,
            ..params.clone()
        };
        return reduce(&intermediate.coords, &second);
    }
    let graph = fuzzy_graph(x, params.n_neighbors, params.metric)?;
    let layout = optimize_layout(&graph, params)?;
    if !layout.is_finite() {
        return Err(ManifoldError::NonFinite);
    }
    Ok(layout)
}
