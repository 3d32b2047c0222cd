//! Numeric core of the content atlas.
//!
//! Turns row-aligned embedding matrices, generated descriptions and app
//! metadata into clusters, keyword topics, ranked retrieval hits and an
//! exportable 2D atlas bundle. The math is generic over [`Scalar`] so the
//! same kernels run in `f32` for corpus-scale work and in `f64` for
//! gradient and oracle checks.

pub mod atlas;
pub mod corpus;
pub mod density;
pub mod hash;
pub mod manifold;
pub mod matrix;
pub mod metrics;
pub mod retrieval;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod topics;

pub use matrix::Matrix;
pub use scalar::Scalar;

pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Layout32 = manifold::Layout<f32>;
pub type Layout64 = manifold::Layout<f64>;
pub type KnnGraph32 = manifold::KnnGraph<f32>;
pub type FuzzyGraph32 = manifold::FuzzyGraph<f32>;
pub type CondensedTree32 = density::CondensedTree<f32>;
pub type CondensedTree64 = density::CondensedTree<f64>;
pub type CosineIndex32 = retrieval::CosineIndex<f32>;
