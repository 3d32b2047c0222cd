//! Exact t-SNE for 2D visualization.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Layout, ManifoldError};
use crate::scalar::{squared_euclidean, Scalar};
use crate::Matrix;

/// Entropy tolerance (nats) of the per-point bandwidth search.
pub const PERPLEXITY_TOLERANCE: f64 = 1e-5;
const BANDWIDTH_MAX_ITER: usize = 200;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneParams {
    pub perplexity: f64,
    pub n_iter: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Largest n accepted; memory is O(n^2).
    pub max_exact_points: usize,
    pub rng_seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            n_iter: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            max_exact_points: 20_000,
            rng_seed: 42,
        }
    }
}

/// Finished projection plus the KL divergence after every iteration.
#[derive(Debug, Clone)]
pub struct TsneResult<T> {
    pub layout: Layout<T>,
    pub kl_trace: Vec<f64>,
}

/// Row-stochastic conditional probabilities `p_{j|i}` with Gaussian kernels
/// whose entropy equals `ln(perplexity)`.
pub fn conditional_probabilities<T: Scalar>(x: &Matrix<T>, perplexity: f64) -> Matrix<T> {
    let n = x.rows();
    let target = perplexity.ln();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let d: Vec<f64> = (0..n)
                .map(|j| if j == i { 0.0 } else { squared_euclidean(xi, x.row(j)).as_f64() })
                .collect();
            // shift by the nearest distance; the normalized row is unchanged
            let dmin = (0..n).filter(|&j| j != i).map(|j| d[j]).fold(f64::INFINITY, f64::min);
            let mut p = vec![0.0f64; n];
            let (mut beta, mut lo, mut hi) = (1.0f64, 0.0f64, f64::INFINITY);
            for _ in 0..BANDWIDTH_MAX_ITER {
                let mut sum = 0.0;
                let mut wsum = 0.0;
                for j in 0..n {
                    p[j] = if j == i { 0.0 } else { (-beta * (d[j] - dmin)).exp() };
                    sum += p[j];
                    wsum += p[j] * (d[j] - dmin);
                }
                let entropy = sum.ln() + beta * wsum / sum;
                let diff = entropy - target;
                if diff.abs() <= PERPLEXITY_TOLERANCE {
                    break;
                }
                if diff > 0.0 {
                    lo = beta;
                    beta = if hi.is_infinite() { beta * 2.0 } else { 0.5 * (beta + hi) };
                } else {
                    hi = beta;
                    beta = 0.5 * (beta + lo);
                }
            }
            let sum: f64 = p.iter().sum();
            p.iter().map(|v| T::of(v / sum)).collect()
        })
        .collect();
    Matrix::from_vec(n, n, rows.into_iter().flatten().collect())
}

/// Symmetrized joint probabilities `(P + P^T) / 2n`, summing to 1.
pub fn joint_probabilities<T: Scalar>(conditional: &Matrix<T>) -> Matrix<T> {
    let n = conditional.rows();
    let scale = T::of(0.5 / n as f64);
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p.row_mut(i)[j] = (conditional.row(i)[j] + conditional.row(j)[i]) * scale;
        }
    }
    p
}

struct Evaluation {
    kl: f64,
    grad: Vec<f64>,
}

/// KL(P||Q) and its gradient at `y` (n x 2, row-major). The gradient uses
/// `exaggeration * P`; the reported KL always uses the plain P.
fn evaluate<T: Scalar>(p: &Matrix<T>, y: &[f64], exaggeration: f64) -> Evaluation {
    let n = p.rows();
    let num = |i: usize, j: usize| {
        let dx = y[2 * i] - y[2 * j];
        let dy = y[2 * i + 1] - y[2 * j + 1];
        1.0 / (1.0 + dx * dx + dy * dy)
    };
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| j != i).map(|j| num(i, j)).sum())
        .collect();
    let z: f64 = row_sums.iter().sum();
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut gx, mut gy, mut kl) = (0.0, 0.0, 0.0);
            let pi = p.row(i);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let w = num(i, j);
                let q = w / z;
                let pij = pi[j].as_f64();
                if pij > 0.0 {
                    kl += pij * (pij / q.max(f64::MIN_POSITIVE)).ln();
                }
                let m = 4.0 * (exaggeration * pij - q) * w;
                gx += m * (y[2 * i] - y[2 * j]);
                gy += m * (y[2 * i + 1] - y[2 * j + 1]);
            }
            (gx, gy, kl)
        })
        .collect();
    let mut grad = Vec::with_capacity(2 * n);
    let mut kl = 0.0;
    for (gx, gy, k) in rows {
        grad.push(gx);
        grad.push(gy);
        kl += k;
    }
    Evaluation { kl, grad }
}

/// KL(P||Q) of a 2D embedding.
pub fn kl_divergence<T: Scalar>(p: &Matrix<T>, y: &Matrix<f64>) -> f64 {
    evaluate(p, y.as_slice(), 1.0).kl
}

/// Gradient of [`kl_divergence`] with respect to the embedding.
pub fn kl_gradient<T: Scalar>(p: &Matrix<T>, y: &Matrix<f64>) -> Matrix<f64> {
    Matrix::from_vec(y.rows(), 2, evaluate(p, y.as_slice(), 1.0).grad)
}

fn check(n: usize, params: &TsneParams) -> Result<(), ManifoldError> {
    if n > params.max_exact_points {
        return Err(ManifoldError::TooManyPointsForExact {
            n,
            cap: params.max_exact_points,
        });
    }
    if !(params.perplexity > 0.0) || params.perplexity >= n as f64 / 3.0 {
        return Err(ManifoldError::PerplexityTooLarge {
            perplexity: params.perplexity,
            n,
        });
    }
    Ok(())
}

/// Exact t-SNE to two dimensions.
///
/// Gradient descent with momentum and per-coordinate gains; P is
/// exaggerated for the first `exaggeration_iters` iterations. After that, a
/// step that would raise the KL divergence is rejected, the learning rate is
/// halved and momentum is reset, so the KL trace never increases.
pub fn tsne_2d<T: Scalar>(x: &Matrix<T>, params: &TsneParams) -> Result<TsneResult<T>, ManifoldError> {
    let n = x.rows();
    check(n, params)?;
    if !x.is_finite() {
        return Err(ManifoldError::NonFinite);
    }
    let p = joint_probabilities(&conditional_probabilities(x, params.perplexity));

    let mut rng = crate::rng::seeded(params.rng_seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<f64> = (0..2 * n).map(|_| normal.sample(&mut rng)).collect();
    let mut update = vec![0.0f64; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut lr = params.learning_rate;
    let exaggeration = |it: usize| if it < params.exaggeration_iters { params.early_exaggeration } else { 1.0 };

    let mut current = evaluate(&p, &y, exaggeration(0));
    let mut kl_trace = Vec::with_capacity(params.n_iter);
    for it in 0..params.n_iter {
        let momentum = if it < params.exaggeration_iters {
            params.initial_momentum
        } else {
            params.final_momentum
        };
        let mut candidate = y.clone();
        let mut cand_update = update.clone();
        let mut cand_gains = gains.clone();
        for k in 0..2 * n {
            let g = current.grad[k];
            cand_gains[k] = if (g > 0.0) != (cand_update[k] > 0.0) {
                cand_gains[k] + 0.2
            } else {
                (cand_gains[k] * 0.8).max(MIN_GAIN)
            };
            cand_update[k] = momentum * cand_update[k] - lr * cand_gains[k] * g;
            candidate[k] += cand_update[k];
        }
        let (mx, my) = (0..n).fold((0.0, 0.0), |(a, b), i| (a + candidate[2 * i], b + candidate[2 * i + 1]));
        for i in 0..n {
            candidate[2 * i] -= mx / n as f64;
            candidate[2 * i + 1] -= my / n as f64;
        }
        let next = evaluate(&p, &candidate, exaggeration(it + 1));
        let post = it >= params.exaggeration_iters;
        if post && next.kl > current.kl {
            lr *= 0.5;
            update.iter_mut().for_each(|u| *u = 0.0);
            gains.iter_mut().for_each(|g| *g = 1.0);
            kl_trace.push(current.kl);
            continue;
        }
        y = candidate;
        update = cand_update;
        gains = cand_gains;
        current = next;
        kl_trace.push(current.kl);
    }
    let coords = Matrix::from_vec(n, 2, y.into_iter().map(T::of).collect());
    if !coords.is_finite() {
        return Err(ManifoldError::NonFinite);
    }
    Ok(TsneResult {
        layout: Layout { coords },
        kl_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n_per: usize, seed: u64) -> Matrix<f64> {
        let mut rng = crate::rng::seeded(seed);
        let centers = [[0.0, 0.0, 0.0], [8.0, 0.0, 1.0], [0.0, 9.0, -2.0]];
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..n_per {
                rows.push([
                    c[0] + rng.random::<f64>() - 0.5,
                    c[1] + rng.random::<f64>() - 0.5,
                    c[2] + rng.random::<f64>() - 0.5,
                ]);
            }
        }
        Matrix::from_rows(&rows)
    }

    #[test]
    fn conditional_rows_sum_to_one_and_joint_sums_to_one() {
        let x = blobs(10, 1);
        let cond = conditional_probabilities(&x, 5.0);
        for i in 0..x.rows() {
            let s: f64 = cond.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert_eq!(cond.row(i)[i], 0.0);
            // entropy hits ln(perplexity)
            let h: f64 = -cond.row(i).iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();
            assert!((h - 5f64.ln()).abs() < 1e-4, "row {i}: {h}");
        }
        let joint = joint_probabilities(&cond);
        let total: f64 = joint.as_slice().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..x.rows() {
            for j in 0..x.rows() {
                assert_eq!(joint.row(i)[j], joint.row(j)[i]);
            }
        }
    }

    #[test]
    fn kl_gradient_matches_central_differences() {
        let x = Matrix::from_rows(&[
            [0.0, 0.1, 0.3],
            [1.0, 0.0, 0.2],
            [0.2, 1.2, 0.0],
            [2.0, 2.1, 1.0],
            [0.5, -1.0, 0.7],
            [1.5, 0.5, -0.4],
        ]);
        let p = joint_probabilities(&conditional_probabilities(&x, 1.5));
        let y = Matrix::from_rows(&[[0.3, -0.2], [1.1, 0.4], [-0.5, 0.9], [0.8, 1.7], [-1.2, -0.6], [0.1, 0.75]]);
        let g = kl_gradient(&p, &y);
        let h = 1e-6;
        for i in 0..6 {
            for d in 0..2 {
                let mut a = y.clone();
                a.row_mut(i)[d] += h;
                let mut b = y.clone();
                b.row_mut(i)[d] -= h;
                let fd = (kl_divergence(&p, &a) - kl_divergence(&p, &b)) / (2.0 * h);
                let an = g.row(i)[d];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-4, "({i},{d}) analytic {an} fd {fd}");
            }
        }
    }

    #[test]
    fn separates_blobs_and_kl_tail_is_monotone() {
        let x = blobs(20, 5);
        let params = TsneParams {
            perplexity: 10.0,
            n_iter: 500,
            ..Default::default()
        };
        let r = tsne_2d(&x, &params).unwrap();
        let tail = &r.kl_trace[r.kl_trace.len() - 100..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0]));
        // every point's nearest 2D neighbour is in its own blob
        let y = &r.layout.coords;
        for i in 0..60 {
            let nn = (0..60)
                .filter(|&j| j != i)
                .min_by(|&a, &b| squared_euclidean(y.row(i), y.row(a)).total_cmp(&squared_euclidean(y.row(i), y.row(b))))
                .unwrap();
            assert_eq!(nn / 20, i / 20);
        }
        let again = tsne_2d(&x, &params).unwrap();
        assert_eq!(again.layout.coords, r.layout.coords);
    }

    #[test]
    fn rejects_oversized_inputs() {
        let x = blobs(5, 0);
        assert!(matches!(
            tsne_2d(&x, &TsneParams::default()),
            Err(ManifoldError::PerplexityTooLarge { .. })
        ));
        let params = TsneParams {
            perplexity: 2.0,
            max_exact_points: 10,
            ..Default::default()
        };
        assert!(matches!(tsne_2d(&x, &params), Err(ManifoldError::TooManyPointsForExact { n: 15, cap: 10 })));
    }
}
