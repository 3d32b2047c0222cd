//! Edge-sampled stochastic gradient layout optimization.

use super::curve::CurveParams;
use super::{FuzzyGraph, Layout};
use crate::rng::{keyed_index, stream_key};
use crate::scalar::Scalar;

const GRAD_CLIP: f64 = 4.0;
/// Regularizer in the repulsive coefficient denominator.
pub const REPULSION_EPS: f64 = 0.001;

/// `d log(phi) / d y_i = coeff * (y_i - y_j)` with
/// `phi = 1 / (1 + a d^(2b))` and `d2 = |y_i - y_j|^2`.
#[inline]
pub fn attractive_coeff<T: Scalar>(d2: T, a: T, b: T) -> T {
    if d2 > T::zero() {
        let pb = d2.powf(b);
        T::of(-2.0) * a * b * pb / d2 / (a * pb + T::one())
    } else {
        T::zero()
    }
}

/// `d log(1 - phi) / d y_i = coeff * (y_i - y_j)`; with `eps = 0` this is the
/// exact gradient, the optimizer passes [`REPULSION_EPS`].
#[inline]
pub fn repulsive_coeff<T: Scalar>(d2: T, a: T, b: T, eps: T) -> T {
    T::of(2.0) * b / ((eps + d2) * (a * d2.powf(b) + T::one()))
}

/// `sum_pos w log(phi) + sum_neg log(1 - phi)` over explicit pairs.
pub fn sampled_pair_objective(
    y: &crate::Matrix<f64>,
    positive: &[(usize, usize, f64)],
    negative: &[(usize, usize)],
    curve: CurveParams,
) -> f64 {
    let phi = |i: usize, j: usize| {
        let d2 = crate::scalar::squared_euclidean(y.row(i), y.row(j));
        1.0 / (1.0 + curve.a * d2.powf(curve.b))
    };
    let pos: f64 = positive.iter().map(|&(i, j, w)| w * phi(i, j).ln()).sum();
    let neg: f64 = negative.iter().map(|&(i, j)| (1.0 - phi(i, j)).ln()).sum();
    pos + neg
}

/// Analytic gradient of [`sampled_pair_objective`], assembled from the same
/// per-pair coefficients the optimizer applies.
pub fn sampled_pair_gradient(
    y: &crate::Matrix<f64>,
    positive: &[(usize, usize, f64)],
    negative: &[(usize, usize)],
    curve: CurveParams,
) -> crate::Matrix<f64> {
    let mut g = crate::Matrix::zeros(y.rows(), y.cols());
    let mut add = |i: usize, j: usize, coeff: f64| {
        for d in 0..y.cols() {
            let diff = y.row(i)[d] - y.row(j)[d];
            g.row_mut(i)[d] += coeff * diff;
            g.row_mut(j)[d] -= coeff * diff;
        }
    };
    for &(i, j, w) in positive {
        let d2 = crate::scalar::squared_euclidean(y.row(i), y.row(j));
        add(i, j, w * attractive_coeff(d2, curve.a, curve.b));
    }
    for &(i, j) in negative {
        let d2 = crate::scalar::squared_euclidean(y.row(i), y.row(j));
        add(i, j, repulsive_coeff(d2, curve.a, curve.b, 0.0));
    }
    g
}

#[inline(always)]
fn clip<T: Scalar>(v: T, c: T) -> T {
    if v > c {
        c
    } else if v < -c {
        -c
    } else {
        v
    }
}

/// Settings of one SGD run.
#[derive(Debug, Clone, Copy)]
pub struct SgdSettings {
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub seed: u64,
    pub curve: CurveParams,
}

/// Runs the layout optimization in place.
///
/// Every directed edge is sampled every `max_w / w` epochs. Each sample pulls
/// both endpoints together and pushes the head away from
/// `negative_sample_rate` uniformly drawn vertices; the pushes of one sample
/// are evaluated at the same head position and applied together. Negative draws come from
/// a counter stream keyed by (edge, epoch, draw), so the result only depends
/// on the seed.
pub fn optimize<T: Scalar>(graph: &FuzzyGraph<T>, layout: &mut Layout<T>, s: SgdSettings) {
    match layout.dim() {
        1..=4 => run_padded::<T, 4>(graph, layout, s),
        5..=8 => run_padded::<T, 8>(graph, layout, s),
        9..=12 => run_padded::<T, 12>(graph, layout, s),
        13..=16 => run_padded::<T, 16>(graph, layout, s),
        _ => run_padded::<T, 0>(graph, layout, s),
    }
}

struct Schedule {
    epochs_per_sample: Vec<f64>,
    epochs_per_negative: Vec<f64>,
    next_sample: Vec<f64>,
    next_negative: Vec<f64>,
}

impl Schedule {
    fn new<T: Scalar>(edges: &[(usize, usize, T)], negative_sample_rate: usize) -> Self {
        let max_w = edges.iter().map(|e| e.2.as_f64()).fold(0.0, f64::max);
        let epochs_per_sample: Vec<f64> = edges.iter().map(|e| max_w / e.2.as_f64()).collect();
        let neg_rate = negative_sample_rate.max(1) as f64;
        let epochs_per_negative: Vec<f64> = epochs_per_sample.iter().map(|e| e / neg_rate).collect();
        Self {
            next_sample: epochs_per_sample.clone(),
            next_negative: epochs_per_negative.clone(),
            epochs_per_sample,
            epochs_per_negative,
        }
    }
}

/// Rows padded with zeros to `P` lanes (a multiple of 4) so distance and
/// update loops vectorize; padding lanes stay zero. `P = 0` keeps the
/// unpadded row-major buffer.
fn run_padded<T: Scalar, const P: usize>(graph: &FuzzyGraph<T>, layout: &mut Layout<T>, s: SgdSettings) {
    let edges = graph.directed();
    if edges.is_empty() || s.n_epochs == 0 {
        return;
    }
    let n = graph.n();
    let dim = layout.dim();
    let width = if P > 0 { P } else { dim };
    let mut y = vec![T::zero(); n * width];
    for i in 0..n {
        y[i * width..i * width + dim].copy_from_slice(layout.coords.row(i));
    }
    let a = T::of(s.curve.a);
    let b = T::of(s.curve.b);
    let eps = T::of(REPULSION_EPS);
    let four = T::of(GRAD_CLIP);
    let mut sched = Schedule::new(&edges, s.negative_sample_rate);
    let mut push_buf = vec![T::zero(); width];
    let mut diff_buf = vec![T::zero(); width];
    let mut grad_buf = vec![T::zero(); width];
    let push = &mut push_buf[..width];
    let diff = &mut diff_buf[..width];
    let grad = &mut grad_buf[..width];

    for epoch in 0..s.n_epochs {
        let alpha = T::of(1.0 - epoch as f64 / s.n_epochs as f64);
        let ep = epoch as f64;
        for (e, &(head, tail, _)) in edges.iter().enumerate() {
            if sched.next_sample[e] > ep {
                continue;
            }
            let (h0, t0) = (head * width, tail * width);
            let d2 = diff_dist2::<T, P>(&y[h0..h0 + width], &y[t0..t0 + width], diff);
            let coeff = attractive_coeff(d2, a, b);
            for d in 0..width {
                grad[d] = clip(coeff * diff[d], four) * alpha;
            }
            add_row(&mut y[h0..h0 + width], grad, T::one());
            add_row(&mut y[t0..t0 + width], grad, -T::one());
            sched.next_sample[e] += sched.epochs_per_sample[e];

            let n_neg = ((ep - sched.next_negative[e]) / sched.epochs_per_negative[e]).floor().max(0.0) as usize;
            let key = stream_key(s.seed, e as u64);
            let base = (epoch as u64) << 20;
            push.iter_mut().for_each(|v| *v = T::zero());
            for p in 0..n_neg {
                let k = keyed_index(key, base | p as u64, n);
                if k == head {
                    continue;
                }
                let k0 = k * width;
                let d2 = diff_dist2::<T, P>(&y[h0..h0 + width], &y[k0..k0 + width], diff);
                if d2 > T::zero() {
                    let coeff = repulsive_coeff(d2, a, b, eps);
                    for d in 0..width {
                        push[d] += clip(coeff * diff[d], four);
                    }
                } else {
                    // coincident points: fixed maximal push
                    for v in push.iter_mut().take(dim) {
                        *v += four;
                    }
                }
            }
            add_row(&mut y[h0..h0 + width], push, alpha);
            sched.next_negative[e] += n_neg as f64 * sched.epochs_per_negative[e];
        }
    }
    for i in 0..n {
        layout.coords.row_mut(i).copy_from_slice(&y[i * width..i * width + dim]);
    }
}

#[inline(always)]
fn add_row<T: Scalar>(row: &mut [T], delta: &[T], scale: T) {
    for (r, &d) in row.iter_mut().zip(delta) {
        *r += d * scale;
    }
}

/// Writes `yi - yj` into `diff` and returns its squared norm, summed in four
/// interleaved lanes when `P > 0`.
#[inline(always)]
fn diff_dist2<T: Scalar, const P: usize>(yi: &[T], yj: &[T], diff: &mut [T]) -> T {
    if P > 0 {
        let yi: &[T; P] = yi.try_into().expect("padded row");
        let yj: &[T; P] = yj.try_into().expect("padded row");
        let diff: &mut [T; P] = diff.try_into().expect("padded row");
        let mut acc = [T::zero(); 4];
        for c in 0..P / 4 {
            for l in 0..4 {
                let v = yi[c * 4 + l] - yj[c * 4 + l];
                diff[c * 4 + l] = v;
                acc[l] += v * v;
            }
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3])
    } else {
        let mut d2 = T::zero();
        for ((d, &a), &b) in diff.iter_mut().zip(yi).zip(yj) {
            *d = a - b;
            d2 += *d * *d;
        }
        d2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;

    fn toy() -> (Matrix<f64>, Vec<(usize, usize, f64)>, Vec<(usize, usize)>) {
        let y = Matrix::from_rows(&[[0.1, 0.4], [1.3, -0.2], [-0.7, 0.9], [2.0, 1.1], [0.5, -1.4]]);
        let pos = vec![(0, 1, 1.0), (1, 2, 0.6), (2, 3, 0.35), (3, 4, 0.8), (0, 4, 0.25)];
        let neg = vec![(0, 3), (1, 4), (2, 4), (4, 0), (3, 1)];
        (y, pos, neg)
    }

    #[test]
    fn pair_gradients_match_central_differences() {
        let curve = CurveParams { a: 1.75, b: 0.84 };
        let (y, pos, neg) = toy();
        let g = sampled_pair_gradient(&y, &pos, &neg, curve);
        let h = 1e-6;
        for i in 0..y.rows() {
            for d in 0..y.cols() {
                let mut plus = y.clone();
                plus.row_mut(i)[d] += h;
                let mut minus = y.clone();
                minus.row_mut(i)[d] -= h;
                let fd = (sampled_pair_objective(&plus, &pos, &neg, curve)
                    - sampled_pair_objective(&minus, &pos, &neg, curve))
                    / (2.0 * h);
                let an = g.row(i)[d];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-4, "({i},{d}): analytic {an} vs fd {fd}");
            }
        }
    }

    #[test]
    fn coefficients_have_expected_signs() {
        assert!(attractive_coeff(1.0f64, 1.5, 0.9) < 0.0);
        assert_eq!(attractive_coeff(0.0f64, 1.5, 0.9), 0.0);
        assert!(repulsive_coeff(1.0f64, 1.5, 0.9, 0.001) > 0.0);
    }
}
