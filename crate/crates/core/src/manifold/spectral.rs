//! Spectral layout initialization from the fuzzy graph.
//!
//! Subspace iteration on `M = (I + D^-1/2 W D^-1/2) / 2` with the trivial
//! eigenvector `D^1/2 1` deflated, followed by a Rayleigh-Ritz rotation. The
//! leading non-trivial eigenvectors of `M` are the smallest non-trivial
//! eigenvectors of the normalized Laplacian.

use rand::Rng;

use super::FuzzyGraph;
use crate::scalar::Scalar;

const MAX_ITER: usize = 300;
const RITZ_TOL: f64 = 1e-9;

struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

fn normalized_adjacency<T: Scalar>(g: &FuzzyGraph<T>, inv_sqrt_deg: &[f64]) -> Csr {
    let directed = g.directed();
    let mut offsets = vec![0usize; g.n() + 1];
    for &(h, _, _) in &directed {
        offsets[h + 1] += 1;
    }
    for i in 0..g.n() {
        offsets[i + 1] += offsets[i];
    }
    let cols = directed.iter().map(|e| e.1).collect();
    let vals = directed
        .iter()
        .map(|&(h, t, w)| w.as_f64() * inv_sqrt_deg[h] * inv_sqrt_deg[t])
        .collect();
    Csr { offsets, cols, vals }
}

impl Csr {
    /// `out = (v + A v) / 2`
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..out.len() {
            let mut acc = 0.0;
            for p in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[p] * v[self.cols[p]];
            }
            out[i] = 0.5 * (v[i] + acc);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram-Schmidt against `fixed` and then among `vs` themselves.
fn orthonormalize(vs: &mut [Vec<f64>], fixed: &[f64]) {
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let v = &mut rest[0];
        for _ in 0..2 {
            let c = dot(v, fixed);
            v.iter_mut().zip(fixed).for_each(|(x, f)| *x -= c * f);
            for u in done.iter() {
                let c = dot(v, u);
                v.iter_mut().zip(u).for_each(|(x, f)| *x -= c * f);
            }
        }
        let n = dot(v, v).sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
    }
}

/// Cyclic Jacobi eigen-decomposition of a small dense symmetric matrix.
/// Returns eigenvalues and column eigenvectors (`vecs[r][c]`), unsorted.
pub(crate) fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = a.len();
    let mut v: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for r in 0..k {
                    let (apr, aqr) = (a[p][r], a[q][r]);
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
                for r in 0..k {
                    let (vrp, vrq) = (v[r][p], v[r][q]);
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }
    ((0..k).map(|i| a[i][i]).collect(), v)
}

/// Leading `dim` non-trivial eigenvectors as an `n x dim` row-major buffer,
/// or `None` when the graph has isolated vertices or too few vertices.
pub(crate) fn spectral_embedding<T: Scalar, R: Rng>(g: &FuzzyGraph<T>, dim: usize, rng: &mut R) -> Option<Vec<f64>> {
    let n = g.n();
    if n <= dim + 1 {
        return None;
    }
    let deg = g.degrees();
    if deg.iter().any(|&d| d <= 0.0) {
        return None;
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let op = normalized_adjacency(g, &inv_sqrt);
    let mut trivial: Vec<f64> = deg.iter().map(|d| d.sqrt()).collect();
    let tn = dot(&trivial, &trivial).sqrt();
    trivial.iter_mut().for_each(|x| *x /= tn);

    let mut vs: Vec<Vec<f64>> = (0..dim).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    orthonormalize(&mut vs, &trivial);
    let mut scratch = vec![0.0; n];
    let mut prev_ritz = vec![f64::INFINITY; dim];
    for _ in 0..MAX_ITER {
        for v in vs.iter_mut() {
            op.apply(v, &mut scratch);
            std::mem::swap(v, &mut scratch);
        }
        orthonormalize(&mut vs, &trivial);
        let mut ritz = vec![0.0; dim];
        for (r, v) in ritz.iter_mut().zip(&vs) {
            op.apply(v, &mut scratch);
            *r = dot(v, &scratch);
        }
        let converged = ritz.iter().zip(&prev_ritz).all(|(a, b)| (a - b).abs() < RITZ_TOL);
        prev_ritz = ritz;
        if converged {
            break;
        }
    }

    // Rayleigh-Ritz: H = V^T M V, rotate V by H's eigenvectors (descending)
    let mv: Vec<Vec<f64>> = vs
        .iter()
        .map(|v| {
            let mut out = vec![0.0; n];
            op.apply(v, &mut out);
            out
        })
        .collect();
    let h: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| dot(&vs[i], &mv[j])).collect()).collect();
    let (vals, vecs) = symmetric_eigen(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));

    let mut out = vec![0.0; n * dim];
    for (c, &col) in order.iter().enumerate() {
        for (k, v) in vs.iter().enumerate() {
            let w = vecs[k][col];
            for i in 0..n {
                out[i * dim + c] += w * v[i];
            }
        }
    }
    // fix the sign so the largest-magnitude entry of each column is positive
    for c in 0..dim {
        let (mut best, mut sign) = (0.0f64, 1.0f64);
        for i in 0..n {
            let x = out[i * dim + c];
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        for i in 0..n {
            out[i * dim + c] *= sign;
        }
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}
