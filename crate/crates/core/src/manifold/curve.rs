//! Fit of the low-dimensional similarity curve `1 / (1 + a x^(2b))` to the
//! piecewise target set by `min_dist`.

use super::ManifoldError;

const GRID_POINTS: usize = 300;
const GRID_MAX: f64 = 3.0;
const MAX_ITER: usize = 500;

/// Fitted curve parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    pub a: f64,
    pub b: f64,
}

impl CurveParams {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        1.0 / (1.0 + self.a * x.powf(2.0 * self.b))
    }
}

fn grid() -> impl Iterator<Item = f64> {
    (1..=GRID_POINTS).map(|i| GRID_MAX * i as f64 / GRID_POINTS as f64)
}

fn target(x: f64, min_dist: f64) -> f64 {
    if x <= min_dist {
        1.0
    } else {
        (-(x - min_dist)).exp()
    }
}

/// Root-mean-square residual of `p` against the target over the fit grid.
pub fn fit_rms(p: CurveParams, min_dist: f64) -> f64 {
    let sse: f64 = grid().map(|x| (p.eval(x) - target(x, min_dist)).powi(2)).sum();
    (sse / GRID_POINTS as f64).sqrt()
}

/// Levenberg-Marquardt least squares over 300 grid points in (0, 3].
pub fn fit_ab(min_dist: f64) -> Result<CurveParams, ManifoldError> {
    if !(min_dist > 0.0 && min_dist < 1.0) {
        return Err(ManifoldError::InvalidParams(format!("min_dist {min_dist} outside (0, 1)")));
    }
    let xs: Vec<f64> = grid().collect();
    let ys: Vec<f64> = xs.iter().map(|&x| target(x, min_dist)).collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2))
            .sum()
    };

    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut cost = sse(a, b);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITER {
        // normal equations J^T J and gradient J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let p = x.powf(2.0 * b);
            let den = 1.0 + a * p;
            let r = 1.0 / den - y;
            let da = -p / (den * den);
            let db = -a * p * 2.0 * x.ln() / (den * den);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..50 {
            let (m00, m11) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m00 * m11 - jab * jab;
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m11 * ga - jab * gb) / det;
            let step_b = -(m00 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let nc = sse(na, nb);
                if nc < cost {
                    let rel = (cost - nc) / cost.max(f64::MIN_POSITIVE);
                    a = na;
                    b = nb;
                    cost = nc;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    if rel < 1e-14 {
                        return Ok(CurveParams { a, b });
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            // no descent direction left: at a minimum to machine precision
            let g = (ga * ga + gb * gb).sqrt();
            return if g < 1e-6 {
                Ok(CurveParams { a, b })
            } else {
                Err(ManifoldError::FitDidNotConverge)
            };
        }
    }
    Err(ManifoldError::FitDidNotConverge)
}
