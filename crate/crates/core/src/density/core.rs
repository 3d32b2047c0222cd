use rayon::prelude::*;

use super::DensityError;
use crate::scalar::{squared_euclidean, Scalar};
use crate::Matrix;

/// Euclidean distance to the `min_samples`-th nearest other point.
pub fn core_distances<T: Scalar>(x: &Matrix<T>, min_samples: usize) -> Result<Vec<T>, DensityError> {
    let n = x.rows();
    if min_samples == 0 || n <= min_samples {
        return Err(DensityError::TooFewPoints { n, min_samples });
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut d: Vec<T> = (0..n).filter(|&j| j != i).map(|j| squared_euclidean(xi, x.row(j))).collect();
            let (_, kth, _) = d.select_nth_unstable_by(min_samples - 1, |a, b| a.partial_cmp(b).expect("finite"));
            kth.sqrt()
        })
        .collect())
}

/// `max(core_i, core_j, d_ij)`.
#[inline]
pub fn mutual_reachability<T: Scalar>(d_ij: T, core_i: T, core_j: T) -> T {
    d_ij.max(core_i).max(core_j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_by_hand() {
        let x = Matrix::from_rows(&[[0.0f64], [1.0], [2.0]]);
        assert_eq!(core_distances(&x, 1).unwrap(), [1.0, 1.0, 1.0]);
        assert_eq!(core_distances(&x, 2).unwrap(), [2.0, 1.0, 2.0]);
        assert!(core_distances(&x, 3).is_err());
    }

    #[test]
    fn reachability_cases() {
        assert_eq!(mutual_reachability(3.0f64, 0.0, 0.0), 3.0);
        assert_eq!(mutual_reachability(1.0f64, 5.0, 2.0), 5.0);
    }
}
