//! Q-DEIM interpolation indices from a column-pivoted QR factorization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pivot rows of `phi` (`m x p`) selected by Householder QR of `phi^T`
/// with column pivoting on the largest remaining column norm.
pub fn qdeim_indices<T: Real>(phi: &DMatrix<T>) -> Result<Vec<usize>> {
    let (m, p) = phi.shape();
    if p == 0 || p > m {
        return Err(Error::RankDeficient(format!("cannot select {p} indices from {m} rows")));
    }
    let mut a = phi.transpose();
    let mut perm: Vec<usize> = (0..m).collect();
    let scale = a.column_iter().map(|c| c.norm()).fold(T::zero(), |s, x| s.max(x));
    for k in 0..p {
        // column norms of the trailing block
        let mut best = k;
        let mut best_norm = -T::one();
        for j in k..m {
            let n = a.view((k, j), (p - k, 1)).norm_squared();
            if n > best_norm {
                best_norm = n;
                best = j;
            }
        }
        if !(best_norm.sqrt() > T::lit(1e-12) * scale) {
            return Err(Error::RankDeficient(format!("pivot {k} has negligible norm")));
        }
        a.swap_columns(k, best);
        perm.swap(k, best);
        // Householder reflector zeroing a[k+1.., k]
        let mut v = a.view((k, k), (p - k, 1)).clone_owned();
        let alpha = v.norm();
        let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
        v[0] += sign * alpha;
        let vn = v.norm_squared();
        if vn > T::zero() {
            let mut block = a.view_mut((k, k), (p - k, m - k));
            let w = v.transpose() * &block;
            block -= &v * w * (T::lit(2.0) / vn);
        }
    }
    Ok(perm[..p].to_vec())
}

/// Rows of `phi` at `idx`, i.e. `D^T phi`.
pub fn select_rows<T: Real>(phi: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), phi.ncols(), |i, j| phi[(idx[i], j)])
}

/// 2-norm condition number of `D^T phi`.
pub fn deim_condition<T: Real>(phi: &DMatrix<T>, idx: &[usize]) -> f64 {
    let s = select_rows(phi, idx).singular_values();
    let max = s.iter().fold(T::zero(), |a, x| a.max(*x));
    let min = s.iter().fold(max, |a, x| a.min(*x));
    (max / min).as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_columns_pick_their_rows() {
        let mut phi = DMatrix::<f64>::zeros(5, 2);
        phi[(0, 0)] = 1.0;
        phi[(2, 1)] = 1.0;
        let mut idx = qdeim_indices(&phi).unwrap();
        idx.sort();
        assert_eq!(idx, vec![0, 2]);
    }

    #[test]
    fn rank_deficient_input_is_rejected() {
        let phi = DMatrix::<f64>::from_fn(6, 2, |i, _| i as f64);
        assert!(matches!(qdeim_indices(&phi), Err(Error::RankDeficient(_))));
    }
}
