//! Two-sided proper orthogonal decomposition of matrix-valued snapshots.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How many POD modes to keep on one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Smallest rank with relative tail energy `sqrt(sum_{i>k} s_i^2 / sum s_i^2) <= tol`.
    Tolerance(f64),
    /// Like `Tolerance`, but never more than `max_rank` modes.
    Capped { tol: f64, max_rank: usize },
    Rank(usize),
}

/// One side of a two-sided POD.
#[derive(Debug, Clone)]
pub struct PodSide<T: Real> {
    /// Orthonormal columns, leading modes first.
    pub basis: DMatrix<T>,
    /// Squared singular values of the stacked snapshot matrix, descending.
    pub energies: Vec<T>,
    /// Relative tail energy left out by `basis`.
    pub tail: f64,
}

impl<T: Real> PodSide<T> {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// Left singular vectors of `[S_1, .., S_ns]` (or of `[S_1^T, .., S_ns^T]`
/// when `transposed`).
///
/// Uses the eigendecomposition of the Gram matrix `sum S_i S_i^T`; the tail
/// energies are measured directly on the rotated snapshots so that very
/// small tolerances stay meaningful.
pub fn pod_side<T: Real>(snaps: &[DMatrix<T>], truncation: Truncation, transposed: bool) -> Result<PodSide<T>> {
    let first = snaps.first().ok_or_else(|| Error::DegenerateSnapshots("no snapshots".into()))?;
    let shape = first.shape();
    if let Some(bad) = snaps.iter().find(|s| s.shape() != shape) {
        return Err(Error::DimensionMismatch { context: "snapshot family", expected: shape, got: bad.shape() });
    }
    let m = if transposed { shape.1 } else { shape.0 };
    let mut gram = DMatrix::<T>::zeros(m, m);
    let mut total = T::zero();
    for s in snaps {
        if transposed {
            gram += s.transpose() * s;
        } else {
            gram += s * s.transpose();
        }
        total += s.norm_squared();
    }
    if !(total > T::zero()) || !total.is_finite() {
        return Err(Error::DegenerateSnapshots("snapshot family is identically zero".into()));
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
    let w = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
    let energies: Vec<T> = order.iter().map(|&j| eig.eigenvalues[j].max(T::zero())).collect();

    // row energies of W^T S_i, i.e. the captured energy per mode
    let mut mode_energy = vec![T::zero(); m];
    for s in snaps {
        let rot = if transposed { w.transpose() * s.transpose() } else { w.transpose() * s };
        for (k, row) in rot.row_iter().enumerate() {
            mode_energy[k] += row.norm_squared();
        }
    }
    let mut tails = vec![T::zero(); m + 1];
    for k in (0..m).rev() {
        tails[k] = tails[k + 1] + mode_energy[k];
    }
    let rel = |k: usize| (tails[k] / total).sqrt().as_f64();
    let by_tol = |tol: f64| (1..=m).find(|&k| rel(k) <= tol).unwrap_or(m);
    let rank = match truncation {
        Truncation::Tolerance(tol) => by_tol(tol),
        Truncation::Capped { tol, max_rank } => by_tol(tol).min(max_rank.max(1)),
        Truncation::Rank(k) => {
            if k == 0 || k > m {
                return Err(Error::InvalidParameter(format!("POD rank {k} outside 1..={m}")));
            }
            k
        }
    };
    Ok(PodSide { basis: reorthonormalize(w.columns(0, rank).into_owned()), energies, tail: rel(rank) })
}

/// Left and right POD bases of a snapshot family.
pub fn two_sided_pod<T: Real>(snaps: &[DMatrix<T>], tol: f64) -> Result<(DMatrix<T>, DMatrix<T>)> {
    if !(tol > 0.0 && tol <= 1.0) {
        return Err(Error::InvalidParameter(format!("POD tolerance {tol} outside (0, 1]")));
    }
    let l = pod_side(snaps, Truncation::Tolerance(tol), false)?;
    let r = pod_side(snaps, Truncation::Tolerance(tol), true)?;
    Ok((l.basis, r.basis))
}

/// Orthonormal basis whose first column is the normalized constant vector and
/// whose remaining columns span the part of `basis` orthogonal to it.
pub fn with_constant_mode<T: Real>(basis: &DMatrix<T>) -> DMatrix<T> {
    let m = basis.nrows();
    let c = T::one() / T::from_usize_lossy(m).sqrt();
    let ones = DMatrix::from_element(m, 1, c);
    let rest = basis - &ones * (ones.transpose() * basis);
    let svd = rest.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > smax * T::lit(1e-8))
        .take(m - 1)
        .collect();
    let mut out = DMatrix::zeros(m, keep.len() + 1);
    out.column_mut(0).fill(c);
    for (j, &i) in keep.iter().enumerate() {
        out.column_mut(j + 1).copy_from(&u.column(i));
    }
    reorthonormalize(out)
}

/// Householder QR of a nearly orthonormal matrix, with column signs kept.
fn reorthonormalize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < T::zero() {
            q.column_mut(j).neg_mut();
        }
    }
    q
}


#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn rank_one_snapshot() {
        let x = DVector::from_vec(vec![1.0f64, 2.0, -2.0]);
        let y = DVector::from_vec(vec![3.0f64, 0.0, 4.0, 0.0]);
        let s = &x * y.transpose();
        let (l, r) = two_sided_pod(&[s], 1e-8).unwrap();
        assert_eq!((l.ncols(), r.ncols()), (1, 1));
        let xl = x.normalize();
        let yr = y.normalize();
        assert!((l.column(0).dot(&xl).abs() - 1.0).abs() < 1e-12);
        assert!((r.column(0).dot(&yr).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_family_is_rejected() {
        let z = vec![DMatrix::<f64>::zeros(3, 3); 2];
        assert!(matches!(two_sided_pod(&z, 1e-3), Err(Error::DegenerateSnapshots(_))));
        assert!(two_sided_pod::<f64>(&[], 1e-3).is_err());
    }

    #[test]
    fn fixed_and_capped_ranks() {
        let s = DMatrix::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let side = pod_side(&[s.clone()], Truncation::Rank(2), false).unwrap();
        assert_eq!(side.rank(), 2);
        let side = pod_side(&[s.clone()], Truncation::Capped { tol: 1e-14, max_rank: 1 }, true).unwrap();
        assert_eq!(side.rank(), 1);
        assert!(pod_side(&[s], Truncation::Rank(9), false).is_err());
    }


    #[test]
    fn constant_mode_is_prepended_and_orthonormal() {
        let b = DMatrix::<f64>::from_fn(6, 2, |i, j| ((i + 1) * (j + 2)) as f64).qr().q();
        let c = with_constant_mode(&b);
        assert_eq!(c.ncols(), 3);
        assert!((c.transpose() * &c - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!((c[(0, 0)] - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        let proj = &c * (c.transpose() * &b);
        assert!((proj - b).amax() < 1e-12);
    }

    #[test]
    fn constant_mode_already_present_keeps_rank() {
        let b = DMatrix::<f64>::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 }).qr().q();
        assert_eq!(with_constant_mode(&b).ncols(), 2);
    }
}
