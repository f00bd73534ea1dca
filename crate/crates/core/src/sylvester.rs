//! Eigendecomposition solver for `A X + X B = C`.
//!
//! With `A = W_a diag(a) W_a^{-1}` and `B = W_b diag(b) W_b^{-1}` the
//! solution is `X = W_a ((W_a^{-1} C W_b) ./ (a_i + b_j)) W_b^{-1}`, so each
//! solve costs four dense products once both factors are known.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{frobenius, Real};

/// Relative threshold below which an eigenvalue sum counts as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Largest accepted eigenvector condition estimate.
pub const MAX_EIGENVECTOR_CONDITION: f64 = 1e10;

/// `M = W diag(values) W^{-1}` with the inverse cached.
#[derive(Debug, Clone)]
pub struct EigenFactor<T: Real> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
    pub inverse: DMatrix<T>,
    /// Condition estimate `||W||_F ||W^{-1}||_F / n` (1 for orthogonal W).
    pub condition: f64,
}

impl<T: Real> EigenFactor<T> {
    /// Picks the symmetric path when possible, then the tridiagonal
    /// symmetrization, then a real Schur based fallback.
    pub fn new(m: &DMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "eigendecomposition",
                expected: (m.nrows(), m.nrows()),
                got: m.shape(),
            });
        }
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        if is_symmetric(m) {
            return Ok(Self::symmetric(m));
        }
        if let Some(f) = Self::tridiagonal(m) {
            return Ok(f);
        }
        Self::general(m)
    }

    pub fn symmetric(m: &DMatrix<T>) -> Self {
        let sym = (m + m.transpose()) * T::lit(0.5);
        let eig = SymmetricEigen::new(sym);
        Self {
            inverse: eig.eigenvectors.transpose(),
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
            condition: 1.0,
        }
    }

    /// Tridiagonal `M` with `m[i][i+1] * m[i+1][i] > 0` is similar to a
    /// symmetric matrix via a diagonal scaling.
    fn tridiagonal(m: &DMatrix<T>) -> Option<Self> {
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                if (i as isize - j as isize).abs() > 1 && m[(i, j)] != T::zero() {
                    return None;
                }
            }
        }
        let mut d = vec![T::one(); n];
        for i in 0..n.saturating_sub(1) {
            let up = m[(i, i + 1)];
            let lo = m[(i + 1, i)];
            if !(up * lo > T::zero()) {
                return None;
            }
            d[i + 1] = d[i] * (up / lo).sqrt();
        }
        if !d.iter().all(|x| x.is_finite() && *x > T::zero()) {
            return None;
        }
        let s = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[i] / d[j]);
        let f = Self::symmetric(&s);
        // M = D^{-1} S D
        let vectors = DMatrix::from_fn(n, n, |i, j| f.vectors[(i, j)] / d[i]);
        let inverse = DMatrix::from_fn(n, n, |i, j| f.inverse[(i, j)] * d[j]);
        let condition = condition_estimate(&vectors, &inverse);
        if condition > MAX_EIGENVECTOR_CONDITION {
            return None;
        }
        Some(Self { values: f.values, vectors, inverse, condition })
    }

    /// Real Schur form followed by back substitution for the eigenvectors
    /// of the triangular factor. Complex spectra are rejected.
    pub fn general(m: &DMatrix<T>) -> Result<Self> {
        let n = m.nrows();
        let (q, t) = nalgebra::Schur::new(m.clone()).unpack();
        let scale = frobenius(m).max(T::eps());
        for i in 0..n.saturating_sub(1) {
            if t[(i + 1, i)].abs() > T::lit(1e-12) * scale {
                return Err(Error::NotDiagonalizable { condition: f64::INFINITY });
            }
        }
        let values = DVector::from_fn(n, |i, _| t[(i, i)]);
        let tiny = T::eps() * scale;
        let mut y = DMatrix::zeros(n, n);
        for k in 0..n {
            y[(k, k)] = T::one();
            for i in (0..k).rev() {
                let mut acc = T::zero();
                for j in i + 1..=k {
                    acc += t[(i, j)] * y[(j, k)];
                }
                let mut den = t[(i, i)] - values[k];
                if den.abs() < tiny {
                    den = if den < T::zero() { -tiny } else { tiny };
                }
                y[(i, k)] = -acc / den;
            }
            let norm = y.column(k).norm();
            y.column_mut(k).unscale_mut(norm);
        }
        let vectors = q * y;
        let inverse = vectors
            .clone()
            .try_inverse()
            .ok_or(Error::NotDiagonalizable { condition: f64::INFINITY })?;
        let condition = condition_estimate(&vectors, &inverse);
        if !(condition <= MAX_EIGENVECTOR_CONDITION) {
            return Err(Error::NotDiagonalizable { condition });
        }
        Ok(Self { values, vectors, inverse, condition })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut wl = self.vectors.clone();
        for (j, mut c) in wl.column_iter_mut().enumerate() {
            c *= self.values[j];
        }
        wl * &self.inverse
    }
}

fn is_symmetric<T: Real>(m: &DMatrix<T>) -> bool {
    let scale = m.iter().fold(T::zero(), |a, x| a.max(x.abs()));
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > T::lit(1e-14) * scale {
                return false;
            }
        }
    }
    true
}

fn condition_estimate<T: Real>(w: &DMatrix<T>, winv: &DMatrix<T>) -> f64 {
    let n = w.nrows().max(1) as f64;
    frobenius(w).as_f64() * frobenius(winv).as_f64() / n
}

/// Precomputed factorization of the pencil `X -> A X + X B`.
#[derive(Debug, Clone)]
pub struct SylvesterFactorization<T: Real> {
    pub a: EigenFactor<T>,
    pub b: EigenFactor<T>,
    /// `1 / (a_i + b_j)`, zero where the sum is singular.
    inv_sums: DMatrix<T>,
    singular: Vec<(usize, usize, T)>,
}

impl<T: Real> SylvesterFactorization<T> {
    pub fn new(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<Self> {
        let fa = EigenFactor::new(a)?;
        let fb = EigenFactor::new(b)?;
        Ok(Self::from_factors(fa, fb))
    }

    pub fn from_factors(a: EigenFactor<T>, b: EigenFactor<T>) -> Self {
        let scale = a
            .values
            .iter()
            .chain(b.values.iter())
            .fold(T::zero(), |m, x| m.max(x.abs()));
        let threshold = T::lit(SINGULAR_THRESHOLD) * scale;
        let mut singular = Vec::new();
        let inv_sums = DMatrix::from_fn(a.dim(), b.dim(), |i, j| {
            let s = a.values[i] + b.values[j];
            if s.abs() < threshold || s == T::zero() {
                singular.push((i, j, s));
                T::zero()
            } else {
                T::one() / s
            }
        });
        Self { a, b, inv_sums, singular }
    }

    pub fn rows(&self) -> usize {
        self.a.dim()
    }

    pub fn cols(&self) -> usize {
        self.b.dim()
    }

    pub fn is_singular(&self) -> bool {
        !self.singular.is_empty()
    }

    /// Index pairs `(i, j)` with `a_i + b_j` numerically zero.
    pub fn singular_pairs(&self) -> &[(usize, usize, T)] {
        &self.singular
    }

    pub fn eigenvalue_sums(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.rows(), self.cols(), |i, j| self.a.values[i] + self.b.values[j])
    }

    pub fn solve(&self, c: &DMatrix<T>) -> Result<DMatrix<T>> {
        if let Some(&(i, j, s)) = self.singular.first() {
            return Err(Error::SingularPencil { i, j, sum: s.as_f64() });
        }
        self.solve_deflated(c)
    }

    /// Solve with every singular eigen-component of the solution set to
    /// zero (a least-squares solution when `C` is consistent).
    pub fn solve_deflated(&self, c: &DMatrix<T>) -> Result<DMatrix<T>> {
        if c.shape() != (self.rows(), self.cols()) {
            return Err(Error::DimensionMismatch {
                context: "sylvester solve",
                expected: (self.rows(), self.cols()),
                got: c.shape(),
            });
        }
        let mut y = &self.a.inverse * c * &self.b.vectors;
        y.component_mul_assign(&self.inv_sums);
        Ok(&self.a.vectors * y * &self.b.inverse)
    }

    /// `A X + X B` with the factored matrices.
    pub fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut y = &self.a.inverse * x * &self.b.vectors;
        let sums = self.eigenvalue_sums();
        y.component_mul_assign(&sums);
        &self.a.vectors * y * &self.b.inverse
    }
}

/// One-shot convenience wrapper.
pub fn solve_sylvester<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>) -> Result<DMatrix<T>> {
    SylvesterFactorization::new(a, b)?.solve(c)
}
