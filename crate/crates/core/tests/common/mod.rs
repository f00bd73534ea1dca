#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nsctl_core::boundary::BoundaryValues;
use nsctl_core::grid::GridSpec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_boundary(rng: &mut ChaCha8Rng, g: &GridSpec<f64>) -> BoundaryValues<f64> {
    let mut v = |n: usize| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    BoundaryValues {
        u_n: v(g.n_x + 1),
        u_s: v(g.n_x + 1),
        u_w: v(g.n_y),
        u_e: v(g.n_y),
        v_n: v(g.n_x),
        v_s: v(g.n_x),
        v_w: v(g.n_y + 1),
        v_e: v(g.n_y + 1),
    }
}

/// Dense `(I_k (x) A + B^T (x) I_m) vec X = vec C` solve; `pin` replaces the
/// first equation by `X[0, 0] = 0`.
pub fn kron_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, pin: bool) -> DMatrix<f64> {
    let (m, k) = (a.nrows(), b.nrows());
    let mut big = DMatrix::zeros(m * k, m * k);
    for j in 0..k {
        for i in 0..m {
            for p in 0..m {
                big[(j * m + i, j * m + p)] += a[(i, p)];
            }
            for q in 0..k {
                big[(j * m + i, q * m + i)] += b[(q, j)];
            }
        }
    }
    let mut rhs = DVector::from_column_slice(c.as_slice());
    if pin {
        big.row_mut(0).fill(0.0);
        big[(0, 0)] = 1.0;
        rhs[0] = 0.0;
    }
    let x = big.lu().solve(&rhs).expect("nonsingular Kronecker system");
    DMatrix::from_column_slice(m, k, x.as_slice())
}
