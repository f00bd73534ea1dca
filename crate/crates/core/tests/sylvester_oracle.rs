use nalgebra::{DMatrix, DVector};
use nsctl_core::sylvester::{EigenFactor, SylvesterFactorization};
use nsctl_core::fd_operators::OperatorSet;
use nsctl_core::grid::GridSpec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kron_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
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
    let rhs = DVector::from_column_slice(c.as_slice());
    let x = big.lu().solve(&rhs).expect("nonsingular Kronecker system");
    DMatrix::from_column_slice(m, k, x.as_slice())
}

fn random_diagonalizable(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    if rng.gen_bool(0.5) {
        let s = DMatrix::from_fn(n, n, |i, j| (i == j) as u8 as f64 + 0.3 * rng.gen_range(-1.0..1.0));
        let lam = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.gen_range(0.5..3.0)));
        &s * lam * s.try_inverse().unwrap()
    } else {
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &g * g.transpose() + DMatrix::identity(n, n) * 0.5
    }
}

#[test]
fn hundred_random_instances_match_kronecker_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let m = rng.gen_range(1..=10);
        let k = rng.gen_range(1..=10);
        let a = random_diagonalizable(&mut rng, m);
        let b = random_diagonalizable(&mut rng, k);
        let c = DMatrix::from_fn(m, k, |_, _| rng.gen_range(-1.0..1.0));
        let f = SylvesterFactorization::new(&a, &b).unwrap();
        let x = f.solve(&c).unwrap();
        let res = (&a * &x + &x * &b - &c).norm();
        assert!(res <= 1e-10 * (1.0 + c.norm()), "residual {res}");
        let oracle = kron_solve(&a, &b, &c);
        assert!((x - oracle).amax() <= 1e-10);
    }
}

#[test]
fn five_by_four_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_diagonalizable(&mut rng, 5);
    let b = random_diagonalizable(&mut rng, 4);
    let c = DMatrix::from_fn(5, 4, |_, _| rng.gen_range(-1.0..1.0));
    let x = SylvesterFactorization::new(&a, &b).unwrap().solve(&c).unwrap();
    assert!((x - kron_solve(&a, &b, &c)).amax() < 1e-10);
}

#[test]
fn grid_operators_reconstruct() {
    let o = OperatorSet::new(&GridSpec::unit_square(6, 100.0).unwrap()).unwrap();
    for a in [&o.a1_u, &o.a2_u, &o.a1_v, &o.a2_v] {
        let f = EigenFactor::new(a).unwrap();
        assert!((f.reconstruct() - a).norm() / a.norm() < 1e-12);
    }
}

#[test]
fn pressure_pair_has_exactly_one_singular_sum() {
    let o = OperatorSet::new(&GridSpec::new(5, 7, 1.0, 1.0, 10.0).unwrap()).unwrap();
    let f = SylvesterFactorization::new(&o.a1_p, &o.a2_p).unwrap();
    assert_eq!(f.singular_pairs().len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn solve_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=8);
        let a = random_diagonalizable(&mut rng, m);
        let b = random_diagonalizable(&mut rng, k);
        let c1 = DMatrix::from_fn(m, k, |_, _| rng.gen_range(-1.0..1.0));
        let c2 = DMatrix::from_fn(m, k, |_, _| rng.gen_range(-1.0..1.0));
        let f = SylvesterFactorization::new(&a, &b).unwrap();
        let lhs = f.solve(&(&c1 * alpha + &c2 * beta)).unwrap();
        let rhs = f.solve(&c1).unwrap() * alpha + f.solve(&c2).unwrap() * beta;
        prop_assert!((lhs - rhs).amax() <= 1e-12 * (1.0 + alpha.abs() + beta.abs()) * 10.0);
    }

    #[test]
    fn residual_bound_on_random_symmetric_pairs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(1..=10);
        let k = rng.gen_range(1..=10);
        let a = random_diagonalizable(&mut rng, m);
        let b = random_diagonalizable(&mut rng, k);
        let c = DMatrix::from_fn(m, k, |_, _| rng.gen_range(-5.0..5.0));
        let x = SylvesterFactorization::new(&a, &b).unwrap().solve(&c).unwrap();
        prop_assert!((&a * &x + &x * &b - &c).norm() <= 1e-10 * (1.0 + c.norm()));
    }
}
