mod common;

use common::random_matrix;
use nalgebra::DMatrix;
use nsctl_core::boundary::BoundaryConditions;
use nsctl_core::grid::GridSpec;
use nsctl_core::ns_full::*;
use nsctl_core::ns_reduced::*;
use nsctl_core::pod_deim::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn orthonormal(rng: &mut ChaCha8Rng, m: usize, k: usize) -> DMatrix<f64> {
    random_matrix(rng, m, k).qr().q().columns(0, k).into_owned()
}

fn random_basis(rng: &mut ChaCha8Rng, g: &GridSpec<f64>, k: usize, p: usize) -> ReducedBasis<f64> {
    let (nx, ny) = (g.n_x, g.n_y);
    let phi_u_l = orthonormal(rng, nx - 1, p);
    let phi_u_r = orthonormal(rng, ny, p);
    let phi_v_l = orthonormal(rng, nx, p);
    let phi_v_r = orthonormal(rng, ny - 1, p);
    ReducedBasis {
        u_l: orthonormal(rng, nx - 1, k),
        u_r: orthonormal(rng, ny, k),
        v_l: orthonormal(rng, nx, k),
        v_r: orthonormal(rng, ny - 1, k),
        p_l: orthonormal(rng, nx, k),
        p_r: orthonormal(rng, ny, k),
        d_u_l: qdeim_indices(&phi_u_l).unwrap(),
        d_u_r: qdeim_indices(&phi_u_r).unwrap(),
        d_v_l: qdeim_indices(&phi_v_l).unwrap(),
        d_v_r: qdeim_indices(&phi_v_r).unwrap(),
        phi_u_l,
        phi_u_r,
        phi_v_l,
        phi_v_r,
        tol: 0.0,
    }
}

/// `U_l^T Phi (D^T Phi)^{-1} F[I, J] (D_r^T Phi_r)^{-T} Phi_r^T U_r`.
fn deim_reference(f: &DMatrix<f64>, xl: &DMatrix<f64>, xr: &DMatrix<f64>, pl: &DMatrix<f64>, pr: &DMatrix<f64>, il: &[usize], ir: &[usize]) -> DMatrix<f64> {
    let sl = select_rows(pl, il).try_inverse().unwrap();
    let sr = select_rows(pr, ir).try_inverse().unwrap();
    let fs = DMatrix::from_fn(il.len(), ir.len(), |a, b| f[(il[a], ir[b])]);
    xl.transpose() * pl * sl * fs * sr.transpose() * pr.transpose() * xr
}

#[test]
fn deim_matches_lift_and_sample_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (n, k, p) in [(8, 3, 4), (12, 5, 6), (32, 8, 8), (16, 4, 2)] {
        let g = GridSpec::new(n, n + 1, 1.0, 1.0, 100.0).unwrap();
        let b = random_basis(&mut rng, &g, k, p);
        let bc = BoundaryConditions::lid_driven(1.0);
        let ops = nsctl_core::fd_operators::OperatorSet::new(&g).unwrap();
        let red = assemble_reduced(&ops, &b, &bc, &ForcingSpec::default(), 0.0).unwrap();
        let bv = bc.eval(&g, 0.0, 0.0).unwrap();
        for gamma in [0.0, 0.6] {
            let uh = random_matrix(&mut rng, k, k);
            let vh = random_matrix(&mut rng, k, k);
            let u = &b.u_l * &uh * b.u_r.transpose();
            let v = &b.v_l * &vh * b.v_r.transpose();
            let (fu, fv) = nonlinear_terms(&u, &v, &ops, &bv, gamma);
            let ru = deim_reference(&fu, &b.u_l, &b.u_r, &b.phi_u_l, &b.phi_u_r, &b.d_u_l, &b.d_u_r);
            let rv = deim_reference(&fv, &b.v_l, &b.v_r, &b.phi_v_l, &b.phi_v_r, &b.d_v_l, &b.d_v_r);
            let du = deim_nonlinear_u(&uh, &vh, &red, 0.0, gamma);
            let dv = deim_nonlinear_v(&uh, &vh, &red, 0.0, gamma);
            assert!((&du - &ru).amax() <= 1e-9 * (1.0 + ru.amax()), "n={n}: {:e}", (&du - &ru).amax());
            assert!((&dv - &rv).amax() <= 1e-9 * (1.0 + rv.amax()));
        }
        // zero reduced state with homogeneous walls
        let red0 = assemble_reduced(&ops, &b, &BoundaryConditions::homogeneous(), &ForcingSpec::default(), 0.0).unwrap();
        let z = DMatrix::zeros(k, k);
        assert!(deim_nonlinear_u(&z, &z, &red0, 0.0, 1.0).iter().all(|x| *x == 0.0));
        assert!(red0.div_bc[0].iter().chain(red0.visc_bc_u[0].iter()).all(|x| *x == 0.0));
        for (_, m) in red.named_matrices() {
            assert!(m.nrows() <= k.max(p) + 1 && m.ncols() <= k.max(p) + 1);
        }
    }
}

#[test]
fn full_rank_deim_reproduces_projected_advection() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let g = GridSpec::new(7, 6, 1.0, 1.0, 100.0).unwrap();
    let ops = nsctl_core::fd_operators::OperatorSet::new(&g).unwrap();
    let mut b = ReducedBasis::identity(&g);
    // rotate the state bases so that the projection is not trivial
    b.u_l = orthonormal(&mut rng, 6, 6);
    b.v_r = orthonormal(&mut rng, 5, 5);
    let bc = BoundaryConditions::lid_driven(1.0);
    let red = assemble_reduced(&ops, &b, &bc, &ForcingSpec::default(), 0.0).unwrap();
    let u = random_matrix(&mut rng, 6, 6);
    let v = random_matrix(&mut rng, 7, 5);
    let s = project(&FullState { u: u.clone(), v: v.clone(), p: DMatrix::zeros(7, 6), t: 0.0 }, &b).unwrap();
    let (fu, fv) = nonlinear_terms(&u, &v, &ops, &bc.eval(&g, 0.0, 0.0).unwrap(), 0.8);
    let du = deim_nonlinear_u(&s.u, &s.v, &red, 0.0, 0.8);
    let dv = deim_nonlinear_v(&s.u, &s.v, &red, 0.0, 0.8);
    assert!((du - b.u_l.transpose() * fu * &b.u_r).amax() < 1e-10);
    assert!((dv - b.v_l.transpose() * fv * &b.v_r).amax() < 1e-10);
}

fn mean_free(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.add_scalar(-m.mean())
}

#[test]
fn full_rank_reduced_model_reproduces_full_model() {
    for (nx, ny) in [(6, 6), (9, 7), (16, 16)] {
        let g = GridSpec::new(nx, ny, 1.0, 1.0, 100.0).unwrap();
        let dt = 0.04;
        let mut rng = ChaCha8Rng::seed_from_u64(nx as u64);
        let psi = random_matrix(&mut rng, nx - 1, ny);
        let forcing = ForcingSpec { psi_u: Some(psi), upwind: UpwindPolicy::Fixed(0.3), ..Default::default() };
        let bc = BoundaryConditions::lid_driven(1.0);
        let full = FullModel::new(&g, dt, bc.clone(), forcing.clone()).unwrap();
        let b = ReducedBasis::identity(&g);
        let red = assemble_reduced(&full.ops, &b, &bc, &forcing, 0.3).unwrap();
        let rm = ReducedModel::new(red, dt).unwrap();
        let control = ControlSignal::Sequence((0..10).map(|j| 0.1 * j as f64).collect());
        let (ft, _) = full.integrate(&FullState::zeros(&g), 10, &control, false).unwrap();
        let init = project(&FullState::zeros(&g), &b).unwrap();
        let rt = rm.integrate(&init, 10, &control).unwrap();
        for (f, r) in ft.iter().zip(rt.iter()) {
            let l = lift(r, &b).unwrap();
            assert!((&f.u - &l.u).amax() < 1e-8, "{nx}x{ny}");
            assert!((&f.v - &l.v).amax() < 1e-8);
            assert!((mean_free(&f.p) - mean_free(&l.p)).amax() < 1e-7);
        }
        // one step and one pressure solve
        let s1 = rm.step(&init, 0.5).unwrap();
        let f1 = full.step(&FullState::zeros(&g), 0.5).unwrap();
        assert!((lift(&s1, &b).unwrap().u - f1.u).amax() < 1e-9);
    }
}

#[test]
fn reduced_pressure_solve_residual_and_zero_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let g = GridSpec::unit_square(12, 100.0).unwrap();
    let ops = nsctl_core::fd_operators::OperatorSet::new(&g).unwrap();
    let b = random_basis(&mut rng, &g, 4, 4);
    let red = assemble_reduced(&ops, &b, &BoundaryConditions::homogeneous(), &ForcingSpec::default(), 0.0).unwrap();
    let rm = ReducedModel::new(red.clone(), 0.05).unwrap();
    let (mut u, mut v) = (DMatrix::zeros(4, 4), DMatrix::zeros(4, 4));
    let phi = rm.reduced_pressure_correct(&mut u, &mut v, 0.0).unwrap();
    assert!(phi.iter().all(|x| *x == 0.0));
    let u0 = random_matrix(&mut rng, 4, 4);
    let v0 = random_matrix(&mut rng, 4, 4);
    let rhs = &red.div_u_l * &u0 * &red.div_u_r + &red.div_v_l * &v0 * &red.div_v_r;
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let phi = rm.reduced_pressure_correct(&mut u, &mut v, 0.0).unwrap();
    let res = &red.a1_p * &phi + &phi * &red.a2_p - &rhs;
    assert!(res.norm() <= 1e-10 * (1.0 + rhs.norm()));
    // zero state is an equilibrium of the reduced step
    let z = ReducedState::zeros(&red);
    let s = rm.step(&z, 0.0).unwrap();
    assert!(s.u.iter().chain(s.v.iter()).all(|x| *x == 0.0));
}

#[test]
fn project_and_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let g = GridSpec::unit_square(10, 100.0).unwrap();
    let b = random_basis(&mut rng, &g, 3, 3);
    let z = project(&FullState::zeros(&g), &b).unwrap();
    assert!(z.u.iter().all(|x| *x == 0.0));
    let r = ReducedState { u: random_matrix(&mut rng, 3, 3), v: random_matrix(&mut rng, 3, 3), p: random_matrix(&mut rng, 3, 3), t: 0.0 };
    let l = lift(&r, &b).unwrap();
    let back = project(&l, &b).unwrap();
    assert!((back.u - &r.u).amax() < 1e-12 && (back.v - &r.v).amax() < 1e-12 && (back.p - &r.p).amax() < 1e-12);
    let again = lift(&project(&l, &b).unwrap(), &b).unwrap();
    assert!((again.u - l.u).amax() < 1e-12);
    assert!(project(&FullState::zeros(&GridSpec::unit_square(9, 1.0).unwrap()), &b).is_err());
}

#[test]
fn pod_recovers_exact_rank_and_bounds_projection_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    // rank-2 family
    let x = random_matrix(&mut rng, 12, 2);
    let y = random_matrix(&mut rng, 9, 2);
    let snaps: Vec<_> = (0..6).map(|_| &x * random_matrix(&mut rng, 2, 2) * y.transpose()).collect();
    let (l, r) = two_sided_pod(&snaps, 1e-12).unwrap();
    assert_eq!((l.ncols(), r.ncols()), (2, 2));
    for s in &snaps {
        let e = s - &l * l.transpose() * s * &r * r.transpose();
        assert!(e.norm() <= 1e-10);
    }
    // random family, aggregate bound
    let snaps: Vec<_> = (0..20).map(|_| random_matrix(&mut rng, 15, 11)).collect();
    for tol in [0.5, 0.2, 1e-3] {
        let (l, r) = two_sided_pod(&snaps, tol).unwrap();
        assert!((l.transpose() * &l - DMatrix::identity(l.ncols(), l.ncols())).amax() < 1e-12);
        let (mut err, mut tot) = (0.0, 0.0);
        for s in &snaps {
            err += (s - &l * l.transpose() * s * &r * r.transpose()).norm_squared();
            tot += s.norm_squared();
        }
        assert!(err.sqrt() <= 2.0 * tol * tot.sqrt());
    }
}

#[test]
fn exact_rank_three_family_gives_rank_three_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let g = GridSpec::unit_square(10, 100.0).unwrap();
    let mk = |rng: &mut ChaCha8Rng, m: usize, n: usize| {
        let a = random_matrix(rng, m, 3);
        let c = random_matrix(rng, n, 3);
        (0..8).map(|_| &a * DMatrix::from_diagonal(&random_matrix(rng, 3, 1).column(0).into_owned()) * c.transpose()).collect::<Vec<_>>()
    };
    let snaps = SnapshotSet { u: mk(&mut rng, 9, 10), v: mk(&mut rng, 10, 9), p: mk(&mut rng, 10, 10), f_u: mk(&mut rng, 9, 10), f_v: mk(&mut rng, 10, 9) };
    let b = build_reduced_basis(&snaps, 1e-12).unwrap();
    let r = b.ranks();
    // the pressure bases carry the constant mode on top of the snapshot span
    assert_eq!(r, RankReport { k_u: (3, 3), k_v: (3, 3), k_p: (4, 4), p_u: (3, 3), p_v: (3, 3) });
    b.validate(&g).unwrap();
    // DEIM is exact on snapshots inside the DEIM space
    for f in &snaps.f_u {
        let si = select_rows(&b.phi_u_l, &b.d_u_l).try_inverse().unwrap();
        let sj = select_rows(&b.phi_u_r, &b.d_u_r).try_inverse().unwrap();
        let fs = DMatrix::from_fn(3, 3, |a, c| f[(b.d_u_l[a], b.d_u_r[c])]);
        let approx = &b.phi_u_l * si * fs * sj.transpose() * b.phi_u_r.transpose();
        assert!((approx - f).amax() <= 1e-10 * (1.0 + f.amax()));
    }
}

#[test]
fn zero_snapshots_are_rejected() {
    let g = GridSpec::unit_square(6, 100.0).unwrap();
    let m = FullModel::new(&g, 0.1, BoundaryConditions::homogeneous(), ForcingSpec::default()).unwrap();
    let (_, snaps) = m.integrate(&FullState::zeros(&g), 2, &ControlSignal::Constant(0.0), true).unwrap();
    assert!(matches!(build_reduced_basis(&snaps.unwrap(), 1e-3), Err(nsctl_core::Error::DegenerateSnapshots(_))));
}

fn gram_schmidt_pivots(phi: &DMatrix<f64>) -> Vec<usize> {
    let a = phi.transpose();
    let p = a.nrows();
    let mut chosen: Vec<usize> = Vec::new();
    let mut q: Vec<nalgebra::DVector<f64>> = Vec::new();
    for _ in 0..p {
        let mut best = (0, -1.0);
        for j in 0..a.ncols() {
            if chosen.contains(&j) {
                continue;
            }
            let mut r = a.column(j).into_owned();
            for qi in &q {
                r -= qi * qi.dot(&r);
            }
            if r.norm() > best.1 {
                best = (j, r.norm());
            }
        }
        let mut r = a.column(best.0).into_owned();
        for qi in &q {
            r -= qi * qi.dot(&r);
        }
        q.push(r.normalize());
        chosen.push(best.0);
    }
    chosen
}

#[test]
fn qdeim_matches_pivoted_gram_schmidt() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..20 {
        let phi = orthonormal(&mut rng, 8, 3);
        let idx = qdeim_indices(&phi).unwrap();
        assert_eq!(idx, gram_schmidt_pivots(&phi));
        let c = deim_condition(&phi, &idx);
        assert!(c.is_finite() && c >= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn deim_oracle_on_random_grids(seed in any::<u64>(), n in 4usize..20, k in 1usize..6, p in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GridSpec::new(n, n + rng.gen_range(0..3), 1.0, 1.0, 50.0).unwrap();
        let b = random_basis(&mut rng, &g, k.min(n - 1), p.min(n - 1));
        let ops = nsctl_core::fd_operators::OperatorSet::new(&g).unwrap();
        let bc = BoundaryConditions::lid_driven(1.0);
        let red = assemble_reduced(&ops, &b, &bc, &ForcingSpec::default(), 0.0).unwrap();
        let kk = b.u_l.ncols();
        let uh = random_matrix(&mut rng, kk, kk);
        let vh = random_matrix(&mut rng, kk, kk);
        let u = &b.u_l * &uh * b.u_r.transpose();
        let v = &b.v_l * &vh * b.v_r.transpose();
        let (fu, _) = nonlinear_terms(&u, &v, &ops, &bc.eval(&g, 0.0, 0.0).unwrap(), 1.0);
        let reference = deim_reference(&fu, &b.u_l, &b.u_r, &b.phi_u_l, &b.phi_u_r, &b.d_u_l, &b.d_u_r);
        let got = deim_nonlinear_u(&uh, &vh, &red, 0.0, 1.0);
        prop_assert!((got - &reference).amax() <= 1e-9 * (1.0 + reference.amax()));
    }
}
