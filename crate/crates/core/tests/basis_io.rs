use nsctl_core::boundary::BoundaryConditions;
use nsctl_core::grid::GridSpec;
use nsctl_core::io::*;
use nsctl_core::ns_full::*;
use nsctl_core::pipeline::ReducedProblem;
use nsctl_core::pod_deim::BasisOptions;

#[test]
fn saved_basis_reloads_and_reproduces_reduced_steps() {
    let g = GridSpec::unit_square(12, 100.0).unwrap();
    let bc = BoundaryConditions::lid_driven(1.0);
    let forcing = ForcingSpec::default();
    let m = FullModel::new(&g, 0.05, bc.clone(), forcing.clone()).unwrap();
    let (_, snaps) = m.integrate(&FullState::zeros(&g), 20, &ControlSignal::Constant(0.0), true).unwrap();
    let snaps = snaps.unwrap();
    let p = ReducedProblem::build(&m, &bc, &forcing, &snaps, &BasisOptions::tolerance(1e-4), 1.0).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let manifest = save_basis(&p.basis, &g, 1.0, dir.path()).unwrap();
    assert_eq!(manifest.ranks, p.basis.ranks());
    let first = std::fs::read(dir.path().join("manifest.json")).unwrap();
    save_basis(&p.basis, &g, 1.0, dir.path()).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("manifest.json")).unwrap());

    let (basis, back) = load_basis::<f64>(dir.path()).unwrap();
    assert_eq!(back, manifest);
    assert_eq!(basis.u_l, p.basis.u_l);
    assert_eq!(basis.phi_v_r, p.basis.phi_v_r);
    assert_eq!(basis.d_u_r, p.basis.d_u_r);

    let q = ReducedProblem::from_basis(&m, &bc, &forcing, basis, back.gamma_up).unwrap();
    let x = p.encode(&FullState::zeros(&g)).unwrap();
    let a = p.step_node(&x, 0.0, 0).unwrap();
    let b = q.step_node(&x, 0.0, 0).unwrap();
    assert_eq!(a.u, b.u);
    assert_eq!(a.p, b.p);
}

#[test]
fn missing_manifest_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_basis::<f64>(dir.path()), Err(nsctl_core::Error::Io(_))));
}
