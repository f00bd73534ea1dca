//! Full-order matrix Navier–Stokes integrator.
//!
//! One step of size `dt` advances `(U, V)` by an explicit upwinded
//! nonlinear term, an implicit viscous Sylvester solve per velocity
//! component and a pressure projection that leaves the velocity discretely
//! divergence free.

use nalgebra::DMatrix;

use crate::boundary::{frame_u, frame_v, pad_u, pad_v, BoundaryConditions, BoundaryValues};
use crate::error::{Error, Result};
use crate::fd_operators::{check_shape, viscous_boundary_u, viscous_boundary_v, OperatorSet};
use crate::grid::GridSpec;
use crate::pod_deim::SnapshotSet;
use crate::scalar::{all_finite, max_abs, Real};
use crate::sylvester::SylvesterFactorization;

/// Velocity and pressure on the staggered grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState<T: Real> {
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
    pub p: DMatrix<T>,
    pub t: T,
}

impl<T: Real> FullState<T> {
    pub fn zeros(grid: &GridSpec<T>) -> Self {
        let (a, b) = grid.u_shape();
        let (c, d) = grid.v_shape();
        let (e, f) = grid.p_shape();
        Self { u: DMatrix::zeros(a, b), v: DMatrix::zeros(c, d), p: DMatrix::zeros(e, f), t: T::zero() }
    }

    /// Velocity sampled from `(x, y) -> (u, v)` at the face centres.
    pub fn from_velocity(grid: &GridSpec<T>, f: impl Fn(T, T) -> (T, T)) -> Self {
        let mut s = Self::zeros(grid);
        s.u = DMatrix::from_fn(grid.n_x - 1, grid.n_y, |i, j| f(grid.x_face(i), grid.y_centre(j)).0);
        s.v = DMatrix::from_fn(grid.n_x, grid.n_y - 1, |i, j| f(grid.x_centre(i), grid.y_face(j)).1);
        s
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.u) && all_finite(&self.v) && all_finite(&self.p)
    }
}

/// Choice of the upwinding weight `gamma` in the nonlinear term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpwindPolicy<T> {
    /// `min(1.2 dt max(max|U|/h_x, max|V|/h_y), 1)` recomputed every step.
    Adaptive,
    Fixed(T),
}

/// Body force and distributed actuation shape.
#[derive(Debug, Clone)]
pub struct ForcingSpec<T: Real> {
    pub f_u: Option<DMatrix<T>>,
    pub f_v: Option<DMatrix<T>>,
    /// Actuation shape: the control adds `alpha * psi` to the momentum equations.
    pub psi_u: Option<DMatrix<T>>,
    pub psi_v: Option<DMatrix<T>>,
    pub upwind: UpwindPolicy<T>,
}

impl<T: Real> Default for ForcingSpec<T> {
    fn default() -> Self {
        Self { f_u: None, f_v: None, psi_u: None, psi_v: None, upwind: UpwindPolicy::Adaptive }
    }
}

impl<T: Real> ForcingSpec<T> {
    pub fn validate(&self, grid: &GridSpec<T>) -> Result<()> {
        for (m, shape, ctx) in [
            (&self.f_u, grid.u_shape(), "body force f_u"),
            (&self.f_v, grid.v_shape(), "body force f_v"),
            (&self.psi_u, grid.u_shape(), "actuation shape psi_u"),
            (&self.psi_v, grid.v_shape(), "actuation shape psi_v"),
        ] {
            if let Some(m) = m {
                check_shape(m, shape, ctx)?;
            }
        }
        if let UpwindPolicy::Fixed(g) = self.upwind {
            if !(g >= T::zero() && g <= T::one()) {
                return Err(Error::InvalidParameter(format!("upwind weight {g} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Control applied on each time step.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSignal<T> {
    Constant(T),
    Sequence(Vec<T>),
}

impl<T: Real> ControlSignal<T> {
    pub fn at(&self, step: usize) -> Result<T> {
        match self {
            Self::Constant(a) => Ok(*a),
            Self::Sequence(s) => s.get(step).copied().ok_or_else(|| {
                Error::InvalidParameter(format!("control signal has {} entries, step {step} requested", s.len()))
            }),
        }
    }
}

/// Which pressure cell is pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PressurePin {
    #[default]
    First,
    Last,
}

/// Interpolated and half-differenced velocities entering the nonlinear term.
///
/// Cell quantities (`*_c`) live on pressure cells, corner quantities
/// (`*_k`) on grid nodes including the walls.
#[derive(Debug, Clone)]
pub struct StaggeredFields<T: Real> {
    /// `n_x x n_y`
    pub uac: DMatrix<T>,
    pub udc: DMatrix<T>,
    pub vac: DMatrix<T>,
    pub vdc: DMatrix<T>,
    /// `(n_x + 1) x (n_y + 1)`
    pub uak: DMatrix<T>,
    pub udk: DMatrix<T>,
    pub vak: DMatrix<T>,
    pub vdk: DMatrix<T>,
}

pub fn staggered_fields<T: Real>(
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    ops: &OperatorSet<T>,
    bv: &BoundaryValues<T>,
) -> StaggeredFields<T> {
    let half = T::lit(0.5);
    let ub = pad_u(u, bv);
    let vb = pad_v(v, bv);
    let uf = frame_u(u, bv);
    let vf = frame_v(v, bv);
    StaggeredFields {
        uac: &ops.c_x * &ub,
        udc: &ops.d_x * &ub * half,
        vac: &vb * ops.c_y.transpose(),
        vdc: &vb * ops.d_y.transpose() * half,
        uak: &uf * ops.k_y.transpose(),
        udk: &uf * ops.g_y.transpose(),
        vak: &ops.k_x * &vf,
        vdk: &ops.g_x * &vf,
    }
}

/// `|a| .* b` elementwise.
fn abs_mul<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.zip_map(b, |x, y| x.abs() * y)
}

/// Cell flux `Uac^2 - gamma |Uac| Udc` and corner flux `Uak Vak - gamma Udk |Vak|`.
pub fn fluxes_u<T: Real>(f: &StaggeredFields<T>, gamma: T) -> (DMatrix<T>, DMatrix<T>) {
    let wc = f.uac.component_mul(&f.uac) - abs_mul(&f.uac, &f.udc) * gamma;
    let wk = f.uak.component_mul(&f.vak) - abs_mul(&f.vak, &f.udk) * gamma;
    (wc, wk)
}

/// Corner flux `Uak Vak - gamma |Uak| Vdk` and cell flux `Vac^2 - gamma |Vac| Vdc`.
pub fn fluxes_v<T: Real>(f: &StaggeredFields<T>, gamma: T) -> (DMatrix<T>, DMatrix<T>) {
    let wk = f.uak.component_mul(&f.vak) - abs_mul(&f.uak, &f.vdk) * gamma;
    let wc = f.vac.component_mul(&f.vac) - abs_mul(&f.vac, &f.vdc) * gamma;
    (wk, wc)
}

/// `F_U = -B1_U^T Wc + E_x^T Wk B2_U^T`, the x-momentum advection.
pub fn assemble_u<T: Real>(ops: &OperatorSet<T>, wc: &DMatrix<T>, wk: &DMatrix<T>) -> DMatrix<T> {
    -(ops.b1_u.transpose() * wc) + ops.e_x.transpose() * wk * ops.b2_u.transpose()
}

/// `F_V = B1_V Wk E_y - Wc B2_V`, the y-momentum advection.
pub fn assemble_v<T: Real>(ops: &OperatorSet<T>, wk: &DMatrix<T>, wc: &DMatrix<T>) -> DMatrix<T> {
    &ops.b1_v * wk * &ops.e_y - wc * &ops.b2_v
}

pub fn nonlinear_u<T: Real>(
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    ops: &OperatorSet<T>,
    bv: &BoundaryValues<T>,
    gamma: T,
) -> Result<DMatrix<T>> {
    ops.check_u(u, "nonlinear_u")?;
    ops.check_v(v, "nonlinear_u")?;
    let f = staggered_fields(u, v, ops, bv);
    let (wc, wk) = fluxes_u(&f, gamma);
    Ok(assemble_u(ops, &wc, &wk))
}

pub fn nonlinear_v<T: Real>(
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    ops: &OperatorSet<T>,
    bv: &BoundaryValues<T>,
    gamma: T,
) -> Result<DMatrix<T>> {
    ops.check_u(u, "nonlinear_v")?;
    ops.check_v(v, "nonlinear_v")?;
    let f = staggered_fields(u, v, ops, bv);
    let (wk, wc) = fluxes_v(&f, gamma);
    Ok(assemble_v(ops, &wk, &wc))
}

/// Both advection terms from one evaluation of the staggered fields.
pub fn nonlinear_terms<T: Real>(
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    ops: &OperatorSet<T>,
    bv: &BoundaryValues<T>,
    gamma: T,
) -> (DMatrix<T>, DMatrix<T>) {
    let f = staggered_fields(u, v, ops, bv);
    let (wc, wk) = fluxes_u(&f, gamma);
    let fu = assemble_u(ops, &wc, &wk);
    let (wk, wc) = fluxes_v(&f, gamma);
    let fv = assemble_v(ops, &wk, &wc);
    (fu, fv)
}

/// Adaptive upwinding weight from the row-padded `U` and column-padded `V`.
pub fn adaptive_upwind<T: Real>(
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    grid: &GridSpec<T>,
    bv: &BoundaryValues<T>,
    dt: T,
) -> T {
    let mu = max_abs(u).max(bv.u_w.amax()).max(bv.u_e.amax());
    let mv = max_abs(v).max(bv.v_s.amax()).max(bv.v_n.amax());
    let g = T::lit(1.2) * dt * (mu / grid.h_x()).max(mv / grid.h_y());
    g.min(T::one())
}

/// Factorized pressure Laplacian with the constant null space deflated.
#[derive(Debug, Clone)]
pub struct PressureSolver<T: Real> {
    fact: SylvesterFactorization<T>,
    pub pin: PressurePin,
}

impl<T: Real> PressureSolver<T> {
    pub fn new(ops: &OperatorSet<T>) -> Result<Self> {
        Ok(Self { fact: SylvesterFactorization::new(&ops.a1_p, &ops.a2_p)?, pin: PressurePin::First })
    }

    pub fn with_pin(mut self, pin: PressurePin) -> Self {
        self.pin = pin;
        self
    }

    /// Solve `A1_P Phi + Phi A2_P = div` and pin one cell to zero.
    pub fn solve(&self, div: &DMatrix<T>) -> Result<DMatrix<T>> {
        let mut phi = self.fact.solve_deflated(div)?;
        let (m, n) = phi.shape();
        let c = match self.pin {
            PressurePin::First => phi[(0, 0)],
            PressurePin::Last => phi[(m - 1, n - 1)],
        };
        phi.add_scalar_mut(-c);
        Ok(phi)
    }

    pub fn factorization(&self) -> &SylvesterFactorization<T> {
        &self.fact
    }
}

/// Project `(U, V)` onto discretely divergence-free fields.
///
/// Returns the potential `Phi` (pressure times `dt`); the corrected
/// velocity is `U + B1_U^T Phi`, `V + Phi B2_V`.
pub fn pressure_correct<T: Real>(
    u: &mut DMatrix<T>,
    v: &mut DMatrix<T>,
    ops: &OperatorSet<T>,
    bv: &BoundaryValues<T>,
    solver: &PressureSolver<T>,
) -> Result<DMatrix<T>> {
    let div = ops.divergence_padded(u, v, bv)?;
    let phi = solver.solve(&div)?;
    *u += ops.b1_u.transpose() * &phi;
    *v += &phi * &ops.b2_v;
    Ok(phi)
}

/// Nonlinear terms recorded during a step, evaluated at the step's input state.
#[derive(Debug, Clone)]
pub struct StepRecord<T: Real> {
    pub f_u: DMatrix<T>,
    pub f_v: DMatrix<T>,
    pub gamma: T,
    /// Velocities after the viscous solve, before the pressure correction.
    pub u_star: DMatrix<T>,
    pub v_star: DMatrix<T>,
}

/// Matrix-form full model with all factorizations prepared for a fixed `dt`.
#[derive(Clone)]
pub struct FullModel<T: Real> {
    pub ops: OperatorSet<T>,
    pub dt: T,
    pub bc: BoundaryConditions<T>,
    pub forcing: ForcingSpec<T>,
    visc_u: SylvesterFactorization<T>,
    visc_v: SylvesterFactorization<T>,
    pressure: PressureSolver<T>,
}

impl<T: Real> FullModel<T> {
    pub fn new(grid: &GridSpec<T>, dt: T, bc: BoundaryConditions<T>, forcing: ForcingSpec<T>) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        forcing.validate(grid)?;
        let ops = OperatorSet::new(grid)?;
        let (mu, mv) = (grid.n_x - 1, grid.n_x);
        let visc_u = SylvesterFactorization::new(
            &(DMatrix::identity(mu, mu) - &ops.a1_u * dt),
            &(ops.a2_u.transpose() * -dt),
        )?;
        let visc_v = SylvesterFactorization::new(
            &(DMatrix::identity(mv, mv) - &ops.a1_v * dt),
            &(ops.a2_v.transpose() * -dt),
        )?;
        assert!(!visc_u.is_singular() && !visc_v.is_singular(), "viscous pencils are definite");
        let pressure = PressureSolver::new(&ops)?;
        Ok(Self { ops, dt, bc, forcing, visc_u, visc_v, pressure })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.ops.grid
    }

    pub fn with_pin(mut self, pin: PressurePin) -> Self {
        self.pressure = self.pressure.with_pin(pin);
        self
    }

    pub fn pressure_solver(&self) -> &PressureSolver<T> {
        &self.pressure
    }

    pub fn upwind(&self, u: &DMatrix<T>, v: &DMatrix<T>, bv: &BoundaryValues<T>) -> T {
        match self.forcing.upwind {
            UpwindPolicy::Adaptive => adaptive_upwind(u, v, self.grid(), bv, self.dt),
            UpwindPolicy::Fixed(g) => g,
        }
    }

    pub fn step(&self, state: &FullState<T>, alpha: T) -> Result<FullState<T>> {
        self.step_recorded(state, alpha).map(|(s, _)| s)
    }

    /// One step, also returning the nonlinear terms of the input state.
    pub fn step_recorded(&self, state: &FullState<T>, alpha: T) -> Result<(FullState<T>, StepRecord<T>)> {
        let ops = &self.ops;
        ops.check_u(&state.u, "step")?;
        ops.check_v(&state.v, "step")?;
        let dt = self.dt;
        let t1 = state.t + dt;
        let bv0 = self.bc.eval(&ops.grid, state.t, alpha)?;
        let bv1 = if self.bc.autonomous { bv0.clone() } else { self.bc.eval(&ops.grid, t1, alpha)? };

        let gamma = self.upwind(&state.u, &state.v, &bv0);
        let (f_u, f_v) = nonlinear_terms(&state.u, &state.v, ops, &bv0, gamma);

        let mut rhs_u = &state.u - &f_u * dt + viscous_boundary_u(&ops.grid, &bv1) * dt;
        let mut rhs_v = &state.v - &f_v * dt + viscous_boundary_v(&ops.grid, &bv1) * dt;
        if let Some(f) = &self.forcing.f_u {
            rhs_u += f * dt;
        }
        if let Some(f) = &self.forcing.f_v {
            rhs_v += f * dt;
        }
        if alpha != T::zero() {
            if let Some(p) = &self.forcing.psi_u {
                rhs_u += p * (dt * alpha);
            }
            if let Some(p) = &self.forcing.psi_v {
                rhs_v += p * (dt * alpha);
            }
        }
        let u_star = self.visc_u.solve(&rhs_u)?;
        let v_star = self.visc_v.solve(&rhs_v)?;
        let (mut u, mut v) = (u_star.clone(), v_star.clone());
        let phi = pressure_correct(&mut u, &mut v, ops, &bv1, &self.pressure)?;
        let next = FullState { u, v, p: phi / dt, t: t1 };
        Ok((next, StepRecord { f_u, f_v, gamma, u_star, v_star }))
    }

    /// Calls `observe(step, state, record)` for every step; `record` holds
    /// the nonlinear terms evaluated at `state` and is `None` for the final state.
    pub fn integrate_with(
        &self,
        init: &FullState<T>,
        n_t: usize,
        control: &ControlSignal<T>,
        mut observe: impl FnMut(usize, &FullState<T>, Option<&StepRecord<T>>),
    ) -> Result<FullState<T>> {
        let mut state = init.clone();
        for j in 0..n_t {
            let (next, rec) = self.step_recorded(&state, control.at(j)?)?;
            observe(j, &state, Some(&rec));
            if !next.is_finite() {
                return Err(Error::BlowUp { step: j + 1, t: next.t.as_f64() });
            }
            state = next;
        }
        observe(n_t, &state, None);
        Ok(state)
    }

    /// Trajectory of `n_t + 1` states and, if requested, the snapshot set
    /// (velocity, pressure and nonlinear terms of the visited states).
    pub fn integrate(
        &self,
        init: &FullState<T>,
        n_t: usize,
        control: &ControlSignal<T>,
        record_snapshots: bool,
    ) -> Result<(Vec<FullState<T>>, Option<SnapshotSet<T>>)> {
        let mut traj = Vec::with_capacity(n_t + 1);
        let mut snaps = record_snapshots.then(SnapshotSet::default);
        self.integrate_with(init, n_t, control, |_, s, rec| {
            traj.push(s.clone());
            if let (Some(set), Some(rec)) = (snaps.as_mut(), rec) {
                set.push(s, &rec.f_u, &rec.f_v);
                set.push_intermediate(&rec.u_star, &rec.v_star);
            }
        })?;
        Ok((traj, snaps))
    }
}
