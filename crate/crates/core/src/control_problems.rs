//! Actuation mechanisms, cost functionals and targets linking the flow solvers to the tree DP.

use std::io::Write;

use nalgebra::DMatrix;

use crate::boundary::BoundaryConditions;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ns_full::{ControlSignal, ForcingSpec, FullModel, FullState};
use crate::ns_reduced::ReducedState;
use crate::pod_deim::ReducedBasis;
use crate::scalar::Real;

/// `||W||^2_{L2,h} = h_x h_y sum W_ij^2` over both velocity components.
pub fn l2_norm_sq<T: Real>(u: &DMatrix<T>, v: &DMatrix<T>, grid: &GridSpec<T>) -> T {
    grid.cell_area() * (u.norm_squared() + v.norm_squared())
}

pub fn velocity_mismatch<T: Real>(s: &FullState<T>, target: &FullState<T>, grid: &GridSpec<T>) -> T {
    l2_norm_sq(&(&s.u - &target.u), &(&s.v - &target.v), grid)
}

fn mean<T: Real>(m: &DMatrix<T>) -> T {
    m.sum() / T::from_usize_lossy(m.len().max(1))
}

/// `||(P - mean P) - (Q - mean Q)||_F^2`.
pub fn pressure_mismatch<T: Real>(p: &DMatrix<T>, q: &DMatrix<T>) -> T {
    let d = p - q;
    let m = mean(&d);
    d.iter().fold(T::zero(), |acc, &x| acc + (x - m) * (x - m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn contains(&self, x: T, y: T) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// 0/1 indicator of `rect` sampled at the U and V unknowns.
pub fn subdomain_indicator<T: Real>(grid: &GridSpec<T>, rect: &Rect<T>) -> (DMatrix<T>, DMatrix<T>) {
    let (ur, uc) = grid.u_shape();
    let (vr, vc) = grid.v_shape();
    let ind = |inside: bool| if inside { T::one() } else { T::zero() };
    (
        DMatrix::from_fn(ur, uc, |i, j| ind(rect.contains(grid.x_face(i), grid.y_centre(j)))),
        DMatrix::from_fn(vr, vc, |i, j| ind(rect.contains(grid.x_centre(i), grid.y_face(j)))),
    )
}

/// How a scalar control enters the dynamics.
#[derive(Debug, Clone)]
pub enum Actuation<T: Real> {
    /// Shape fields on the staggered grid scaled by the control.
    Distributed { psi_u: DMatrix<T>, psi_v: DMatrix<T> },
    /// `sign * 1_omega` on both velocity components.
    Subdomain { rect: Rect<T>, sign: T },
    /// The control enters only through the wall traces.
    DirichletBoundary(BoundaryConditions<T>),
}

impl<T: Real> Actuation<T> {
    /// Shape fields `(Psi_U, Psi_V)`; `None` for boundary actuation.
    pub fn shape(&self, grid: &GridSpec<T>) -> Option<(DMatrix<T>, DMatrix<T>)> {
        match self {
            Self::Distributed { psi_u, psi_v } => Some((psi_u.clone(), psi_v.clone())),
            Self::Subdomain { rect, sign } => {
                let (u, v) = subdomain_indicator(grid, rect);
                Some((u * *sign, v * *sign))
            }
            Self::DirichletBoundary(_) => None,
        }
    }

    pub fn forcing(&self, grid: &GridSpec<T>) -> ForcingSpec<T> {
        match self.shape(grid) {
            Some((u, v)) => ForcingSpec { psi_u: Some(u), psi_v: Some(v), ..Default::default() },
            None => ForcingSpec::default(),
        }
    }

    /// Boundary conditions of the controlled problem; `base` unless the control acts on the walls.
    pub fn boundary(&self, base: &BoundaryConditions<T>) -> BoundaryConditions<T> {
        match self {
            Self::DirichletBoundary(bc) => bc.clone(),
            _ => base.clone(),
        }
    }
}

/// Adds `dt * alpha * Psi` to the momentum right-hand sides.
pub fn apply_actuation<T: Real>(
    rhs_u: &mut DMatrix<T>,
    rhs_v: &mut DMatrix<T>,
    actuation: &Actuation<T>,
    grid: &GridSpec<T>,
    alpha: T,
    dt: T,
) -> Result<()> {
    let Some((psi_u, psi_v)) = actuation.shape(grid) else { return Ok(()) };
    for (rhs, psi, ctx) in [(&mut *rhs_u, &psi_u, "actuation U"), (&mut *rhs_v, &psi_v, "actuation V")] {
        if rhs.shape() != psi.shape() {
            return Err(Error::DimensionMismatch { context: ctx, expected: psi.shape(), got: rhs.shape() });
        }
    }
    if alpha != T::zero() {
        *rhs_u += psi_u * (dt * alpha);
        *rhs_v += psi_v * (dt * alpha);
    }
    Ok(())
}

/// Reference state the cost compares against.
#[derive(Debug, Clone)]
pub enum Target<T: Real> {
    Zero,
    Stationary(FullState<T>),
    /// States at `t = k * dt`, looked up piecewise constant.
    Trajectory { states: Vec<FullState<T>>, dt: T },
}

impl<T: Real> Target<T> {
    /// `None` means the zero state.
    pub fn at(&self, t: T) -> Result<Option<&FullState<T>>> {
        match self {
            Self::Zero => Ok(None),
            Self::Stationary(s) => Ok(Some(s)),
            Self::Trajectory { states, dt } => {
                let k = (t / *dt).round();
                if k < T::zero() || k.as_f64() as usize >= states.len() {
                    return Err(Error::MissingTarget(format!("no target state at t = {t}")));
                }
                Ok(Some(&states[k.as_f64() as usize]))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum TerminalKind<T: Real> {
    None,
    /// `||y(T) - target(T)||^2_{L2,h}`.
    Velocity,
    /// Mean-free `||P(T) - P_ref||_F^2`.
    Pressure(DMatrix<T>),
}

#[derive(Debug, Clone)]
pub struct CostSpec<T: Real> {
    pub target: Target<T>,
    pub gamma_pen: T,
    pub lambda: T,
    /// Include the tracking term and control penalty at every step.
    pub running: bool,
    pub terminal: TerminalKind<T>,
    pub terminal_weight: T,
}

impl<T: Real> CostSpec<T> {
    pub fn tracking(target: Target<T>, gamma_pen: T) -> Self {
        Self { target, gamma_pen, lambda: T::zero(), running: true, terminal: TerminalKind::Velocity, terminal_weight: T::one() }
    }

    pub fn terminal_velocity(target: Target<T>) -> Self {
        Self { target, gamma_pen: T::zero(), lambda: T::zero(), running: false, terminal: TerminalKind::Velocity, terminal_weight: T::one() }
    }

    pub fn terminal_pressure(reference: DMatrix<T>) -> Self {
        Self {
            target: Target::Zero,
            gamma_pen: T::zero(),
            lambda: T::zero(),
            running: false,
            terminal: TerminalKind::Pressure(reference),
            terminal_weight: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_pen >= T::zero()) || !(self.lambda >= T::zero()) || !(self.terminal_weight >= T::zero()) {
            return Err(Error::InvalidParameter("cost weights and discount must be non-negative".into()));
        }
        Ok(())
    }
}

fn mismatch<T: Real>(s: &FullState<T>, target: Option<&FullState<T>>, grid: &GridSpec<T>) -> T {
    match target {
        Some(t) => velocity_mismatch(s, t, grid),
        None => l2_norm_sq(&s.u, &s.v, grid),
    }
}

/// `||y - y_bar(t)||^2_{L2,h} + gamma_pen alpha^2`, or zero for terminal-only costs.
pub fn running_cost<T: Real>(state: &FullState<T>, alpha: T, t: T, cost: &CostSpec<T>, grid: &GridSpec<T>) -> Result<T> {
    if !cost.running {
        return Ok(T::zero());
    }
    Ok(mismatch(state, cost.target.at(t)?, grid) + cost.gamma_pen * alpha * alpha)
}

pub fn terminal_cost<T: Real>(state: &FullState<T>, cost: &CostSpec<T>, grid: &GridSpec<T>) -> Result<T> {
    let g = match &cost.terminal {
        TerminalKind::None => T::zero(),
        TerminalKind::Velocity => mismatch(state, cost.target.at(state.t)?, grid),
        TerminalKind::Pressure(p_ref) => {
            if p_ref.shape() != state.p.shape() {
                return Err(Error::DimensionMismatch { context: "pressure target", expected: state.p.shape(), got: p_ref.shape() });
            }
            pressure_mismatch(&state.p, p_ref)
        }
    };
    Ok(cost.terminal_weight * g)
}

/// One row per time level: `(t, running cost rate, cumulative discrete cost)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTrace<T> {
    pub rows: Vec<(T, T, T)>,
    pub total: T,
}

impl<T: Real> CostTrace<T> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,J_running,J_cumulative")?;
        for (t, r, c) in &self.rows {
            writeln!(w, "{:e},{:e},{:e}", t.as_f64(), r.as_f64(), c.as_f64())?;
        }
        Ok(())
    }
}

/// Discrete cost of a trajectory: left-endpoint rule for the running part plus
/// the discounted terminal term, matching the tree recursion.
pub fn trajectory_cost<T: Real>(
    traj: &[FullState<T>],
    controls: &ControlSignal<T>,
    dt: T,
    cost: &CostSpec<T>,
    grid: &GridSpec<T>,
) -> Result<CostTrace<T>> {
    let Some(last) = traj.last() else {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    };
    let n_t = traj.len() - 1;
    let mut rows = Vec::with_capacity(traj.len());
    let mut acc = T::zero();
    let mut weight = T::one();
    let discount = (-cost.lambda * dt).exp();
    for (n, s) in traj[..n_t].iter().enumerate() {
        let r = running_cost(s, controls.at(n)?, s.t, cost, grid)?;
        rows.push((s.t, r, acc));
        acc += weight * dt * r;
        weight *= discount;
    }
    acc += weight * terminal_cost(last, cost, grid)?;
    rows.push((last.t, T::zero(), acc));
    Ok(CostTrace { rows, total: acc })
}

/// Integrates the uncontrolled model to `t_long`; returns the final state and
/// the relative change `||U^n - U^{n-1}|| / ||U^n||` of the last step.
pub fn make_target_stationary<T: Real>(model: &FullModel<T>, init: &FullState<T>, t_long: T) -> Result<(FullState<T>, T)> {
    let n_t = (t_long / model.dt).round().as_f64().max(0.0) as usize;
    let mut prev = init.clone();
    let mut change = T::zero();
    let last = model.integrate_with(init, n_t, &ControlSignal::Constant(T::zero()), |step, s, _| {
        if step > 0 {
            let num = (&s.u - &prev.u).norm_squared() + (&s.v - &prev.v).norm_squared();
            let den = s.u.norm_squared() + s.v.norm_squared();
            change = if den > T::zero() { (num / den).sqrt() } else { num.sqrt() };
        }
        prev = s.clone();
    })?;
    Ok((last, change))
}

/// Metric used to compare tree nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeNorm {
    /// Euclidean distance of the reduced coefficients.
    #[default]
    Coefficient,
    /// Discrete L2 distance of the lifted velocity fields.
    L2,
}

/// Flattens reduced velocities into tree node vectors `s vec(U_hat, V_hat)` with
/// `s = 1` for the coefficient norm and `s = sqrt(h_x h_y)` for the L2 norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCodec<T> {
    pub scale: T,
    pub u_shape: (usize, usize),
    pub v_shape: (usize, usize),
}

impl<T: Real> NodeCodec<T> {
    pub fn new(grid: &GridSpec<T>, basis: &ReducedBasis<T>, norm: NodeNorm) -> Self {
        Self {
            scale: match norm {
                NodeNorm::Coefficient => T::one(),
                NodeNorm::L2 => grid.cell_area().sqrt(),
            },
            u_shape: (basis.u_l.ncols(), basis.u_r.ncols()),
            v_shape: (basis.v_l.ncols(), basis.v_r.ncols()),
        }
    }

    pub fn dim(&self) -> usize {
        self.u_shape.0 * self.u_shape.1 + self.v_shape.0 * self.v_shape.1
    }

    pub fn encode(&self, u: &DMatrix<T>, v: &DMatrix<T>) -> Vec<T> {
        u.iter().chain(v.iter()).map(|&x| x * self.scale).collect()
    }

    pub fn decode(&self, x: &[T]) -> Result<(DMatrix<T>, DMatrix<T>)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { context: "node state", expected: (self.dim(), 1), got: (x.len(), 1) });
        }
        let nu = self.u_shape.0 * self.u_shape.1;
        let inv = T::one() / self.scale;
        let u = DMatrix::from_iterator(self.u_shape.0, self.u_shape.1, x[..nu].iter().map(|&a| a * inv));
        let v = DMatrix::from_iterator(self.v_shape.0, self.v_shape.1, x[nu..].iter().map(|&a| a * inv));
        Ok((u, v))
    }

    pub fn decode_state(&self, x: &[T], t: T, p_shape: (usize, usize)) -> Result<ReducedState<T>> {
        let (u, v) = self.decode(x)?;
        Ok(ReducedState { u, v, p: DMatrix::zeros(p_shape.0, p_shape.1), t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec<f64> {
        GridSpec::unit_square(n, 100.0).unwrap()
    }

    #[test]
    fn quadrature_of_sine_product() {
        let g = grid(64);
        let s = FullState::from_velocity(&g, |x, y| ((PI * x).sin() * (PI * y).sin(), 0.0));
        let v = l2_norm_sq(&s.u, &DMatrix::zeros(64, 63), &g);
        assert!((v - 0.25).abs() < 1e-3, "{v}");
    }

    #[test]
    fn running_cost_examples() {
        let g = grid(8);
        let s = FullState::from_velocity(&g, |x, y| (x * y, x - y));
        let cost = CostSpec::tracking(Target::Stationary(s.clone()), 1e-3);
        assert_eq!(running_cost(&s, 0.0, 0.0, &cost, &g).unwrap(), 0.0);
        assert!((running_cost(&s, 1.0, 0.0, &cost, &g).unwrap() - 1e-3).abs() < 1e-15);
        let off = CostSpec::terminal_velocity(Target::Stationary(s.clone()));
        assert_eq!(running_cost(&s, 1.0, 0.0, &off, &g).unwrap(), 0.0);
    }

    #[test]
    fn mismatch_is_quadratic() {
        let g = grid(8);
        let s = FullState::from_velocity(&g, |x, y| (x.sin(), y.cos()));
        let mut s2 = s.clone();
        s2.u *= 3.0;
        s2.v *= 3.0;
        let cost = CostSpec::terminal_velocity(Target::Zero);
        let a = terminal_cost(&s, &cost, &g).unwrap();
        let b = terminal_cost(&s2, &cost, &g).unwrap();
        assert!((b - 9.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn pressure_mismatch_ignores_constants() {
        let p = DMatrix::from_fn(5, 4, |i, j| (i * j) as f64 + 0.5);
        let q = DMatrix::from_fn(5, 4, |i, j| (i + j) as f64);
        let a = pressure_mismatch(&p, &q);
        let b = pressure_mismatch(&p.add_scalar(3.0), &q.add_scalar(-1.5));
        assert!((a - b).abs() < 1e-12);
        assert_eq!(pressure_mismatch(&p, &p.add_scalar(7.0)), 0.0);
    }

    #[test]
    fn subdomain_actuation_adds_dt_inside() {
        let g = grid(10);
        let rect = Rect { x0: 0.3, x1: 0.7, y0: 0.3, y1: 0.7 };
        let act = Actuation::Subdomain { rect, sign: 1.0 };
        let mut ru = DMatrix::zeros(9, 10);
        let mut rv = DMatrix::zeros(10, 9);
        apply_actuation(&mut ru, &mut rv, &act, &g, 1.0, 0.1).unwrap();
        for i in 0..9 {
            for j in 0..10 {
                let inside = rect.contains(g.x_face(i), g.y_centre(j));
                assert_eq!(ru[(i, j)], if inside { 0.1 } else { 0.0 });
            }
        }
        assert!(ru.sum() > 0.0 && rv.sum() > 0.0);
        let mut zu = DMatrix::zeros(9, 10);
        let mut zv = DMatrix::zeros(10, 9);
        apply_actuation(&mut zu, &mut zv, &act, &g, 0.0, 0.1).unwrap();
        assert_eq!(zu.sum() + zv.sum(), 0.0);
    }

    #[test]
    fn distributed_uniform_increment() {
        let g = grid(6);
        let act = Actuation::Distributed { psi_u: DMatrix::from_element(5, 6, 1.0), psi_v: DMatrix::from_element(6, 5, 1.0) };
        let mut ru = DMatrix::zeros(5, 6);
        let mut rv = DMatrix::zeros(6, 5);
        apply_actuation(&mut ru, &mut rv, &act, &g, 0.5, 0.2).unwrap();
        assert!(ru.iter().chain(rv.iter()).all(|&x| (x - 0.1).abs() < 1e-15));
    }

    #[test]
    fn trajectory_target_lookup() {
        let g = grid(6);
        let states: Vec<_> = (0..3).map(|k| FullState { t: k as f64 * 0.1, ..FullState::zeros(&g) }).collect();
        let target = Target::Trajectory { states, dt: 0.1 };
        assert!((target.at(0.19).unwrap().unwrap().t - 0.2).abs() < 1e-15);
        assert!(matches!(target.at(0.5), Err(Error::MissingTarget(_))));
    }

    #[test]
    fn stationary_target_of_zero_flow() {
        let g = grid(6);
        let m = FullModel::new(&g, 0.1, BoundaryConditions::homogeneous(), ForcingSpec::default()).unwrap();
        let (s, change) = make_target_stationary(&m, &FullState::zeros(&g), 1.0).unwrap();
        assert!(s.u.amax() == 0.0 && s.v.amax() == 0.0 && change == 0.0);
        let init = FullState::from_velocity(&g, |x, y| (x * y, 0.0));
        let (s0, _) = make_target_stationary(&m, &init, 0.0).unwrap();
        assert_eq!(s0, init);
    }
}
