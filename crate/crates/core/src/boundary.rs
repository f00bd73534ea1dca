//! Dirichlet wall traces and boundary padding of staggered velocity fields.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;

type TraceFn<T> = dyn Fn(T, T, T) -> T + Send + Sync;

/// Value of one velocity component along one wall, as a function of the
/// wall coordinate `s`, time `t` and control value `alpha`.
#[derive(Clone)]
pub enum Trace<T> {
    Zero,
    Constant(T),
    Func(Arc<TraceFn<T>>),
}

impl<T: Real> Trace<T> {
    pub fn func(f: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        Trace::Func(Arc::new(f))
    }

    pub fn eval(&self, s: T, t: T, alpha: T) -> T {
        match self {
            Trace::Zero => T::zero(),
            Trace::Constant(c) => *c,
            Trace::Func(f) => f(s, t, alpha),
        }
    }

    fn sample(&self, points: impl Iterator<Item = T>, t: T, alpha: T) -> Result<DVector<T>> {
        let v: Vec<T> = points.map(|s| self.eval(s, t, alpha)).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "boundary trace is not finite at t = {}, alpha = {}",
                t, alpha
            )));
        }
        Ok(DVector::from_vec(v))
    }
}

impl<T: fmt::Debug> fmt::Debug for Trace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trace::Zero => write!(f, "Zero"),
            Trace::Constant(c) => write!(f, "Constant({:?})", c),
            Trace::Func(_) => write!(f, "Func(..)"),
        }
    }
}

/// Wall traces of both velocity components.
///
/// `u_north`/`u_south` and `v_west`/`v_east` are tangential, the other four
/// are normal components. `autonomous` is false when some trace depends on
/// time; the reduced model only accepts autonomous traces that are affine in
/// the control.
#[derive(Clone, Debug)]
pub struct BoundaryConditions<T> {
    pub u_north: Trace<T>,
    pub u_south: Trace<T>,
    pub u_west: Trace<T>,
    pub u_east: Trace<T>,
    pub v_north: Trace<T>,
    pub v_south: Trace<T>,
    pub v_west: Trace<T>,
    pub v_east: Trace<T>,
    pub autonomous: bool,
}

impl<T: Real> BoundaryConditions<T> {
    /// No-slip on every wall.
    pub fn homogeneous() -> Self {
        Self {
            u_north: Trace::Zero,
            u_south: Trace::Zero,
            u_west: Trace::Zero,
            u_east: Trace::Zero,
            v_north: Trace::Zero,
            v_south: Trace::Zero,
            v_west: Trace::Zero,
            v_east: Trace::Zero,
            autonomous: true,
        }
    }

    /// Lid-driven cavity: tangential velocity `speed` on the top wall.
    pub fn lid_driven(speed: T) -> Self {
        Self { u_north: Trace::Constant(speed), ..Self::homogeneous() }
    }

    /// Top-wall tangential velocity `g(x, t, alpha)`, no-slip elsewhere.
    pub fn top_wall(g: impl Fn(T, T, T) -> T + Send + Sync + 'static, autonomous: bool) -> Self {
        Self { u_north: Trace::func(g), autonomous, ..Self::homogeneous() }
    }

    pub fn eval(&self, grid: &GridSpec<T>, t: T, alpha: T) -> Result<BoundaryValues<T>> {
        let hx = grid.h_x();
        let hy = grid.h_y();
        let nodes_x = (0..=grid.n_x).map(|i| T::from_usize_lossy(i) * hx);
        let nodes_y = (0..=grid.n_y).map(|j| T::from_usize_lossy(j) * hy);
        let centres_x = (0..grid.n_x).map(|i| grid.x_centre(i));
        let centres_y = (0..grid.n_y).map(|j| grid.y_centre(j));
        Ok(BoundaryValues {
            u_n: self.u_north.sample(nodes_x.clone(), t, alpha)?,
            u_s: self.u_south.sample(nodes_x, t, alpha)?,
            u_w: self.u_west.sample(centres_y.clone(), t, alpha)?,
            u_e: self.u_east.sample(centres_y, t, alpha)?,
            v_n: self.v_north.sample(centres_x.clone(), t, alpha)?,
            v_s: self.v_south.sample(centres_x, t, alpha)?,
            v_w: self.v_west.sample(nodes_y.clone(), t, alpha)?,
            v_e: self.v_east.sample(nodes_y, t, alpha)?,
        })
    }

    /// Discrete net outward normal flux at `(t, alpha)`; zero for a
    /// compatible set of traces.
    pub fn net_normal_flux(&self, grid: &GridSpec<T>, t: T, alpha: T) -> Result<T> {
        let b = self.eval(grid, t, alpha)?;
        let hx = grid.h_x();
        let hy = grid.h_y();
        Ok((b.v_n.sum() - b.v_s.sum()) * hx + (b.u_e.sum() - b.u_w.sum()) * hy)
    }
}

/// Wall traces sampled at the staggered boundary positions.
///
/// * `u_n`, `u_s`: `n_x + 1` values at `x = i h_x` (corners included)
/// * `u_w`, `u_e`: `n_y` values at cell-centre heights
/// * `v_w`, `v_e`: `n_y + 1` values at `y = j h_y`
/// * `v_n`, `v_s`: `n_x` values at cell-centre abscissae
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryValues<T: Real> {
    pub u_n: DVector<T>,
    pub u_s: DVector<T>,
    pub u_w: DVector<T>,
    pub u_e: DVector<T>,
    pub v_n: DVector<T>,
    pub v_s: DVector<T>,
    pub v_w: DVector<T>,
    pub v_e: DVector<T>,
}

impl<T: Real> BoundaryValues<T> {
    pub fn zeros(grid: &GridSpec<T>) -> Self {
        let (nx, ny) = (grid.n_x, grid.n_y);
        Self {
            u_n: DVector::zeros(nx + 1),
            u_s: DVector::zeros(nx + 1),
            u_w: DVector::zeros(ny),
            u_e: DVector::zeros(ny),
            v_n: DVector::zeros(nx),
            v_s: DVector::zeros(nx),
            v_w: DVector::zeros(ny + 1),
            v_e: DVector::zeros(ny + 1),
        }
    }

    /// Componentwise `self - other`, used to split affine traces.
    pub fn sub(&self, other: &Self) -> Self {
        Self {
            u_n: &self.u_n - &other.u_n,
            u_s: &self.u_s - &other.u_s,
            u_w: &self.u_w - &other.u_w,
            u_e: &self.u_e - &other.u_e,
            v_n: &self.v_n - &other.v_n,
            v_s: &self.v_s - &other.v_s,
            v_w: &self.v_w - &other.v_w,
            v_e: &self.v_e - &other.v_e,
        }
    }

    pub fn is_zero(&self) -> bool {
        [&self.u_n, &self.u_s, &self.u_w, &self.u_e, &self.v_n, &self.v_s, &self.v_w, &self.v_e]
            .iter()
            .all(|v| v.iter().all(|x| *x == T::zero()))
    }
}

/// `U` padded with the west/east traces as first/last rows: `(n_x + 1) x n_y`.
pub fn pad_u<T: Real>(u: &DMatrix<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let (m, n) = u.shape();
    let mut out = DMatrix::zeros(m + 2, n);
    out.view_mut((1, 0), (m, n)).copy_from(u);
    out.row_mut(0).copy_from(&bv.u_w.transpose());
    out.row_mut(m + 1).copy_from(&bv.u_e.transpose());
    out
}

/// `V` padded with the south/north traces as first/last columns: `n_x x (n_y + 1)`.
pub fn pad_v<T: Real>(v: &DMatrix<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let (m, n) = v.shape();
    let mut out = DMatrix::zeros(m, n + 2);
    out.view_mut((0, 1), (m, n)).copy_from(v);
    out.column_mut(0).copy_from(&bv.v_s);
    out.column_mut(n + 1).copy_from(&bv.v_n);
    out
}

/// `U` framed by all four wall traces: `(n_x + 1) x (n_y + 2)`.
///
/// Rows hold the west/east traces, columns the south/north traces at the
/// wall itself (not the ghost values).
pub fn frame_u<T: Real>(u: &DMatrix<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let padded = pad_u(u, bv);
    let (m, n) = padded.shape();
    let mut out = DMatrix::zeros(m, n + 2);
    out.view_mut((0, 1), (m, n)).copy_from(&padded);
    out.column_mut(0).copy_from(&bv.u_s);
    out.column_mut(n + 1).copy_from(&bv.u_n);
    out
}

/// `V` framed by all four wall traces: `(n_x + 2) x (n_y + 1)`.
pub fn frame_v<T: Real>(v: &DMatrix<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let padded = pad_v(v, bv);
    let (m, n) = padded.shape();
    let mut out = DMatrix::zeros(m + 2, n);
    out.view_mut((1, 0), (m, n)).copy_from(&padded);
    out.row_mut(0).copy_from(&bv.v_w.transpose());
    out.row_mut(m + 1).copy_from(&bv.v_e.transpose());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec<f64> {
        GridSpec::unit_square(5, 100.0).unwrap()
    }

    #[test]
    fn homogeneous_padding_of_zero_field_is_zero() {
        let g = grid();
        let bv = BoundaryConditions::homogeneous().eval(&g, 0.3, 0.7).unwrap();
        let u = DMatrix::zeros(4, 5);
        let v = DMatrix::zeros(5, 4);
        assert!(pad_u(&u, &bv).iter().all(|x| *x == 0.0));
        assert!(pad_v(&v, &bv).iter().all(|x| *x == 0.0));
        assert!(frame_u(&u, &bv).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn lid_trace_fills_top_side_of_frame_only() {
        let g = grid();
        let bv = BoundaryConditions::lid_driven(1.0).eval(&g, 0.0, 0.0).unwrap();
        let u = DMatrix::zeros(4, 5);
        let f = frame_u(&u, &bv);
        let (m, n) = f.shape();
        assert_eq!((m, n), (6, 7));
        for i in 0..m {
            assert_eq!(f[(i, n - 1)], 1.0);
            for j in 0..n - 1 {
                assert_eq!(f[(i, j)], 0.0);
            }
        }
        let fv = frame_v(&DMatrix::zeros(5, 4), &bv);
        assert!(fv.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn zero_control_matches_homogeneous_padding() {
        let g = grid();
        let bc = BoundaryConditions::top_wall(|x: f64, _t, a| x * (1.0 - x) * a, true);
        let bv = bc.eval(&g, 0.4, 0.0).unwrap();
        let bv0 = BoundaryConditions::homogeneous().eval(&g, 0.4, 0.0).unwrap();
        let u = DMatrix::from_fn(4, 5, |i, j| (i * 5 + j) as f64);
        assert_eq!(frame_u(&u, &bv), frame_u(&u, &bv0));
        assert_eq!(pad_u(&u, &bv), pad_u(&u, &bv0));
    }

    #[test]
    fn padding_preserves_interior_block() {
        let g = grid();
        let bc = BoundaryConditions::top_wall(|x: f64, _t, a| x * (1.0 - x) * a, true);
        let bv = bc.eval(&g, 0.0, 1.0).unwrap();
        let u = DMatrix::from_fn(4, 5, |i, j| (i as f64) - 0.5 * j as f64);
        let v = DMatrix::from_fn(5, 4, |i, j| (i * j) as f64);
        assert_eq!(pad_u(&u, &bv).view((1, 0), (4, 5)), u);
        assert_eq!(pad_v(&v, &bv).view((0, 1), (5, 4)), v);
        assert!(bc.net_normal_flux(&g, 0.0, 1.0).unwrap().abs() < 1e-15);
    }
}
