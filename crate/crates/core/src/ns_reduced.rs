//! Online reduced-order integrator working on rank-sized matrices only.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ns_full::{ControlSignal, FullState};
use crate::pod_deim::{ReducedBasis, ReducedOperators};
use crate::scalar::{all_finite, Real};
use crate::sylvester::SylvesterFactorization;

/// Reduced coordinates `U_hat = U_l^T U U_r` (and likewise for `V`, `P`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState<T: Real> {
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
    pub p: DMatrix<T>,
    pub t: T,
}

impl<T: Real> ReducedState<T> {
    pub fn zeros(red: &ReducedOperators<T>) -> Self {
        Self {
            u: DMatrix::zeros(red.a1_u.nrows(), red.a2_u.nrows()),
            v: DMatrix::zeros(red.a1_v.nrows(), red.a2_v.nrows()),
            p: DMatrix::zeros(red.a1_p.nrows(), red.a2_p.nrows()),
            t: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.u) && all_finite(&self.v) && all_finite(&self.p)
    }
}

pub fn project<T: Real>(s: &FullState<T>, b: &ReducedBasis<T>) -> Result<ReducedState<T>> {
    for (m, l, r, ctx) in [(&s.u, &b.u_l, &b.u_r, "project U"), (&s.v, &b.v_l, &b.v_r, "project V"), (&s.p, &b.p_l, &b.p_r, "project P")] {
        if m.shape() != (l.nrows(), r.nrows()) {
            return Err(Error::DimensionMismatch { context: ctx, expected: (l.nrows(), r.nrows()), got: m.shape() });
        }
    }
    Ok(ReducedState {
        u: b.u_l.transpose() * &s.u * &b.u_r,
        v: b.v_l.transpose() * &s.v * &b.v_r,
        p: b.p_l.transpose() * &s.p * &b.p_r,
        t: s.t,
    })
}

pub fn lift<T: Real>(s: &ReducedState<T>, b: &ReducedBasis<T>) -> Result<FullState<T>> {
    for (m, l, r, ctx) in [(&s.u, &b.u_l, &b.u_r, "lift U"), (&s.v, &b.v_l, &b.v_r, "lift V"), (&s.p, &b.p_l, &b.p_r, "lift P")] {
        if m.shape() != (l.ncols(), r.ncols()) {
            return Err(Error::DimensionMismatch { context: ctx, expected: (l.ncols(), r.ncols()), got: m.shape() });
        }
    }
    Ok(FullState {
        u: &b.u_l * &s.u * b.u_r.transpose(),
        v: &b.v_l * &s.v * b.v_r.transpose(),
        p: &b.p_l * &s.p * b.p_r.transpose(),
        t: s.t,
    })
}

/// `||P_l D P_r^T - mean||_F^2` computed from `D` alone, where `a = P_l^T 1`,
/// `b = P_r^T 1` and `cells` is the number of pressure cells.
pub fn mean_free_norm_sq<T: Real>(d: &DMatrix<T>, red: &ReducedOperators<T>) -> T {
    let cells = T::from_usize_lossy(red.grid.n_x * red.grid.n_y);
    let s = (red.p_ones_l.transpose() * d * &red.p_ones_r)[(0, 0)];
    d.norm_squared() - s * s / cells
}

/// Reduced model with its three Sylvester pencils factorized for one `dt`.
#[derive(Debug, Clone)]
pub struct ReducedModel<T: Real> {
    pub red: ReducedOperators<T>,
    pub dt: T,
    visc_u: SylvesterFactorization<T>,
    visc_v: SylvesterFactorization<T>,
    pressure: SylvesterFactorization<T>,
}

impl<T: Real> ReducedModel<T> {
    pub fn new(red: ReducedOperators<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let eye = |n: usize| DMatrix::<T>::identity(n, n);
        let visc_u = SylvesterFactorization::new(
            &(eye(red.a1_u.nrows()) - &red.a1_u * dt),
            &(red.a2_u.transpose() * -dt),
        )?;
        let visc_v = SylvesterFactorization::new(
            &(eye(red.a1_v.nrows()) - &red.a1_v * dt),
            &(red.a2_v.transpose() * -dt),
        )?;
        let pressure = SylvesterFactorization::new(&red.a1_p, &red.a2_p)?;
        Ok(Self { red, dt, visc_u, visc_v, pressure })
    }

    fn check_rank(&self, m: &DMatrix<T>) {
        debug_assert!(
            m.nrows() <= self.red.max_rank + 1 && m.ncols() <= self.red.max_rank + 1,
            "online operand {:?} exceeds the reduced ranks",
            m.shape()
        );
    }

    /// Solve the projected pressure equation for `(U_hat, V_hat)`, apply the
    /// correction in place and return the potential `Phi_hat`.
    pub fn reduced_pressure_correct(&self, u: &mut DMatrix<T>, v: &mut DMatrix<T>, alpha: T) -> Result<DMatrix<T>> {
        let r = &self.red;
        let mut rhs = &r.div_u_l * &*u * &r.div_u_r + &r.div_v_l * &*v * &r.div_v_r + &r.div_bc[0];
        if alpha != T::zero() {
            rhs += &r.div_bc[1] * alpha;
        }
        let phi = self.pressure.solve_deflated(&rhs)?;
        *u += &r.grad_u_l * &phi * &r.grad_u_r;
        *v += &r.grad_v_l * &phi * &r.grad_v_r;
        self.check_rank(&phi);
        Ok(phi)
    }

    pub fn step(&self, s: &ReducedState<T>, alpha: T) -> Result<ReducedState<T>> {
        let r = &self.red;
        let dt = self.dt;
        self.check_rank(&s.u);
        self.check_rank(&s.v);
        let gamma = r.gamma;
        let f_u = r.deim_u.eval(&s.u, &s.v, alpha, gamma);
        let f_v = r.deim_v.eval(&s.u, &s.v, alpha, gamma);
        let mut rhs_u = &s.u - f_u * dt + (&r.visc_bc_u[0] + &r.f_u) * dt;
        let mut rhs_v = &s.v - f_v * dt + (&r.visc_bc_v[0] + &r.f_v) * dt;
        if alpha != T::zero() {
            rhs_u += (&r.visc_bc_u[1] + &r.psi_u) * (dt * alpha);
            rhs_v += (&r.visc_bc_v[1] + &r.psi_v) * (dt * alpha);
        }
        let mut u = self.visc_u.solve(&rhs_u)?;
        let mut v = self.visc_v.solve(&rhs_v)?;
        let phi = self.reduced_pressure_correct(&mut u, &mut v, alpha)?;
        Ok(ReducedState { u, v, p: phi / dt, t: s.t + dt })
    }

    pub fn integrate(&self, init: &ReducedState<T>, n_t: usize, control: &ControlSignal<T>) -> Result<Vec<ReducedState<T>>> {
        let mut out = Vec::with_capacity(n_t + 1);
        out.push(init.clone());
        for j in 0..n_t {
            let next = self.step(&out[j], control.at(j)?)?;
            if !next.is_finite() {
                return Err(Error::BlowUp { step: j + 1, t: next.t.as_f64() });
            }
            out.push(next);
        }
        Ok(out)
    }
}
