//! Vector-form reference model.
//!
//! Unknowns are stacked into vectors and every operator is written as a
//! pointwise ghost-cell stencil; the implicit systems are solved with a
//! banded LU factorization. This is the classical formulation the matrix
//! model replaces, kept for timing comparisons and as an independent check.

use nalgebra::DMatrix;

use crate::boundary::{BoundaryConditions, BoundaryValues};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ns_full::{ForcingSpec, FullState, UpwindPolicy};
use crate::scalar::Real;

/// LU factorization without pivoting of a banded matrix.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major band storage, entry `(i, j)` at `i * w + (j + kl - i)`.
    band: Vec<T>,
}

impl<T: Real> BandLu<T> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, band: vec![T::zero(); n * (kl + ku + 1)] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.band[k] += v;
    }

    pub fn factor(mut self) -> Result<Self> {
        let n = self.n;
        for k in 0..n {
            let piv = self.band[self.idx(k, k)];
            if piv == T::zero() || !piv.is_finite() {
                return Err(Error::InvalidParameter(format!("zero pivot at row {k} of banded system")));
            }
            for i in k + 1..(k + self.kl + 1).min(n) {
                let ik = self.idx(i, k);
                let l = self.band[ik] / piv;
                self.band[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..(k + self.ku + 1).min(n) {
                    let kj = self.band[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.band[ij] -= l * kj;
                }
            }
        }
        Ok(self)
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(self.kl)..i {
                s -= self.band[self.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + self.ku + 1).min(n) {
                s -= self.band[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.band[self.idx(i, i)];
        }
    }
}

/// Ghost-cell access to the horizontal velocity: face index `i` in
/// `-1..=n_x-1`, cell row `j` in `-1..=n_y`.
fn u_ext<T: Real>(u: &DMatrix<T>, bv: &BoundaryValues<T>, i: isize, j: isize) -> T {
    let (m, n) = (u.nrows() as isize, u.ncols() as isize);
    let two = T::lit(2.0);
    if i < 0 || i >= m {
        // west / east wall, values at cell-centre heights
        let w = if i < 0 { &bv.u_w } else { &bv.u_e };
        let node = if i < 0 { 0 } else { m as usize + 1 };
        let wall_s = bv.u_s[node];
        let wall_n = bv.u_n[node];
        return if j < 0 {
            two * wall_s - w[0]
        } else if j >= n {
            two * wall_n - w[n as usize - 1]
        } else {
            w[j as usize]
        };
    }
    if j < 0 {
        two * bv.u_s[i as usize + 1] - u[(i as usize, 0)]
    } else if j >= n {
        two * bv.u_n[i as usize + 1] - u[(i as usize, n as usize - 1)]
    } else {
        u[(i as usize, j as usize)]
    }
}

/// Ghost-cell access to the vertical velocity: cell column `i` in
/// `-1..=n_x`, face index `j` in `-1..=n_y-1`.
fn v_ext<T: Real>(v: &DMatrix<T>, bv: &BoundaryValues<T>, i: isize, j: isize) -> T {
    let (m, n) = (v.nrows() as isize, v.ncols() as isize);
    let two = T::lit(2.0);
    if j < 0 || j >= n {
        let w = if j < 0 { &bv.v_s } else { &bv.v_n };
        let node = if j < 0 { 0 } else { n as usize + 1 };
        return if i < 0 {
            two * bv.v_w[node] - w[0]
        } else if i >= m {
            two * bv.v_e[node] - w[m as usize - 1]
        } else {
            w[i as usize]
        };
    }
    if i < 0 {
        two * bv.v_w[j as usize + 1] - v[(0, j as usize)]
    } else if i >= m {
        two * bv.v_e[j as usize + 1] - v[(m as usize - 1, j as usize)]
    } else {
        v[(i as usize, j as usize)]
    }
}

/// Pointwise divergence including wall fluxes, `n_x x n_y`.
pub fn pointwise_divergence<T: Real>(
    grid: &GridSpec<T>,
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    bv: &BoundaryValues<T>,
) -> DMatrix<T> {
    let (hx, hy) = (grid.h_x(), grid.h_y());
    DMatrix::from_fn(grid.n_x, grid.n_y, |i, j| {
        let (i, j) = (i as isize, j as isize);
        (u_ext(u, bv, i, j) - u_ext(u, bv, i - 1, j)) / hx + (v_ext(v, bv, i, j) - v_ext(v, bv, i, j - 1)) / hy
    })
}

struct NodeValues<T> {
    ua: T,
    ud: T,
    va: T,
    vd: T,
}

/// Interpolated and half-differenced velocities at node `(a, b)` (`x = a h_x`, `y = b h_y`).
fn node<T: Real>(u: &DMatrix<T>, v: &DMatrix<T>, bv: &BoundaryValues<T>, a: isize, b: isize) -> NodeValues<T> {
    let half = T::lit(0.5);
    let (u0, u1) = (u_ext(u, bv, a - 1, b - 1), u_ext(u, bv, a - 1, b));
    let (v0, v1) = (v_ext(v, bv, a - 1, b - 1), v_ext(v, bv, a, b - 1));
    NodeValues { ua: half * (u0 + u1), ud: half * (u1 - u0), va: half * (v0 + v1), vd: half * (v1 - v0) }
}

/// Pointwise upwinded advection of `U`.
pub fn pointwise_nonlinear_u<T: Real>(
    grid: &GridSpec<T>,
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    bv: &BoundaryValues<T>,
    gamma: T,
) -> DMatrix<T> {
    let (hx, hy) = (grid.h_x(), grid.h_y());
    let half = T::lit(0.5);
    let cell = |c: isize, j: isize| {
        let (a, b) = (u_ext(u, bv, c - 1, j), u_ext(u, bv, c, j));
        let ua = half * (a + b);
        let ud = half * (b - a);
        ua * ua - gamma * ua.abs() * ud
    };
    let corner = |a: isize, b: isize| {
        let n = node(u, v, bv, a, b);
        n.ua * n.va - gamma * n.ud * n.va.abs()
    };
    DMatrix::from_fn(grid.n_x - 1, grid.n_y, |i, j| {
        let (i, j) = (i as isize, j as isize);
        (cell(i + 1, j) - cell(i, j)) / hx + (corner(i + 1, j + 1) - corner(i + 1, j)) / hy
    })
}

/// Pointwise upwinded advection of `V`.
pub fn pointwise_nonlinear_v<T: Real>(
    grid: &GridSpec<T>,
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    bv: &BoundaryValues<T>,
    gamma: T,
) -> DMatrix<T> {
    let (hx, hy) = (grid.h_x(), grid.h_y());
    let half = T::lit(0.5);
    let cell = |i: isize, c: isize| {
        let (a, b) = (v_ext(v, bv, i, c - 1), v_ext(v, bv, i, c));
        let va = half * (a + b);
        let vd = half * (b - a);
        va * va - gamma * va.abs() * vd
    };
    let corner = |a: isize, b: isize| {
        let n = node(u, v, bv, a, b);
        n.ua * n.va - gamma * n.ua.abs() * n.vd
    };
    DMatrix::from_fn(grid.n_x, grid.n_y - 1, |i, j| {
        let (i, j) = (i as isize, j as isize);
        (corner(i + 1, j + 1) - corner(i, j + 1)) / hx + (cell(i, j + 1) - cell(i, j)) / hy
    })
}

/// Pointwise viscous term `nu (d_xx + d_yy)` of `U` including wall values.
pub fn pointwise_laplacian_u<T: Real>(grid: &GridSpec<T>, u: &DMatrix<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let (hx2, hy2) = (grid.h_x() * grid.h_x(), grid.h_y() * grid.h_y());
    let two = T::lit(2.0);
    DMatrix::from_fn(grid.n_x - 1, grid.n_y, |i, j| {
        let (a, b) = (i as isize, j as isize);
        let c = u[(i, j)];
        ((u_ext(u, bv, a - 1, b) - two * c + u_ext(u, bv, a + 1, b)) / hx2
            + (u_ext(u, bv, a, b - 1) - two * c + u_ext(u, bv, a, b + 1)) / hy2)
            * grid.viscosity()
    })
}

pub fn pointwise_laplacian_v<T: Real>(grid: &GridSpec<T>, v: &DMatrix<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let (hx2, hy2) = (grid.h_x() * grid.h_x(), grid.h_y() * grid.h_y());
    let two = T::lit(2.0);
    DMatrix::from_fn(grid.n_x, grid.n_y - 1, |i, j| {
        let (a, b) = (i as isize, j as isize);
        let c = v[(i, j)];
        ((v_ext(v, bv, a - 1, b) - two * c + v_ext(v, bv, a + 1, b)) / hx2
            + (v_ext(v, bv, a, b - 1) - two * c + v_ext(v, bv, a, b + 1)) / hy2)
            * grid.viscosity()
    })
}

/// `I - dt * nu * Laplacian` on an `m x n` block with the given wall folds,
/// column-major numbering `k = i + j m`.
fn implicit_viscous<T: Real>(m: usize, n: usize, hx: T, hy: T, nu: T, dt: T, fold_x: T, fold_y: T) -> Result<BandLu<T>> {
    let cx = dt * nu / (hx * hx);
    let cy = dt * nu / (hy * hy);
    let mut a = BandLu::new(m * n, m, m);
    for j in 0..n {
        for i in 0..m {
            let k = i + j * m;
            let mut diag = T::one() + T::lit(2.0) * (cx + cy);
            if i > 0 {
                a.add(k, k - 1, -cx);
            } else {
                diag += fold_x * cx;
            }
            if i + 1 < m {
                a.add(k, k + 1, -cx);
            } else {
                diag += fold_x * cx;
            }
            if j > 0 {
                a.add(k, k - m, -cy);
            } else {
                diag += fold_y * cy;
            }
            if j + 1 < n {
                a.add(k, k + m, -cy);
            } else {
                diag += fold_y * cy;
            }
            a.add(k, k, diag);
        }
    }
    a.factor()
}

/// Vector-form semi-implicit model with the same time stepping as
/// [`crate::ns_full::FullModel`].
pub struct VectorModel<T: Real> {
    pub grid: GridSpec<T>,
    pub dt: T,
    pub bc: BoundaryConditions<T>,
    pub forcing: ForcingSpec<T>,
    visc_u: BandLu<T>,
    visc_v: BandLu<T>,
    pressure: BandLu<T>,
}

impl<T: Real> VectorModel<T> {
    pub fn new(grid: &GridSpec<T>, dt: T, bc: BoundaryConditions<T>, forcing: ForcingSpec<T>) -> Result<Self> {
        grid.validate()?;
        forcing.validate(grid)?;
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let (nx, ny) = (grid.n_x, grid.n_y);
        let (hx, hy, nu) = (grid.h_x(), grid.h_y(), grid.viscosity());
        // value on the wall (0 extra) or on the midpoint (ghost fold, +1)
        let visc_u = implicit_viscous(nx - 1, ny, hx, hy, nu, dt, T::zero(), T::one())?;
        let visc_v = implicit_viscous(nx, ny - 1, hx, hy, nu, dt, T::one(), T::zero())?;

        // negated Neumann Laplacian with cell 0 pinned and eliminated
        let mut p = BandLu::new(nx * ny, nx, nx);
        let (ix, iy) = (T::one() / (hx * hx), T::one() / (hy * hy));
        for j in 0..ny {
            for i in 0..nx {
                let k = i + j * nx;
                if k == 0 {
                    p.add(0, 0, T::one());
                    continue;
                }
                let mut diag = T::zero();
                let mut nb = |kk: usize, c: T, p: &mut BandLu<T>| {
                    diag += c;
                    if kk != 0 {
                        p.add(k, kk, -c);
                    }
                };
                if i > 0 {
                    nb(k - 1, ix, &mut p);
                }
                if i + 1 < nx {
                    nb(k + 1, ix, &mut p);
                }
                if j > 0 {
                    nb(k - nx, iy, &mut p);
                }
                if j + 1 < ny {
                    nb(k + nx, iy, &mut p);
                }
                p.add(k, k, diag);
            }
        }
        let pressure = p.factor()?;
        Ok(Self { grid: *grid, dt, bc, forcing, visc_u, visc_v, pressure })
    }

    fn upwind(&self, u: &DMatrix<T>, v: &DMatrix<T>, bv: &BoundaryValues<T>) -> T {
        match self.forcing.upwind {
            UpwindPolicy::Fixed(g) => g,
            UpwindPolicy::Adaptive => {
                let mut mu = T::zero();
                for x in u.iter().chain(bv.u_w.iter()).chain(bv.u_e.iter()) {
                    mu = mu.max(x.abs());
                }
                let mut mv = T::zero();
                for x in v.iter().chain(bv.v_s.iter()).chain(bv.v_n.iter()) {
                    mv = mv.max(x.abs());
                }
                (T::lit(1.2) * self.dt * (mu / self.grid.h_x()).max(mv / self.grid.h_y())).min(T::one())
            }
        }
    }

    pub fn step(&self, s: &FullState<T>, alpha: T) -> Result<FullState<T>> {
        let g = &self.grid;
        let dt = self.dt;
        let t1 = s.t + dt;
        let bv0 = self.bc.eval(g, s.t, alpha)?;
        let bv1 = if self.bc.autonomous { bv0.clone() } else { self.bc.eval(g, t1, alpha)? };
        let gamma = self.upwind(&s.u, &s.v, &bv0);
        let fu = pointwise_nonlinear_u(g, &s.u, &s.v, &bv0, gamma);
        let fv = pointwise_nonlinear_v(g, &s.u, &s.v, &bv0, gamma);
        // wall part of the viscous term: the Laplacian of a zero interior
        let zu = DMatrix::zeros(g.n_x - 1, g.n_y);
        let zv = DMatrix::zeros(g.n_x, g.n_y - 1);
        let mut ru = &s.u - fu * dt + pointwise_laplacian_u(g, &zu, &bv1) * dt;
        let mut rv = &s.v - fv * dt + pointwise_laplacian_v(g, &zv, &bv1) * dt;
        if let Some(f) = &self.forcing.f_u {
            ru += f * dt;
        }
        if let Some(f) = &self.forcing.f_v {
            rv += f * dt;
        }
        if let Some(p) = &self.forcing.psi_u {
            ru += p * (dt * alpha);
        }
        if let Some(p) = &self.forcing.psi_v {
            rv += p * (dt * alpha);
        }
        self.visc_u.solve_in_place(ru.as_mut_slice());
        self.visc_v.solve_in_place(rv.as_mut_slice());
        let (mut u, mut v) = (ru, rv);

        let mut phi = -pointwise_divergence(g, &u, &v, &bv1);
        phi[(0, 0)] = T::zero();
        self.pressure.solve_in_place(phi.as_mut_slice());
        let (hx, hy) = (g.h_x(), g.h_y());
        for j in 0..g.n_y {
            for i in 0..g.n_x - 1 {
                u[(i, j)] += (phi[(i, j)] - phi[(i + 1, j)]) / hx;
            }
        }
        for j in 0..g.n_y - 1 {
            for i in 0..g.n_x {
                v[(i, j)] += (phi[(i, j)] - phi[(i, j + 1)]) / hy;
            }
        }
        Ok(FullState { u, v, p: phi / dt, t: t1 })
    }
}
