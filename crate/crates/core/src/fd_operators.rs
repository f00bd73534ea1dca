//! Finite-difference coefficient matrices on the staggered grid.
//!
//! Every discrete operator of the full and reduced models is one of the
//! matrices below applied from the left (x direction) or from the right
//! (y direction) of a staggered field. Boundary values enter through the
//! padded fields of [`crate::boundary`] and through the constant
//! [`viscous_boundary_u`]/[`viscous_boundary_v`] terms.

use nalgebra::DMatrix;

use crate::boundary::{pad_u, pad_v, BoundaryValues};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;

/// Treatment of the first and last row of a 1D second-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallFold {
    /// Unknowns are one mesh width away from a wall where the value is
    /// prescribed: diagonal `-2`.
    Node,
    /// The wall sits half a mesh width away; the ghost value `2 w - u`
    /// folds into a diagonal `-3`.
    Midpoint,
    /// Homogeneous Neumann: diagonal `-1`.
    Neumann,
}

/// `n x n` tridiagonal `(1, -2, 1) / h^2` with the end rows folded.
pub fn second_difference<T: Real>(n: usize, h: T, fold: WallFold) -> DMatrix<T> {
    let s = T::one() / (h * h);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = T::lit(-2.0) * s;
        if i > 0 {
            m[(i, i - 1)] = s;
        }
        if i + 1 < n {
            m[(i, i + 1)] = s;
        }
    }
    let end = match fold {
        WallFold::Node => -2.0,
        WallFold::Midpoint => -3.0,
        WallFold::Neumann => -1.0,
    };
    m[(0, 0)] = T::lit(end) * s;
    m[(n - 1, n - 1)] = T::lit(end) * s;
    if n == 1 {
        // both walls fold into the single unknown
        m[(0, 0)] = T::lit(2.0 * end + 2.0) * s;
    }
    m
}

/// `n x (n + 1)` with `1/2` on the main and upper diagonal.
pub fn averaging<T: Real>(n: usize) -> DMatrix<T> {
    DMatrix::from_fn(n, n + 1, |i, j| if j == i || j == i + 1 { T::lit(0.5) } else { T::zero() })
}

/// `n x (n + 1)` forward difference, `-1` on the main and `+1` on the upper diagonal.
pub fn difference<T: Real>(n: usize) -> DMatrix<T> {
    DMatrix::from_fn(n, n + 1, |i, j| {
        if j == i {
            -T::one()
        } else if j == i + 1 {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// `(n + 1) x (n - 1)` embedding of interior values into a padded vector.
pub fn embedding<T: Real>(n: usize) -> DMatrix<T> {
    DMatrix::from_fn(n + 1, n - 1, |i, j| if i == j + 1 { T::one() } else { T::zero() })
}

/// `(n + 1) x (n + 2)` interpolation from a wall-framed cell-centred line
/// (`[wall, c_0, .., c_{n-1}, wall]`) to the `n + 1` nodes: walls are taken
/// as is, interior nodes average their two neighbours.
pub fn node_interpolation<T: Real>(n: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(n + 1, n + 2);
    m[(0, 0)] = T::one();
    m[(n, n + 1)] = T::one();
    for j in 1..n {
        m[(j, j)] = T::lit(0.5);
        m[(j, j + 1)] = T::lit(0.5);
    }
    m
}

/// `(n + 1) x (n + 2)` half-difference companion of [`node_interpolation`].
///
/// At the walls this is `c_0 - wall` (ghost value `2 wall - c_0`), in the
/// interior `(c_j - c_{j-1}) / 2`.
pub fn node_half_difference<T: Real>(n: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(n + 1, n + 2);
    m[(0, 0)] = -T::one();
    m[(0, 1)] = T::one();
    m[(n, n)] = -T::one();
    m[(n, n + 1)] = T::one();
    for j in 1..n {
        m[(j, j)] = T::lit(-0.5);
        m[(j, j + 1)] = T::lit(0.5);
    }
    m
}

/// All coefficient matrices of the discrete model on one grid.
///
/// Naming: index `1` acts along x (multiplies from the left), index `2`
/// along y (multiplies from the right, transposed). Matrices with a `_bar`
/// suffix conform to boundary-padded fields.
#[derive(Debug, Clone)]
pub struct OperatorSet<T: Real> {
    pub grid: GridSpec<T>,
    /// Viscous second derivatives, already scaled by `1 / Re`.
    pub a1_u: DMatrix<T>,
    pub a2_u: DMatrix<T>,
    pub a1_v: DMatrix<T>,
    pub a2_v: DMatrix<T>,
    /// `n_x x (n_x - 1)` x-divergence of interior U.
    pub b1_u: DMatrix<T>,
    /// `n_y x (n_y - 1)` y-divergence of interior V.
    pub b2_v: DMatrix<T>,
    /// `n_x x (n_x + 1)` x-difference of a row-padded field (divided by `h_x`).
    pub b1_u_bar: DMatrix<T>,
    /// `n_y x (n_y + 1)` y-difference of a column-padded field (divided by `h_y`).
    pub b2_v_bar: DMatrix<T>,
    /// x-difference from grid nodes to V rows, `n_x x (n_x + 1)`.
    pub b1_v: DMatrix<T>,
    /// y-difference from grid nodes to U columns, `n_y x (n_y + 1)`.
    pub b2_u: DMatrix<T>,
    /// Averaging matrices, `n_x x (n_x + 1)` and `n_y x (n_y + 1)`.
    pub c_x: DMatrix<T>,
    pub c_y: DMatrix<T>,
    /// Unscaled differences `n_x x (n_x + 1)`, `n_y x (n_y + 1)`.
    pub d_x: DMatrix<T>,
    pub d_y: DMatrix<T>,
    /// Wall-framed interpolation to nodes and its half difference.
    pub k_x: DMatrix<T>,
    pub k_y: DMatrix<T>,
    pub g_x: DMatrix<T>,
    pub g_y: DMatrix<T>,
    /// Embeddings of interior rows/columns into padded ones.
    pub e_x: DMatrix<T>,
    pub e_y: DMatrix<T>,
    /// Pressure Laplacian pair `-B1_U B1_U^T` (`n_x x n_x`) and `-B2_V B2_V^T` (`n_y x n_y`).
    pub a1_p: DMatrix<T>,
    pub a2_p: DMatrix<T>,
}

impl<T: Real> OperatorSet<T> {
    pub fn new(grid: &GridSpec<T>) -> Result<Self> {
        grid.validate()?;
        let (nx, ny) = (grid.n_x, grid.n_y);
        let hx = grid.h_x();
        let hy = grid.h_y();
        let nu = grid.viscosity();

        let a1_u = second_difference(nx - 1, hx, WallFold::Node) * nu;
        let a2_u = second_difference(ny, hy, WallFold::Midpoint) * nu;
        let a1_v = second_difference(nx, hx, WallFold::Midpoint) * nu;
        let a2_v = second_difference(ny - 1, hy, WallFold::Node) * nu;

        let d_x = difference::<T>(nx);
        let d_y = difference::<T>(ny);
        let e_x = embedding::<T>(nx);
        let e_y = embedding::<T>(ny);
        let b1_u_bar = &d_x / hx;
        let b2_v_bar = &d_y / hy;
        let b1_u = &b1_u_bar * &e_x;
        let b2_v = &b2_v_bar * &e_y;
        let a1_p = -(&b1_u * b1_u.transpose());
        let a2_p = -(&b2_v * b2_v.transpose());

        Ok(Self {
            grid: *grid,
            a1_u,
            a2_u,
            a1_v,
            a2_v,
            b1_v: b1_u_bar.clone(),
            b2_u: b2_v_bar.clone(),
            b1_u,
            b2_v,
            b1_u_bar,
            b2_v_bar,
            c_x: averaging(nx),
            c_y: averaging(ny),
            d_x,
            d_y,
            k_x: node_interpolation(nx),
            k_y: node_interpolation(ny),
            g_x: node_half_difference(nx),
            g_y: node_half_difference(ny),
            e_x,
            e_y,
            a1_p,
            a2_p,
        })
    }

    pub fn check_u(&self, u: &DMatrix<T>, context: &'static str) -> Result<()> {
        check_shape(u, self.grid.u_shape(), context)
    }

    pub fn check_v(&self, v: &DMatrix<T>, context: &'static str) -> Result<()> {
        check_shape(v, self.grid.v_shape(), context)
    }

    /// Interior discrete divergence `B1_U U + V B2_V^T` (no wall fluxes).
    pub fn divergence(&self, u: &DMatrix<T>, v: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.check_u(u, "divergence")?;
        self.check_v(v, "divergence")?;
        Ok(&self.b1_u * u + v * self.b2_v.transpose())
    }

    /// Divergence including wall fluxes, `B1_U_bar U_bar + V_bar B2_V_bar^T`.
    pub fn divergence_padded(
        &self,
        u: &DMatrix<T>,
        v: &DMatrix<T>,
        bv: &BoundaryValues<T>,
    ) -> Result<DMatrix<T>> {
        self.check_u(u, "divergence")?;
        self.check_v(v, "divergence")?;
        Ok(&self.b1_u_bar * pad_u(u, bv) + pad_v(v, bv) * self.b2_v_bar.transpose())
    }

    /// Wall contribution to the divergence, i.e. the padded divergence of a
    /// zero interior field.
    pub fn divergence_boundary(&self, bv: &BoundaryValues<T>) -> DMatrix<T> {
        let (nx, ny) = (self.grid.n_x, self.grid.n_y);
        let mut out = DMatrix::zeros(nx, ny);
        let hx = self.grid.h_x();
        let hy = self.grid.h_y();
        for j in 0..ny {
            out[(0, j)] -= bv.u_w[j] / hx;
            out[(nx - 1, j)] += bv.u_e[j] / hx;
        }
        for i in 0..nx {
            out[(i, 0)] -= bv.v_s[i] / hy;
            out[(i, ny - 1)] += bv.v_n[i] / hy;
        }
        out
    }
}

/// Constant term that the wall traces add to `A1_U U + U A2_U^T`.
pub fn viscous_boundary_u<T: Real>(grid: &GridSpec<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let (m, n) = grid.u_shape();
    let hx2 = grid.h_x() * grid.h_x();
    let hy2 = grid.h_y() * grid.h_y();
    let nu = grid.viscosity();
    let two = T::lit(2.0);
    let mut out = DMatrix::zeros(m, n);
    for j in 0..n {
        out[(0, j)] += bv.u_w[j] / hx2;
        out[(m - 1, j)] += bv.u_e[j] / hx2;
    }
    for i in 0..m {
        // U row i sits on node i + 1
        out[(i, 0)] += two * bv.u_s[i + 1] / hy2;
        out[(i, n - 1)] += two * bv.u_n[i + 1] / hy2;
    }
    out * nu
}

/// Constant term that the wall traces add to `A1_V V + V A2_V^T`.
pub fn viscous_boundary_v<T: Real>(grid: &GridSpec<T>, bv: &BoundaryValues<T>) -> DMatrix<T> {
    let (m, n) = grid.v_shape();
    let hx2 = grid.h_x() * grid.h_x();
    let hy2 = grid.h_y() * grid.h_y();
    let nu = grid.viscosity();
    let two = T::lit(2.0);
    let mut out = DMatrix::zeros(m, n);
    for i in 0..m {
        out[(i, 0)] += bv.v_s[i] / hy2;
        out[(i, n - 1)] += bv.v_n[i] / hy2;
    }
    for j in 0..n {
        out[(0, j)] += two * bv.v_w[j + 1] / hx2;
        out[(m - 1, j)] += two * bv.v_e[j + 1] / hx2;
    }
    out * nu
}

pub(crate) fn check_shape<T: Real>(
    m: &DMatrix<T>,
    expected: (usize, usize),
    context: &'static str,
) -> Result<()> {
    if m.shape() != expected {
        return Err(Error::DimensionMismatch { context, expected, got: m.shape() });
    }
    Ok(())
}
