//! Offline projection of every operator onto the reduced bases and the
//! sampled DEIM evaluation of the nonlinear terms.
//!
//! Each interpolated field of the nonlinear term is affine in the interior
//! velocity, `Q = L X R^T + B(bc)`. With `X = X_l X_hat X_r^T` the entries of
//! `Q` at sampled rows `I` and columns `J` are `(L X_l)[I] X_hat ((R X_r)[J])^T
//! + B[I, J]`, so only rank-sized factors are kept online.

use nalgebra::{DMatrix, DVector};

use super::qdeim::{deim_condition, select_rows};
use super::ReducedBasis;
use crate::boundary::{BoundaryConditions, BoundaryValues};
use crate::error::{Error, Result};
use crate::fd_operators::{viscous_boundary_u, viscous_boundary_v, OperatorSet};
use crate::grid::GridSpec;
use crate::ns_full::{staggered_fields, ForcingSpec, StaggeredFields};
use crate::scalar::Real;

/// Interpolated velocity fields of the nonlinear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// `U` averaged / half-differenced to cell centres.
    Uac,
    Udc,
    /// `U` interpolated / half-differenced to grid nodes.
    Uak,
    Udk,
    /// `V` interpolated / half-differenced to grid nodes.
    Vak,
    Vdk,
    /// `V` averaged / half-differenced to cell centres.
    Vac,
    Vdc,
}

impl FieldKind {
    fn is_u(self) -> bool {
        matches!(self, Self::Uac | Self::Udc | Self::Uak | Self::Udk)
    }

    fn pick<'a, T: Real>(self, f: &'a StaggeredFields<T>) -> &'a DMatrix<T> {
        match self {
            Self::Uac => &f.uac,
            Self::Udc => &f.udc,
            Self::Uak => &f.uak,
            Self::Udk => &f.udk,
            Self::Vak => &f.vak,
            Self::Vdk => &f.vdk,
            Self::Vac => &f.vac,
            Self::Vdc => &f.vdc,
        }
    }

    /// Left and right factors of the linear part, `Q - B = L X R^T`.
    pub fn factors<T: Real>(self, ops: &OperatorSet<T>) -> (DMatrix<T>, DMatrix<T>) {
        let (nx, ny) = (ops.grid.n_x, ops.grid.n_y);
        let half = T::lit(0.5);
        let eye = |n: usize| DMatrix::<T>::identity(n, n);
        match self {
            Self::Uac => (&ops.c_x * &ops.e_x, eye(ny)),
            Self::Udc => (&ops.d_x * &ops.e_x * half, eye(ny)),
            Self::Uak => (ops.e_x.clone(), ops.k_y.columns(1, ny).into_owned()),
            Self::Udk => (ops.e_x.clone(), ops.g_y.columns(1, ny).into_owned()),
            Self::Vak => (ops.k_x.columns(1, nx).into_owned(), ops.e_y.clone()),
            Self::Vdk => (ops.g_x.columns(1, nx).into_owned(), ops.e_y.clone()),
            Self::Vac => (eye(nx), &ops.c_y * &ops.e_y),
            Self::Vdc => (eye(nx), &ops.d_y * &ops.e_y * half),
        }
    }
}

/// Entries of one interpolated field at a fixed set of rows and columns.
#[derive(Debug, Clone)]
pub struct SampledField<T: Real> {
    pub left: DMatrix<T>,
    pub right: DMatrix<T>,
    pub bias0: DMatrix<T>,
    pub bias1: DMatrix<T>,
}

impl<T: Real> SampledField<T> {
    pub fn eval(&self, x_hat: &DMatrix<T>, alpha: T) -> DMatrix<T> {
        let mut q = &self.left * x_hat * self.right.transpose() + &self.bias0;
        if alpha != T::zero() {
            q += &self.bias1 * alpha;
        }
        q
    }
}

fn shifted(idx: &[usize], by: usize) -> Vec<usize> {
    idx.iter().map(|i| i + by).collect()
}

fn sub_matrix<T: Real>(m: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

struct Sampler<'a, T: Real> {
    ops: &'a OperatorSet<T>,
    basis: &'a ReducedBasis<T>,
    bias0: StaggeredFields<T>,
    bias1: StaggeredFields<T>,
}

impl<T: Real> Sampler<'_, T> {
    fn sample(&self, kind: FieldKind, rows: &[usize], cols: &[usize]) -> Result<SampledField<T>> {
        let (l, r) = kind.factors(self.ops);
        for &i in rows {
            if i >= l.nrows() {
                return Err(Error::ShiftedIndexOutOfRange { index: i, dim: l.nrows() });
            }
        }
        for &j in cols {
            if j >= r.nrows() {
                return Err(Error::ShiftedIndexOutOfRange { index: j, dim: r.nrows() });
            }
        }
        let (xl, xr) =
            if kind.is_u() { (&self.basis.u_l, &self.basis.u_r) } else { (&self.basis.v_l, &self.basis.v_r) };
        Ok(SampledField {
            left: select_rows(&l, rows) * xl,
            right: select_rows(&r, cols) * xr,
            bias0: sub_matrix(kind.pick(&self.bias0), rows, cols),
            bias1: sub_matrix(kind.pick(&self.bias1), rows, cols),
        })
    }
}

/// Sampled fields and oblique projector for the x-momentum advection.
#[derive(Debug, Clone)]
pub struct DeimU<T: Real> {
    /// Rows `I` and `I + 1`, columns `J`.
    pub uac_i: SampledField<T>,
    pub uac_i1: SampledField<T>,
    pub udc_i: SampledField<T>,
    pub udc_i1: SampledField<T>,
    /// Node rows `I + 1`, columns `J` and `J + 1`.
    pub uak_j: SampledField<T>,
    pub uak_j1: SampledField<T>,
    pub udk_j: SampledField<T>,
    pub udk_j1: SampledField<T>,
    pub vak_j: SampledField<T>,
    pub vak_j1: SampledField<T>,
    /// `U_l^T Phi_l (D_l^T Phi_l)^{-1}` and its right counterpart.
    pub proj_l: DMatrix<T>,
    pub proj_r: DMatrix<T>,
    pub inv_hx: T,
    pub inv_hy: T,
}

/// Sampled fields and oblique projector for the y-momentum advection.
#[derive(Debug, Clone)]
pub struct DeimV<T: Real> {
    /// Node rows `I` and `I + 1`, columns `J + 1`.
    pub uak_i: SampledField<T>,
    pub uak_i1: SampledField<T>,
    pub vak_i: SampledField<T>,
    pub vak_i1: SampledField<T>,
    pub vdk_i: SampledField<T>,
    pub vdk_i1: SampledField<T>,
    /// Rows `I`, columns `J` and `J + 1`.
    pub vac_j: SampledField<T>,
    pub vac_j1: SampledField<T>,
    pub vdc_j: SampledField<T>,
    pub vdc_j1: SampledField<T>,
    pub proj_l: DMatrix<T>,
    pub proj_r: DMatrix<T>,
    pub inv_hx: T,
    pub inv_hy: T,
}

fn abs_mul<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.zip_map(b, |x, y| x.abs() * y)
}

impl<T: Real> DeimU<T> {
    /// `D_l^T F_U D_r` at the interpolation points.
    pub fn sampled(&self, u: &DMatrix<T>, v: &DMatrix<T>, alpha: T, gamma: T) -> DMatrix<T> {
        let wc = |a: &SampledField<T>, d: &SampledField<T>| {
            let a = a.eval(u, alpha);
            let d = d.eval(u, alpha);
            a.component_mul(&a) - abs_mul(&a, &d) * gamma
        };
        let wk = |ua: &SampledField<T>, ud: &SampledField<T>, va: &SampledField<T>| {
            let ua = ua.eval(u, alpha);
            let ud = ud.eval(u, alpha);
            let va = va.eval(v, alpha);
            ua.component_mul(&va) - abs_mul(&va, &ud) * gamma
        };
        (wc(&self.uac_i1, &self.udc_i1) - wc(&self.uac_i, &self.udc_i)) * self.inv_hx
            + (wk(&self.uak_j1, &self.udk_j1, &self.vak_j1) - wk(&self.uak_j, &self.udk_j, &self.vak_j))
                * self.inv_hy
    }

    pub fn eval(&self, u: &DMatrix<T>, v: &DMatrix<T>, alpha: T, gamma: T) -> DMatrix<T> {
        &self.proj_l * self.sampled(u, v, alpha, gamma) * self.proj_r.transpose()
    }
}

impl<T: Real> DeimV<T> {
    pub fn sampled(&self, u: &DMatrix<T>, v: &DMatrix<T>, alpha: T, gamma: T) -> DMatrix<T> {
        let wk = |ua: &SampledField<T>, va: &SampledField<T>, vd: &SampledField<T>| {
            let ua = ua.eval(u, alpha);
            let va = va.eval(v, alpha);
            let vd = vd.eval(v, alpha);
            ua.component_mul(&va) - abs_mul(&ua, &vd) * gamma
        };
        let wc = |a: &SampledField<T>, d: &SampledField<T>| {
            let a = a.eval(v, alpha);
            let d = d.eval(v, alpha);
            a.component_mul(&a) - abs_mul(&a, &d) * gamma
        };
        (wk(&self.uak_i1, &self.vak_i1, &self.vdk_i1) - wk(&self.uak_i, &self.vak_i, &self.vdk_i)) * self.inv_hx
            + (wc(&self.vac_j1, &self.vdc_j1) - wc(&self.vac_j, &self.vdc_j)) * self.inv_hy
    }

    pub fn eval(&self, u: &DMatrix<T>, v: &DMatrix<T>, alpha: T, gamma: T) -> DMatrix<T> {
        &self.proj_l * self.sampled(u, v, alpha, gamma) * self.proj_r.transpose()
    }
}

/// Every matrix the online reduced model needs; no dimension depends on the grid.
#[derive(Debug, Clone)]
pub struct ReducedOperators<T: Real> {
    pub grid: GridSpec<T>,
    /// `U_l^T A1_U U_l`, `U_r^T A2_U U_r` and the V analogues.
    pub a1_u: DMatrix<T>,
    pub a2_u: DMatrix<T>,
    pub a1_v: DMatrix<T>,
    pub a2_v: DMatrix<T>,
    /// Projected viscous wall terms: constant part and control slope.
    pub visc_bc_u: [DMatrix<T>; 2],
    pub visc_bc_v: [DMatrix<T>; 2],
    /// Projected actuation shapes and body forces (zero when absent).
    pub psi_u: DMatrix<T>,
    pub psi_v: DMatrix<T>,
    pub f_u: DMatrix<T>,
    pub f_v: DMatrix<T>,
    /// Divergence: `P_l^T B1_U U_l`, `U_r^T P_r`, `P_l^T V_l`, `V_r^T B2_V^T P_r`.
    pub div_u_l: DMatrix<T>,
    pub div_u_r: DMatrix<T>,
    pub div_v_l: DMatrix<T>,
    pub div_v_r: DMatrix<T>,
    pub div_bc: [DMatrix<T>; 2],
    /// Reduced pressure Laplacian pair.
    pub a1_p: DMatrix<T>,
    pub a2_p: DMatrix<T>,
    /// Gradient: `U_l^T B1_U^T P_l`, `P_r^T U_r`, `V_l^T P_l`, `P_r^T B2_V V_r`.
    pub grad_u_l: DMatrix<T>,
    pub grad_u_r: DMatrix<T>,
    pub grad_v_l: DMatrix<T>,
    pub grad_v_r: DMatrix<T>,
    /// `P_l^T 1` and `P_r^T 1`, for mean-free pressure comparisons.
    pub p_ones_l: DVector<T>,
    pub p_ones_r: DVector<T>,
    pub deim_u: DeimU<T>,
    pub deim_v: DeimV<T>,
    /// Upwind weight used online.
    pub gamma: T,
    /// Condition numbers of the four `D^T Phi` factors.
    pub deim_conditions: [f64; 4],
    pub max_rank: usize,
}

fn oblique<T: Real>(state: &DMatrix<T>, phi: &DMatrix<T>, idx: &[usize], ctx: &str) -> Result<DMatrix<T>> {
    let inv = select_rows(phi, idx)
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient(format!("{ctx}: D^T Phi is singular")))?;
    Ok(state.transpose() * phi * inv)
}

/// Evaluate the boundary at `alpha = 0` and `alpha = 1` and make sure the
/// traces are affine in the control.
fn affine_boundary<T: Real>(grid: &GridSpec<T>, bc: &BoundaryConditions<T>) -> Result<[BoundaryValues<T>; 2]> {
    if !bc.autonomous {
        return Err(Error::InvalidParameter("the reduced model needs time-independent boundary traces".into()));
    }
    let b0 = bc.eval(grid, T::zero(), T::zero())?;
    let b1 = bc.eval(grid, T::zero(), T::one())?;
    let bh = bc.eval(grid, T::zero(), T::lit(0.5))?;
    let slope = b1.sub(&b0);
    let mid = bh.sub(&b0);
    let fields = |b: &BoundaryValues<T>| {
        [&b.u_n, &b.u_s, &b.u_w, &b.u_e, &b.v_n, &b.v_s, &b.v_w, &b.v_e].map(|v| v.clone())
    };
    for (s, m) in fields(&slope).iter().zip(fields(&mid).iter()) {
        let scale = s.amax().max(T::one());
        if (s * T::lit(0.5) - m).amax() > T::lit(1e-10) * scale {
            return Err(Error::InvalidParameter("boundary traces must be affine in the control".into()));
        }
    }
    Ok([b0, slope])
}

/// Project every operator of the full model onto `basis`.
///
/// `gamma` is the upwind weight frozen for the online phase.
pub fn assemble_reduced<T: Real>(
    ops: &OperatorSet<T>,
    basis: &ReducedBasis<T>,
    bc: &BoundaryConditions<T>,
    forcing: &ForcingSpec<T>,
    gamma: T,
) -> Result<ReducedOperators<T>> {
    let grid = &ops.grid;
    basis.validate(grid)?;
    forcing.validate(grid)?;
    let b = basis;
    let [bv0, bv1] = affine_boundary(grid, bc)?;
    let proj = |l: &DMatrix<T>, m: &DMatrix<T>, r: &DMatrix<T>| l.transpose() * m * r;

    // constant parts of the padded fields: evaluate with zero interior
    let zu = DMatrix::zeros(grid.n_x - 1, grid.n_y);
    let zv = DMatrix::zeros(grid.n_x, grid.n_y - 1);
    let f0 = staggered_fields(&zu, &zv, ops, &bv0);
    let f1 = staggered_fields(&zu, &zv, ops, &bv1);
    let sampler = Sampler { ops, basis: b, bias0: f0, bias1: f1 };

    let (iu, ju) = (&b.d_u_l, &b.d_u_r);
    let (iu1, ju1) = (shifted(iu, 1), shifted(ju, 1));
    let inv_hx = T::one() / grid.h_x();
    let inv_hy = T::one() / grid.h_y();
    let deim_u = DeimU {
        uac_i: sampler.sample(FieldKind::Uac, iu, ju)?,
        uac_i1: sampler.sample(FieldKind::Uac, &iu1, ju)?,
        udc_i: sampler.sample(FieldKind::Udc, iu, ju)?,
        udc_i1: sampler.sample(FieldKind::Udc, &iu1, ju)?,
        uak_j: sampler.sample(FieldKind::Uak, &iu1, ju)?,
        uak_j1: sampler.sample(FieldKind::Uak, &iu1, &ju1)?,
        udk_j: sampler.sample(FieldKind::Udk, &iu1, ju)?,
        udk_j1: sampler.sample(FieldKind::Udk, &iu1, &ju1)?,
        vak_j: sampler.sample(FieldKind::Vak, &iu1, ju)?,
        vak_j1: sampler.sample(FieldKind::Vak, &iu1, &ju1)?,
        proj_l: oblique(&b.u_l, &b.phi_u_l, iu, "F_U left")?,
        proj_r: oblique(&b.u_r, &b.phi_u_r, ju, "F_U right")?,
        inv_hx,
        inv_hy,
    };
    let (iv, jv) = (&b.d_v_l, &b.d_v_r);
    let (iv1, jv1) = (shifted(iv, 1), shifted(jv, 1));
    let deim_v = DeimV {
        uak_i: sampler.sample(FieldKind::Uak, iv, &jv1)?,
        uak_i1: sampler.sample(FieldKind::Uak, &iv1, &jv1)?,
        vak_i: sampler.sample(FieldKind::Vak, iv, &jv1)?,
        vak_i1: sampler.sample(FieldKind::Vak, &iv1, &jv1)?,
        vdk_i: sampler.sample(FieldKind::Vdk, iv, &jv1)?,
        vdk_i1: sampler.sample(FieldKind::Vdk, &iv1, &jv1)?,
        vac_j: sampler.sample(FieldKind::Vac, iv, jv)?,
        vac_j1: sampler.sample(FieldKind::Vac, iv, &jv1)?,
        vdc_j: sampler.sample(FieldKind::Vdc, iv, jv)?,
        vdc_j1: sampler.sample(FieldKind::Vdc, iv, &jv1)?,
        proj_l: oblique(&b.v_l, &b.phi_v_l, iv, "F_V left")?,
        proj_r: oblique(&b.v_r, &b.phi_v_r, jv, "F_V right")?,
        inv_hx,
        inv_hy,
    };

    let opt_proj = |m: &Option<DMatrix<T>>, l: &DMatrix<T>, r: &DMatrix<T>| match m {
        Some(m) => proj(l, m, r),
        None => DMatrix::zeros(l.ncols(), r.ncols()),
    };
    let div_b0 = ops.divergence_boundary(&bv0);
    let div_b1 = ops.divergence_boundary(&bv1);
    let ones = |n: usize| DVector::from_element(n, T::one());

    Ok(ReducedOperators {
        grid: *grid,
        a1_u: proj(&b.u_l, &ops.a1_u, &b.u_l),
        a2_u: proj(&b.u_r, &ops.a2_u, &b.u_r),
        a1_v: proj(&b.v_l, &ops.a1_v, &b.v_l),
        a2_v: proj(&b.v_r, &ops.a2_v, &b.v_r),
        visc_bc_u: [
            proj(&b.u_l, &viscous_boundary_u(grid, &bv0), &b.u_r),
            proj(&b.u_l, &viscous_boundary_u(grid, &bv1), &b.u_r),
        ],
        visc_bc_v: [
            proj(&b.v_l, &viscous_boundary_v(grid, &bv0), &b.v_r),
            proj(&b.v_l, &viscous_boundary_v(grid, &bv1), &b.v_r),
        ],
        psi_u: opt_proj(&forcing.psi_u, &b.u_l, &b.u_r),
        psi_v: opt_proj(&forcing.psi_v, &b.v_l, &b.v_r),
        f_u: opt_proj(&forcing.f_u, &b.u_l, &b.u_r),
        f_v: opt_proj(&forcing.f_v, &b.v_l, &b.v_r),
        div_u_l: b.p_l.transpose() * &ops.b1_u * &b.u_l,
        div_u_r: b.u_r.transpose() * &b.p_r,
        div_v_l: b.p_l.transpose() * &b.v_l,
        div_v_r: b.v_r.transpose() * ops.b2_v.transpose() * &b.p_r,
        div_bc: [proj(&b.p_l, &div_b0, &b.p_r), proj(&b.p_l, &div_b1, &b.p_r)],
        a1_p: proj(&b.p_l, &ops.a1_p, &b.p_l),
        a2_p: proj(&b.p_r, &ops.a2_p, &b.p_r),
        grad_u_l: b.u_l.transpose() * ops.b1_u.transpose() * &b.p_l,
        grad_u_r: b.p_r.transpose() * &b.u_r,
        grad_v_l: b.v_l.transpose() * &b.p_l,
        grad_v_r: b.p_r.transpose() * &ops.b2_v * &b.v_r,
        p_ones_l: b.p_l.transpose() * ones(grid.n_x),
        p_ones_r: b.p_r.transpose() * ones(grid.n_y),
        deim_u,
        deim_v,
        gamma,
        deim_conditions: [
            deim_condition(&b.phi_u_l, &b.d_u_l),
            deim_condition(&b.phi_u_r, &b.d_u_r),
            deim_condition(&b.phi_v_l, &b.d_v_l),
            deim_condition(&b.phi_v_r, &b.d_v_r),
        ],
        max_rank: b.max_rank(),
    })
}

impl<T: Real> ReducedOperators<T> {
    /// Every stored matrix with a descriptive name, for serialization.
    pub fn named_matrices(&self) -> Vec<(String, &DMatrix<T>)> {
        let mut out: Vec<(String, &DMatrix<T>)> = vec![
            ("a1_u".into(), &self.a1_u),
            ("a2_u".into(), &self.a2_u),
            ("a1_v".into(), &self.a1_v),
            ("a2_v".into(), &self.a2_v),
            ("visc_bc_u0".into(), &self.visc_bc_u[0]),
            ("visc_bc_u1".into(), &self.visc_bc_u[1]),
            ("visc_bc_v0".into(), &self.visc_bc_v[0]),
            ("visc_bc_v1".into(), &self.visc_bc_v[1]),
            ("psi_u".into(), &self.psi_u),
            ("psi_v".into(), &self.psi_v),
            ("f_u".into(), &self.f_u),
            ("f_v".into(), &self.f_v),
            ("div_u_l".into(), &self.div_u_l),
            ("div_u_r".into(), &self.div_u_r),
            ("div_v_l".into(), &self.div_v_l),
            ("div_v_r".into(), &self.div_v_r),
            ("div_bc0".into(), &self.div_bc[0]),
            ("div_bc1".into(), &self.div_bc[1]),
            ("a1_p".into(), &self.a1_p),
            ("a2_p".into(), &self.a2_p),
            ("grad_u_l".into(), &self.grad_u_l),
            ("grad_u_r".into(), &self.grad_u_r),
            ("grad_v_l".into(), &self.grad_v_l),
            ("grad_v_r".into(), &self.grad_v_r),
            ("deim_u_proj_l".into(), &self.deim_u.proj_l),
            ("deim_u_proj_r".into(), &self.deim_u.proj_r),
            ("deim_v_proj_l".into(), &self.deim_v.proj_l),
            ("deim_v_proj_r".into(), &self.deim_v.proj_r),
        ];
        let du = &self.deim_u;
        for (name, s) in [
            ("uac_i", &du.uac_i),
            ("uac_i1", &du.uac_i1),
            ("udc_i", &du.udc_i),
            ("udc_i1", &du.udc_i1),
            ("uak_j", &du.uak_j),
            ("uak_j1", &du.uak_j1),
            ("udk_j", &du.udk_j),
            ("udk_j1", &du.udk_j1),
            ("vak_j", &du.vak_j),
            ("vak_j1", &du.vak_j1),
        ] {
            push_sampled(&mut out, "deim_u", name, s);
        }
        let dv = &self.deim_v;
        for (name, s) in [
            ("uak_i", &dv.uak_i),
            ("uak_i1", &dv.uak_i1),
            ("vak_i", &dv.vak_i),
            ("vak_i1", &dv.vak_i1),
            ("vdk_i", &dv.vdk_i),
            ("vdk_i1", &dv.vdk_i1),
            ("vac_j", &dv.vac_j),
            ("vac_j1", &dv.vac_j1),
            ("vdc_j", &dv.vdc_j),
            ("vdc_j1", &dv.vdc_j1),
        ] {
            push_sampled(&mut out, "deim_v", name, s);
        }
        out
    }
}

fn push_sampled<'a, T: Real>(out: &mut Vec<(String, &'a DMatrix<T>)>, prefix: &str, name: &str, s: &'a SampledField<T>) {
    out.push((format!("{prefix}_{name}_left"), &s.left));
    out.push((format!("{prefix}_{name}_right"), &s.right));
    out.push((format!("{prefix}_{name}_bias0"), &s.bias0));
    out.push((format!("{prefix}_{name}_bias1"), &s.bias1));
}

/// DEIM approximation of `U_l^T F_U U_r` from reduced velocities.
pub fn deim_nonlinear_u<T: Real>(
    u_hat: &DMatrix<T>,
    v_hat: &DMatrix<T>,
    red: &ReducedOperators<T>,
    alpha: T,
    gamma: T,
) -> DMatrix<T> {
    red.deim_u.eval(u_hat, v_hat, alpha, gamma)
}

/// DEIM approximation of `V_l^T F_V V_r` from reduced velocities.
pub fn deim_nonlinear_v<T: Real>(
    u_hat: &DMatrix<T>,
    v_hat: &DMatrix<T>,
    red: &ReducedOperators<T>,
    alpha: T,
    gamma: T,
) -> DMatrix<T> {
    red.deim_v.eval(u_hat, v_hat, alpha, gamma)
}
