//! Snapshot bases, Q-DEIM selection and the offline reduced operators.

mod pod;
mod qdeim;
mod reduced_ops;

pub use pod::{pod_side, two_sided_pod, with_constant_mode, PodSide, Truncation};
pub use qdeim::{deim_condition, qdeim_indices, select_rows};
pub use reduced_ops::{
    assemble_reduced, deim_nonlinear_u, deim_nonlinear_v, DeimU, DeimV, FieldKind, ReducedOperators,
    SampledField,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ns_full::FullState;
use crate::scalar::Real;

/// Velocity, pressure and nonlinear-term snapshots of visited states. The
/// velocity families also hold the pre-correction velocities of each step.
#[derive(Debug, Clone)]
pub struct SnapshotSet<T: Real> {
    pub u: Vec<DMatrix<T>>,
    pub v: Vec<DMatrix<T>>,
    pub p: Vec<DMatrix<T>>,
    pub f_u: Vec<DMatrix<T>>,
    pub f_v: Vec<DMatrix<T>>,
}

impl<T: Real> Default for SnapshotSet<T> {
    fn default() -> Self {
        Self { u: Vec::new(), v: Vec::new(), p: Vec::new(), f_u: Vec::new(), f_v: Vec::new() }
    }
}

impl<T: Real> SnapshotSet<T> {
    pub fn push(&mut self, state: &FullState<T>, f_u: &DMatrix<T>, f_v: &DMatrix<T>) {
        self.u.push(state.u.clone());
        self.v.push(state.v.clone());
        self.p.push(state.p.clone());
        self.f_u.push(f_u.clone());
        self.f_v.push(f_v.clone());
    }

    pub fn push_intermediate(&mut self, u_star: &DMatrix<T>, v_star: &DMatrix<T>) {
        self.u.push(u_star.clone());
        self.v.push(v_star.clone());
    }

    pub fn extend(&mut self, other: SnapshotSet<T>) {
        self.u.extend(other.u);
        self.v.extend(other.v);
        self.p.extend(other.p);
        self.f_u.extend(other.f_u);
        self.f_v.extend(other.f_v);
    }

    /// Number of visited states.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Truncation rules for the state families and the nonlinear (DEIM) families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisOptions {
    pub state: Truncation,
    pub nonlinear: Truncation,
}

impl BasisOptions {
    pub fn tolerance(tol: f64) -> Self {
        Self { state: Truncation::Tolerance(tol), nonlinear: Truncation::Tolerance(tol) }
    }

    pub fn tolerance_capped(tol: f64, max_rank: usize) -> Self {
        let t = Truncation::Capped { tol, max_rank };
        Self { state: t, nonlinear: t }
    }

    pub fn tol(&self) -> f64 {
        match self.state {
            Truncation::Tolerance(t) | Truncation::Capped { tol: t, .. } => t,
            Truncation::Rank(_) => 0.0,
        }
    }
}

/// Ranks of every basis, as reported in manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub k_u: (usize, usize),
    pub k_v: (usize, usize),
    pub k_p: (usize, usize),
    pub p_u: (usize, usize),
    pub p_v: (usize, usize),
}

/// POD bases of `U`, `V`, `P`, DEIM bases of `F_U`, `F_V` and their
/// interpolation indices.
#[derive(Debug, Clone)]
pub struct ReducedBasis<T: Real> {
    pub u_l: DMatrix<T>,
    pub u_r: DMatrix<T>,
    pub v_l: DMatrix<T>,
    pub v_r: DMatrix<T>,
    pub p_l: DMatrix<T>,
    pub p_r: DMatrix<T>,
    pub phi_u_l: DMatrix<T>,
    pub phi_u_r: DMatrix<T>,
    pub phi_v_l: DMatrix<T>,
    pub phi_v_r: DMatrix<T>,
    pub d_u_l: Vec<usize>,
    pub d_u_r: Vec<usize>,
    pub d_v_l: Vec<usize>,
    pub d_v_r: Vec<usize>,
    pub tol: f64,
}

impl<T: Real> ReducedBasis<T> {
    pub fn ranks(&self) -> RankReport {
        RankReport {
            k_u: (self.u_l.ncols(), self.u_r.ncols()),
            k_v: (self.v_l.ncols(), self.v_r.ncols()),
            k_p: (self.p_l.ncols(), self.p_r.ncols()),
            p_u: (self.phi_u_l.ncols(), self.phi_u_r.ncols()),
            p_v: (self.phi_v_l.ncols(), self.phi_v_r.ncols()),
        }
    }

    pub fn max_rank(&self) -> usize {
        let r = self.ranks();
        [r.k_u.0, r.k_u.1, r.k_v.0, r.k_v.1, r.k_p.0, r.k_p.1, r.p_u.0, r.p_u.1, r.p_v.0, r.p_v.1]
            .into_iter()
            .max()
            .unwrap_or(0)
    }

    /// Complete bases (identity matrices, every row sampled): the reduced
    /// model then reproduces the full model.
    pub fn identity(grid: &crate::grid::GridSpec<T>) -> Self {
        let (nx, ny) = (grid.n_x, grid.n_y);
        let eye = |n: usize| DMatrix::<T>::identity(n, n);
        Self {
            u_l: eye(nx - 1),
            u_r: eye(ny),
            v_l: eye(nx),
            v_r: eye(ny - 1),
            p_l: eye(nx),
            p_r: eye(ny),
            phi_u_l: eye(nx - 1),
            phi_u_r: eye(ny),
            phi_v_l: eye(nx),
            phi_v_r: eye(ny - 1),
            d_u_l: (0..nx - 1).collect(),
            d_u_r: (0..ny).collect(),
            d_v_l: (0..nx).collect(),
            d_v_r: (0..ny - 1).collect(),
            tol: 0.0,
        }
    }

    /// Checks shapes against a grid, orthonormality and the DEIM index lists
    /// (including their `+1` shifts).
    pub fn validate(&self, grid: &crate::grid::GridSpec<T>) -> Result<()> {
        let (nx, ny) = (grid.n_x, grid.n_y);
        for (b, rows, ctx) in [
            (&self.u_l, nx - 1, "U left basis"),
            (&self.u_r, ny, "U right basis"),
            (&self.v_l, nx, "V left basis"),
            (&self.v_r, ny - 1, "V right basis"),
            (&self.p_l, nx, "P left basis"),
            (&self.p_r, ny, "P right basis"),
            (&self.phi_u_l, nx - 1, "F_U left basis"),
            (&self.phi_u_r, ny, "F_U right basis"),
            (&self.phi_v_l, nx, "F_V left basis"),
            (&self.phi_v_r, ny - 1, "F_V right basis"),
        ] {
            if b.nrows() != rows || b.ncols() == 0 {
                return Err(Error::DimensionMismatch { context: ctx, expected: (rows, b.ncols().max(1)), got: b.shape() });
            }
            let k = b.ncols();
            let err = (b.transpose() * b - DMatrix::identity(k, k)).amax();
            if err.as_f64() > 1e-8 {
                return Err(Error::InvalidParameter(format!("{ctx} is not orthonormal (error {err:e})")));
            }
        }
        for (idx, phi, shift_dim) in [
            (&self.d_u_l, &self.phi_u_l, nx),
            (&self.d_u_r, &self.phi_u_r, ny + 1),
            (&self.d_v_l, &self.phi_v_l, nx + 1),
            (&self.d_v_r, &self.phi_v_r, ny),
        ] {
            if idx.len() != phi.ncols() {
                return Err(Error::RankDeficient(format!(
                    "{} DEIM indices for {} basis vectors",
                    idx.len(),
                    phi.ncols()
                )));
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != idx.len() {
                return Err(Error::RankDeficient("duplicate DEIM index".into()));
            }
            for &i in idx {
                if i >= phi.nrows() {
                    return Err(Error::ShiftedIndexOutOfRange { index: i, dim: phi.nrows() });
                }
                if i + 1 >= shift_dim {
                    return Err(Error::ShiftedIndexOutOfRange { index: i + 1, dim: shift_dim });
                }
            }
        }
        Ok(())
    }

    pub fn project(&self, s: &FullState<T>) -> Result<crate::ns_reduced::ReducedState<T>> {
        crate::ns_reduced::project(s, self)
    }
}

/// POD bases of every snapshot family plus Q-DEIM indices.
pub fn build_reduced_basis<T: Real>(snaps: &SnapshotSet<T>, tol: f64) -> Result<ReducedBasis<T>> {
    build_reduced_basis_with(snaps, &BasisOptions::tolerance(tol))
}

pub fn build_reduced_basis_with<T: Real>(snaps: &SnapshotSet<T>, opts: &BasisOptions) -> Result<ReducedBasis<T>> {
    if snaps.is_empty() {
        return Err(Error::DegenerateSnapshots("empty snapshot set".into()));
    }
    let side = |family: &[DMatrix<T>], name: &str, t: Truncation, transposed: bool| {
        pod_side(family, t, transposed).map(|s| s.basis).map_err(|e| match e {
            Error::DegenerateSnapshots(m) => Error::DegenerateSnapshots(format!("{name}: {m}")),
            e => e,
        })
    };
    let st = opts.state;
    let nl = opts.nonlinear;
    let u_l = side(&snaps.u, "U", st, false)?;
    let u_r = side(&snaps.u, "U", st, true)?;
    let v_l = side(&snaps.v, "V", st, false)?;
    let v_r = side(&snaps.v, "V", st, true)?;
    let p_l = with_constant_mode(&side(&snaps.p, "P", st, false)?);
    let p_r = with_constant_mode(&side(&snaps.p, "P", st, true)?);
    let phi_u_l = side(&snaps.f_u, "F_U", nl, false)?;
    let phi_u_r = side(&snaps.f_u, "F_U", nl, true)?;
    let phi_v_l = side(&snaps.f_v, "F_V", nl, false)?;
    let phi_v_r = side(&snaps.f_v, "F_V", nl, true)?;
    let basis = ReducedBasis {
        d_u_l: qdeim_indices(&phi_u_l)?,
        d_u_r: qdeim_indices(&phi_u_r)?,
        d_v_l: qdeim_indices(&phi_v_l)?,
        d_v_r: qdeim_indices(&phi_v_r)?,
        u_l,
        u_r,
        v_l,
        v_r,
        p_l,
        p_r,
        phi_u_l,
        phi_u_r,
        phi_v_l,
        phi_v_r,
        tol: opts.tol(),
    };
    Ok(basis)
}
