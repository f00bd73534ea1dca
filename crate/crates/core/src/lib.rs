//! Matrix-oriented incompressible Navier–Stokes solver, two-sided POD/DEIM
//! reduced model and tree-structure dynamic programming for optimal control.

pub mod boundary;
pub mod control_problems;
pub mod error;
pub mod fd_operators;
pub mod grid;
pub mod io;
pub mod ns_full;
pub mod ns_reduced;
pub mod pipeline;
pub mod pod_deim;
pub mod scalar;
pub mod sylvester;
pub mod tsa;
pub mod vector_model;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision instantiations.
pub mod f64 {
    pub type GridSpec = crate::grid::GridSpec<f64>;
    pub type FullModel = crate::ns_full::FullModel<f64>;
    pub type FullState = crate::ns_full::FullState<f64>;
    pub type ReducedBasis = crate::pod_deim::ReducedBasis<f64>;
    pub type ReducedModel = crate::ns_reduced::ReducedModel<f64>;
    pub type ReducedProblem = crate::pipeline::ReducedProblem<f64>;
    pub type Tree = crate::tsa::Tree<f64>;
    pub type CostSpec = crate::control_problems::CostSpec<f64>;
}

/// Single-precision instantiations.
pub mod f32 {
    pub type GridSpec = crate::grid::GridSpec<f32>;
    pub type FullModel = crate::ns_full::FullModel<f32>;
    pub type FullState = crate::ns_full::FullState<f32>;
    pub type ReducedBasis = crate::pod_deim::ReducedBasis<f32>;
    pub type ReducedModel = crate::ns_reduced::ReducedModel<f32>;
    pub type ReducedProblem = crate::pipeline::ReducedProblem<f32>;
    pub type Tree = crate::tsa::Tree<f32>;
    pub type CostSpec = crate::control_problems::CostSpec<f32>;
}
