//! Offline/online coupling: coarse full-dimensional snapshot tree, reduced
//! operators, tree DP on the reduced model and replay on the full model.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::boundary::BoundaryConditions;
use crate::control_problems::{pressure_mismatch, trajectory_cost, CostSpec, CostTrace, NodeCodec, NodeNorm, TerminalKind};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ns_full::{ControlSignal, ForcingSpec, FullModel, FullState};
use crate::ns_reduced::{lift, project, ReducedModel, ReducedState};
use crate::pod_deim::{assemble_reduced, build_reduced_basis_with, BasisOptions, ReducedBasis, SnapshotSet};
use crate::scalar::Real;
use crate::tsa::{backward_dp, build_tree, synthesize_control, Synthesis, Tree, ValueTable};

/// Coarse exploration tree used to collect snapshots: `levels` levels of
/// `controls`, each edge integrated with `substeps` fine steps.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineTree<T> {
    pub controls: Vec<T>,
    pub substeps: usize,
    pub levels: usize,
}

#[derive(Debug, Clone)]
pub struct OfflineSnapshots<T: Real> {
    pub snapshots: SnapshotSet<T>,
    /// Largest upwind parameter used along any explored edge.
    pub gamma_max: T,
    pub edges: usize,
}

/// Expands the unpruned coarse tree in full dimension. Edges of one level run
/// in parallel; snapshots are appended in creation order.
pub fn offline_snapshots<T: Real>(model: &FullModel<T>, init: &FullState<T>, plan: &OfflineTree<T>) -> Result<OfflineSnapshots<T>> {
    if plan.controls.is_empty() || plan.substeps == 0 {
        return Err(Error::InvalidParameter("offline tree needs at least one control and one substep".into()));
    }
    let mut snapshots = SnapshotSet::default();
    let mut gamma_max = T::zero();
    let mut edges = 0;
    let mut level = vec![init.clone()];
    for _ in 0..plan.levels {
        let results: Vec<Result<(FullState<T>, SnapshotSet<T>, T)>> = level
            .par_iter()
            .flat_map_iter(|s| plan.controls.iter().map(move |&a| (s, a)))
            .map(|(s, a)| {
                let mut set = SnapshotSet::default();
                let mut gamma = T::zero();
                let last = model.integrate_with(s, plan.substeps, &ControlSignal::Constant(a), |_, st, rec| {
                    if let Some(rec) = rec {
                        set.push(st, &rec.f_u, &rec.f_v);
                        set.push_intermediate(&rec.u_star, &rec.v_star);
                        gamma = gamma.max(rec.gamma);
                    }
                })?;
                Ok((last, set, gamma))
            })
            .collect();
        let mut next = Vec::with_capacity(results.len());
        for r in results {
            let (last, set, gamma) = r?;
            if !last.is_finite() {
                return Err(Error::BlowUp { step: edges, t: last.t.as_f64() });
            }
            snapshots.extend(set);
            gamma_max = gamma_max.max(gamma);
            next.push(last);
            edges += 1;
        }
        level = next;
    }
    Ok(OfflineSnapshots { snapshots, gamma_max, edges })
}

/// Everything the online phase needs, built from a snapshot set.
#[derive(Debug, Clone)]
pub struct ReducedProblem<T: Real> {
    pub basis: ReducedBasis<T>,
    pub model: ReducedModel<T>,
    pub codec: NodeCodec<T>,
}

impl<T: Real> ReducedProblem<T> {
    pub fn build(
        full: &FullModel<T>,
        bc: &BoundaryConditions<T>,
        forcing: &ForcingSpec<T>,
        snapshots: &SnapshotSet<T>,
        opts: &BasisOptions,
        gamma: T,
    ) -> Result<Self> {
        let basis = build_reduced_basis_with(snapshots, opts)?;
        Self::from_basis(full, bc, forcing, basis, gamma)
    }

    pub fn from_basis(
        full: &FullModel<T>,
        bc: &BoundaryConditions<T>,
        forcing: &ForcingSpec<T>,
        basis: ReducedBasis<T>,
        gamma: T,
    ) -> Result<Self> {
        let red = assemble_reduced(&full.ops, &basis, bc, forcing, gamma)?;
        let model = ReducedModel::new(red, full.dt)?;
        let codec = NodeCodec::new(&full.ops.grid, &basis, NodeNorm::default());
        Ok(Self { basis, model, codec })
    }

    /// Switches the metric used for tree pruning.
    pub fn with_norm(mut self, norm: NodeNorm) -> Self {
        self.codec = NodeCodec::new(&self.model.red.grid, &self.basis, norm);
        self
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.model.red.grid
    }

    pub fn p_shape(&self) -> (usize, usize) {
        (self.basis.p_l.ncols(), self.basis.p_r.ncols())
    }

    pub fn encode(&self, s: &FullState<T>) -> Result<Vec<T>> {
        let r = project(s, &self.basis)?;
        Ok(self.codec.encode(&r.u, &r.v))
    }

    /// One reduced step on a node vector.
    pub fn step_node(&self, x: &[T], alpha: T, level: usize) -> Result<ReducedState<T>> {
        let t = self.model.dt * T::from_usize_lossy(level);
        let s = self.codec.decode_state(x, t, self.p_shape())?;
        self.model.step(&s, alpha)
    }

    pub fn lift_node(&self, x: &[T], t: T) -> Result<FullState<T>> {
        lift(&self.codec.decode_state(x, t, self.p_shape())?, &self.basis)
    }
}

/// Reduced-space cost: targets are projected and encoded once per level.
struct NodeCost<T: Real> {
    targets: Vec<Option<Vec<T>>>,
    gamma_pen: T,
    running: bool,
    terminal_weight: T,
    area: T,
}

impl<T: Real> NodeCost<T> {
    fn new(problem: &ReducedProblem<T>, cost: &CostSpec<T>, n_t: usize) -> Result<Self> {
        let dt = problem.model.dt;
        let targets = (0..=n_t)
            .map(|n| match cost.target.at(dt * T::from_usize_lossy(n))? {
                Some(s) => problem.encode(s).map(Some),
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        let sc = problem.codec.scale;
        let area = problem.grid().cell_area() / (sc * sc);
        Ok(Self { targets, gamma_pen: cost.gamma_pen, running: cost.running, terminal_weight: cost.terminal_weight, area })
    }

    fn mismatch(&self, x: &[T], level: usize) -> T {
        let sq = match &self.targets[level] {
            Some(y) => x.iter().zip(y).fold(T::zero(), |a, (&p, &q)| a + (p - q) * (p - q)),
            None => x.iter().fold(T::zero(), |a, &p| a + p * p),
        };
        self.area * sq
    }
}

/// Result of the online phase.
#[derive(Debug, Clone)]
pub struct ControlSolution<T: Real> {
    pub tree: Tree<T>,
    pub values: ValueTable<T>,
    pub synthesis: Synthesis<T>,
}

impl<T: Real> ControlSolution<T> {
    pub fn nodes(&self) -> usize {
        self.tree.len()
    }

    pub fn pruning_ratio(&self) -> f64 {
        self.tree.pruning_ratio()
    }
}

/// Builds the reduced tree from `init`, solves the DP and synthesizes the control.
pub fn solve_reduced_control<T: Real>(
    problem: &ReducedProblem<T>,
    init: &FullState<T>,
    controls: &[T],
    n_t: usize,
    eps: T,
    cost: &CostSpec<T>,
) -> Result<ControlSolution<T>> {
    cost.validate()?;
    if let TerminalKind::Pressure(p_ref) = &cost.terminal {
        if p_ref.shape() != problem.grid().p_shape() {
            return Err(Error::DimensionMismatch { context: "pressure target", expected: problem.grid().p_shape(), got: p_ref.shape() });
        }
    }
    let dt = problem.model.dt;
    let x0 = problem.encode(init)?;
    let tree = build_tree(|x, a, n| problem.step_node(x, a, n).map(|s| problem.codec.encode(&s.u, &s.v)), &x0, controls, dt, n_t, eps)?;
    let nc = NodeCost::new(problem, cost, n_t)?;
    let running = |x: &[T], a: T, n: usize| if nc.running { nc.mismatch(x, n) + nc.gamma_pen * a * a } else { T::zero() };
    let terminal = |tree: &Tree<T>, id: usize| -> T {
        let g = match &cost.terminal {
            TerminalKind::None => T::zero(),
            TerminalKind::Velocity => nc.mismatch(tree.state(id), tree.n_t()),
            TerminalKind::Pressure(p_ref) => terminal_pressure(problem, tree, id, p_ref).unwrap_or(T::lit(f64::INFINITY)),
        };
        nc.terminal_weight * g
    };
    let values = backward_dp(&tree, running, terminal, cost.lambda);
    let synthesis = synthesize_control(&tree, &values);
    Ok(ControlSolution { tree, values, synthesis })
}

/// Pressure at a node, recomputed by repeating the step that created it.
pub fn node_pressure<T: Real>(problem: &ReducedProblem<T>, tree: &Tree<T>, id: usize) -> Result<DMatrix<T>> {
    let (Some(parent), Some(j)) = (tree.parent(id), tree.creating_control(id)) else {
        return Err(Error::InvalidParameter("the root carries no pressure".into()));
    };
    let s = problem.step_node(tree.state(parent), tree.controls()[j], tree.level_of(parent))?;
    Ok(&problem.basis.p_l * &s.p * problem.basis.p_r.transpose())
}

fn terminal_pressure<T: Real>(problem: &ReducedProblem<T>, tree: &Tree<T>, id: usize, p_ref: &DMatrix<T>) -> Result<T> {
    Ok(pressure_mismatch(&node_pressure(problem, tree, id)?, p_ref))
}

/// Replays a control sequence through the full model and evaluates its cost.
pub fn replay<T: Real>(
    model: &FullModel<T>,
    init: &FullState<T>,
    controls: &[T],
    cost: &CostSpec<T>,
) -> Result<(Vec<FullState<T>>, CostTrace<T>)> {
    let signal = ControlSignal::Sequence(controls.to_vec());
    let (traj, _) = model.integrate(init, controls.len(), &signal, false)?;
    let trace = trajectory_cost(&traj, &signal, model.dt, cost, &model.ops.grid)?;
    Ok((traj, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_problems::{Actuation, Rect, Target};
    use std::f64::consts::PI;

    #[test]
    fn offline_tree_counts_edges_and_snapshots() {
        let g = GridSpec::<f64>::unit_square(8, 100.0).unwrap();
        let act = Actuation::Subdomain { rect: Rect { x0: 0.3, x1: 0.7, y0: 0.3, y1: 0.7 }, sign: -1.0 };
        let m = FullModel::new(&g, 0.1, BoundaryConditions::homogeneous(), act.forcing(&g)).unwrap();
        let init = FullState::from_velocity(&g, |x, y| ((PI * x).sin() * (PI * y).sin(), 0.0));
        let plan = OfflineTree { controls: vec![0.0, 1.0], substeps: 3, levels: 2 };
        let off = offline_snapshots(&m, &init, &plan).unwrap();
        assert_eq!(off.edges, 6);
        assert_eq!(off.snapshots.len(), 18);
        assert_eq!(off.snapshots.u.len(), 36);
        let again = offline_snapshots(&m, &init, &plan).unwrap();
        assert_eq!(off.snapshots.u, again.snapshots.u);
    }

    #[test]
    fn reduced_control_on_small_grid_beats_doing_nothing() {
        let g = GridSpec::<f64>::unit_square(10, 100.0).unwrap();
        let act = Actuation::Subdomain { rect: Rect { x0: 0.3, x1: 0.7, y0: 0.3, y1: 0.7 }, sign: -1.0 };
        let bc = BoundaryConditions::homogeneous();
        let forcing = act.forcing(&g);
        let m = FullModel::new(&g, 0.1, bc.clone(), forcing.clone()).unwrap();
        let init = FullState::from_velocity(&g, |x, y| {
            let s = (PI * x).sin() * (PI * y).sin();
            (s, s)
        });
        let off = offline_snapshots(&m, &init, &OfflineTree { controls: vec![0.0, 1.0], substeps: 2, levels: 3 }).unwrap();
        let p = ReducedProblem::build(&m, &bc, &forcing, &off.snapshots, &BasisOptions::tolerance(1e-6), off.gamma_max).unwrap();
        let cost = CostSpec::terminal_velocity(Target::Zero);
        let sol = solve_reduced_control(&p, &init, &[0.0, 1.0], 6, 0.0, &cost).unwrap();
        assert_eq!(sol.nodes(), 127);
        let (_, ctrl) = replay(&m, &init, &sol.synthesis.controls, &cost).unwrap();
        let (_, unc) = replay(&m, &init, &[0.0; 6], &cost).unwrap();
        assert!(ctrl.total < unc.total, "{} vs {}", ctrl.total, unc.total);
    }
}
