use std::f64::consts::PI;

use nsctl_core::boundary::BoundaryConditions;
use nsctl_core::control_problems::{make_target_stationary, Actuation, CostSpec, NodeNorm, Rect, Target};
use nsctl_core::grid::GridSpec;
use nsctl_core::ns_full::{ControlSignal, FullModel, FullState, ForcingSpec};
use nsctl_core::pipeline::OfflineTree;

use crate::config::{ExperimentConfig, NormChoice, Test2Bc};
use crate::error::CliResult;

/// Model, initial state and actuation of one test at a given resolution.
pub struct Scenario {
    pub test: u8,
    pub grid: GridSpec<f64>,
    pub init: FullState<f64>,
    pub bc: BoundaryConditions<f64>,
    pub forcing: ForcingSpec<f64>,
    pub model: FullModel<f64>,
    target: Option<FullState<f64>>,
    gamma_pen: f64,
    n_t: usize,
    reynolds: f64,
    dt: f64,
}

fn sine_bump(grid: &GridSpec<f64>) -> FullState<f64> {
    FullState::from_velocity(grid, |x, y| {
        let s = (PI * x).sin() * (PI * y).sin();
        (s, s)
    })
}

pub fn omega() -> Rect<f64> {
    Rect { x0: 0.3, x1: 0.7, y0: 0.3, y1: 0.7 }
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig, n: usize) -> CliResult<Self> {
        let grid = GridSpec::unit_square(n, cfg.reynolds)?;
        let mut target = None;
        let (init, bc, forcing) = match cfg.test {
            1 => (FullState::zeros(&grid), BoundaryConditions::lid_driven(1.0), ForcingSpec::default()),
            2 => {
                let lid = FullModel::new(&grid, cfg.dt, BoundaryConditions::lid_driven(1.0), ForcingSpec::default())?;
                let (stationary, _) = make_target_stationary(&lid, &FullState::zeros(&grid), cfg.t_stationary)?;
                let act = Actuation::Distributed { psi_u: stationary.u.clone(), psi_v: stationary.v.clone() };
                let bc = match cfg.test2_bc {
                    Test2Bc::Lid => BoundaryConditions::lid_driven(1.0),
                    Test2Bc::Homogeneous => BoundaryConditions::homogeneous(),
                };
                target = Some(stationary);
                (FullState::zeros(&grid), bc, act.forcing(&grid))
            }
            3 => {
                let act = Actuation::Subdomain { rect: omega(), sign: -1.0 };
                (sine_bump(&grid), BoundaryConditions::homogeneous(), act.forcing(&grid))
            }
            _ => (
                sine_bump(&grid),
                BoundaryConditions::top_wall(|x: f64, _t: f64, a: f64| x * (1.0 - x) * a, true),
                ForcingSpec::default(),
            ),
        };
        let model = FullModel::new(&grid, cfg.dt, bc.clone(), forcing.clone())?;
        Ok(Self {
            test: cfg.test,
            grid,
            init,
            bc,
            forcing,
            model,
            target,
            gamma_pen: cfg.gamma_pen,
            n_t: cfg.n_t(),
            reynolds: cfg.reynolds,
            dt: cfg.dt,
        })
    }

    pub fn has_control(&self) -> bool {
        self.test != 1
    }

    /// Reference pressure of Test 4: the lid signal `x(1-x) sin t` run to the final time.
    pub fn reference_pressure(&self) -> CliResult<nalgebra::DMatrix<f64>> {
        let bc = BoundaryConditions::top_wall(|x: f64, t: f64, _a: f64| x * (1.0 - x) * t.sin(), false);
        let grid = GridSpec::unit_square(self.grid.n_x, self.reynolds)?;
        let m = FullModel::new(&grid, self.dt, bc, ForcingSpec::default())?;
        let last = m.integrate_with(&self.init, self.n_t, &ControlSignal::Constant(0.0), |_, _, _| {})?;
        Ok(last.p)
    }

    pub fn cost(&self) -> CliResult<CostSpec<f64>> {
        Ok(match self.test {
            2 => CostSpec::tracking(Target::Stationary(self.target.clone().expect("test 2 target")), self.gamma_pen),
            3 => CostSpec::terminal_velocity(Target::Zero),
            _ => CostSpec::terminal_pressure(self.reference_pressure()?),
        })
    }
}

pub fn node_norm(c: NormChoice) -> NodeNorm {
    match c {
        NormChoice::Coefficient => NodeNorm::Coefficient,
        NormChoice::L2 => NodeNorm::L2,
    }
}

pub fn offline_plan(cfg: &ExperimentConfig) -> OfflineTree<f64> {
    OfflineTree { controls: cfg.offline.controls.clone(), substeps: cfg.offline.substeps, levels: cfg.offline.levels }
}
