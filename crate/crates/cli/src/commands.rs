use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use nsctl_core::io::{load_basis, save_basis, save_matrix, BasisManifest};
use nsctl_core::ns_full::ControlSignal;
use nsctl_core::ns_reduced::{lift, project};
use nsctl_core::pipeline::{offline_snapshots, replay, solve_reduced_control, OfflineTree, ReducedProblem};
use nsctl_core::pod_deim::{BasisOptions, RankReport};
use nsctl_core::tsa::{full_tree_cardinality, ControlGrid};
use nsctl_core::vector_model::VectorModel;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::setup::{node_norm, offline_plan, Scenario};

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<S: Serialize>(value: &S, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
    w.flush()?;
    Ok(())
}

fn read_json<D: for<'a> Deserialize<'a>>(path: &Path) -> CliResult<D> {
    let text = fs::read_to_string(path).map_err(|e| CliError::missing(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::new(crate::error::Category::Io, format!("{}: {e}", path.display())))
}

pub fn offline_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join("offline")
}

pub fn control_dir(cfg: &ExperimentConfig, m: usize) -> PathBuf {
    cfg.out.join(format!("control_M{m}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub n: usize,
    pub steps: usize,
    pub full_per_step: f64,
    pub vector_per_step: Option<f64>,
    pub reduced_per_step: f64,
    pub ranks: RankReport,
    pub max_err_u: f64,
    pub max_err_v: f64,
}

/// Full matrix, optional vector-oracle and reduced runs of the uncontrolled
/// dynamics for every grid size of the sweep.
pub fn simulate(cfg: &ExperimentConfig) -> CliResult<Vec<SimulateRow>> {
    cfg.validate()?;
    let sizes = if cfg.sweep.is_empty() { vec![cfg.n] } else { cfg.sweep.clone() };
    let n_t = cfg.n_t();
    let dir = cfg.out.join("simulate");
    fs::create_dir_all(&dir)?;
    let mut rows = Vec::new();
    for &n in &sizes {
        let sc = Scenario::new(cfg, n)?;
        let plan = OfflineTree { controls: vec![0.0], substeps: n_t.max(1), levels: 1 };
        let t0 = Instant::now();
        let run = offline_snapshots(&sc.model, &sc.init, &plan)?;
        let full_per_step = t0.elapsed().as_secs_f64() / plan.substeps as f64;
        let full_final = sc.model.integrate_with(&sc.init, n_t, &ControlSignal::Constant(0.0), |_, _, _| {})?;

        let vector_per_step = if n <= cfg.vector_max_n {
            let vm = VectorModel::new(&sc.grid, cfg.dt, sc.bc.clone(), sc.forcing.clone())?;
            let t0 = Instant::now();
            let mut s = sc.init.clone();
            for _ in 0..n_t {
                s = vm.step(&s, 0.0)?;
            }
            Some(t0.elapsed().as_secs_f64() / n_t.max(1) as f64)
        } else {
            None
        };

        let problem = ReducedProblem::build(&sc.model, &sc.bc, &sc.forcing, &run.snapshots, &BasisOptions::tolerance(cfg.tol), run.gamma_max)?;
        let r0 = project(&sc.init, &problem.basis)?;
        let mut reduced_per_step = f64::INFINITY;
        let mut traj = Vec::new();
        for _ in 0..cfg.timing_repeats {
            let t0 = Instant::now();
            traj = problem.model.integrate(&r0, n_t, &ControlSignal::Constant(0.0))?;
            reduced_per_step = reduced_per_step.min(t0.elapsed().as_secs_f64() / n_t.max(1) as f64);
        }
        let lifted = lift(traj.last().expect("trajectory has a final state"), &problem.basis)?;
        let diff_u = &full_final.u - &lifted.u;
        let diff_v = &full_final.v - &lifted.v;
        save_matrix(&diff_u, &dir.join(format!("diff_u_n{n}.bin")))?;
        save_matrix(&diff_v, &dir.join(format!("diff_v_n{n}.bin")))?;
        rows.push(SimulateRow {
            n,
            steps: n_t,
            full_per_step,
            vector_per_step,
            reduced_per_step,
            ranks: problem.basis.ranks(),
            max_err_u: diff_u.amax(),
            max_err_v: diff_v.amax(),
        });
    }

    let mut w = create(&dir.join("timing.csv"))?;
    writeln!(w, "n,model,steps,per_step_seconds")?;
    for r in &rows {
        if let Some(v) = r.vector_per_step {
            writeln!(w, "{},vector-oracle,{},{:e}", r.n, r.steps, v)?;
        }
        writeln!(w, "{},matrix,{},{:e}", r.n, r.steps, r.full_per_step)?;
        writeln!(w, "{},reduced,{},{:e}", r.n, r.steps, r.reduced_per_step)?;
    }
    w.flush()?;
    let mut w = create(&dir.join("rom.csv"))?;
    writeln!(w, "n,k_u_l,k_u_r,k_v_l,k_v_r,k_p_l,k_p_r,p_u_l,p_u_r,p_v_l,p_v_r,max_err_u,max_err_v")?;
    for r in &rows {
        let k = r.ranks;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{:e},{:e}",
            r.n, k.k_u.0, k.k_u.1, k.k_v.0, k.k_v.1, k.k_p.0, k.k_p.1, k.p_u.0, k.p_u.1, k.p_v.0, k.p_v.1, r.max_err_u, r.max_err_v
        )?;
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineSummary {
    pub test: u8,
    pub n: usize,
    pub tol: f64,
    pub edges: usize,
    pub snapshots: usize,
    pub gamma_max: f64,
    pub ranks: RankReport,
}

/// Coarse full-dimensional tree, bases and a check that the reduced operators assemble.
pub fn offline(cfg: &ExperimentConfig) -> CliResult<OfflineSummary> {
    cfg.validate()?;
    let sc = Scenario::new(cfg, cfg.n)?;
    if !sc.has_control() {
        return Err(CliError::config("test 1 has no control problem; use simulate"));
    }
    let off = offline_snapshots(&sc.model, &sc.init, &offline_plan(cfg))?;
    let problem = ReducedProblem::build(&sc.model, &sc.bc, &sc.forcing, &off.snapshots, &BasisOptions::tolerance(cfg.tol), off.gamma_max)?;
    let dir = offline_dir(cfg);
    save_basis(&problem.basis, &sc.grid, off.gamma_max, &dir)?;
    let summary = OfflineSummary {
        test: cfg.test,
        n: cfg.n,
        tol: cfg.tol,
        edges: off.edges,
        snapshots: off.snapshots.len(),
        gamma_max: off.gamma_max,
        ranks: problem.basis.ranks(),
    };
    write_json(&summary, &dir.join("offline.json"))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSummary {
    pub test: u8,
    pub m: usize,
    pub controls: Vec<f64>,
    pub eps_t: f64,
    pub n_t: usize,
    pub j_controlled: f64,
    pub j_uncontrolled: f64,
    pub v_root: f64,
    pub nodes: usize,
    pub full_nodes: Option<u128>,
    pub ratio_p: f64,
    pub signal: Vec<f64>,
    pub signal_mean: f64,
}

fn load_offline(cfg: &ExperimentConfig) -> CliResult<(nsctl_core::pod_deim::ReducedBasis<f64>, BasisManifest)> {
    let dir = offline_dir(cfg);
    if !dir.join("manifest.json").exists() {
        return Err(CliError::missing(format!("no offline basis in {}; run offline first", dir.display())));
    }
    let (basis, manifest) = load_basis::<f64>(&dir)?;
    if manifest.grid.n_x != cfg.n || manifest.grid.n_y != cfg.n {
        return Err(CliError::config(format!("offline basis was built for n = {}, config asks for n = {}", manifest.grid.n_x, cfg.n)));
    }
    Ok((basis, manifest))
}

/// Online phase: reduced tree, dynamic programming, synthesis and full-model replay.
pub fn control(cfg: &ExperimentConfig) -> CliResult<ControlSummary> {
    cfg.validate()?;
    let grid = ControlGrid::new(cfg.controls.clone())?;
    let sc = Scenario::new(cfg, cfg.n)?;
    if !sc.has_control() {
        return Err(CliError::config("test 1 has no control problem; use simulate"));
    }
    let (basis, manifest) = load_offline(cfg)?;
    let problem = ReducedProblem::from_basis(&sc.model, &sc.bc, &sc.forcing, basis, manifest.gamma_up)?.with_norm(node_norm(cfg.node_norm));
    let cost = sc.cost()?;
    let n_t = cfg.n_t();
    let sol = solve_reduced_control(&problem, &sc.init, grid.values(), n_t, cfg.eps(), &cost)?;
    let signal = sol.synthesis.controls.clone();
    let (traj, controlled) = replay(&sc.model, &sc.init, &signal, &cost)?;
    let (_, uncontrolled) = replay(&sc.model, &sc.init, &vec![0.0; n_t], &cost)?;

    let m = grid.len();
    let dir = control_dir(cfg, m);
    fs::create_dir_all(&dir)?;
    let mut w = create(&dir.join("signal.csv"))?;
    writeln!(w, "step,t,control_index,alpha")?;
    for (k, (&a, &j)) in signal.iter().zip(&sol.synthesis.indices).enumerate() {
        writeln!(w, "{k},{:e},{j},{:e}", k as f64 * cfg.dt, a)?;
    }
    w.flush()?;
    let mut w = create(&dir.join("tree.csv"))?;
    sol.tree.write_csv(&mut w, Some(&sol.values))?;
    w.flush()?;
    let mut w = create(&dir.join("cost_controlled.csv"))?;
    controlled.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("cost_uncontrolled.csv"))?;
    uncontrolled.write_csv(&mut w)?;
    w.flush()?;
    let last = traj.last().expect("trajectory has a final state");
    save_matrix(&last.u, &dir.join("final_u.bin"))?;
    save_matrix(&last.v, &dir.join("final_v.bin"))?;
    save_matrix(&last.p, &dir.join("final_p.bin"))?;

    let summary = ControlSummary {
        test: cfg.test,
        m,
        controls: grid.values().to_vec(),
        eps_t: cfg.eps(),
        n_t,
        j_controlled: controlled.total,
        j_uncontrolled: uncontrolled.total,
        v_root: sol.values.root(),
        nodes: sol.nodes(),
        full_nodes: full_tree_cardinality(m, n_t),
        ratio_p: sol.pruning_ratio(),
        signal_mean: if n_t > 0 { signal.iter().sum::<f64>() / n_t as f64 } else { 0.0 },
        signal,
    };
    write_json(&summary, &dir.join("summary.json"))?;
    Ok(summary)
}

/// Merges the artifacts found under `out` into `report.md` and `report.csv`.
pub fn report(cfg: &ExperimentConfig) -> CliResult<String> {
    let out = &cfg.out;
    let mut controls: Vec<ControlSummary> = Vec::new();
    if out.is_dir() {
        let mut dirs: Vec<PathBuf> = fs::read_dir(out)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|s| s.to_str()).is_some_and(|s| s.starts_with("control_M")))
            .collect();
        dirs.sort();
        for d in dirs {
            let f = d.join("summary.json");
            if f.exists() {
                controls.push(read_json(&f)?);
            }
        }
    }
    controls.sort_by_key(|c| c.m);
    let offline: Option<OfflineSummary> = {
        let f = offline_dir(cfg).join("offline.json");
        if f.exists() { Some(read_json(&f)?) } else { None }
    };
    let timing = out.join("simulate").join("timing.csv");
    let rom = out.join("simulate").join("rom.csv");
    let timing = timing.exists().then(|| fs::read_to_string(&timing)).transpose()?;
    let rom = rom.exists().then(|| fs::read_to_string(&rom)).transpose()?;
    if controls.is_empty() && offline.is_none() && timing.is_none() {
        return Err(CliError::missing(format!("missing artifacts in {}: run simulate, offline or control first", out.display())));
    }

    let mut md = String::new();
    md.push_str(&format!("# Report: test {}\n\n", cfg.test));
    if let Some(t) = &timing {
        md.push_str("## Timings\n\n| n | model | steps | per step [s] |\n|---|---|---|---|\n");
        for line in t.lines().skip(1) {
            md.push_str(&format!("| {} |\n", line.split(',').collect::<Vec<_>>().join(" | ")));
        }
        md.push('\n');
    }
    if let Some(r) = &rom {
        md.push_str("## Reduced model\n\n");
        let mut lines = r.lines();
        if let Some(h) = lines.next() {
            let cols: Vec<&str> = h.split(',').collect();
            md.push_str(&format!("| {} |\n|{}\n", cols.join(" | "), "---|".repeat(cols.len())));
        }
        for line in lines {
            md.push_str(&format!("| {} |\n", line.split(',').collect::<Vec<_>>().join(" | ")));
        }
        md.push('\n');
    }
    if let Some(o) = &offline {
        md.push_str(&format!(
            "## Offline phase\n\nn = {}, tol = {:e}, {} edges, {} snapshots, gamma = {}\n\nranks: {:?}\n\n",
            o.n, o.tol, o.edges, o.snapshots, o.gamma_max, o.ranks
        ));
    }
    let mut csv = String::from("M,J,nodes,Ratio_p\n");
    if !controls.is_empty() {
        md.push_str("## Control\n\n");
        md.push_str(&format!("Uncontrolled cost: {:.3e}\n\n", controls[0].j_uncontrolled));
        md.push_str("| M | J | nodes | Ratio_p |\n|---|---|---|---|\n");
        for c in &controls {
            md.push_str(&format!("| {} | {:.3e} | {} | {:.3e} |\n", c.m, c.j_controlled, c.nodes, c.ratio_p));
            csv.push_str(&format!("{},{:e},{},{:e}\n", c.m, c.j_controlled, c.nodes, c.ratio_p));
        }
    }
    fs::write(out.join("report.md"), &md)?;
    fs::write(out.join("report.csv"), &csv)?;
    Ok(md)
}
