use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsctl::config::parse_controls;
use nsctl::{commands, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "nsctl", about = "Feedback control of 2D incompressible flow on reduced models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full, vector-oracle and reduced uncontrolled runs with timings.
    Simulate(Overrides),
    /// Coarse offline tree, bases and manifest.
    Offline(Overrides),
    /// Reduced tree, dynamic programming, feedback and full-model replay.
    Control(Overrides),
    /// Merge the artifacts of the other commands.
    Report(Overrides),
    /// Print the effective configuration.
    Config(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    test: Option<u8>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Comma separated control values, e.g. 0,0.5,1.
    #[arg(long)]
    controls: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match (&self.config, self.test) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, t) => ExperimentConfig::preset(t.unwrap_or(1))?,
        };
        if let Some(t) = self.test {
            cfg.test = t;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if let Some(c) = &self.controls {
            cfg.controls = parse_controls(c)?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(o) => {
            for r in commands::simulate(&o.resolve()?)? {
                let vec = r.vector_per_step.map_or("-".to_string(), |v| format!("{v:.3e}"));
                println!(
                    "n={} matrix {:.3e}s/step vector {} reduced {:.3e}s/step max|dU| {:.3e} ranks {:?}",
                    r.n, r.full_per_step, vec, r.reduced_per_step, r.max_err_u, r.ranks
                );
            }
        }
        Command::Offline(o) => {
            let s = commands::offline(&o.resolve()?)?;
            println!("{} edges, {} snapshots, ranks {:?}", s.edges, s.snapshots, s.ranks);
        }
        Command::Control(o) => {
            let s = commands::control(&o.resolve()?)?;
            println!(
                "M={} J_controlled {:.3e} J_uncontrolled {:.3e} nodes {} Ratio_p {:.3e}",
                s.m, s.j_controlled, s.j_uncontrolled, s.nodes, s.ratio_p
            );
        }
        Command::Report(o) => print!("{}", commands::report(&o.resolve()?)?),
        Command::Config(o) => println!("{}", o.resolve()?.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}
