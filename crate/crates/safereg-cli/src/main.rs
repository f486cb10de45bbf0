use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safereg_cli::commands::{self, Overrides};
use safereg_cli::config::ControllerChoice;
use safereg_cli::Failure;

/// Safe output regulation of coupled hyperbolic PDE-ODE systems.
#[derive(Parser)]
#[command(name = "safereg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the kernel equations and write kernel CSVs plus a residual report.
    Kernels(Common),
    /// Run the closed loop; writes trajectory.csv, fields.csv and metrics.json.
    Simulate(Common),
    /// Classify the initial data and report h(tbar0) or its lower bound.
    CheckSafety(Common),
    /// Observer error bounds and the control envelope.
    Envelope(Common),
    /// Run the cartesian grid of [sweep.parameters], one subdirectory per cell.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file, or a bundled name (case1_safe, case1_unsafe, case2_safe, case2_unsafe, or a `_placed` variant).
    #[arg(long)]
    config: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    controller: Option<ControllerChoice>,
    /// Multiply the number of cells and divide dt by this factor.
    #[arg(long)]
    refine: Option<usize>,
    /// Keep a field snapshot every N steps (0: none).
    #[arg(long)]
    snapshot_stride: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { controller: self.controller, refine: self.refine, snapshot_stride: self.snapshot_stride }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Kernels(c) => {
            let cfg = commands::load(&c.config, &c.overrides())?;
            print!("{}", commands::kernels(&cfg, &c.out)?.1);
        }
        Command::Simulate(c) => {
            let cfg = commands::load(&c.config, &c.overrides())?;
            let (summary, text) = commands::simulate_cmd(&cfg, &c.out)?;
            print!("{text}");
            if !summary.acceptance.passed {
                return Err(Failure::Unsafe(summary.acceptance.reason));
            }
        }
        Command::CheckSafety(c) => {
            let cfg = commands::load(&c.config, &c.overrides())?;
            let (rep, text) = commands::check_safety(&cfg, &c.out)?;
            print!("{text}");
            if !rep.safe {
                return Err(Failure::Unsafe(format!("initial data are {}", rep.verdict)));
            }
        }
        Command::Envelope(c) => {
            let cfg = commands::load(&c.config, &c.overrides())?;
            print!("{}", commands::envelope(&cfg, &c.out)?.1);
        }
        Command::Sweep(c) => {
            // flags apply per cell, after the sweep assignment
            let cfg = commands::load(&c.config, &Overrides::default())?;
            let (rows, text) = commands::sweep(&cfg, &c.overrides(), &c.out)?;
            print!("{text}");
            let worst = rows
                .iter()
                .filter_map(|r| match &r.result {
                    Ok(s) if !s.acceptance.passed => Some(Failure::Unsafe(format!("cell {} failed acceptance", r.cell.index))),
                    Ok(_) => None,
                    Err(e) => Some(e.clone()),
                })
                .max_by_key(|f| f.exit_code());
            if let Some(f) = worst {
                return Err(f);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
