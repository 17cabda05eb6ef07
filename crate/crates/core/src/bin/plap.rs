use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plap::scenario::{run, run_sweep, RunOptions, Scenario, Task};

#[derive(Parser)]
#[command(name = "plap", version, about = "Radial numerics for isolated singularities of p-Laplacian type equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuchsian bound and the (C1)/(C2) conditions.
    Check(Common),
    /// Wolff potential table and its PDE residual.
    Wolff(Common),
    /// Two-point boundary value problem on the scenario domain.
    Solve(Common),
    /// Three-spheres inequality on sampled triples.
    Spheres(Common),
    /// Hardy exponents for V = −λ r^{−p}.
    Hardy(Common),
    /// Behaviour of the extremal solutions at the singular point.
    Classify(Common),
    /// Parameter sweep described by the scenario's `sweep` block.
    Sweep(Common),
    /// Every task listed in the scenario.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// ODE relative tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Master seed for random sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall times in the report (makes artifacts run-dependent).
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cmd: Command) -> plap::Result<bool> {
    let (task, common) = match cmd {
        Command::Check(c) => (Some(Task::Conditions), c),
        Command::Wolff(c) => (Some(Task::Wolff), c),
        Command::Solve(c) => (Some(Task::Solve), c),
        Command::Spheres(c) => (Some(Task::ThreeSpheres), c),
        Command::Hardy(c) => (Some(Task::Hardy), c),
        Command::Classify(c) => (Some(Task::Classify), c),
        Command::Sweep(c) => (Some(Task::Sweep), c),
        Command::Run(c) => (None, c),
    };
    let mut sc = Scenario::load(&common.scenario)?;
    if let Some(t) = common.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(plap::Error::InvalidParams(format!("--tol must be positive, got {t}")));
        }
        sc.tolerances.ode = t;
    }
    if let Some(s) = common.seed {
        sc.seed = s;
    }
    let out = common.out.clone().unwrap_or_else(|| sc.output_path());

    if task == Some(Task::Sweep) {
        let rep = run_sweep(&sc, common.timings)?;
        rep.write(&out)?;
        print!("{}", rep.csv());
        println!("wrote {}", out.join("sweep.csv").display());
        return Ok(rep.rows.iter().all(|r| r.verdict.ok()));
    }
    if let Some(t) = task {
        sc.tasks = vec![t];
    }
    let opts = RunOptions { out_dir: Some(out.clone()), dry_run: false, timings: common.timings };
    let rep = run(&sc, &opts)?;
    for t in &rep.tasks {
        println!("{:<5} {}: {}", t.verdict.label(), t.task.name(), t.detail);
    }
    println!("{} ({})", rep.verdict.label(), out.join("report.json").display());
    Ok(rep.passed())
}
