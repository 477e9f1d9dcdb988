use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use digraph_heat_cli::actions;
use digraph_heat_cli::spec::{Action, ExperimentSpec, Overrides};

/// Heat flow, decay exponents and phase-locked oscillators on directed graphs.
#[derive(Parser)]
#[command(name = "digraph-heat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with one experiment; flags override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the generator contract around the root
    Validate,
    /// Estimate volume growth, ellipticity, Poincare constants and skew mass
    CheckHypotheses,
    /// Evolve an indicator under the heat semigroup and fit decay exponents
    Simulate,
    /// Fit power laws to a CSV of norms (t,norm_kind,value)
    FitDecay,
    /// Reproduce the slow decay of the 2D advection graph
    Counterexample,
    /// Perturb a phase-locked sine-coupled oscillator network
    Oscillate,
}

impl From<Command> for Action {
    fn from(c: Command) -> Action {
        match c {
            Command::Validate => Action::Validate,
            Command::CheckHypotheses => Action::CheckHypotheses,
            Command::Simulate => Action::Simulate,
            Command::FitDecay => Action::FitDecay,
            Command::Counterexample => Action::Counterexample,
            Command::Oscillate => Action::Oscillate,
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let spec = ExperimentSpec::resolve(cli.command.into(), cli.flags.over(file))?;
    let done = actions::run(&spec)?;
    println!("{}", done.status.verdict);
    for f in &done.files {
        println!("wrote {}", f.display());
    }
    Ok(done.status.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.to_string().contains("budget")) {
                eprintln!("hint: pass a larger --vertex-budget or a smaller --r-max / --t-max");
            }
            ExitCode::from(1)
        }
    }
}
