//! `lmcf`: batch experiments on Lagrangian mean curvature flow solitons.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{barrier, blowdown, density, flow, levelsets, soliton, verify};
use output::{Failure, Output};

#[derive(Parser)]
#[command(
    name = "lmcf",
    version,
    about = "Experiments on Lagrangian mean curvature flow solitons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a planar curve by curve shortening flow.
    FlowCurve(flow::Args),
    /// Build a soliton patch and write it out.
    MakeSoliton(soliton::Args),
    /// Check the soliton identities on a family.
    Verify(verify::Args),
    /// Blow down a family and classify the limits.
    Blowdown(blowdown::Args),
    /// Gaussian density at a list of centers and times.
    Density(density::Args),
    /// Level sets of the Lagrangian angle and the coarea identity.
    Levelsets(levelsets::Args),
    /// Barrier residual and the Laplace integral.
    Barrier(barrier::Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::FlowCurve(_) => "flow-curve",
            Command::MakeSoliton(_) => "make-soliton",
            Command::Verify(_) => "verify",
            Command::Blowdown(_) => "blowdown",
            Command::Density(_) => "density",
            Command::Levelsets(_) => "levelsets",
            Command::Barrier(_) => "barrier",
        }
    }

    fn run(&self) -> Result<(Output, Option<PathBuf>), Failure> {
        match self {
            Command::FlowCurve(a) => flow::run(a),
            Command::MakeSoliton(a) => soliton::run(a),
            Command::Verify(a) => verify::run(a),
            Command::Blowdown(a) => blowdown::run(a),
            Command::Density(a) => density::run(a),
            Command::Levelsets(a) => levelsets::run(a),
            Command::Barrier(a) => barrier::run(a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (out, dir) = match cli.command.run() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("lmcf {}: {e}", cli.command.name());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let dir = dir.unwrap_or_else(|| PathBuf::from("lmcf-out").join(cli.command.name()));
    match out.write(&dir) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("lmcf {}: cannot write {}: {e}", cli.command.name(), dir.display());
            ExitCode::from(1)
        }
    }
}
