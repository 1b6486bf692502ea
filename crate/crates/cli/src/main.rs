//! Batch driver for the motion toolkit: retarget a corpus onto the humanoid,
//! evaluate task success, rasterize elevation maps, score tracking rewards,
//! and aggregate evaluation reports.
//!
//! Every command is deterministic: fixed inputs produce byte-identical
//! outputs regardless of worker count. Exit codes: 0 success, 1 the
//! evaluation ran but nothing passed, 2 configuration or IO error (also used
//! by argument parsing).

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod elevation_cmd;
mod eval_cmd;
mod pipeline;
mod report_cmd;
mod retarget_cmd;
mod rewards_cmd;

#[derive(Parser)]
#[command(
    name = "humotion",
    version,
    about = "Humanoid motion retargeting and skill evaluation pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Retarget a corpus of human motions onto the humanoid.
    Retarget(retarget_cmd::RetargetArgs),
    /// Evaluate humanoid motions against a task scene.
    Eval(eval_cmd::EvalArgs),
    /// Rasterize depth frames or touch targets into an elevation map.
    Elevation(elevation_cmd::ElevationArgs),
    /// Score per-frame tracking rewards against a reference motion.
    ScoreRewards(rewards_cmd::ScoreRewardsArgs),
    /// Aggregate evaluation CSVs into a summary table.
    Report(report_cmd::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Retarget(args) => retarget_cmd::run(args),
        Command::Eval(args) => eval_cmd::run(args),
        Command::Elevation(args) => elevation_cmd::run(args),
        Command::ScoreRewards(args) => rewards_cmd::run(args),
        Command::Report(args) => report_cmd::run(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
