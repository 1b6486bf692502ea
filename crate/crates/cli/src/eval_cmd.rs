//! `eval` subcommand: scores every motion in a corpus against one task scene
//! and writes a CSV report.
//!
//! One row per motion plus a trailing summary row carrying the kinematic and
//! energy-averaged success rates. A motion with neither a torque channel nor
//! actions plus gains gets `no-energy` in its e_max column and fails the
//! physical check at every budget. Exit code 1 means the evaluation ran but
//! nothing passed; 2 means the corpus or its assets could not be read.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use humotion::{aggregate, evaluate_motion, EvalReport};

use crate::pipeline::{
    corpus_files, file_stem, load_gains_file, load_motion_file, load_scene_file,
    load_skeleton_file, with_pool, PipelineConfig,
};

pub const REPORT_HEADER: &str =
    "motion_id,kinematic,e_max,pass_1e6,pass_2e6,pass_4e6,pass_8e6,success_avg";

#[derive(Args)]
pub struct EvalArgs {
    /// JSON pipeline config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory of humanoid motion JSON files.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Task scene JSON file.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Humanoid skeleton JSON file.
    #[arg(long)]
    skeleton: Option<PathBuf>,
    /// PD gains JSON used to derive torques from action channels.
    #[arg(long)]
    gains: Option<PathBuf>,
    /// Worker threads for the sequence pool.
    #[arg(long)]
    jobs: Option<usize>,
}

pub fn run(args: EvalArgs) -> Result<ExitCode> {
    let cfg = PipelineConfig::from_arg(args.config.as_deref())?;

    let input = args
        .input
        .or(cfg.input)
        .context("no corpus directory given (--in)")?;
    let out = args.out.or(cfg.output).context("no output CSV given (--out)")?;
    let scene_path = args.scene.or(cfg.scene).context("no task scene given (--scene)")?;
    let skeleton_path = args
        .skeleton
        .or(cfg.humanoid_skeleton)
        .context("no skeleton given (--skeleton)")?;

    let scene = load_scene_file(&scene_path)?;
    let skeleton = load_skeleton_file(&skeleton_path)?;
    let gains = match args.gains.or(cfg.gains) {
        Some(path) => Some(load_gains_file(&path)?),
        None => None,
    };

    let files = corpus_files(&input)?;
    if files.is_empty() {
        bail!("corpus directory {} contains no motion files", input.display());
    }

    let results: Vec<Result<(String, EvalReport)>> = with_pool(args.jobs.or(cfg.jobs), || {
        files
            .par_iter()
            .map(|path| {
                let motion = load_motion_file(path, &skeleton)?;
                let report = evaluate_motion(&scene, &motion, &skeleton, gains.as_ref())
                    .with_context(|| format!("evaluating {}", path.display()))?;
                Ok((file_stem(path), report))
            })
            .collect()
    })?;

    let mut reports = Vec::with_capacity(results.len());
    let mut csv = String::from(REPORT_HEADER);
    csv.push('\n');
    for result in results {
        let (id, report) = result?;
        csv.push_str(&report_row(&id, &report));
        csv.push('\n');
        reports.push(report);
    }

    let (kinematic_rate, energy_rate) = aggregate(&reports)?;
    csv.push_str(&format!("summary,{kinematic_rate},,,,,,{energy_rate}\n"));
    crate::pipeline::write_output(&out, &csv)?;

    if kinematic_rate == 0.0 && energy_rate == 0.0 {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn report_row(id: &str, report: &EvalReport) -> String {
    let e_max = report
        .peak_energy()
        .map_or_else(|| "no-energy".to_string(), |e| e.to_string());
    let success_avg =
        report.success_per_lambda.iter().filter(|s| **s).count() as f64 / 4.0;
    let p = report.physical_pass_per_lambda;
    format!(
        "{id},{},{e_max},{},{},{},{},{success_avg}",
        report.kinematic_pass, p[0], p[1], p[2], p[3]
    )
}
