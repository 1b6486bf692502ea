//! `report` subcommand: folds one or more evaluation CSVs into a summary
//! table with one row per report plus an overall row.
//!
//! Rates are recomputed from the per-motion rows, so per-report summary rows
//! are ignored and reports of different sizes aggregate by motion count.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;

use crate::eval_cmd::REPORT_HEADER;
use crate::pipeline::{file_stem, write_output, PipelineConfig};

#[derive(Args)]
pub struct ReportArgs {
    /// JSON pipeline config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluation CSV files or directories of them; repeatable.
    #[arg(long = "in")]
    inputs: Vec<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct ReportStats {
    id: String,
    motions: usize,
    kinematic_hits: usize,
    success_sum: f64,
}

pub fn run(args: ReportArgs) -> Result<ExitCode> {
    let cfg = PipelineConfig::from_arg(args.config.as_deref())?;
    let out = args.out.or(cfg.output).context("no output CSV given (--out)")?;

    let mut inputs = args.inputs;
    if inputs.is_empty() {
        if let Some(input) = cfg.input {
            inputs.push(input);
        }
    }
    if inputs.is_empty() {
        bail!("no evaluation CSVs given (--in)");
    }

    let mut files = Vec::new();
    for input in &inputs {
        if input.is_dir() {
            let mut found = Vec::new();
            for entry in fs::read_dir(input)
                .with_context(|| format!("reading report directory {}", input.display()))?
            {
                let path = entry?.path();
                if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
                    found.push(path);
                }
            }
            found.sort();
            if found.is_empty() {
                bail!("report directory {} contains no CSV files", input.display());
            }
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }

    let stats: Vec<ReportStats> =
        files.iter().map(|path| parse_report(path)).collect::<Result<_>>()?;

    let mut csv = String::from("report_id,motions,kinematic_rate,energy_avg_rate\n");
    let mut motions = 0usize;
    let mut kinematic_hits = 0usize;
    let mut success_sum = 0.0f64;
    for s in &stats {
        let kin = s.kinematic_hits as f64 / s.motions as f64;
        let energy = s.success_sum / s.motions as f64;
        csv.push_str(&format!("{},{},{kin},{energy}\n", s.id, s.motions));
        motions += s.motions;
        kinematic_hits += s.kinematic_hits;
        success_sum += s.success_sum;
    }
    let kin_rate = kinematic_hits as f64 / motions as f64;
    let energy_rate = success_sum / motions as f64;
    csv.push_str(&format!("overall,{motions},{kin_rate},{energy_rate}\n"));
    write_output(&out, &csv)?;

    if kin_rate == 0.0 && energy_rate == 0.0 {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn parse_report(path: &Path) -> Result<ReportStats> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading report {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        bail!("{} is not an evaluation CSV (unexpected header)", path.display());
    }
    let mut stats = ReportStats {
        id: file_stem(path),
        motions: 0,
        kinematic_hits: 0,
        success_sum: 0.0,
    };
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!("{}: malformed row {line:?}", path.display());
        }
        if fields[0] == "summary" {
            break;
        }
        let kinematic: bool = fields[1]
            .parse()
            .with_context(|| format!("{}: bad kinematic flag in {line:?}", path.display()))?;
        let success: f64 = fields[7]
            .parse()
            .with_context(|| format!("{}: bad success average in {line:?}", path.display()))?;
        stats.motions += 1;
        stats.kinematic_hits += kinematic as usize;
        stats.success_sum += success;
    }
    if stats.motions == 0 {
        bail!("{} contains no motion rows", path.display());
    }
    Ok(stats)
}
