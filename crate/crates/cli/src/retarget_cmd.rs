//! `retarget` subcommand: runs one strategy from the registry over a corpus
//! of human motions, writing one humanoid motion per input plus a manifest.
//!
//! Per-sequence failures are isolated: a bad file yields a manifest entry
//! with status "error" while the rest of the corpus completes, so the exit
//! code is 0 whenever the corpus itself was readable and the configuration
//! valid. With `--filter`, sequences whose retargeted motion fails the
//! kinematic check are recorded as "filtered" and not emitted.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use humotion::retarget::mapping::JointMapping;
use humotion::{
    default_registry, evaluate_motion, save_motion, LossBreakdown, MotionSequence,
    RetargetConfig, RetargetRequest, RetargeterRegistry, Skeleton, TaskId, TaskScene,
};

use crate::pipeline::{
    corpus_files, file_label, load_motion_file, load_scene_file, load_skeleton_file,
    resolve_mapping, with_pool, PipelineConfig,
};

#[derive(Args)]
pub struct RetargetArgs {
    /// JSON pipeline config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory of human motion JSON files.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output directory for retargeted motions and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Retarget strategy: copy, optimize, or align-optimize.
    #[arg(long)]
    algo: Option<String>,
    /// Human skeleton JSON file.
    #[arg(long)]
    human_skeleton: Option<PathBuf>,
    /// Humanoid skeleton JSON file.
    #[arg(long)]
    humanoid_skeleton: Option<PathBuf>,
    /// Joint mapping: preset name (unihsi, roam, core4d) or JSON file.
    #[arg(long)]
    mapping: Option<String>,
    /// Task the motions are destined for (SC, SS, LB, LS, T, L); enables the
    /// wrist term for T and L.
    #[arg(long)]
    task: Option<String>,
    /// Optimizer step size.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Optimizer epoch count.
    #[arg(long)]
    epochs: Option<usize>,
    /// Position term weight.
    #[arg(long)]
    lambda_pos: Option<f64>,
    /// Orientation term weight.
    #[arg(long)]
    lambda_ori: Option<f64>,
    /// Acceleration smoothness term weight.
    #[arg(long)]
    lambda_acc: Option<f64>,
    /// Wrist term weight; only valid for tasks T and L.
    #[arg(long)]
    lambda_hand: Option<f64>,
    /// Epochs between loss checkpoints recorded in the manifest.
    #[arg(long)]
    checkpoint_interval: Option<usize>,
    /// Drop retargeted motions that fail the kinematic check (needs --scene).
    #[arg(long)]
    filter: bool,
    /// Task scene JSON used by --filter.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Worker threads for the sequence pool.
    #[arg(long)]
    jobs: Option<usize>,
    /// Optimizer seed, recorded in the manifest (default 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    /// "ok", "filtered", or "error".
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_loss: Option<LossBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

#[derive(Serialize)]
struct Manifest {
    algorithm: String,
    mapping: String,
    seed: u64,
    sequences: Vec<ManifestEntry>,
}

pub fn run(args: RetargetArgs) -> Result<ExitCode> {
    let cfg = PipelineConfig::from_arg(args.config.as_deref())?;

    let input = args
        .input
        .or(cfg.input)
        .context("no corpus directory given (--in)")?;
    let out = args.out.or(cfg.output).context("no output directory given (--out)")?;
    let algo = args.algo.or(cfg.algorithm).unwrap_or_else(|| "copy".into());
    let registry = default_registry();
    if registry.get(&algo).is_none() {
        bail!("unknown algorithm {algo:?} (available: {})", registry.names().join(", "));
    }

    let mut retarget_cfg = RetargetConfig::default();
    if let Some(spec) = args.task.or(cfg.task) {
        let task: TaskId = spec
            .parse()
            .with_context(|| format!("parsing task code {spec:?}"))?;
        retarget_cfg.task = Some(task);
    }
    if let Some(v) = args.learning_rate.or(cfg.learning_rate) {
        retarget_cfg.learning_rate = v;
    }
    if let Some(v) = args.epochs.or(cfg.epochs) {
        retarget_cfg.epochs = v;
    }
    if let Some(v) = args.lambda_pos.or(cfg.lambda_pos) {
        retarget_cfg.lambda_pos = v;
    }
    if let Some(v) = args.lambda_ori.or(cfg.lambda_ori) {
        retarget_cfg.lambda_ori = v;
    }
    if let Some(v) = args.lambda_acc.or(cfg.lambda_acc) {
        retarget_cfg.lambda_acc = v;
    }
    if let Some(v) = args.lambda_hand.or(cfg.lambda_hand) {
        retarget_cfg.lambda_hand = Some(v);
    }
    if let Some(v) = args.checkpoint_interval.or(cfg.checkpoint_interval) {
        retarget_cfg.checkpoint_interval = v;
    }
    retarget_cfg.validate().context("invalid retarget configuration")?;

    let human_path = args
        .human_skeleton
        .or(cfg.human_skeleton)
        .context("no human skeleton given (--human-skeleton)")?;
    let humanoid_path = args
        .humanoid_skeleton
        .or(cfg.humanoid_skeleton)
        .context("no humanoid skeleton given (--humanoid-skeleton)")?;
    let human = load_skeleton_file(&human_path)?;
    let humanoid = load_skeleton_file(&humanoid_path)?;

    let mapping_spec = args
        .mapping
        .or(cfg.mapping)
        .context("no joint mapping given (--mapping)")?;
    let mapping = resolve_mapping(&mapping_spec)?;
    mapping
        .validate(&human, &humanoid)
        .context("invalid joint mapping")?;

    let filter = args.filter || cfg.filter == Some(true);
    let scene = match (filter, args.scene.or(cfg.scene)) {
        (false, _) => None,
        (true, Some(path)) => Some(load_scene_file(&path)?),
        (true, None) => bail!("--filter needs a task scene (--scene)"),
    };

    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let files = corpus_files(&input)?;
    fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    // Workers each own one sequence; collection keeps input order, and all
    // file writes happen on this thread afterwards.
    let results: Vec<(ManifestEntry, Option<MotionSequence>)> =
        with_pool(args.jobs.or(cfg.jobs), || {
            files
                .par_iter()
                .map(|path| {
                    process_sequence(
                        &registry,
                        &algo,
                        &human,
                        &humanoid,
                        &mapping,
                        &retarget_cfg,
                        scene.as_ref(),
                        path,
                    )
                })
                .collect()
        })?;

    let mut sequences = Vec::with_capacity(results.len());
    for (entry, motion) in results {
        if let Some(motion) = motion {
            let target = out.join(&entry.file);
            save_motion(&motion, &target)
                .with_context(|| format!("writing motion {}", target.display()))?;
        }
        sequences.push(entry);
    }

    let manifest = Manifest { algorithm: algo, mapping: mapping_spec, seed, sequences };
    let text = serde_json::to_string_pretty(&manifest).context("encoding manifest")? + "\n";
    let manifest_path = out.join("manifest.json");
    fs::write(&manifest_path, text)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(ExitCode::SUCCESS)
}

enum Processed {
    Emitted(MotionSequence, Option<LossBreakdown>),
    Filtered(Option<LossBreakdown>),
}

#[allow(clippy::too_many_arguments)]
fn process_sequence(
    registry: &RetargeterRegistry,
    algo: &str,
    human: &Skeleton,
    humanoid: &Skeleton,
    mapping: &JointMapping,
    config: &RetargetConfig,
    scene: Option<&TaskScene>,
    path: &std::path::Path,
) -> (ManifestEntry, Option<MotionSequence>) {
    let file = file_label(path);
    let attempt = (|| -> Result<Processed> {
        let human_motion = load_motion_file(path, human)?;
        let request = RetargetRequest {
            human_motion: &human_motion,
            human_skeleton: human,
            humanoid_skeleton: humanoid,
            mapping,
            config,
        };
        let outcome = registry.run(algo, &request)?;
        if let Some(scene) = scene {
            let report = evaluate_motion(scene, &outcome.motion, humanoid, None)?;
            if !report.kinematic_pass {
                return Ok(Processed::Filtered(outcome.final_loss));
            }
        }
        Ok(Processed::Emitted(outcome.motion, outcome.final_loss))
    })();
    match attempt {
        Ok(Processed::Emitted(motion, final_loss)) => (
            ManifestEntry { file, status: "ok", final_loss, message: None },
            Some(motion),
        ),
        Ok(Processed::Filtered(final_loss)) => (
            ManifestEntry {
                file,
                status: "filtered",
                final_loss,
                message: Some("kinematic check failed".into()),
            },
            None,
        ),
        Err(err) => (
            ManifestEntry {
                file,
                status: "error",
                final_loss: None,
                message: Some(format!("{err:#}")),
            },
            None,
        ),
    }
}
