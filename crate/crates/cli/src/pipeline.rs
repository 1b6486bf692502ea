//! Plumbing shared by the subcommands: the JSON pipeline config that
//! command-line flags override field by field, corpus listing, worker-pool
//! setup, and file loaders that attach the offending path to errors.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use humotion::retarget::mapping::{preset_mapping, JointMapping};
use humotion::{
    load_gains, load_motion, load_scene, load_skeleton, MotionSequence, PdGains, Skeleton,
    TaskScene,
};

/// Batch settings for the corpus-driven subcommands. Every field is optional;
/// a flag with the same name takes precedence, and whatever is still unset
/// falls back to the subcommand's defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Corpus root: a directory of motion JSON files (or, for `report`,
    /// of evaluation CSVs).
    pub input: Option<PathBuf>,
    /// Output directory or file, depending on the subcommand.
    pub output: Option<PathBuf>,
    pub human_skeleton: Option<PathBuf>,
    pub humanoid_skeleton: Option<PathBuf>,
    /// Mapping preset name or path to a mapping JSON file.
    pub mapping: Option<String>,
    /// Retarget strategy name; see `humotion retarget --help` for the list.
    pub algorithm: Option<String>,
    pub scene: Option<PathBuf>,
    pub gains: Option<PathBuf>,
    /// Task code (SC, SS, LB, LS, T, L).
    pub task: Option<String>,
    /// Optimizer seed, recorded in the retarget manifest. Default 0.
    pub seed: Option<u64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub lambda_pos: Option<f64>,
    pub lambda_ori: Option<f64>,
    pub lambda_acc: Option<f64>,
    pub lambda_hand: Option<f64>,
    pub checkpoint_interval: Option<usize>,
    /// Drop retargeted motions that fail the kinematic check.
    pub filter: Option<bool>,
    /// Worker threads for corpus processing.
    pub jobs: Option<usize>,
}

impl PipelineConfig {
    /// Loads the config file when one was given, otherwise an empty config.
    pub fn from_arg(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Motion JSON files directly inside `dir`, sorted by name so corpus order
/// (and with it every downstream artifact) is deterministic. The retarget
/// manifest is skipped so a retarget output directory works as a corpus.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .with_context(|| format!("reading corpus directory {}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .with_context(|| format!("reading corpus directory {}", dir.display()))?
            .path();
        if path.file_name().is_some_and(|n| n == "manifest.json") {
            continue;
        }
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// File name of a corpus entry, used as its id in manifests and reports.
pub fn file_label(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

/// File stem of a corpus entry (the label without the .json suffix).
pub fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

/// Runs `body` on a dedicated pool of `jobs` threads, or inline on the
/// default pool when no count was requested. Results are collected in input
/// order either way, so the thread count never changes any output.
pub fn with_pool<R: Send>(jobs: Option<usize>, body: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        None => Ok(body()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building worker pool")?;
            Ok(pool.install(body))
        }
    }
}

/// Resolves a mapping given either a preset name or a path to a JSON file
/// with a `pairs` array.
pub fn resolve_mapping(spec: &str) -> Result<JointMapping> {
    if let Some(mapping) = preset_mapping(spec) {
        return Ok(mapping);
    }
    let text = fs::read_to_string(spec)
        .with_context(|| format!("mapping {spec:?} is neither a preset nor a readable file"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing mapping file {spec}"))
}

pub fn load_skeleton_file(path: &Path) -> Result<Skeleton> {
    load_skeleton(path).with_context(|| format!("loading skeleton {}", path.display()))
}

pub fn load_scene_file(path: &Path) -> Result<TaskScene> {
    load_scene(path).with_context(|| format!("loading scene {}", path.display()))
}

pub fn load_gains_file(path: &Path) -> Result<PdGains> {
    load_gains(path).with_context(|| format!("loading gains {}", path.display()))
}

pub fn load_motion_file(path: &Path, skeleton: &Skeleton) -> Result<MotionSequence> {
    load_motion(path, skeleton).with_context(|| format!("loading motion {}", path.display()))
}

/// Writes a text artifact, creating parent directories as needed.
pub fn write_output(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
