//! `elevation` subcommand: rasterizes depth frames (or a pair of touch
//! targets) into an egocentric elevation map, exported as a PGM preview plus
//! raw little-endian f32 cell values.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use nalgebra::Vector3;

use humotion::{
    depth_to_points, load_depth, rasterize_elevation, target_point_map, CameraRig, ElevationMap,
    RigidTransform, Rotation, DEFAULT_CELL_SIZE, GRID_SIZE,
};

/// Hand-entered quaternions are normalized; this is how far from unit length
/// they may be.
const QUAT_TOLERANCE: f64 = 1e-3;

#[derive(Args)]
pub struct ElevationArgs {
    /// Raw depth frame (little-endian f32); repeatable, paired with --meta.
    #[arg(long)]
    depth: Vec<PathBuf>,
    /// JSON sidecar with width, height, and camera id; one per --depth.
    #[arg(long)]
    meta: Vec<PathBuf>,
    /// Camera rig preset the sidecar camera ids resolve against.
    #[arg(long, default_value = "pelvis")]
    rig: String,
    /// Rig root position in the world frame.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    root_position: Option<Vec<f64>>,
    /// Rig root orientation quaternion.
    #[arg(long, num_args = 4, value_names = ["W", "X", "Y", "Z"], allow_negative_numbers = true)]
    root_orientation: Option<Vec<f64>>,
    /// Grid cell edge, meters.
    #[arg(long)]
    cell_size: Option<f64>,
    /// Grid side length, cells.
    #[arg(long)]
    grid_size: Option<usize>,
    /// Two touch targets "x,y,z;x,y,z" rendered on the fine target grid
    /// instead of depth input.
    #[arg(long, conflicts_with_all = [
        "depth", "meta", "rig", "root_position", "root_orientation", "cell_size", "grid_size",
    ])]
    targets: Option<String>,
    /// Output prefix; writes PREFIX.pgm and PREFIX.f32.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: ElevationArgs) -> Result<ExitCode> {
    let map = if let Some(spec) = &args.targets {
        let points = parse_targets(spec)?;
        target_point_map(&points)
    } else {
        depth_map(&args)?
    };
    write_map(&map, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn depth_map(args: &ElevationArgs) -> Result<ElevationMap> {
    if args.depth.is_empty() {
        bail!("no input given (--depth/--meta or --targets)");
    }
    if args.depth.len() != args.meta.len() {
        bail!(
            "{} depth frames but {} sidecars; pass one --meta per --depth",
            args.depth.len(),
            args.meta.len()
        );
    }
    let rig = match args.rig.as_str() {
        "pelvis" => CameraRig::pelvis(),
        "touch" => CameraRig::touch(),
        other => bail!("unknown rig {other:?} (available: pelvis, touch)"),
    };
    let root = root_transform(args)?;

    let mut points = Vec::new();
    for (raw, meta) in args.depth.iter().zip(&args.meta) {
        let image = load_depth(raw, meta)
            .with_context(|| format!("loading depth frame {}", raw.display()))?;
        let camera = rig.camera(&image.camera_id).with_context(|| {
            format!("camera {:?} is not part of the {} rig", image.camera_id, args.rig)
        })?;
        points.extend(
            depth_to_points(&image, camera, &root)
                .with_context(|| format!("back-projecting {}", raw.display()))?,
        );
    }
    let cell_size = args.cell_size.unwrap_or(DEFAULT_CELL_SIZE);
    let grid_size = args.grid_size.unwrap_or(GRID_SIZE);
    rasterize_elevation(&points, cell_size, grid_size).context("rasterizing elevation map")
}

fn root_transform(args: &ElevationArgs) -> Result<RigidTransform> {
    let mut root = RigidTransform::identity();
    if let Some(p) = &args.root_position {
        root.position = Vector3::new(p[0], p[1], p[2]);
    }
    if let Some(q) = &args.root_orientation {
        root.orientation = Rotation::from_wxyz(q[0], q[1], q[2], q[3], QUAT_TOLERANCE)
            .context("parsing --root-orientation")?;
    }
    Ok(root)
}

fn parse_targets(spec: &str) -> Result<[Vector3<f64>; 2]> {
    let points: Vec<Vector3<f64>> = spec
        .split(';')
        .map(parse_point)
        .collect::<Result<_>>()
        .with_context(|| format!("parsing targets {spec:?}"))?;
    let [left, right] = points[..] else {
        bail!("expected two targets \"x,y,z;x,y,z\", got {spec:?}");
    };
    Ok([left, right])
}

fn parse_point(text: &str) -> Result<Vector3<f64>> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad coordinate {p:?}")))
        .collect::<Result<_>>()?;
    let [x, y, z] = parts[..] else {
        bail!("expected three coordinates, got {text:?}");
    };
    Ok(Vector3::new(x, y, z))
}

fn write_map(map: &ElevationMap, prefix: &std::path::Path) -> Result<()> {
    if let Some(parent) = prefix.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    let pgm = prefix.with_extension("pgm");
    map.write_pgm(&pgm)
        .with_context(|| format!("writing {}", pgm.display()))?;
    let raw = prefix.with_extension("f32");
    map.write_raw(&raw)
        .with_context(|| format!("writing {}", raw.display()))?;
    Ok(())
}
