//! Egocentric perception: pelvis-mounted depth camera rigs, depth-image
//! back-projection into point clouds, and top-down elevation-map
//! rasterization around the root, including the touch-target variant.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::Rotation;
use crate::skeleton::RigidTransform;

/// Points farther than this along the camera's principal axis are dropped.
pub const DEPTH_KEEP_LIMIT: f64 = 6.0;
/// Square grid edge length in cells.
pub const GRID_SIZE: usize = 128;
/// Default elevation cell edge, meters.
pub const DEFAULT_CELL_SIZE: f64 = 0.04;
/// Finer cell edge used by the touch-target map, meters.
pub const TARGET_CELL_SIZE: f64 = 0.01;
/// Grayscale heights are clamped to this band before export, meters.
pub const EXPORT_HEIGHT_RANGE: (f64, f64) = (-1.0, 2.0);

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("camera field of view must lie in (0, 180) degrees")]
    BadFov,
    #[error("camera resolution must be positive")]
    BadResolution,
    #[error("grid needs a positive size and cell size")]
    BadGrid,
    #[error("image is {got_width}x{got_height} but the camera expects {want_width}x{want_height}")]
    ResolutionMismatch {
        got_width: usize,
        got_height: usize,
        want_width: usize,
        want_height: usize,
    },
    #[error("depth buffer holds {got} values, {expected} expected")]
    DataLength { expected: usize, got: usize },
    #[error("reading depth file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing depth sidecar: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Pinhole depth camera with equal focal lengths on both axes, posed
/// rigidly relative to the root (pelvis) frame. The camera looks along its
/// +x axis with +y left and +z up; pixel (0, 0) is the top-left corner and
/// samples land on pixel centers.
#[derive(Debug, Clone)]
pub struct Camera {
    pub id: String,
    /// Columns.
    pub width: usize,
    /// Rows.
    pub height: usize,
    /// Horizontal field of view, radians.
    pub hfov: f64,
    /// Camera frame relative to the root frame.
    pub mount: RigidTransform,
}

impl Camera {
    pub fn new(
        id: impl Into<String>,
        width: usize,
        height: usize,
        hfov: f64,
        mount: RigidTransform,
    ) -> Result<Camera, PerceptionError> {
        if width == 0 || height == 0 {
            return Err(PerceptionError::BadResolution);
        }
        if !(hfov > 0.0 && hfov < std::f64::consts::PI) {
            return Err(PerceptionError::BadFov);
        }
        Ok(Camera { id: id.into(), width, height, hfov, mount })
    }

    /// Focal length in pixels, shared by both axes; the vertical field of
    /// view follows from it and the row count.
    pub fn focal_length(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.hfov / 2.0).tan()
    }

    fn principal_point(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Camera-frame point for pixel (u, v) at principal-axis depth d.
    pub fn backproject_pixel(&self, u: usize, v: usize, d: f64) -> Vector3<f64> {
        let f = self.focal_length();
        let (cx, cy) = self.principal_point();
        Vector3::new(
            d,
            -(u as f64 + 0.5 - cx) * d / f,
            -(v as f64 + 0.5 - cy) * d / f,
        )
    }

    /// Continuous pixel coordinates hit by a camera-frame point, or None
    /// behind the camera. A point from `backproject_pixel(u, v, d)` maps
    /// back to (u + 0.5, v + 0.5).
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.x <= 0.0 {
            return None;
        }
        let f = self.focal_length();
        let (cx, cy) = self.principal_point();
        Some((cx - f * p.y / p.x, cy - f * p.z / p.x))
    }
}

/// A set of depth cameras sharing one carrier frame.
#[derive(Debug, Clone)]
pub struct CameraRig {
    pub cameras: Vec<Camera>,
}

const PRESET_WIDTH: usize = 480;
const PRESET_HEIGHT: usize = 360;
const PRESET_HFOV_DEG: f64 = 120.0;

fn preset_camera(id: &str, position: Vector3<f64>, yaw_deg: f64, pitch_deg: f64) -> Camera {
    let yaw = Rotation::from_axis_angle(&Vector3::z(), yaw_deg.to_radians());
    let pitch = Rotation::from_axis_angle(&Vector3::y(), pitch_deg.to_radians());
    Camera::new(
        id,
        PRESET_WIDTH,
        PRESET_HEIGHT,
        PRESET_HFOV_DEG.to_radians(),
        RigidTransform::new(position, yaw.compose(&pitch)),
    )
    .expect("preset parameters are valid")
}

impl CameraRig {
    /// Four cameras at the pelvis covering the right-front, left-front,
    /// left-back, and right-back quadrants, each pitched 35 degrees down.
    pub fn pelvis() -> CameraRig {
        let origin = Vector3::zeros();
        CameraRig {
            cameras: vec![
                preset_camera("right_front", origin, -45.0, 35.0),
                preset_camera("left_front", origin, 45.0, 35.0),
                preset_camera("left_back", origin, 135.0, 35.0),
                preset_camera("right_back", origin, -135.0, 35.0),
            ],
        }
    }

    /// Single camera 0.55 m above the pelvis pitched 55 degrees down,
    /// used when mapping touch targets.
    pub fn touch() -> CameraRig {
        CameraRig {
            cameras: vec![preset_camera("top", Vector3::new(0.0, 0.0, 0.55), 0.0, 55.0)],
        }
    }

    pub fn camera(&self, id: &str) -> Option<&Camera> {
        self.cameras.iter().find(|c| c.id == id)
    }
}

/// Row-major single-channel depth image, meters.
#[derive(Debug, Clone)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub camera_id: String,
    pub data: Vec<f32>,
}

impl DepthImage {
    pub fn new(
        width: usize,
        height: usize,
        camera_id: impl Into<String>,
        data: Vec<f32>,
    ) -> Result<DepthImage, PerceptionError> {
        if data.len() != width * height {
            return Err(PerceptionError::DataLength { expected: width * height, got: data.len() });
        }
        Ok(DepthImage { width, height, camera_id: camera_id.into(), data })
    }

    pub fn at(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }
}

#[derive(Serialize, Deserialize)]
struct DepthMeta {
    width: usize,
    height: usize,
    camera_id: String,
}

/// Reads a raw little-endian f32 depth buffer described by a JSON sidecar
/// `{width, height, camera_id}`.
pub fn load_depth(
    raw_path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<DepthImage, PerceptionError> {
    let meta: DepthMeta = serde_json::from_str(&std::fs::read_to_string(meta_path)?)?;
    let bytes = std::fs::read(raw_path)?;
    if bytes.len() != meta.width * meta.height * 4 {
        return Err(PerceptionError::DataLength {
            expected: meta.width * meta.height,
            got: bytes.len() / 4,
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    DepthImage::new(meta.width, meta.height, meta.camera_id, data)
}

/// Writes the raw buffer and its JSON sidecar next to each other.
pub fn save_depth(
    image: &DepthImage,
    raw_path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<(), PerceptionError> {
    let mut bytes = Vec::with_capacity(image.data.len() * 4);
    for d in &image.data {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    std::fs::write(raw_path, bytes)?;
    let meta = DepthMeta {
        width: image.width,
        height: image.height,
        camera_id: image.camera_id.clone(),
    };
    std::fs::write(meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Back-projects a depth image into camera-frame points. Pixels deeper
/// than the 6 m keep limit are discarded, as are non-positive and
/// non-finite readings (sensors report those for missing returns).
pub fn backproject(image: &DepthImage, camera: &Camera) -> Result<Vec<Vector3<f64>>, PerceptionError> {
    if image.width != camera.width || image.height != camera.height {
        return Err(PerceptionError::ResolutionMismatch {
            got_width: image.width,
            got_height: image.height,
            want_width: camera.width,
            want_height: camera.height,
        });
    }
    let mut points = Vec::new();
    for v in 0..image.height {
        for u in 0..image.width {
            let d = image.at(u, v) as f64;
            if !d.is_finite() || d <= 0.0 || d > DEPTH_KEEP_LIMIT {
                continue;
            }
            points.push(camera.backproject_pixel(u, v, d));
        }
    }
    Ok(points)
}

/// Back-projects a depth image and expresses the points in the root frame.
/// The camera sits at `root ∘ mount` in the world; points go to the world
/// through that pose and come back through the root's inverse, so for a
/// rig carried by the root itself the root pose cancels up to rounding.
pub fn depth_to_points(
    image: &DepthImage,
    camera: &Camera,
    root: &RigidTransform,
) -> Result<Vec<Vector3<f64>>, PerceptionError> {
    let camera_in_world = root.compose(&camera.mount);
    let world_to_root = root.inverse();
    Ok(backproject(image, camera)?
        .into_iter()
        .map(|p| world_to_root.transform_point(&camera_in_world.transform_point(&p)))
        .collect())
}

/// Top-down height grid centered on the root. Row index grows along root
/// −x (the robot faces decreasing rows), column index along root +y, and
/// cell (size/2, size/2) contains the origin. Populated cells hold the
/// maximum z among the points that landed in them.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationMap {
    size: usize,
    cell_size: f64,
    cells: Vec<Option<f64>>,
}

impl ElevationMap {
    pub fn new(size: usize, cell_size: f64) -> Result<ElevationMap, PerceptionError> {
        if size == 0 || !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(PerceptionError::BadGrid);
        }
        Ok(ElevationMap { size, cell_size, cells: vec![None; size * size] })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.size + col]
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    pub fn populated(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Grid cell containing the root-frame ground position (x, y), or None
    /// outside the extent.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let half = (self.size / 2) as f64;
        let row = half + (-x / self.cell_size).floor();
        let col = half + (y / self.cell_size).floor();
        let max = self.size as f64;
        if row >= 0.0 && row < max && col >= 0.0 && col < max {
            Some((row as usize, col as usize))
        } else {
            None
        }
    }

    /// Folds one point in, keeping the per-cell maximum height.
    pub fn insert(&mut self, point: &Vector3<f64>) {
        if let Some((row, col)) = self.cell_of(point.x, point.y) {
            let cell = &mut self.cells[row * self.size + col];
            match cell {
                Some(h) if *h >= point.z => {}
                _ => *cell = Some(point.z),
            }
        }
    }

    /// 8-bit grayscale export: empty cells are 0; heights clamp to the
    /// export band and map linearly onto [1, 255].
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.size, self.size).into_bytes();
        let (lo, hi) = EXPORT_HEIGHT_RANGE;
        out.extend(self.cells.iter().map(|cell| match cell {
            None => 0u8,
            Some(h) => {
                let clamped = h.clamp(lo, hi);
                1 + ((clamped - lo) / (hi - lo) * 254.0).round() as u8
            }
        }));
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<(), PerceptionError> {
        Ok(std::fs::write(path, self.to_pgm_bytes())?)
    }

    /// Raw little-endian f32 cell values, row-major, NaN for empty cells.
    pub fn to_raw_f32_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.cells.len() * 4);
        for cell in &self.cells {
            let v = cell.map(|h| h as f32).unwrap_or(f32::NAN);
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn write_raw(&self, path: impl AsRef<Path>) -> Result<(), PerceptionError> {
        Ok(std::fs::write(path, self.to_raw_f32_bytes())?)
    }
}

/// Rasterizes root-frame points into a height grid, keeping the per-cell
/// maximum and discarding points outside the extent. Points are assumed
/// finite.
pub fn rasterize_elevation(
    points: &[Vector3<f64>],
    cell_size: f64,
    size: usize,
) -> Result<ElevationMap, PerceptionError> {
    let mut map = ElevationMap::new(size, cell_size)?;
    for p in points {
        map.insert(p);
    }
    Ok(map)
}

/// Sparse touch-target map on the fine grid: everything empty except the
/// cells holding the two targets' heights. Coincident targets keep the
/// higher one; targets outside the extent leave no mark.
pub fn target_point_map(targets: &[Vector3<f64>; 2]) -> ElevationMap {
    let mut map = ElevationMap::new(GRID_SIZE, TARGET_CELL_SIZE).expect("constants are valid");
    for t in targets {
        map.insert(t);
    }
    map
}
