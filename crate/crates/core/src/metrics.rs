//! Task success metrics: per-task kinematic checks, the energy-based
//! physical check swept over four budgets, PD torque estimation, and
//! success-rate aggregation.

use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{derive_kinematics, MotionError, MotionSequence};
use crate::rotation::Rotation;
use crate::skeleton::{forward_kinematics, RigidTransform, Skeleton, SkeletonError};
use crate::task::TaskId;

/// Energy budgets for the physical check, in ascending order.
pub const LAMBDA_P: [f64; 4] = [1e6, 2e6, 4e6, 8e6];

/// Pelvis height band above the seat for the sitting tasks (meters).
pub const SIT_HEIGHT_BAND: f64 = 0.27;
/// Pelvis height band above the surface for the lying tasks (meters).
pub const LIE_HEIGHT_BAND: f64 = 0.4;
/// Wrist proximity radius for touch and lift checks (meters).
pub const WRIST_RADIUS: f64 = 0.1;
/// Default minimum lift above the box's initial height (meters).
pub const DEFAULT_LIFT_HEIGHT: f64 = 0.2;
/// Hold duration for the sit/lie checks (seconds).
pub const SIT_LIE_HOLD: f64 = 0.3;
/// Hold duration for the touch check (seconds).
pub const TOUCH_HOLD: f64 = 1.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reading scene file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing scene file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scene schema: {0}")]
    SceneSchema(String),
    #[error("footprint polygon: {0}")]
    BadPolygon(String),
    #[error("torque and velocity shapes differ: {0}")]
    LengthMismatch(String),
    #[error("energy series is empty")]
    EmptySeries,
    #[error("no reports to aggregate")]
    EmptyReports,
    #[error("task L requires an object channel in the motion")]
    MissingObjectChannel,
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

/// Axis-aligned box in its own frame, posed rigidly in the world.
#[derive(Debug, Clone)]
pub struct OrientedBox {
    pub pose: RigidTransform,
    pub half_extents: Vector3<f64>,
}

impl OrientedBox {
    /// Euclidean distance from a world point to the box surface; zero for
    /// points inside.
    pub fn surface_distance(&self, point: &Vector3<f64>) -> f64 {
        let local = self.pose.inverse().transform_point(point);
        let excess = Vector3::new(
            (local.x.abs() - self.half_extents.x).max(0.0),
            (local.y.abs() - self.half_extents.y).max(0.0),
            (local.z.abs() - self.half_extents.z).max(0.0),
        );
        excess.norm()
    }
}

/// Scene description for one task instance. Which fields must be present
/// depends on the task; `validate` enforces that.
#[derive(Debug, Clone)]
pub struct TaskScene {
    pub task: TaskId,
    /// Convex bird's-eye footprint of the furniture, counterclockwise.
    pub footprint: Vec<Vector2<f64>>,
    pub seat_height: Option<f64>,
    pub sofa_total_height: Option<f64>,
    /// Touch targets, left then right.
    pub target_points: Option<[Vector3<f64>; 2]>,
    /// Box shape for the lift task; its per-frame pose comes from the
    /// motion's object channel, this pose being the layout's initial one.
    pub box_shape: Option<OrientedBox>,
    pub target_lift_height: Option<f64>,
    pub time_limit: f64,
}

fn cross2(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn polygon_signed_area(poly: &[Vector2<f64>]) -> f64 {
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

/// Validates convexity and non-degeneracy, returning the polygon with
/// counterclockwise orientation.
pub fn validate_footprint(poly: &[Vector2<f64>]) -> Result<Vec<Vector2<f64>>, MetricsError> {
    if poly.len() < 3 {
        return Err(MetricsError::BadPolygon(format!(
            "needs at least 3 vertices, got {}",
            poly.len()
        )));
    }
    if poly.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(MetricsError::BadPolygon("non-finite vertex".into()));
    }
    let area = polygon_signed_area(poly);
    if area.abs() <= 1e-12 {
        return Err(MetricsError::BadPolygon("degenerate (zero area)".into()));
    }
    let mut ccw: Vec<Vector2<f64>> = poly.to_vec();
    if area < 0.0 {
        ccw.reverse();
    }
    let n = ccw.len();
    for i in 0..n {
        let c = cross2(&ccw[i], &ccw[(i + 1) % n], &ccw[(i + 2) % n]);
        if c < 0.0 {
            return Err(MetricsError::BadPolygon("not convex".into()));
        }
    }
    Ok(ccw)
}

/// Point-in-convex-polygon test; the boundary counts as inside. The polygon
/// must be counterclockwise (as `validate_footprint` returns).
pub fn point_in_footprint(poly: &[Vector2<f64>], p: &Vector2<f64>) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| cross2(&poly[i], &poly[(i + 1) % n], p) >= 0.0)
}

impl TaskScene {
    /// Checks that every field the task needs is present and well-formed,
    /// normalizing the footprint to counterclockwise order.
    pub fn validate(&mut self) -> Result<(), MetricsError> {
        if !(self.time_limit > 0.0) {
            return Err(MetricsError::SceneSchema("time_limit must be positive".into()));
        }
        let needs_footprint = matches!(
            self.task,
            TaskId::SitChair | TaskId::SitSofa | TaskId::LieBed | TaskId::LieSofa
        );
        if needs_footprint || !self.footprint.is_empty() {
            if self.footprint.is_empty() {
                return Err(MetricsError::SceneSchema(format!(
                    "task {} requires a footprint polygon",
                    self.task
                )));
            }
            self.footprint = validate_footprint(&self.footprint)?;
        }
        if needs_footprint {
            match self.seat_height {
                Some(h) if h >= 0.0 && h.is_finite() => {}
                Some(h) => {
                    return Err(MetricsError::SceneSchema(format!(
                        "seat_height must be finite and non-negative, got {h}"
                    )))
                }
                None => {
                    return Err(MetricsError::SceneSchema(format!(
                        "task {} requires seat_height",
                        self.task
                    )))
                }
            }
        }
        if self.task == TaskId::LieSofa {
            match self.sofa_total_height {
                Some(h) if h > 0.0 && h.is_finite() => {}
                _ => {
                    return Err(MetricsError::SceneSchema(
                        "task LS requires a positive sofa_height".into(),
                    ))
                }
            }
        }
        if self.task == TaskId::Touch && self.target_points.is_none() {
            return Err(MetricsError::SceneSchema("task T requires targets".into()));
        }
        if self.task == TaskId::Lift {
            let Some(b) = &self.box_shape else {
                return Err(MetricsError::SceneSchema("task L requires a box".into()));
            };
            if !(b.half_extents.iter().all(|h| h.is_finite() && *h > 0.0)) {
                return Err(MetricsError::SceneSchema(
                    "box half_extents must be positive".into(),
                ));
            }
            if let Some(lift) = self.target_lift_height {
                if !(lift.is_finite() && lift > 0.0) {
                    return Err(MetricsError::SceneSchema(
                        "lift_height must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn lift_height(&self) -> f64 {
        self.target_lift_height.unwrap_or(DEFAULT_LIFT_HEIGHT)
    }
}

#[derive(Serialize, Deserialize)]
struct BoxFile {
    center: [f64; 3],
    #[serde(default)]
    quat: Option<[f64; 4]>,
    half_extents: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    task: TaskId,
    #[serde(default)]
    footprint: Vec<[f64; 2]>,
    #[serde(default)]
    seat_height: Option<f64>,
    #[serde(default)]
    sofa_height: Option<f64>,
    #[serde(default)]
    targets: Option<[[f64; 3]; 2]>,
    #[serde(default, rename = "box")]
    box_shape: Option<BoxFile>,
    #[serde(default)]
    lift_height: Option<f64>,
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<TaskScene, MetricsError> {
    let text = std::fs::read_to_string(path)?;
    scene_from_json(&text)
}

pub fn scene_from_json(text: &str) -> Result<TaskScene, MetricsError> {
    let file: SceneFile = serde_json::from_str(text)?;
    let box_shape = match file.box_shape {
        None => None,
        Some(b) => {
            let orientation = match b.quat {
                None => Rotation::identity(),
                Some([w, x, y, z]) => Rotation::from_wxyz(w, x, y, z, 1e-6)
                    .map_err(|e| MetricsError::SceneSchema(format!("box quat: {e}")))?,
            };
            Some(OrientedBox {
                pose: RigidTransform::new(Vector3::from(b.center), orientation),
                half_extents: Vector3::from(b.half_extents),
            })
        }
    };
    let mut scene = TaskScene {
        task: file.task,
        footprint: file.footprint.iter().map(|&[x, y]| Vector2::new(x, y)).collect(),
        seat_height: file.seat_height,
        sofa_total_height: file.sofa_height,
        target_points: file
            .targets
            .map(|[l, r]| [Vector3::from(l), Vector3::from(r)]),
        box_shape,
        target_lift_height: file.lift_height,
        time_limit: file.task.time_limit(),
    };
    scene.validate()?;
    Ok(scene)
}

/// Result of the kinematic check: whether it passed and the timestamp of
/// the first frame of the first satisfying window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicOutcome {
    pub pass: bool,
    pub satisfied_at: Option<f64>,
}

/// Number of leading frames inside the task time limit.
fn frames_within_limit(motion: &MotionSequence, limit: f64) -> usize {
    let by_time = (limit * motion.fps).floor() as usize + 1;
    by_time.min(motion.frames.len())
}

/// First index of a run of at least `window` consecutive true values.
fn first_window(hits: &[bool], window: usize) -> Option<usize> {
    if window == 0 || hits.len() < window {
        return None;
    }
    let mut run = 0;
    for (i, &h) in hits.iter().enumerate() {
        if h {
            run += 1;
            if run >= window {
                return Some(i + 1 - window);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Evaluates the task's kinematic success condition over the frames inside
/// the time limit.
pub fn kinematic_success(
    scene: &TaskScene,
    motion: &MotionSequence,
    skeleton: &Skeleton,
) -> Result<KinematicOutcome, MetricsError> {
    motion.validate(skeleton)?;
    let keys = skeleton.key_joints()?;
    let n = frames_within_limit(motion, scene.time_limit);
    let mut positions = Vec::with_capacity(n);
    for pose in &motion.frames[..n] {
        let fk = forward_kinematics(skeleton, pose)?;
        positions.push((
            fk[keys.pelvis].position,
            fk[keys.left_ankle].position,
            fk[keys.right_ankle].position,
            fk[keys.left_wrist].position,
            fk[keys.right_wrist].position,
        ));
    }

    let in_poly = |p: &Vector3<f64>| point_in_footprint(&scene.footprint, &Vector2::new(p.x, p.y));
    let window = |seconds: f64| (seconds * motion.fps).ceil() as usize;

    let (hits, win): (Vec<bool>, usize) = match scene.task {
        TaskId::SitChair | TaskId::SitSofa => {
            let h = scene.seat_height.expect("validated");
            (
                positions
                    .iter()
                    .map(|(pelvis, ..)| {
                        in_poly(pelvis) && pelvis.z >= h && pelvis.z <= h + SIT_HEIGHT_BAND
                    })
                    .collect(),
                window(SIT_LIE_HOLD),
            )
        }
        TaskId::LieBed => {
            let h = scene.seat_height.expect("validated");
            let on_surface = |p: &Vector3<f64>| {
                in_poly(p) && p.z >= h && p.z <= h + LIE_HEIGHT_BAND
            };
            (
                positions
                    .iter()
                    .map(|(pelvis, la, ra, ..)| on_surface(pelvis) && on_surface(la) && on_surface(ra))
                    .collect(),
                window(SIT_LIE_HOLD),
            )
        }
        TaskId::LieSofa => {
            let h = scene.seat_height.expect("validated");
            let half = scene.sofa_total_height.expect("validated") / 2.0;
            (
                positions
                    .iter()
                    .map(|(pelvis, la, ra, ..)| {
                        in_poly(pelvis)
                            && pelvis.z >= h
                            && pelvis.z <= h + LIE_HEIGHT_BAND
                            && la.z >= half
                            && ra.z >= half
                    })
                    .collect(),
                window(SIT_LIE_HOLD),
            )
        }
        TaskId::Touch => {
            let [left, right] = scene.target_points.expect("validated");
            (
                positions
                    .iter()
                    .map(|(.., lw, rw)| {
                        (lw - left).norm() <= WRIST_RADIUS && (rw - right).norm() <= WRIST_RADIUS
                    })
                    .collect(),
                window(TOUCH_HOLD),
            )
        }
        TaskId::Lift => {
            let object = motion.object.as_ref().ok_or(MetricsError::MissingObjectChannel)?;
            let shape = scene.box_shape.as_ref().expect("validated");
            let last = n - 1;
            let lifted = object[last].position.z - object[0].position.z >= scene.lift_height();
            let posed = OrientedBox {
                pose: RigidTransform::new(object[last].position, object[last].orientation),
                half_extents: shape.half_extents,
            };
            let (_, _, _, lw, rw) = positions[last];
            let touching = posed.surface_distance(&lw) <= WRIST_RADIUS
                && posed.surface_distance(&rw) <= WRIST_RADIUS;
            let pass = lifted && touching;
            return Ok(KinematicOutcome {
                pass,
                satisfied_at: pass.then(|| last as f64 / motion.fps),
            });
        }
    };

    let start = first_window(&hits, win);
    Ok(KinematicOutcome {
        pass: start.is_some(),
        satisfied_at: start.map(|i| i as f64 / motion.fps),
    })
}

/// Per-frame energy e_i = (mean_j |τ_ij| · mean_j |v_ij|)².
pub fn energy_series(
    torques: &[Vec<f64>],
    velocities: &[Vec<f64>],
) -> Result<Vec<f64>, MetricsError> {
    if torques.len() != velocities.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} torque frames vs {} velocity frames",
            torques.len(),
            velocities.len()
        )));
    }
    torques
        .iter()
        .zip(velocities)
        .enumerate()
        .map(|(i, (tau, vel))| {
            if tau.len() != vel.len() || tau.is_empty() {
                return Err(MetricsError::LengthMismatch(format!(
                    "frame {i}: {} torques vs {} velocities",
                    tau.len(),
                    vel.len()
                )));
            }
            let mean_tau = tau.iter().map(|t| t.abs()).sum::<f64>() / tau.len() as f64;
            let mean_vel = vel.iter().map(|v| v.abs()).sum::<f64>() / vel.len() as f64;
            Ok((mean_tau * mean_vel).powi(2))
        })
        .collect()
}

/// True iff the peak energy stays strictly below the budget.
pub fn physical_success(series: &[f64], lambda: f64) -> Result<bool, MetricsError> {
    if series.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    let peak = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(peak < lambda)
}

/// PD torque law τ = Kp⊙(ã − J) − Kd⊙J̇, applied per frame.
pub fn pd_torques(
    actions: &[Vec<f64>],
    angles: &[Vec<f64>],
    velocities: &[Vec<f64>],
    kp: &[f64],
    kd: &[f64],
) -> Result<Vec<Vec<f64>>, MetricsError> {
    if actions.len() != angles.len() || actions.len() != velocities.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} action frames vs {} angle frames vs {} velocity frames",
            actions.len(),
            angles.len(),
            velocities.len()
        )));
    }
    let dof = kp.len();
    if kd.len() != dof {
        return Err(MetricsError::LengthMismatch(format!(
            "{} Kp gains vs {} Kd gains",
            dof,
            kd.len()
        )));
    }
    actions
        .iter()
        .zip(angles)
        .zip(velocities)
        .enumerate()
        .map(|(i, ((a, j), v))| {
            if a.len() != dof || j.len() != dof || v.len() != dof {
                return Err(MetricsError::LengthMismatch(format!(
                    "frame {i}: widths {}, {}, {} against {} gains",
                    a.len(),
                    j.len(),
                    v.len(),
                    dof
                )));
            }
            Ok((0..dof).map(|k| kp[k] * (a[k] - j[k]) - kd[k] * v[k]).collect())
        })
        .collect()
}

/// PD gain vectors, one entry per revolute joint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdGains {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
}

pub fn load_gains(path: impl AsRef<Path>) -> Result<PdGains, MetricsError> {
    let text = std::fs::read_to_string(path)?;
    let gains: PdGains = serde_json::from_str(&text)?;
    if gains.kp.len() != gains.kd.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} Kp gains vs {} Kd gains",
            gains.kp.len(),
            gains.kd.len()
        )));
    }
    Ok(gains)
}

/// Full evaluation of one motion against one scene.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub kinematic_pass: bool,
    pub satisfied_at: Option<f64>,
    /// None when the motion carries neither torques nor actions to derive
    /// them from; the physical check then fails at every budget.
    pub energy_series: Option<Vec<f64>>,
    pub physical_pass_per_lambda: [bool; 4],
    pub success_per_lambda: [bool; 4],
}

impl EvalReport {
    pub fn peak_energy(&self) -> Option<f64> {
        self.energy_series
            .as_ref()
            .map(|s| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }
}

fn truncate_to_limit(motion: &MotionSequence, limit: f64) -> MotionSequence {
    let n = frames_within_limit(motion, limit);
    MotionSequence {
        fps: motion.fps,
        skeleton_id: motion.skeleton_id.clone(),
        frames: motion.frames[..n].to_vec(),
        torques: motion.torques.as_ref().map(|t| t[..n].to_vec()),
        actions: motion.actions.as_ref().map(|a| a[..n].to_vec()),
        object: motion.object.as_ref().map(|o| o[..n].to_vec()),
    }
}

/// Runs the kinematic and physical checks over the frames inside the time
/// limit. Torques come from the motion's torque channel when present, else
/// from the PD law over its action channel and the supplied gains, else the
/// physical check fails for lack of data.
pub fn evaluate_motion(
    scene: &TaskScene,
    motion: &MotionSequence,
    skeleton: &Skeleton,
    gains: Option<&PdGains>,
) -> Result<EvalReport, MetricsError> {
    let clipped = truncate_to_limit(motion, scene.time_limit);
    let kinematic = kinematic_success(scene, &clipped, skeleton)?;

    let torques: Option<Vec<Vec<f64>>> = match (&clipped.torques, &clipped.actions, gains) {
        (Some(t), _, _) => Some(t.clone()),
        (None, Some(actions), Some(gains)) => {
            let derived = derive_kinematics(&clipped, skeleton)?;
            let angles: Vec<Vec<f64>> = clipped
                .frames
                .iter()
                .map(|pose| {
                    pose.joint_values
                        .iter()
                        .filter_map(|v| match v {
                            crate::skeleton::JointValue::Angle(a) => Some(*a),
                            _ => None,
                        })
                        .collect()
                })
                .collect();
            Some(pd_torques(
                actions,
                &angles,
                &derived.joint_velocities,
                &gains.kp,
                &gains.kd,
            )?)
        }
        _ => None,
    };

    let (energy, physical) = match torques {
        Some(torques) => {
            let derived = derive_kinematics(&clipped, skeleton)?;
            let series = energy_series(&torques, &derived.joint_velocities)?;
            let mut pass = [false; 4];
            for (i, lambda) in LAMBDA_P.iter().enumerate() {
                pass[i] = physical_success(&series, *lambda)?;
            }
            (Some(series), pass)
        }
        None => (None, [false; 4]),
    };

    let mut success = [false; 4];
    for i in 0..4 {
        success[i] = kinematic.pass && physical[i];
    }
    Ok(EvalReport {
        kinematic_pass: kinematic.pass,
        satisfied_at: kinematic.satisfied_at,
        energy_series: energy,
        physical_pass_per_lambda: physical,
        success_per_lambda: success,
    })
}

/// (kinematic success rate, energy-averaged success rate) over reports.
pub fn aggregate(reports: &[EvalReport]) -> Result<(f64, f64), MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyReports);
    }
    let n = reports.len() as f64;
    let kinematic = reports.iter().filter(|r| r.kinematic_pass).count() as f64 / n;
    let energy = reports
        .iter()
        .map(|r| r.success_per_lambda.iter().filter(|s| **s).count() as f64 / 4.0)
        .sum::<f64>()
        / n;
    Ok((kinematic, energy))
}
