//! Motion sequences: timed pose frames with optional torque/action/object
//! channels, bit-exact JSON round-tripping, and finite-difference kinematic
//! derivatives.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::Rotation;
use crate::skeleton::{
    forward_kinematics, validate_pose, JointKind, JointValue, Pose, Skeleton, SkeletonError,
};

/// Quaternions this close to unit norm are renormalized on load; anything
/// further is rejected.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("reading motion file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing motion file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("frame {frame}: {problem}")]
    Frame { frame: usize, problem: String },
    #[error("motion references skeleton {motion}, loaded skeleton is {skeleton}")]
    SkeletonMismatch { motion: String, skeleton: String },
    #[error("motion must have at least one frame")]
    NoFrames,
    #[error("fps must be positive and finite, got {0}")]
    BadFps(f64),
    #[error("channel {channel} has {got} entries for {frames} frames")]
    ChannelLength { channel: &'static str, got: usize, frames: usize },
    #[error("channel {channel} frame {frame}: expected width {expected}, got {got}")]
    ChannelWidth { channel: &'static str, frame: usize, expected: usize, got: usize },
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

/// Pose of the manipulated object (task L) at one frame.
#[derive(Debug, Clone, Copy)]
pub struct ObjectPose {
    pub position: Vector3<f64>,
    pub orientation: Rotation,
}

#[derive(Debug, Clone)]
pub struct MotionSequence {
    pub fps: f64,
    pub skeleton_id: String,
    pub frames: Vec<Pose>,
    /// Joint torques, one row per frame, one scalar per revolute joint (N·m).
    pub torques: Option<Vec<Vec<f64>>>,
    /// Executed actions (PD targets), same shape as torques (radians).
    pub actions: Option<Vec<Vec<f64>>>,
    /// Object pose per frame (task L).
    pub object: Option<Vec<ObjectPose>>,
}

impl MotionSequence {
    pub fn duration(&self) -> f64 {
        (self.frames.len().saturating_sub(1)) as f64 / self.fps
    }

    /// Validates frame shapes, channel lengths, and joint-kind agreement with
    /// the skeleton.
    pub fn validate(&self, skeleton: &Skeleton) -> Result<(), MotionError> {
        if self.frames.is_empty() {
            return Err(MotionError::NoFrames);
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(MotionError::BadFps(self.fps));
        }
        if self.skeleton_id != skeleton.name {
            return Err(MotionError::SkeletonMismatch {
                motion: self.skeleton_id.clone(),
                skeleton: skeleton.name.clone(),
            });
        }
        for (i, pose) in self.frames.iter().enumerate() {
            validate_pose(skeleton, pose).map_err(|e| MotionError::Frame {
                frame: i,
                problem: e.to_string(),
            })?;
        }
        let dof = skeleton.dof();
        for (channel, rows) in [("torques", &self.torques), ("actions", &self.actions)] {
            if let Some(rows) = rows {
                if rows.len() != self.frames.len() {
                    return Err(MotionError::ChannelLength {
                        channel,
                        got: rows.len(),
                        frames: self.frames.len(),
                    });
                }
                for (frame, row) in rows.iter().enumerate() {
                    if row.len() != dof {
                        return Err(MotionError::ChannelWidth {
                            channel,
                            frame,
                            expected: dof,
                            got: row.len(),
                        });
                    }
                }
            }
        }
        if let Some(object) = &self.object {
            if object.len() != self.frames.len() {
                return Err(MotionError::ChannelLength {
                    channel: "object",
                    got: object.len(),
                    frames: self.frames.len(),
                });
            }
        }
        Ok(())
    }
}

/// Finite-difference derivatives of a motion: scalar joint channels plus
/// per-frame body-frame velocities expressed in each frame's own root frame.
#[derive(Debug, Clone)]
pub struct KinematicDerivatives {
    /// J̇, rad/s; one row per frame, one column per revolute joint.
    pub joint_velocities: Vec<Vec<f64>>,
    /// J̈, rad/s²; the same difference scheme applied to J̇.
    pub joint_accelerations: Vec<Vec<f64>>,
    /// Per-body linear velocities in the root frame, m/s; one row per frame,
    /// one entry per body frame.
    pub linear_velocities: Vec<Vec<Vector3<f64>>>,
    /// Per-body angular velocities in the root frame, rad/s.
    pub angular_velocities: Vec<Vec<Vector3<f64>>>,
}

/// Central differences at interior frames, one-sided first-order differences
/// at the boundaries; a single-frame series differentiates to zero.
pub fn fd_series(values: &[f64], fps: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut out = Vec::with_capacity(n);
    out.push((values[1] - values[0]) * fps);
    for t in 1..n - 1 {
        out.push((values[t + 1] - values[t - 1]) * fps / 2.0);
    }
    out.push((values[n - 1] - values[n - 2]) * fps);
    out
}

/// Transpose of the `fd_series` linear operator; used by gradient code.
pub fn fd_series_transpose(values: &[f64], fps: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[1] += values[0] * fps;
    out[0] -= values[0] * fps;
    for t in 1..n - 1 {
        out[t + 1] += values[t] * fps / 2.0;
        out[t - 1] -= values[t] * fps / 2.0;
    }
    out[n - 1] += values[n - 1] * fps;
    out[n - 2] -= values[n - 1] * fps;
    out
}

/// Derives J̇, J̈, and per-body root-frame velocities from a motion.
///
/// Angular velocity at frame t is built from the one-sided world-frame
/// estimates ω⁺ = R_t·rotvec(R_tᵀR_{t+1})·fps and ω⁻ for the previous step;
/// interior frames take their mean (the halved-and-summed central scheme),
/// the boundaries keep the single one-sided estimate, and the result is
/// re-expressed in the root frame of frame t.
pub fn derive_kinematics(
    motion: &MotionSequence,
    skeleton: &Skeleton,
) -> Result<KinematicDerivatives, MotionError> {
    motion.validate(skeleton)?;
    let n = motion.frames.len();
    let fps = motion.fps;
    let revolute: Vec<usize> = skeleton
        .joints()
        .iter()
        .enumerate()
        .filter(|(_, j)| matches!(j.kind, JointKind::Revolute { .. }))
        .map(|(i, _)| i)
        .collect();

    // Scalar joint channels.
    let mut joint_velocities = vec![vec![0.0; revolute.len()]; n];
    let mut joint_accelerations = vec![vec![0.0; revolute.len()]; n];
    for (col, &joint) in revolute.iter().enumerate() {
        let series: Vec<f64> = motion
            .frames
            .iter()
            .map(|pose| match pose.joint_values[joint - 1] {
                JointValue::Angle(a) => a,
                JointValue::Orientation(_) => unreachable!("revolute joints carry angles"),
            })
            .collect();
        let vel = fd_series(&series, fps);
        let acc = fd_series(&vel, fps);
        for t in 0..n {
            joint_velocities[t][col] = vel[t];
            joint_accelerations[t][col] = acc[t];
        }
    }

    // Body-frame transforms per frame.
    let mut transforms = Vec::with_capacity(n);
    for pose in &motion.frames {
        transforms.push(forward_kinematics(skeleton, pose)?);
    }
    let bodies = skeleton.len();
    let mut linear_velocities = vec![vec![Vector3::zeros(); bodies]; n];
    let mut angular_velocities = vec![vec![Vector3::zeros(); bodies]; n];
    if n >= 2 {
        // One-sided world-frame estimates for the step t -> t+1.
        let mut lin_step = vec![vec![Vector3::zeros(); bodies]; n - 1];
        let mut ang_step = vec![vec![Vector3::zeros(); bodies]; n - 1];
        for t in 0..n - 1 {
            for b in 0..bodies {
                let a = &transforms[t][b];
                let c = &transforms[t + 1][b];
                lin_step[t][b] = (c.position - a.position) * fps;
                let body_increment =
                    a.orientation.inverse().compose(&c.orientation).rotation_vector();
                ang_step[t][b] = a.orientation.rotate(&body_increment) * fps;
            }
        }
        for t in 0..n {
            let root_inv = transforms[t][0].orientation.inverse();
            for b in 0..bodies {
                let (lin, ang) = if t == 0 {
                    (lin_step[0][b], ang_step[0][b])
                } else if t == n - 1 {
                    (lin_step[n - 2][b], ang_step[n - 2][b])
                } else {
                    (
                        (lin_step[t - 1][b] + lin_step[t][b]) / 2.0,
                        (ang_step[t - 1][b] + ang_step[t][b]) / 2.0,
                    )
                };
                linear_velocities[t][b] = root_inv.rotate(&lin);
                angular_velocities[t][b] = root_inv.rotate(&ang);
            }
        }
    }

    Ok(KinematicDerivatives {
        joint_velocities,
        joint_accelerations,
        linear_velocities,
        angular_velocities,
    })
}

#[derive(Serialize, Deserialize)]
struct MotionFile {
    fps: f64,
    skeleton_id: String,
    frames: Vec<FrameFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    torques: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    object: Option<Vec<ObjectFile>>,
}

#[derive(Serialize, Deserialize)]
struct FrameFile {
    root_pos: [f64; 3],
    root_quat: [f64; 4],
    joints: Vec<JointValueFile>,
}

/// A revolute joint serializes as a bare number, a spherical joint as a
/// w-first quaternion array.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JointValueFile {
    Angle(f64),
    Quaternion([f64; 4]),
}

#[derive(Serialize, Deserialize)]
struct ObjectFile {
    pos: [f64; 3],
    quat: [f64; 4],
}

fn quat_from_file(q: [f64; 4], frame: usize) -> Result<Rotation, MotionError> {
    Rotation::from_wxyz(q[0], q[1], q[2], q[3], QUAT_NORM_TOLERANCE).map_err(|e| {
        MotionError::Frame { frame, problem: e.to_string() }
    })
}

/// Loads a motion and validates it against the skeleton it references.
pub fn load_motion(path: impl AsRef<Path>, skeleton: &Skeleton) -> Result<MotionSequence, MotionError> {
    let text = std::fs::read_to_string(path)?;
    let file: MotionFile = serde_json::from_str(&text)?;
    let mut frames = Vec::with_capacity(file.frames.len());
    for (i, frame) in file.frames.iter().enumerate() {
        let joint_values = frame
            .joints
            .iter()
            .map(|v| match v {
                JointValueFile::Angle(a) => Ok(JointValue::Angle(*a)),
                JointValueFile::Quaternion(q) => Ok(JointValue::Orientation(quat_from_file(*q, i)?)),
            })
            .collect::<Result<Vec<_>, MotionError>>()?;
        frames.push(Pose {
            root_position: Vector3::from(frame.root_pos),
            root_orientation: quat_from_file(frame.root_quat, i)?,
            joint_values,
        });
    }
    let object = match file.object {
        None => None,
        Some(entries) => Some(
            entries
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    Ok(ObjectPose {
                        position: Vector3::from(o.pos),
                        orientation: quat_from_file(o.quat, i)?,
                    })
                })
                .collect::<Result<Vec<_>, MotionError>>()?,
        ),
    };
    let motion = MotionSequence {
        fps: file.fps,
        skeleton_id: file.skeleton_id,
        frames,
        torques: file.torques,
        actions: file.actions,
        object,
    };
    motion.validate(skeleton)?;
    Ok(motion)
}

fn motion_to_file(motion: &MotionSequence) -> MotionFile {
    MotionFile {
        fps: motion.fps,
        skeleton_id: motion.skeleton_id.clone(),
        frames: motion
            .frames
            .iter()
            .map(|pose| FrameFile {
                root_pos: pose.root_position.into(),
                root_quat: pose.root_orientation.wxyz(),
                joints: pose
                    .joint_values
                    .iter()
                    .map(|v| match v {
                        JointValue::Angle(a) => JointValueFile::Angle(*a),
                        JointValue::Orientation(r) => JointValueFile::Quaternion(r.wxyz()),
                    })
                    .collect(),
            })
            .collect(),
        torques: motion.torques.clone(),
        actions: motion.actions.clone(),
        object: motion.object.as_ref().map(|entries| {
            entries
                .iter()
                .map(|o| ObjectFile { pos: o.position.into(), quat: o.orientation.wxyz() })
                .collect()
        }),
    }
}

/// Serializes a motion to its JSON form. Deterministic: the same motion
/// always produces the same bytes.
pub fn motion_to_json(motion: &MotionSequence) -> Result<String, MotionError> {
    Ok(serde_json::to_string_pretty(&motion_to_file(motion))?)
}

pub fn save_motion(motion: &MotionSequence, path: impl AsRef<Path>) -> Result<(), MotionError> {
    let mut text = motion_to_json(motion)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
