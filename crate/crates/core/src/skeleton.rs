//! Kinematic trees, poses, and forward kinematics.
//!
//! A skeleton is an ordered list of joints, topologically sorted so every
//! parent index precedes its children. Joint 0 is the free root; other joints
//! are either revolute (fixed axis, one angle — humanoid) or spherical (full
//! rotation — human). Frame i of the FK output is the rigid transform of the
//! body driven by joint i, so a 19-revolute-joint humanoid has 20 frames.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::{geodesic_distance, Rotation, RotationError};

#[derive(Debug, Error)]
pub enum SkeletonError {
    #[error("skeleton must have at least one joint")]
    Empty,
    #[error("joint 0 must be the root (kind \"root\", no parent)")]
    BadRoot,
    #[error("joint {index} ({name}): parent {parent} is not strictly smaller")]
    UnsortedParent { index: usize, name: String, parent: usize },
    #[error("joint {index} ({name}): missing parent")]
    MissingParent { index: usize, name: String },
    #[error("joint {index} ({name}): non-root joint declared as root")]
    ExtraRoot { index: usize, name: String },
    #[error("joint {index} ({name}): offset has non-finite components")]
    NonFiniteOffset { index: usize, name: String },
    #[error("joint {index} ({name}): revolute axis must be a unit vector")]
    BadAxis { index: usize, name: String },
    #[error("joint {index} ({name}): revolute joint is missing an axis")]
    MissingAxis { index: usize, name: String },
    #[error("joint {index} ({name}): limits must be finite with lo <= hi")]
    BadLimits { index: usize, name: String },
    #[error("pose has {got} joint values, skeleton {name} expects {expected}")]
    PoseLength { name: String, expected: usize, got: usize },
    #[error("pose joint {index}: expected {expected} value for this joint kind")]
    PoseKind { index: usize, expected: &'static str },
    #[error("no joint matching \"{0}\" in skeleton")]
    KeyJointNotFound(String),
    #[error("reading skeleton file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing skeleton file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("joint {index}: {source}")]
    Rotation { index: usize, source: RotationError },
}

#[derive(Debug, Clone)]
pub enum JointKind {
    Root,
    Revolute { axis: Vector3<f64> },
    Spherical,
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Translation from the parent frame to this joint's frame, in the parent
    /// frame, meters.
    pub offset: Vector3<f64>,
    pub kind: JointKind,
    /// Optional (lo, hi) angle limits in radians, revolute joints only.
    pub limits: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Skeleton {
    pub name: String,
    joints: Vec<Joint>,
}

impl Skeleton {
    pub fn new(name: impl Into<String>, joints: Vec<Joint>) -> Result<Self, SkeletonError> {
        if joints.is_empty() {
            return Err(SkeletonError::Empty);
        }
        if joints[0].parent.is_some() || !matches!(joints[0].kind, JointKind::Root) {
            return Err(SkeletonError::BadRoot);
        }
        for (index, joint) in joints.iter().enumerate().skip(1) {
            let name = joint.name.clone();
            match joint.parent {
                None => return Err(SkeletonError::MissingParent { index, name }),
                Some(parent) if parent >= index => {
                    return Err(SkeletonError::UnsortedParent { index, name, parent })
                }
                _ => {}
            }
            if matches!(joint.kind, JointKind::Root) {
                return Err(SkeletonError::ExtraRoot { index, name });
            }
            if !joint.offset.iter().all(|c| c.is_finite()) {
                return Err(SkeletonError::NonFiniteOffset { index, name });
            }
            if let JointKind::Revolute { axis } = &joint.kind {
                if !axis.iter().all(|c| c.is_finite()) || (axis.norm() - 1.0).abs() > 1e-6 {
                    return Err(SkeletonError::BadAxis { index, name });
                }
            }
            if let Some((lo, hi)) = joint.limits {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(SkeletonError::BadLimits { index, name });
                }
            }
        }
        let mut joints = joints;
        // Renormalize near-unit axes so downstream math sees exact units.
        for joint in &mut joints {
            if let JointKind::Revolute { axis } = &mut joint.kind {
                *axis /= axis.norm();
            }
        }
        Ok(Skeleton { name: name.into(), joints })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Joint values a pose must supply: every joint except the root.
    pub fn pose_len(&self) -> usize {
        self.joints.len() - 1
    }

    /// Number of revolute joints (the actuated DoF count of a humanoid).
    pub fn dof(&self) -> usize {
        self.joints
            .iter()
            .filter(|j| matches!(j.kind, JointKind::Revolute { .. }))
            .count()
    }

    pub fn find_joint(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Indices of every ancestor of `index`, root first, ending with `index`.
    pub fn chain_to_root(&self, index: usize) -> Vec<usize> {
        let mut chain = vec![index];
        let mut cursor = index;
        while let Some(parent) = self.joints[cursor].parent {
            chain.push(parent);
            cursor = parent;
        }
        chain.reverse();
        chain
    }

    pub fn is_ancestor(&self, ancestor: usize, descendant: usize) -> bool {
        let mut cursor = descendant;
        while let Some(parent) = self.joints[cursor].parent {
            if parent == ancestor {
                return true;
            }
            cursor = parent;
        }
        false
    }

    /// Resolves the pelvis/ankle/wrist frames used by the skill metrics.
    /// Pelvis is the root frame. Ankles and wrists are found by name; a
    /// skeleton whose arms end at the elbow (no wrist joint) falls back to
    /// the elbow frames.
    pub fn key_joints(&self) -> Result<KeyJoints, SkeletonError> {
        let find = |side: &str, parts: &[&str]| -> Result<usize, SkeletonError> {
            for part in parts {
                if let Some(i) = self
                    .joints
                    .iter()
                    .position(|j| j.name.contains(side) && j.name.contains(part))
                {
                    return Ok(i);
                }
            }
            Err(SkeletonError::KeyJointNotFound(format!("{side} {}", parts.join("/"))))
        };
        Ok(KeyJoints {
            pelvis: 0,
            left_ankle: find("left", &["ankle"])?,
            right_ankle: find("right", &["ankle"])?,
            left_wrist: find("left", &["wrist", "elbow"])?,
            right_wrist: find("right", &["wrist", "elbow"])?,
        })
    }
}

/// Frame indices of the bodies the skill metrics reason about.
#[derive(Debug, Clone, Copy)]
pub struct KeyJoints {
    pub pelvis: usize,
    pub left_ankle: usize,
    pub right_ankle: usize,
    pub left_wrist: usize,
    pub right_wrist: usize,
}

/// Value of one non-root joint inside a pose.
#[derive(Debug, Clone, Copy)]
pub enum JointValue {
    /// Angle in radians about the joint's fixed axis.
    Angle(f64),
    /// Full local rotation of a spherical joint.
    Orientation(Rotation),
}

#[derive(Debug, Clone)]
pub struct Pose {
    pub root_position: Vector3<f64>,
    pub root_orientation: Rotation,
    pub joint_values: Vec<JointValue>,
}

impl Pose {
    /// The zero pose: root at origin, identity everywhere.
    pub fn zero(skeleton: &Skeleton) -> Pose {
        let joint_values = skeleton
            .joints()
            .iter()
            .skip(1)
            .map(|j| match j.kind {
                JointKind::Revolute { .. } => JointValue::Angle(0.0),
                _ => JointValue::Orientation(Rotation::identity()),
            })
            .collect();
        Pose {
            root_position: Vector3::zeros(),
            root_orientation: Rotation::identity(),
            joint_values,
        }
    }
}

/// A rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy)]
pub struct RigidTransform {
    pub position: Vector3<f64>,
    pub orientation: Rotation,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform { position: Vector3::zeros(), orientation: Rotation::identity() }
    }

    pub fn new(position: Vector3<f64>, orientation: Rotation) -> Self {
        RigidTransform { position, orientation }
    }

    /// `self` applied after `other` (matrix product self·other).
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            position: self.position + self.orientation.rotate(&other.position),
            orientation: self.orientation.compose(&other.orientation),
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.orientation.inverse();
        RigidTransform { position: -inv.rotate(&self.position), orientation: inv }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation.rotate(p)
    }

    /// Rotates a direction without translating it.
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.rotate(v)
    }
}

/// Checks that a pose has one value per non-root joint with the kind the
/// skeleton expects.
pub fn validate_pose(skeleton: &Skeleton, pose: &Pose) -> Result<(), SkeletonError> {
    if pose.joint_values.len() != skeleton.pose_len() {
        return Err(SkeletonError::PoseLength {
            name: skeleton.name.clone(),
            expected: skeleton.pose_len(),
            got: pose.joint_values.len(),
        });
    }
    for (i, (joint, value)) in skeleton.joints().iter().skip(1).zip(&pose.joint_values).enumerate() {
        match (&joint.kind, value) {
            (JointKind::Revolute { .. }, JointValue::Angle(_)) => {}
            (JointKind::Spherical, JointValue::Orientation(_)) => {}
            (JointKind::Revolute { .. }, _) => {
                return Err(SkeletonError::PoseKind { index: i + 1, expected: "angle" })
            }
            (JointKind::Spherical, _) => {
                return Err(SkeletonError::PoseKind { index: i + 1, expected: "rotation" })
            }
            (JointKind::Root, _) => unreachable!("root carries no joint value"),
        }
    }
    Ok(())
}

/// Global transform of every frame. Frame 0 is the root pose; each child is
/// the parent transform composed with the bone offset translation and then
/// the joint's local rotation.
pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<Vec<RigidTransform>, SkeletonError> {
    validate_pose(skeleton, pose)?;
    let mut out = Vec::with_capacity(skeleton.len());
    out.push(RigidTransform::new(pose.root_position, pose.root_orientation));
    for (index, joint) in skeleton.joints().iter().enumerate().skip(1) {
        let parent = &out[joint.parent.expect("validated: non-root joints have parents")];
        let local = match (&joint.kind, &pose.joint_values[index - 1]) {
            (JointKind::Revolute { axis }, JointValue::Angle(angle)) => {
                Rotation::from_axis_angle(axis, *angle)
            }
            (JointKind::Spherical, JointValue::Orientation(r)) => *r,
            _ => unreachable!("validated above"),
        };
        out.push(RigidTransform {
            position: parent.position + parent.orientation.rotate(&joint.offset),
            orientation: parent.orientation.compose(&local),
        });
    }
    Ok(out)
}

/// Re-expresses global transforms in the coordinate system of `root`.
pub fn to_root_frame(global: &[RigidTransform], root: &RigidTransform) -> Vec<RigidTransform> {
    let inv = root.inverse();
    global.iter().map(|t| inv.compose(t)).collect()
}

/// Equality helper for tests and oracles.
pub fn transform_distance(a: &RigidTransform, b: &RigidTransform) -> (f64, f64) {
    ((a.position - b.position).norm(), geodesic_distance(&a.orientation, &b.orientation))
}

#[derive(Serialize, Deserialize)]
struct SkeletonFile {
    name: String,
    joints: Vec<JointFile>,
}

#[derive(Serialize, Deserialize)]
struct JointFile {
    name: String,
    parent: Option<usize>,
    offset: [f64; 3],
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    limits: Option<[f64; 2]>,
}

/// Loads a skeleton description (JSON; see the repository README for the
/// schema). Joint indices are implicit in array order.
pub fn load_skeleton(path: impl AsRef<Path>) -> Result<Skeleton, SkeletonError> {
    let text = std::fs::read_to_string(path)?;
    let file: SkeletonFile = serde_json::from_str(&text)?;
    let joints = file
        .joints
        .iter()
        .enumerate()
        .map(|(index, j)| {
            let kind = match j.kind.as_str() {
                "root" => JointKind::Root,
                "spherical" => JointKind::Spherical,
                "revolute" => {
                    let axis = j.axis.ok_or_else(|| SkeletonError::MissingAxis {
                        index,
                        name: j.name.clone(),
                    })?;
                    JointKind::Revolute { axis: Vector3::from(axis) }
                }
                other => {
                    return Err(SkeletonError::Parse(serde_json::Error::io(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("joint {index}: unknown kind {other:?}"),
                    ))))
                }
            };
            Ok(Joint {
                name: j.name.clone(),
                parent: j.parent,
                offset: Vector3::from(j.offset),
                kind,
                limits: j.limits.map(|[lo, hi]| (lo, hi)),
            })
        })
        .collect::<Result<Vec<_>, SkeletonError>>()?;
    Skeleton::new(file.name, joints)
}
