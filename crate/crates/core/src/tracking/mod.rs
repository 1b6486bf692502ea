//! Tracking-policy support: per-frame state bundles pairing the humanoid
//! with its animation target, reward breakdowns, the early-termination
//! predicate, and flat observation vectors for the two tracker variants.

mod observation;
mod rewards;

pub use observation::{build_observation, observation_length, TrackerVariant};
pub use rewards::{
    early_termination, reward_tracking, RewardBreakdown, ACTION_COEFF, ENERGY_COEFF,
    JOINT_ACC_COEFF, JOINT_VEL_COEFF, PROXIMITY_SCALE, ROOT_DEVIATION_LIMIT,
};

use nalgebra::Vector3;
use thiserror::Error;

use crate::motion::{derive_kinematics, fd_series, MotionError, MotionSequence, ObjectPose};
use crate::rotation::Rotation;
use crate::skeleton::{
    forward_kinematics, to_root_frame, JointValue, RigidTransform, Skeleton, SkeletonError,
};

#[derive(Debug, Error)]
pub enum TrackingError {
    #[error("state dimensions inconsistent: {0}")]
    Dimension(String),
    #[error("gravity direction must be a unit vector")]
    BadGravity,
    #[error("state lacks {0}, which this task requires")]
    Incomplete(&'static str),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

/// One body's full kinematic snapshot: scalar joint channels plus per-body
/// transforms and velocities. Body arrays hold one entry per frame of the
/// kinematic tree (joint count + 1); transforms and velocities live in the
/// root frame chosen by the builder, while `root_position` stays in the
/// world frame for height and deviation checks.
#[derive(Debug, Clone)]
pub struct BodyState {
    pub joint_angles: Vec<f64>,
    pub joint_velocities: Vec<f64>,
    /// Second joint derivative; optional because capture pipelines often
    /// omit it, in which case the acceleration regularizer reads zero.
    pub joint_accelerations: Option<Vec<f64>>,
    pub root_position: Vector3<f64>,
    pub body_positions: Vec<Vector3<f64>>,
    pub body_rotations: Vec<Rotation>,
    pub body_linear_velocities: Vec<Vector3<f64>>,
    pub body_angular_velocities: Vec<Vector3<f64>>,
}

impl BodyState {
    /// All-zero state for a given joint count: identity rotations, zero
    /// vectors everywhere.
    pub fn zeros(dof: usize) -> BodyState {
        let bodies = dof + 1;
        BodyState {
            joint_angles: vec![0.0; dof],
            joint_velocities: vec![0.0; dof],
            joint_accelerations: Some(vec![0.0; dof]),
            root_position: Vector3::zeros(),
            body_positions: vec![Vector3::zeros(); bodies],
            body_rotations: vec![Rotation::identity(); bodies],
            body_linear_velocities: vec![Vector3::zeros(); bodies],
            body_angular_velocities: vec![Vector3::zeros(); bodies],
        }
    }

    pub fn dof(&self) -> usize {
        self.joint_angles.len()
    }

    pub fn bodies(&self) -> usize {
        self.body_positions.len()
    }

    fn validate(&self, label: &str) -> Result<(), TrackingError> {
        let dof = self.dof();
        let bodies = self.bodies();
        if bodies != dof + 1 {
            return Err(TrackingError::Dimension(format!(
                "{label}: {bodies} bodies for {dof} joints"
            )));
        }
        if self.joint_velocities.len() != dof {
            return Err(TrackingError::Dimension(format!(
                "{label}: {} joint velocities for {dof} joints",
                self.joint_velocities.len()
            )));
        }
        if let Some(acc) = &self.joint_accelerations {
            if acc.len() != dof {
                return Err(TrackingError::Dimension(format!(
                    "{label}: {} joint accelerations for {dof} joints",
                    acc.len()
                )));
            }
        }
        for (name, len) in [
            ("rotations", self.body_rotations.len()),
            ("linear velocities", self.body_linear_velocities.len()),
            ("angular velocities", self.body_angular_velocities.len()),
        ] {
            if len != bodies {
                return Err(TrackingError::Dimension(format!(
                    "{label}: {len} body {name} for {bodies} bodies"
                )));
            }
        }
        Ok(())
    }
}

/// Rigid object snapshot for the lift task, expressed in the same root
/// frame as the body states.
#[derive(Debug, Clone)]
pub struct ObjectState {
    pub position: Vector3<f64>,
    pub orientation: Rotation,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

/// Everything the reward and observation builders consume for one frame:
/// the current humanoid, its animation target (expressed in the current
/// root frame), the action pair, gravity, and the optional task extras.
#[derive(Debug, Clone)]
pub struct TrackState {
    pub current: BodyState,
    pub target: BodyState,
    /// Action generated this frame.
    pub action: Vec<f64>,
    /// Action generated the previous frame (the observation's action slot).
    pub prev_action: Vec<f64>,
    /// Gravity direction in the current root frame, unit norm.
    pub gravity: Vector3<f64>,
    /// Indices of the left and right wrist bodies, needed by the touch and
    /// lift rewards.
    pub wrist_indices: Option<[usize; 2]>,
    /// Task-level wrist position targets in the current root frame; the
    /// touch observation appends them.
    pub wrist_targets: Option<[Vector3<f64>; 2]>,
    pub object: Option<ObjectState>,
    pub object_target: Option<ObjectState>,
}

impl TrackState {
    /// A fully zeroed state pair for a given joint count; handy as a test
    /// scaffold and for padding absent channels.
    pub fn zeros(dof: usize) -> TrackState {
        TrackState {
            current: BodyState::zeros(dof),
            target: BodyState::zeros(dof),
            action: vec![0.0; dof],
            prev_action: vec![0.0; dof],
            gravity: Vector3::new(0.0, 0.0, -1.0),
            wrist_indices: None,
            wrist_targets: None,
            object: None,
            object_target: None,
        }
    }

    pub fn dof(&self) -> usize {
        self.current.dof()
    }

    pub fn validate(&self) -> Result<(), TrackingError> {
        self.current.validate("current")?;
        self.target.validate("target")?;
        let dof = self.current.dof();
        if self.target.dof() != dof {
            return Err(TrackingError::Dimension(format!(
                "target has {} joints, current has {dof}",
                self.target.dof()
            )));
        }
        if self.action.len() != dof || self.prev_action.len() != dof {
            return Err(TrackingError::Dimension(format!(
                "action widths {} and {} for {dof} joints",
                self.action.len(),
                self.prev_action.len()
            )));
        }
        if (self.gravity.norm() - 1.0).abs() > 1e-6 {
            return Err(TrackingError::BadGravity);
        }
        if let Some([l, r]) = self.wrist_indices {
            let bodies = self.current.bodies();
            if l >= bodies || r >= bodies {
                return Err(TrackingError::Dimension(format!(
                    "wrist indices ({l}, {r}) out of {bodies} bodies"
                )));
            }
        }
        Ok(())
    }
}

/// World-frame angular velocity estimates for a rotation series: one-sided
/// quaternion differences averaged at interior samples, matching the body
/// velocity scheme used by motion derivatives.
fn world_angular_series(rotations: &[Rotation], fps: f64) -> Vec<Vector3<f64>> {
    let n = rotations.len();
    if n < 2 {
        return vec![Vector3::zeros(); n];
    }
    let steps: Vec<Vector3<f64>> = (0..n - 1)
        .map(|k| {
            let local = rotations[k].inverse().compose(&rotations[k + 1]);
            rotations[k].rotate(&local.rotation_vector()) * fps
        })
        .collect();
    (0..n)
        .map(|t| {
            if t == 0 {
                steps[0]
            } else if t == n - 1 {
                steps[n - 2]
            } else {
                (steps[t - 1] + steps[t]) / 2.0
            }
        })
        .collect()
}

fn vector_series_derivative(values: &[Vector3<f64>], fps: f64) -> Vec<Vector3<f64>> {
    let per_axis: Vec<Vec<f64>> = (0..3)
        .map(|axis| {
            let channel: Vec<f64> = values.iter().map(|v| v[axis]).collect();
            fd_series(&channel, fps)
        })
        .collect();
    (0..values.len())
        .map(|t| Vector3::new(per_axis[0][t], per_axis[1][t], per_axis[2][t]))
        .collect()
}

fn object_state_at(
    poses: &[ObjectPose],
    linear: &[Vector3<f64>],
    angular: &[Vector3<f64>],
    index: usize,
    root: &RigidTransform,
) -> ObjectState {
    let inv = root.inverse();
    ObjectState {
        position: inv.transform_point(&poses[index].position),
        orientation: inv.orientation.compose(&poses[index].orientation),
        linear_velocity: inv.orientation.rotate(&linear[index]),
        angular_velocity: inv.orientation.rotate(&angular[index]),
    }
}

fn scalar_angles(pose: &crate::skeleton::Pose) -> Vec<f64> {
    pose.joint_values
        .iter()
        .filter_map(|v| match v {
            JointValue::Angle(a) => Some(*a),
            _ => None,
        })
        .collect()
}

/// Builds one state per motion frame, pairing frame i with reference frame
/// i + 1 (the animation target of the next frame; the final frames share
/// the last reference frame). Everything is expressed in the current
/// frame's root coordinate system. Actions come from the motion's action
/// channel when present (frame 0 reuses its own action as the previous
/// one, so the change penalty starts at zero); wrist indices come from the
/// skeleton; object states, when both motions carry object channels, get
/// finite-difference velocities consistent with the body scheme.
pub fn track_states(
    motion: &MotionSequence,
    reference: &MotionSequence,
    skeleton: &Skeleton,
) -> Result<Vec<TrackState>, TrackingError> {
    motion.validate(skeleton)?;
    reference.validate(skeleton)?;
    let derived = derive_kinematics(motion, skeleton)?;
    let derived_ref = derive_kinematics(reference, skeleton)?;
    let dof = skeleton.dof();
    let wrists = skeleton.key_joints().ok().map(|k| [k.left_wrist, k.right_wrist]);

    let object_series = |poses: &Option<Vec<ObjectPose>>, fps: f64| {
        poses.as_ref().map(|poses| {
            let positions: Vec<Vector3<f64>> = poses.iter().map(|p| p.position).collect();
            let rotations: Vec<Rotation> = poses.iter().map(|p| p.orientation).collect();
            let linear = vector_series_derivative(&positions, fps);
            let angular = world_angular_series(&rotations, fps);
            (poses.clone(), linear, angular)
        })
    };
    let object_cur = object_series(&motion.object, motion.fps);
    let object_ref = object_series(&reference.object, reference.fps);

    let last_ref = reference.frames.len() - 1;
    let mut states = Vec::with_capacity(motion.frames.len());
    for i in 0..motion.frames.len() {
        let j = (i + 1).min(last_ref);
        let fk_cur = forward_kinematics(skeleton, &motion.frames[i])?;
        let fk_ref = forward_kinematics(skeleton, &reference.frames[j])?;
        let root = fk_cur[0];
        let inv_orientation = root.orientation.inverse();

        let locals_cur = to_root_frame(&fk_cur, &root);
        let locals_ref = to_root_frame(&fk_ref, &root);

        // Current velocities are already in this frame's root coordinates;
        // the reference rows are in the reference's own root frame at j, so
        // route them through the world into the current root frame.
        let ref_root_orientation = fk_ref[0].orientation;
        let rebase = inv_orientation.compose(&ref_root_orientation);

        let current = BodyState {
            joint_angles: scalar_angles(&motion.frames[i]),
            joint_velocities: derived.joint_velocities[i].clone(),
            joint_accelerations: Some(derived.joint_accelerations[i].clone()),
            root_position: root.position,
            body_positions: locals_cur.iter().map(|t| t.position).collect(),
            body_rotations: locals_cur.iter().map(|t| t.orientation).collect(),
            body_linear_velocities: derived.linear_velocities[i].clone(),
            body_angular_velocities: derived.angular_velocities[i].clone(),
        };
        let target = BodyState {
            joint_angles: scalar_angles(&reference.frames[j]),
            joint_velocities: derived_ref.joint_velocities[j].clone(),
            joint_accelerations: Some(derived_ref.joint_accelerations[j].clone()),
            root_position: fk_ref[0].position,
            body_positions: locals_ref.iter().map(|t| t.position).collect(),
            body_rotations: locals_ref.iter().map(|t| t.orientation).collect(),
            body_linear_velocities: derived_ref.linear_velocities[j]
                .iter()
                .map(|v| rebase.rotate(v))
                .collect(),
            body_angular_velocities: derived_ref.angular_velocities[j]
                .iter()
                .map(|v| rebase.rotate(v))
                .collect(),
        };

        let action_row = |k: usize| -> Vec<f64> {
            motion
                .actions
                .as_ref()
                .map(|a| a[k].clone())
                .unwrap_or_else(|| vec![0.0; dof])
        };
        let action = action_row(i);
        let prev_action = if i == 0 { action.clone() } else { action_row(i - 1) };

        let state = TrackState {
            current,
            target,
            action,
            prev_action,
            gravity: inv_orientation.rotate(&Vector3::new(0.0, 0.0, -1.0)),
            wrist_indices: wrists,
            wrist_targets: None,
            object: object_cur
                .as_ref()
                .map(|(p, l, a)| object_state_at(p, l, a, i, &root)),
            object_target: object_ref
                .as_ref()
                .map(|(p, l, a)| object_state_at(p, l, a, j, &root)),
        };
        states.push(state);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{Joint, JointKind, Pose};

    fn arm() -> Skeleton {
        Skeleton::new(
            "arm",
            vec![
                Joint {
                    name: "pelvis".into(),
                    parent: None,
                    offset: Vector3::zeros(),
                    kind: JointKind::Root,
                    limits: None,
                },
                Joint {
                    name: "left_wrist".into(),
                    parent: Some(0),
                    offset: Vector3::new(0.0, 0.2, 0.0),
                    kind: JointKind::Revolute { axis: Vector3::y() },
                    limits: None,
                },
                Joint {
                    name: "right_wrist".into(),
                    parent: Some(0),
                    offset: Vector3::new(0.0, -0.2, 0.0),
                    kind: JointKind::Revolute { axis: Vector3::y() },
                    limits: None,
                },
                Joint {
                    name: "left_ankle".into(),
                    parent: Some(0),
                    offset: Vector3::new(0.0, 0.1, -0.5),
                    kind: JointKind::Revolute { axis: Vector3::x() },
                    limits: None,
                },
                Joint {
                    name: "right_ankle".into(),
                    parent: Some(0),
                    offset: Vector3::new(0.0, -0.1, -0.5),
                    kind: JointKind::Revolute { axis: Vector3::x() },
                    limits: None,
                },
            ],
        )
        .unwrap()
    }

    fn walking(skeleton: &Skeleton, frames: usize) -> MotionSequence {
        MotionSequence {
            fps: 30.0,
            skeleton_id: skeleton.name.clone(),
            frames: (0..frames)
                .map(|f| Pose {
                    root_position: Vector3::new(0.1 * f as f64, 0.0, 1.0),
                    root_orientation: Rotation::from_axis_angle(&Vector3::z(), 0.05 * f as f64),
                    joint_values: vec![
                        JointValue::Angle(0.02 * f as f64),
                        JointValue::Angle(-0.02 * f as f64),
                        JointValue::Angle(0.0),
                        JointValue::Angle(0.0),
                    ],
                })
                .collect(),
            torques: None,
            actions: None,
            object: None,
        }
    }

    #[test]
    fn builder_pairs_with_the_next_reference_frame() {
        let skeleton = arm();
        let motion = walking(&skeleton, 5);
        let states = track_states(&motion, &motion, &skeleton).unwrap();
        assert_eq!(states.len(), 5);
        for (i, state) in states.iter().enumerate() {
            state.validate().unwrap();
            let j = (i + 1).min(4);
            assert_eq!(state.target.joint_angles[0], 0.02 * j as f64);
            // World root of the target is the reference's own root.
            assert!((state.target.root_position.x - 0.1 * j as f64).abs() < 1e-12);
        }
        // Self-tracking leaves the current bundle's own-frame positions
        // equal to the zero-root layout.
        assert_eq!(states[0].current.body_positions[0], Vector3::zeros());
    }

    #[test]
    fn builder_expresses_target_in_the_current_root_frame() {
        let skeleton = arm();
        let motion = walking(&skeleton, 4);
        let states = track_states(&motion, &motion, &skeleton).unwrap();
        // Frame 0 tracks reference frame 1, whose root sits 0.1 m ahead in
        // the world; in frame 0's root frame (yaw 0) that is +0.1 x.
        let t_root = states[0].target.body_positions[0];
        assert!((t_root - Vector3::new(0.1, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gravity_tilts_with_the_root() {
        let skeleton = arm();
        let mut motion = walking(&skeleton, 2);
        // Roll the root 90 degrees about x: world -z maps to -y in the
        // root frame.
        motion.frames[0].root_orientation =
            Rotation::from_axis_angle(&Vector3::x(), std::f64::consts::FRAC_PI_2);
        let states = track_states(&motion, &motion, &skeleton).unwrap();
        assert!((states[0].gravity - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn object_channels_become_root_frame_states() {
        let skeleton = arm();
        let mut motion = walking(&skeleton, 3);
        // Strip root motion so the root frame equals the world frame.
        for f in &mut motion.frames {
            f.root_position = Vector3::zeros();
            f.root_orientation = Rotation::identity();
        }
        motion.object = Some(
            (0..3)
                .map(|f| ObjectPose {
                    position: Vector3::new(0.5, 0.0, 0.1 * f as f64),
                    orientation: Rotation::identity(),
                })
                .collect(),
        );
        let states = track_states(&motion, &motion, &skeleton).unwrap();
        let object = states[1].object.as_ref().unwrap();
        assert!((object.position - Vector3::new(0.5, 0.0, 0.1)).norm() < 1e-12);
        // Central difference of z(t) = 0.1 t at 30 fps.
        assert!((object.linear_velocity - Vector3::new(0.0, 0.0, 3.0)).norm() < 1e-9);
        assert_eq!(
            states[2].object_target.as_ref().unwrap().position.z,
            states[2].object.as_ref().unwrap().position.z
        );
    }

    #[test]
    fn wrist_indices_come_from_joint_names() {
        let skeleton = arm();
        let motion = walking(&skeleton, 2);
        let states = track_states(&motion, &motion, &skeleton).unwrap();
        assert_eq!(states[0].wrist_indices, Some([1, 2]));
    }

    #[test]
    fn validation_rejects_mismatched_dimensions() {
        let mut state = TrackState::zeros(3);
        state.action = vec![0.0; 2];
        assert!(matches!(state.validate(), Err(TrackingError::Dimension(_))));
        let mut tilted = TrackState::zeros(3);
        tilted.gravity = Vector3::new(0.0, 0.0, -2.0);
        assert!(matches!(tilted.validate(), Err(TrackingError::BadGravity)));
        let mut bad_wrist = TrackState::zeros(3);
        bad_wrist.wrist_indices = Some([1, 9]);
        assert!(matches!(bad_wrist.validate(), Err(TrackingError::Dimension(_))));
        assert!(TrackState::zeros(3).validate().is_ok());
    }

    #[test]
    fn angular_series_matches_constant_rate_rotation() {
        let fps = 10.0;
        let rotations: Vec<Rotation> = (0..5)
            .map(|k| Rotation::from_axis_angle(&Vector3::z(), 0.03 * k as f64))
            .collect();
        for w in world_angular_series(&rotations, fps) {
            assert!((w - Vector3::new(0.0, 0.0, 0.3)).norm() < 1e-9);
        }
    }
}
