//! Direct rotation transfer: decompose each mapped human joint's local
//! rotation onto the revolute axes of its humanoid joint group, in tree
//! order, by sequential twist extraction.

use nalgebra::Vector3;

use crate::motion::{MotionSequence, ObjectPose};
use crate::retarget::mapping::JointMapping;
use crate::retarget::RetargetError;
use crate::rotation::Rotation;
use crate::skeleton::{JointKind, JointValue, Pose, Skeleton};

/// Twist of `rotation` about the unit axis `axis`: the factor t in the left
/// decomposition rotation = t · residual with t a rotation about `axis`.
/// Returns (angle, residual). A rotation at right angles to the axis (both
/// w and v·u vanish) has no well-defined twist; it resolves to zero angle.
pub fn twist_about_axis(rotation: &Rotation, axis: &Vector3<f64>) -> (f64, Rotation) {
    let (w, x, y, z) = {
        let q = rotation.wxyz();
        (q[0], q[1], q[2], q[3])
    };
    let v = Vector3::new(x, y, z);
    let along = v.dot(axis);
    let norm = (w * w + along * along).sqrt();
    if norm < 1e-12 {
        return (0.0, *rotation);
    }
    let angle = 2.0 * along.atan2(w);
    let twist = Rotation::from_axis_angle(axis, angle);
    let residual = twist.inverse().compose(rotation);
    (angle, residual)
}

/// Splits a human joint's local rotation across the revolute axes of a
/// humanoid joint group, in index order, clamping to joint limits when
/// present. Returns the angle assigned to each group member.
fn decompose_group(
    rotation: &Rotation,
    humanoid: &Skeleton,
    members: &[usize],
) -> Result<Vec<f64>, RetargetError> {
    let mut residual = *rotation;
    let mut angles = Vec::with_capacity(members.len());
    for &j in members {
        let joint = &humanoid.joints()[j];
        let axis = match joint.kind {
            JointKind::Revolute { axis } => axis,
            _ => {
                return Err(RetargetError::Mapping(format!(
                    "group member {} ({}) is not a revolute joint",
                    j, joint.name
                )))
            }
        };
        let (mut angle, rest) = twist_about_axis(&residual, &axis);
        if let Some((lo, hi)) = joint.limits {
            angle = angle.clamp(lo, hi);
        }
        angles.push(angle);
        residual = rest;
    }
    Ok(angles)
}

/// Local rotation of a human joint in one pose: identity for angles on
/// revolute joints is impossible here because human rigs are spherical, but
/// both kinds are handled for generality.
fn human_local_rotation(human: &Skeleton, pose: &Pose, joint: usize) -> Rotation {
    if joint == 0 {
        return pose.root_orientation;
    }
    match (&human.joints()[joint].kind, &pose.joint_values[joint - 1]) {
        (JointKind::Revolute { axis }, JointValue::Angle(a)) => Rotation::from_axis_angle(axis, *a),
        (_, JointValue::Orientation(r)) => *r,
        (_, JointValue::Angle(a)) => {
            // Kind/value mismatch is caught by validation upstream; fall back
            // to a z twist so this stays total.
            Rotation::from_axis_angle(&Vector3::z(), *a)
        }
    }
}

/// Retargets one pose by rotation transfer. Root position and orientation
/// copy from the human root; each mapped group decomposes the human joint's
/// local rotation; unmapped humanoid joints stay at zero.
pub fn copy_rotation_pose(
    pose: &Pose,
    human: &Skeleton,
    humanoid: &Skeleton,
    mapping: &JointMapping,
) -> Result<Pose, RetargetError> {
    let mut out = Pose::zero(humanoid);
    out.root_position = pose.root_position;
    for group in mapping.groups() {
        let rotation = human_local_rotation(human, pose, group.human);
        // The humanoid root realizes the group's rotation budget directly;
        // revolute members absorb what they can of the rest.
        let mut members = group.humanoid.clone();
        if members[0] == 0 {
            out.root_orientation = rotation;
            members.remove(0);
            if members.is_empty() {
                continue;
            }
        }
        let angles = decompose_group(&rotation, humanoid, &members)?;
        for (&j, &angle) in members.iter().zip(&angles) {
            out.joint_values[j - 1] = JointValue::Angle(angle);
        }
    }
    Ok(out)
}

/// Retargets a whole motion by per-frame rotation transfer. The object
/// channel and frame rate carry over; torque/action channels do not (they
/// belong to the source embodiment).
pub fn copy_rotation_motion(
    motion: &MotionSequence,
    human: &Skeleton,
    humanoid: &Skeleton,
    mapping: &JointMapping,
) -> Result<MotionSequence, RetargetError> {
    mapping.validate(human, humanoid)?;
    let mut frames = Vec::with_capacity(motion.frames.len());
    for pose in &motion.frames {
        frames.push(copy_rotation_pose(pose, human, humanoid, mapping)?);
    }
    Ok(MotionSequence {
        fps: motion.fps,
        skeleton_id: humanoid.name.clone(),
        frames,
        torques: None,
        actions: None,
        object: motion.object.clone().map(|o: Vec<ObjectPose>| o),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::Joint;
    use approx::assert_relative_eq;

    fn bot_zxz() -> Skeleton {
        // Root plus a z-x-z revolute cluster hanging off it, echoing a
        // yaw-roll-pitch hip stack.
        Skeleton::new(
            "bot",
            vec![
                Joint {
                    name: "root".into(),
                    parent: None,
                    offset: Vector3::zeros(),
                    kind: JointKind::Root,
                    limits: None,
                },
                Joint {
                    name: "yaw".into(),
                    parent: Some(0),
                    offset: Vector3::zeros(),
                    kind: JointKind::Revolute { axis: Vector3::z() },
                    limits: None,
                },
                Joint {
                    name: "roll".into(),
                    parent: Some(1),
                    offset: Vector3::zeros(),
                    kind: JointKind::Revolute { axis: Vector3::x() },
                    limits: None,
                },
                Joint {
                    name: "pitch".into(),
                    parent: Some(2),
                    offset: Vector3::zeros(),
                    kind: JointKind::Revolute { axis: Vector3::y() },
                    limits: None,
                },
            ],
        )
        .unwrap()
    }

    fn human_one_ball() -> Skeleton {
        Skeleton::new(
            "human",
            vec![
                Joint {
                    name: "root".into(),
                    parent: None,
                    offset: Vector3::zeros(),
                    kind: JointKind::Root,
                    limits: None,
                },
                Joint {
                    name: "hip".into(),
                    parent: Some(0),
                    offset: Vector3::zeros(),
                    kind: JointKind::Spherical,
                    limits: None,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn twist_recovers_pure_axis_rotation() {
        let r = Rotation::from_axis_angle(&Vector3::z(), 0.7);
        let (angle, residual) = twist_about_axis(&r, &Vector3::z());
        assert_relative_eq!(angle, 0.7, epsilon = 1e-12);
        assert!(residual.angle() < 1e-12);
    }

    #[test]
    fn twist_of_orthogonal_rotation_is_zero() {
        let r = Rotation::from_axis_angle(&Vector3::x(), std::f64::consts::PI);
        let (angle, residual) = twist_about_axis(&r, &Vector3::z());
        assert_eq!(angle, 0.0);
        assert_relative_eq!(residual.angle(), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn group_recomposition_recovers_two_factor_rotation() {
        // A rotation built from the group's first two axes, in extraction
        // order, decomposes exactly: twist extraction peels Rz then Rx and
        // leaves an identity residual, so the y member reads zero.
        let bot = bot_zxz();
        let human = human_one_ball();
        let target = Rotation::from_axis_angle(&Vector3::z(), 0.5)
            .compose(&Rotation::from_axis_angle(&Vector3::x(), -0.8));
        let pose = Pose {
            root_position: Vector3::zeros(),
            root_orientation: Rotation::identity(),
            joint_values: vec![JointValue::Orientation(target)],
        };
        let mapping = JointMapping::from_tuples(&[(1, 1), (1, 2), (1, 3)]);
        let out = copy_rotation_pose(&pose, &human, &bot, &mapping).unwrap();
        let angles: Vec<f64> = out
            .joint_values
            .iter()
            .map(|v| match v {
                JointValue::Angle(a) => *a,
                _ => unreachable!(),
            })
            .collect();
        assert_relative_eq!(angles[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(angles[1], -0.8, epsilon = 1e-12);
        assert_relative_eq!(angles[2], 0.0, epsilon = 1e-12);
        let recomposed = Rotation::from_axis_angle(&Vector3::z(), angles[0])
            .compose(&Rotation::from_axis_angle(&Vector3::x(), angles[1]))
            .compose(&Rotation::from_axis_angle(&Vector3::y(), angles[2]));
        assert!(recomposed.relative_angle(&target) < 1e-12);
    }

    #[test]
    fn three_factor_rotation_transfers_approximately() {
        // With three non-commuting factors the twist of the product is not
        // the product of twists, so transfer is approximate; the error stays
        // second order in the trailing angles.
        let bot = bot_zxz();
        let human = human_one_ball();
        let target = Rotation::from_axis_angle(&Vector3::z(), 0.5)
            .compose(&Rotation::from_axis_angle(&Vector3::x(), -0.8))
            .compose(&Rotation::from_axis_angle(&Vector3::y(), 0.3));
        let pose = Pose {
            root_position: Vector3::zeros(),
            root_orientation: Rotation::identity(),
            joint_values: vec![JointValue::Orientation(target)],
        };
        let mapping = JointMapping::from_tuples(&[(1, 1), (1, 2), (1, 3)]);
        let out = copy_rotation_pose(&pose, &human, &bot, &mapping).unwrap();
        let angles: Vec<f64> = out
            .joint_values
            .iter()
            .map(|v| match v {
                JointValue::Angle(a) => *a,
                _ => unreachable!(),
            })
            .collect();
        let recomposed = Rotation::from_axis_angle(&Vector3::z(), angles[0])
            .compose(&Rotation::from_axis_angle(&Vector3::x(), angles[1]))
            .compose(&Rotation::from_axis_angle(&Vector3::y(), angles[2]));
        let err = crate::rotation::geodesic_distance(&recomposed, &target);
        assert!(err < 0.2, "recomposition error {err} unexpectedly large");
    }

    #[test]
    fn limits_clamp_transferred_angles() {
        let mut joints = bot_zxz().joints().to_vec();
        joints[1].limits = Some((-0.2, 0.2));
        let bot = Skeleton::new("bot", joints).unwrap();
        let human = human_one_ball();
        let pose = Pose {
            root_position: Vector3::zeros(),
            root_orientation: Rotation::identity(),
            joint_values: vec![JointValue::Orientation(Rotation::from_axis_angle(
                &Vector3::z(),
                1.0,
            ))],
        };
        let mapping = JointMapping::from_tuples(&[(1, 1)]);
        let out = copy_rotation_pose(&pose, &human, &bot, &mapping).unwrap();
        match out.joint_values[0] {
            JointValue::Angle(a) => assert_relative_eq!(a, 0.2, epsilon = 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn root_group_copies_root_and_feeds_remainder() {
        // Group {root, torso-like joint}: the humanoid root takes the human
        // pelvis orientation, and the revolute member twists about its axis.
        let bot = bot_zxz();
        let human = human_one_ball();
        let pelvis = Rotation::from_axis_angle(&Vector3::z(), 0.4);
        let pose = Pose {
            root_position: Vector3::new(1.0, 2.0, 3.0),
            root_orientation: pelvis,
            joint_values: vec![JointValue::Orientation(Rotation::identity())],
        };
        let mapping = JointMapping::from_tuples(&[(0, 0), (0, 1)]);
        let out = copy_rotation_pose(&pose, &human, &bot, &mapping).unwrap();
        assert_eq!(out.root_position, Vector3::new(1.0, 2.0, 3.0));
        assert!(crate::rotation::geodesic_distance(&out.root_orientation, &pelvis) < 1e-12);
        match out.joint_values[0] {
            JointValue::Angle(a) => assert_relative_eq!(a, 0.4, epsilon = 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unmapped_joints_stay_zero() {
        let bot = bot_zxz();
        let human = human_one_ball();
        let pose = Pose {
            root_position: Vector3::zeros(),
            root_orientation: Rotation::identity(),
            joint_values: vec![JointValue::Orientation(Rotation::from_axis_angle(
                &Vector3::x(),
                0.9,
            ))],
        };
        let mapping = JointMapping::from_tuples(&[(1, 2)]);
        let out = copy_rotation_pose(&pose, &human, &bot, &mapping).unwrap();
        match (&out.joint_values[0], &out.joint_values[2]) {
            (JointValue::Angle(a), JointValue::Angle(b)) => {
                assert_eq!(*a, 0.0);
                assert_eq!(*b, 0.0);
            }
            _ => unreachable!(),
        }
        match out.joint_values[1] {
            JointValue::Angle(a) => assert_relative_eq!(a, 0.9, epsilon = 1e-12),
            _ => unreachable!(),
        }
    }
}
