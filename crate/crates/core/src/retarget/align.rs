//! Skeleton shape alignment: rescale human bone offsets so mapped bone
//! lengths match the humanoid's, making position targets reachable before
//! optimization.

use crate::retarget::mapping::JointMapping;
use crate::retarget::RetargetError;
use crate::skeleton::{forward_kinematics, Pose, Skeleton};

/// Rescales the offsets of mapped human joints in place and returns the
/// adjusted skeleton.
///
/// A mapped bone is a human joint a_k whose direct parent a_j is also
/// mapped. Its target length is the zero-pose distance between the entry
/// frame of group(a_k) (the lowest-index humanoid member) and the deepest
/// member of group(a_j) that is a tree ancestor of that entry. Offsets
/// already within 1e-12 (relative) of target are left bit-identical, so the
/// operation is idempotent.
pub fn align_skeleton_shape(
    human: &Skeleton,
    humanoid: &Skeleton,
    mapping: &JointMapping,
) -> Result<Skeleton, RetargetError> {
    mapping.validate(human, humanoid)?;
    let zero_frames = forward_kinematics(humanoid, &Pose::zero(humanoid))
        .map_err(|e| RetargetError::Scaling(format!("humanoid zero pose: {e}")))?;
    let groups = mapping.groups();
    let group_of = |human_joint: usize| groups.iter().find(|g| g.human == human_joint);

    let mut joints = human.joints().to_vec();
    for k in 1..joints.len() {
        let parent = joints[k].parent.expect("non-root joints have parents");
        let (Some(group_k), Some(group_j)) = (group_of(k), group_of(parent)) else {
            continue;
        };
        let entry = group_k.humanoid[0];
        // Deepest member of the parent group lying on the entry frame's
        // root chain; for chained groups this is the junction the bone
        // actually spans.
        let anchor = group_j
            .humanoid
            .iter()
            .copied()
            .filter(|&j| j == entry || humanoid.is_ancestor(j, entry))
            .max();
        let Some(anchor) = anchor else {
            return Err(RetargetError::Scaling(format!(
                "no member of the group for human joint {} is an ancestor of humanoid joint {}",
                parent, entry
            )));
        };
        let target = (zero_frames[entry].position - zero_frames[anchor].position).norm();
        let len = joints[k].offset.norm();
        if (len - target).abs() <= 1e-12 * target.max(1.0) {
            continue;
        }
        if len < 1e-12 {
            if target > 0.0 {
                return Err(RetargetError::Scaling(format!(
                    "human joint {} has a zero-length offset but the humanoid bone measures {}",
                    k, target
                )));
            }
            continue;
        }
        joints[k].offset *= target / len;
    }
    Skeleton::new(&human.name, joints).map_err(|e| RetargetError::Scaling(e.to_string()))
}
