//! Flat observation vectors for the two tracker variants.
//!
//! Layout (per 19-joint humanoid): current J (19), J̇ (19), body positions
//! t (60), body rotations R as rotation vectors (60), linear velocities v
//! (60), angular velocities ω (60); the same six blocks for the animation
//! target; the previous action ã (19); gravity g (3) — 578 values. The
//! difference-augmented variant appends t − t̄ (60) and the elementwise
//! rotation-vector difference R − R̄ (60) for 698. The touch task then
//! appends the two wrist targets (6) and the lift task the current and
//! target object states (12 each).

use std::str::FromStr;

use nalgebra::Vector3;

use crate::task::TaskId;

use super::{ObjectState, TrackState, TrackingError};

/// Observation flavor: the base layout, or the one augmented with explicit
/// state differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerVariant {
    /// Base layout.
    Hst,
    /// Base layout plus position and rotation differences.
    Phc,
}

impl FromStr for TrackerVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hst" => Ok(TrackerVariant::Hst),
            "phc" => Ok(TrackerVariant::Phc),
            other => Err(format!("unknown tracker variant \"{other}\"")),
        }
    }
}

/// Expected vector length for a variant, task, and joint count.
pub fn observation_length(variant: TrackerVariant, task: TaskId, dof: usize) -> usize {
    let bodies = dof + 1;
    let bundle = 2 * dof + 4 * (3 * bodies);
    let mut len = 2 * bundle + dof + 3;
    if variant == TrackerVariant::Phc {
        len += 2 * (3 * bodies);
    }
    len += match task {
        TaskId::Touch => 6,
        TaskId::Lift => 24,
        _ => 0,
    };
    len
}

fn push_vec3s(out: &mut Vec<f64>, vectors: &[Vector3<f64>]) {
    for v in vectors {
        out.extend_from_slice(&[v.x, v.y, v.z]);
    }
}

fn push_object(out: &mut Vec<f64>, object: &ObjectState) {
    push_vec3s(out, &[object.position]);
    push_vec3s(out, &[object.orientation.rotation_vector()]);
    push_vec3s(out, &[object.linear_velocity]);
    push_vec3s(out, &[object.angular_velocity]);
}

/// Serializes a state pair into the tracker's flat input vector. The task
/// decides which extras are appended; touch requires wrist targets and
/// lift requires both object states.
pub fn build_observation(
    variant: TrackerVariant,
    task: TaskId,
    state: &TrackState,
) -> Result<Vec<f64>, TrackingError> {
    state.validate()?;
    let mut out = Vec::with_capacity(observation_length(variant, task, state.dof()));

    for bundle in [&state.current, &state.target] {
        out.extend_from_slice(&bundle.joint_angles);
        out.extend_from_slice(&bundle.joint_velocities);
        push_vec3s(&mut out, &bundle.body_positions);
        let rotation_vectors: Vec<Vector3<f64>> =
            bundle.body_rotations.iter().map(|r| r.rotation_vector()).collect();
        push_vec3s(&mut out, &rotation_vectors);
        push_vec3s(&mut out, &bundle.body_linear_velocities);
        push_vec3s(&mut out, &bundle.body_angular_velocities);
    }
    out.extend_from_slice(&state.prev_action);
    push_vec3s(&mut out, &[state.gravity]);

    if variant == TrackerVariant::Phc {
        let diffs: Vec<Vector3<f64>> = state
            .current
            .body_positions
            .iter()
            .zip(&state.target.body_positions)
            .map(|(a, b)| a - b)
            .collect();
        push_vec3s(&mut out, &diffs);
        let rot_diffs: Vec<Vector3<f64>> = state
            .current
            .body_rotations
            .iter()
            .zip(&state.target.body_rotations)
            .map(|(a, b)| a.rotation_vector() - b.rotation_vector())
            .collect();
        push_vec3s(&mut out, &rot_diffs);
    }

    match task {
        TaskId::Touch => {
            let targets = state
                .wrist_targets
                .as_ref()
                .ok_or(TrackingError::Incomplete("wrist position targets"))?;
            push_vec3s(&mut out, targets);
        }
        TaskId::Lift => {
            let object = state.object.as_ref().ok_or(TrackingError::Incomplete("object state"))?;
            let target = state
                .object_target
                .as_ref()
                .ok_or(TrackingError::Incomplete("object target state"))?;
            push_object(&mut out, object);
            push_object(&mut out, target);
        }
        _ => {}
    }

    debug_assert_eq!(out.len(), observation_length(variant, task, state.dof()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::Rotation;

    fn lift_ready(dof: usize) -> TrackState {
        let mut state = TrackState::zeros(dof);
        let object = ObjectState {
            position: Vector3::new(0.4, 0.1, 0.2),
            orientation: Rotation::from_axis_angle(&Vector3::z(), 0.3),
            linear_velocity: Vector3::new(0.0, 0.0, 0.5),
            angular_velocity: Vector3::zeros(),
        };
        state.object = Some(object.clone());
        state.object_target = Some(object);
        state
    }

    #[test]
    fn base_lengths() {
        let state = TrackState::zeros(19);
        let hst = build_observation(TrackerVariant::Hst, TaskId::SitChair, &state).unwrap();
        assert_eq!(hst.len(), 578);
        let phc = build_observation(TrackerVariant::Phc, TaskId::SitChair, &state).unwrap();
        assert_eq!(phc.len(), 698);
    }

    #[test]
    fn task_extras_lengths() {
        let mut touch = TrackState::zeros(19);
        touch.wrist_targets = Some([Vector3::new(0.3, 0.2, 1.0), Vector3::new(0.3, -0.2, 1.0)]);
        assert_eq!(
            build_observation(TrackerVariant::Hst, TaskId::Touch, &touch).unwrap().len(),
            584
        );
        let lift = lift_ready(19);
        assert_eq!(
            build_observation(TrackerVariant::Hst, TaskId::Lift, &lift).unwrap().len(),
            602
        );
        assert_eq!(
            build_observation(TrackerVariant::Phc, TaskId::Lift, &lift).unwrap().len(),
            722
        );
    }

    #[test]
    fn length_helper_matches_builder() {
        let lift = lift_ready(19);
        for variant in [TrackerVariant::Hst, TrackerVariant::Phc] {
            let got = build_observation(variant, TaskId::Lift, &lift).unwrap().len();
            assert_eq!(got, observation_length(variant, TaskId::Lift, 19));
        }
    }

    #[test]
    fn gravity_occupies_the_last_base_slots() {
        let state = TrackState::zeros(19);
        let obs = build_observation(TrackerVariant::Hst, TaskId::SitChair, &state).unwrap();
        assert_eq!(&obs[575..578], &[0.0, 0.0, -1.0]);
    }

    #[test]
    fn missing_extras_error() {
        let state = TrackState::zeros(19);
        assert!(matches!(
            build_observation(TrackerVariant::Hst, TaskId::Touch, &state),
            Err(TrackingError::Incomplete(_))
        ));
        assert!(matches!(
            build_observation(TrackerVariant::Hst, TaskId::Lift, &state),
            Err(TrackingError::Incomplete(_))
        ));
    }

    #[test]
    fn difference_blocks_vanish_for_identical_bundles() {
        let mut state = TrackState::zeros(19);
        state.current.body_positions[5] = Vector3::new(0.1, 0.2, 0.3);
        state.target.body_positions[5] = Vector3::new(0.1, 0.2, 0.3);
        let obs = build_observation(TrackerVariant::Phc, TaskId::SitChair, &state).unwrap();
        assert!(obs[578..698].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fields_land_in_distinct_slots() {
        // Perturbing different fields changes different indices.
        let base = build_observation(
            TrackerVariant::Hst,
            TaskId::SitChair,
            &TrackState::zeros(19),
        )
        .unwrap();
        let mut angle = TrackState::zeros(19);
        angle.current.joint_angles[0] = 0.7;
        let with_angle = build_observation(TrackerVariant::Hst, TaskId::SitChair, &angle).unwrap();
        assert_eq!(with_angle[0], 0.7);
        assert_eq!(&with_angle[1..], &base[1..]);
    }

    #[test]
    fn variant_names_parse() {
        assert_eq!("hst".parse::<TrackerVariant>().unwrap(), TrackerVariant::Hst);
        assert_eq!("PHC".parse::<TrackerVariant>().unwrap(), TrackerVariant::Phc);
        assert!("other".parse::<TrackerVariant>().is_err());
    }
}
