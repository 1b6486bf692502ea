//! Per-frame tracking rewards and the rollout early-termination predicate.

use nalgebra::Vector3;

use crate::rotation::geodesic_distance;
use crate::task::TaskId;

use super::{TrackState, TrackingError};

/// Rollouts stop once the root strays farther than this from its target.
pub const ROOT_DEVIATION_LIMIT: f64 = 0.5;
/// Weight on the squared action change.
pub const ACTION_COEFF: f64 = 1e-3;
/// Weight on the squared joint-velocity error.
pub const JOINT_VEL_COEFF: f64 = 2e-3;
/// Weight on the squared joint-acceleration error.
pub const JOINT_ACC_COEFF: f64 = 5e-7;
/// Weight on the squared torque-velocity product.
pub const ENERGY_COEFF: f64 = 1e-6;
/// Sharpness of the wrist and object proximity exponentials.
pub const PROXIMITY_SCALE: f64 = 10.0;

/// Every reward term for one frame. The wrist and object terms are present
/// only when the state carries what they need; the composition requires
/// them for the tasks that use them and ignores them otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardBreakdown {
    pub r_pos: f64,
    pub r_ori: f64,
    pub r_root: f64,
    pub r_wrist: Option<f64>,
    pub r_w_to_o: Option<f64>,
    pub r_object: Option<f64>,
    pub r_action: f64,
    pub r_vel: f64,
    pub r_acc: f64,
    pub r_energy: f64,
    pub r_overall: f64,
}

impl RewardBreakdown {
    /// Sum of the four regularizers; subtracting it from `r_overall` gives
    /// the regularizer-free composition some tracker variants train on.
    pub fn regularizers(&self) -> f64 {
        self.r_action + self.r_vel + self.r_acc + self.r_energy
    }
}

fn sq_norm(diff: impl Iterator<Item = f64>) -> f64 {
    diff.map(|d| d * d).sum()
}

fn l1(v: &Vector3<f64>) -> f64 {
    v.x.abs() + v.y.abs() + v.z.abs()
}

/// Scores one frame of tracking. Torques are the applied joint torques for
/// the energy regularizer (pass zeros when unknown); `lambda_height` is
/// the squared-height-error weight, 100 for the sitting tasks and 10
/// otherwise.
pub fn reward_tracking(
    task: TaskId,
    state: &TrackState,
    torques: &[f64],
    lambda_height: f64,
) -> Result<RewardBreakdown, TrackingError> {
    state.validate()?;
    let dof = state.dof();
    if torques.len() != dof {
        return Err(TrackingError::Dimension(format!(
            "{} torques for {dof} joints",
            torques.len()
        )));
    }
    let cur = &state.current;
    let tar = &state.target;

    let pos_error: f64 = cur
        .body_positions
        .iter()
        .zip(&tar.body_positions)
        .map(|(a, b)| (a - b).norm_squared())
        .sum();
    let r_pos = (-5.0 * pos_error).exp();

    let r_ori: f64 = cur
        .body_rotations
        .iter()
        .zip(&tar.body_rotations)
        .map(|(a, b)| (-geodesic_distance(a, b)).exp())
        .sum();

    let root_gap = cur.root_position - tar.root_position;
    let height_gap = cur.root_position.z - tar.root_position.z;
    let r_root = 5.0 * (-10.0 * l1(&root_gap)).exp() - lambda_height * height_gap * height_gap;

    let wrist_terms = state.wrist_indices.map(|[l, r]| {
        let gap = |w: usize| cur.body_positions[w] - tar.body_positions[w];
        let r_wrist = (-PROXIMITY_SCALE * l1(&gap(l))).exp()
            + (-PROXIMITY_SCALE * l1(&gap(r))).exp();
        (r_wrist, [l, r])
    });
    let r_wrist = wrist_terms.map(|(value, _)| value);

    let object_pair = state.object.as_ref().zip(state.object_target.as_ref());
    let r_object = object_pair
        .map(|(o, t)| (-PROXIMITY_SCALE * l1(&(o.position - t.position))).exp());
    let r_w_to_o = wrist_terms.and_then(|(_, wrists)| {
        object_pair.map(|(o, t)| {
            wrists
                .iter()
                .map(|&w| {
                    let relative = (cur.body_positions[w] - o.position)
                        - (tar.body_positions[w] - t.position);
                    (-PROXIMITY_SCALE * l1(&relative)).exp()
                })
                .sum::<f64>()
        })
    });

    let r_action = -ACTION_COEFF
        * sq_norm(state.action.iter().zip(&state.prev_action).map(|(a, b)| a - b));
    let r_vel = -JOINT_VEL_COEFF
        * sq_norm(cur.joint_velocities.iter().zip(&tar.joint_velocities).map(|(a, b)| a - b));
    let r_acc = match (&cur.joint_accelerations, &tar.joint_accelerations) {
        (Some(a), Some(b)) => {
            -JOINT_ACC_COEFF * sq_norm(a.iter().zip(b).map(|(x, y)| x - y))
        }
        _ => 0.0,
    };
    let r_energy = -ENERGY_COEFF
        * sq_norm(torques.iter().zip(&cur.joint_velocities).map(|(t, v)| t * v));

    let r_human = r_pos + r_ori + r_root;
    let r_reg = r_action + r_vel + r_acc + r_energy;
    let r_overall = match task {
        TaskId::SitChair | TaskId::SitSofa | TaskId::LieBed | TaskId::LieSofa => r_human + r_reg,
        TaskId::Touch => {
            let wrist = r_wrist.ok_or(TrackingError::Incomplete("wrist indices"))?;
            r_human * wrist + r_reg
        }
        TaskId::Lift => {
            r_wrist.ok_or(TrackingError::Incomplete("wrist indices"))?;
            let w_to_o = r_w_to_o.ok_or(TrackingError::Incomplete("object state"))?;
            let object = r_object.ok_or(TrackingError::Incomplete("object state"))?;
            r_human * w_to_o * object + r_reg
        }
    };

    Ok(RewardBreakdown {
        r_pos,
        r_ori,
        r_root,
        r_wrist,
        r_w_to_o,
        r_object,
        r_action,
        r_vel,
        r_acc,
        r_energy,
        r_overall,
    })
}

/// True when the rollout should stop: the current root strayed strictly
/// farther than 0.5 m from the target root, or fell strictly below the
/// task's height threshold. Root positions are world-frame.
pub fn early_termination(state: &TrackState, height_threshold: f64) -> bool {
    let deviation = (state.current.root_position - state.target.root_position).norm();
    deviation > ROOT_DEVIATION_LIMIT || state.current.root_position.z < height_threshold
}
