//! Whole-sequence retarget optimization: per-frame root pose and joint
//! angles descend a tracking loss with analytic gradients under Adam.

use nalgebra::Vector3;

use crate::motion::{fd_series, fd_series_transpose, MotionSequence};
use crate::retarget::copy::copy_rotation_motion;
use crate::retarget::mapping::JointMapping;
use crate::retarget::{LossBreakdown, RetargetConfig, RetargetError, RetargetOutcome};
use crate::rotation::{geodesic_distance, Rotation};
use crate::skeleton::{forward_kinematics, JointKind, JointValue, Pose, Skeleton};

/// Free variables of the optimization: root pose and joint angles per frame.
/// Root orientation increments are parameterized implicitly; see
/// [`StateGradient::root_increments`].
#[derive(Debug, Clone)]
pub struct MotionState {
    pub root_positions: Vec<Vector3<f64>>,
    pub root_orientations: Vec<Rotation>,
    /// One row per frame, one column per revolute humanoid joint in index
    /// order.
    pub joint_angles: Vec<Vec<f64>>,
}

/// Gradient of the loss with respect to a [`MotionState`]. The orientation
/// slot is the gradient with respect to a rotation-vector increment applied
/// on the world side, q ← exp(δ)·q, evaluated at δ = 0.
#[derive(Debug, Clone)]
pub struct StateGradient {
    pub root_positions: Vec<Vector3<f64>>,
    pub root_increments: Vec<Vector3<f64>>,
    pub joint_angles: Vec<Vec<f64>>,
}

impl StateGradient {
    /// Zero gradient with one slot per frame coordinate, ready to be filled
    /// by [`OptimizationProblem::loss_and_gradient`].
    pub fn zeros(frames: usize, dof: usize) -> Self {
        StateGradient {
            root_positions: vec![Vector3::zeros(); frames],
            root_increments: vec![Vector3::zeros(); frames],
            joint_angles: vec![vec![0.0; dof]; frames],
        }
    }

    fn clear(&mut self) {
        for v in &mut self.root_positions {
            *v = Vector3::zeros();
        }
        for v in &mut self.root_increments {
            *v = Vector3::zeros();
        }
        for row in &mut self.joint_angles {
            row.fill(0.0);
        }
    }
}

struct LossWeights {
    pos: f64,
    ori: f64,
    acc: f64,
    hand: Option<f64>,
}

/// A fixed tracking problem: humanoid skeleton plus per-frame targets
/// extracted from a human motion. Exposes loss and analytic gradient so the
/// gradient can be verified against finite differences externally.
pub struct OptimizationProblem {
    humanoid: Skeleton,
    fps: f64,
    /// Humanoid frame index per mapped pair.
    pair_frames: Vec<usize>,
    /// [frame][pair] world-position targets.
    target_positions: Vec<Vec<Vector3<f64>>>,
    /// [frame][pair] world-orientation targets.
    target_orientations: Vec<Vec<Rotation>>,
    /// Humanoid wrist frames and their [frame][left, right] targets.
    wrists: Option<([usize; 2], Vec<[Vector3<f64>; 2]>)>,
    weights: LossWeights,
    /// Revolute chain (joint index, angle column) from root to each frame.
    chains: Vec<Vec<(usize, usize)>>,
    dof: usize,
}

/// Geodesic angles below this have no usable axis; their gradient is skipped.
const ORI_GRADIENT_FLOOR: f64 = 1e-9;

impl OptimizationProblem {
    /// Builds the problem: forward-kinematic targets from the human motion
    /// (use the shape-aligned skeleton here to make them reachable) and the
    /// loss weights implied by the config.
    pub fn new(
        human_motion: &MotionSequence,
        human_skeleton: &Skeleton,
        humanoid: &Skeleton,
        mapping: &JointMapping,
        config: &RetargetConfig,
    ) -> Result<Self, RetargetError> {
        config.validate()?;
        mapping.validate(human_skeleton, humanoid)?;
        human_motion.validate(human_skeleton)?;
        for joint in humanoid.joints().iter().skip(1) {
            if !matches!(joint.kind, JointKind::Revolute { .. }) {
                return Err(RetargetError::Configuration(format!(
                    "optimization requires revolute humanoid joints, {} is not",
                    joint.name
                )));
            }
        }

        let hand_weight = config.effective_lambda_hand();
        let wrist_indices = if hand_weight.is_some_and(|w| w > 0.0) {
            let humanoid_keys = humanoid
                .key_joints()
                .map_err(|e| RetargetError::Configuration(format!("humanoid wrists: {e}")))?;
            let human_keys = human_skeleton
                .key_joints()
                .map_err(|e| RetargetError::Configuration(format!("human wrists: {e}")))?;
            Some((
                [humanoid_keys.left_wrist, humanoid_keys.right_wrist],
                [human_keys.left_wrist, human_keys.right_wrist],
            ))
        } else {
            None
        };

        let frames = human_motion.frames.len();
        let mut target_positions = Vec::with_capacity(frames);
        let mut target_orientations = Vec::with_capacity(frames);
        let mut wrist_targets = Vec::with_capacity(frames);
        for pose in &human_motion.frames {
            let fk = forward_kinematics(human_skeleton, pose)?;
            target_positions
                .push(mapping.pairs.iter().map(|p| fk[p.human].position).collect());
            target_orientations
                .push(mapping.pairs.iter().map(|p| fk[p.human].orientation).collect());
            if let Some((_, [hl, hr])) = wrist_indices {
                wrist_targets.push([fk[hl].position, fk[hr].position]);
            }
        }

        let mut columns = vec![usize::MAX; humanoid.len()];
        let mut dof = 0;
        for (i, joint) in humanoid.joints().iter().enumerate() {
            if matches!(joint.kind, JointKind::Revolute { .. }) {
                columns[i] = dof;
                dof += 1;
            }
        }
        let chains = (0..humanoid.len())
            .map(|frame| {
                humanoid
                    .chain_to_root(frame)
                    .into_iter()
                    .filter(|&j| columns[j] != usize::MAX)
                    .map(|j| (j, columns[j]))
                    .collect()
            })
            .collect();

        Ok(OptimizationProblem {
            humanoid: humanoid.clone(),
            fps: human_motion.fps,
            pair_frames: mapping.pairs.iter().map(|p| p.humanoid).collect(),
            target_positions,
            target_orientations,
            wrists: wrist_indices.map(|(bot, _)| (bot, wrist_targets)),
            weights: LossWeights {
                pos: config.lambda_pos,
                ori: config.lambda_ori,
                acc: config.lambda_acc,
                hand: hand_weight.filter(|w| *w > 0.0),
            },
            chains,
            dof,
        })
    }

    pub fn frames(&self) -> usize {
        self.target_positions.len()
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    fn pose_at(&self, state: &MotionState, frame: usize) -> Pose {
        let mut joint_values = Vec::with_capacity(self.humanoid.len() - 1);
        let mut col = 0;
        for joint in self.humanoid.joints().iter().skip(1) {
            match joint.kind {
                JointKind::Revolute { .. } => {
                    joint_values.push(JointValue::Angle(state.joint_angles[frame][col]));
                    col += 1;
                }
                _ => unreachable!("validated in OptimizationProblem::new"),
            }
        }
        Pose {
            root_position: state.root_positions[frame],
            root_orientation: state.root_orientations[frame],
            joint_values,
        }
    }

    pub fn loss(&self, state: &MotionState) -> Result<LossBreakdown, RetargetError> {
        self.evaluate(state, None, 0.0)
    }

    pub fn loss_and_gradient(
        &self,
        state: &MotionState,
        gradient: &mut StateGradient,
    ) -> Result<LossBreakdown, RetargetError> {
        self.evaluate(state, Some(gradient), 0.0)
    }

    /// `acc_smoothing` widens the acceleration term's gradient: the reported
    /// loss stays the exact mean |J̈|, but the gradient uses
    /// J̈/√(J̈² + ε²) instead of sign(J̈). The copy initialization starts on
    /// the |J̈| = 0 kink manifold (constant-velocity references are exactly
    /// there), where the exact subgradient walls off every non-frame-coherent
    /// step; the smoothed slope lets iterates cross at a cost proportional
    /// to jitter/ε. Zero recovers the exact subgradient.
    fn evaluate(
        &self,
        state: &MotionState,
        mut gradient: Option<&mut StateGradient>,
        acc_smoothing: f64,
    ) -> Result<LossBreakdown, RetargetError> {
        let frames = self.frames();
        let pairs = self.pair_frames.len();
        if let Some(g) = gradient.as_deref_mut() {
            g.clear();
        }
        let mut pos_sum = 0.0;
        let mut ori_sum = 0.0;
        let mut hand_sum = 0.0;
        let pos_scale = 1.0 / (frames * pairs) as f64;
        let hand_scale = 1.0 / (frames * 2) as f64;

        for f in 0..frames {
            let pose = self.pose_at(state, f);
            let fk = forward_kinematics(&self.humanoid, &pose)?;
            let root_pos = state.root_positions[f];

            for (p, &b) in self.pair_frames.iter().enumerate() {
                let err = fk[b].position - self.target_positions[f][p];
                pos_sum += err.norm_squared() * pos_scale;
                let angle = geodesic_distance(&fk[b].orientation, &self.target_orientations[f][p]);
                ori_sum += angle * pos_scale;

                if let Some(g) = gradient.as_deref_mut() {
                    let pos_coeff = 2.0 * self.weights.pos * pos_scale;
                    g.root_positions[f] += err * pos_coeff;
                    g.root_increments[f] += (fk[b].position - root_pos).cross(&err) * pos_coeff;
                    let ori_axis = if angle > ORI_GRADIENT_FLOOR {
                        // World-frame axis of the relative rotation q_b·q̄⁻¹,
                        // sign-folded so the represented angle is positive.
                        let rel = fk[b]
                            .orientation
                            .compose(&self.target_orientations[f][p].inverse());
                        let [w, x, y, z] = rel.wxyz();
                        let v = Vector3::new(x, y, z) * if w < 0.0 { -1.0 } else { 1.0 };
                        let norm = v.norm();
                        (norm > 0.0).then(|| v / norm)
                    } else {
                        None
                    };
                    let ori_coeff = self.weights.ori * pos_scale;
                    if let Some(axis) = ori_axis {
                        g.root_increments[f] += axis * ori_coeff;
                    }
                    for &(joint, col) in &self.chains[b] {
                        let world_axis = match self.humanoid.joints()[joint].kind {
                            JointKind::Revolute { axis } => fk[joint].orientation.rotate(&axis),
                            _ => unreachable!(),
                        };
                        let arm = fk[b].position - fk[joint].position;
                        g.joint_angles[f][col] +=
                            world_axis.cross(&arm).dot(&err) * pos_coeff;
                        if let Some(axis) = ori_axis {
                            g.joint_angles[f][col] += axis.dot(&world_axis) * ori_coeff;
                        }
                    }
                }
            }

            if let Some((bot_wrists, targets)) = &self.wrists {
                let hand_weight = self.weights.hand.unwrap_or(0.0);
                for (side, &b) in bot_wrists.iter().enumerate() {
                    let err = fk[b].position - targets[f][side];
                    hand_sum += err.norm_squared() * hand_scale;
                    if let Some(g) = gradient.as_deref_mut() {
                        let coeff = 2.0 * hand_weight * hand_scale;
                        g.root_positions[f] += err * coeff;
                        g.root_increments[f] += (fk[b].position - root_pos).cross(&err) * coeff;
                        for &(joint, col) in &self.chains[b] {
                            let world_axis = match self.humanoid.joints()[joint].kind {
                                JointKind::Revolute { axis } => fk[joint].orientation.rotate(&axis),
                                _ => unreachable!(),
                            };
                            let arm = fk[b].position - fk[joint].position;
                            g.joint_angles[f][col] +=
                                world_axis.cross(&arm).dot(&err) * coeff;
                        }
                    }
                }
            }
        }

        // Smoothness: mean |J̈| over frames and joints, differentiated via
        // the transposed difference operators.
        let mut acc_sum = 0.0;
        if self.dof > 0 {
            let acc_scale = 1.0 / (frames * self.dof) as f64;
            let mut series = vec![0.0; frames];
            for col in 0..self.dof {
                for f in 0..frames {
                    series[f] = state.joint_angles[f][col];
                }
                let vel = fd_series(&series, self.fps);
                let acc = fd_series(&vel, self.fps);
                acc_sum += acc.iter().map(|a| a.abs()).sum::<f64>() * acc_scale;
                if let Some(g) = gradient.as_deref_mut() {
                    let sign: Vec<f64> = acc
                        .iter()
                        .map(|a| {
                            if acc_smoothing > 0.0 {
                                a / a.hypot(acc_smoothing)
                            } else if *a > 0.0 {
                                1.0
                            } else if *a < 0.0 {
                                -1.0
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let back = fd_series_transpose(&fd_series_transpose(&sign, self.fps), self.fps);
                    let coeff = self.weights.acc * acc_scale;
                    for f in 0..frames {
                        g.joint_angles[f][col] += back[f] * coeff;
                    }
                }
            }
        }

        let hand = self.weights.hand.map(|_| hand_sum);
        let total = self.weights.pos * pos_sum
            + self.weights.ori * ori_sum
            + self.weights.acc * acc_sum
            + self.weights.hand.unwrap_or(0.0) * hand_sum;
        Ok(LossBreakdown {
            total,
            position: pos_sum,
            orientation: ori_sum,
            acceleration: acc_sum,
            hand,
        })
    }
}

/// Extracts the optimizer state from a humanoid-space motion.
pub fn state_from_motion(motion: &MotionSequence) -> MotionState {
    MotionState {
        root_positions: motion.frames.iter().map(|p| p.root_position).collect(),
        root_orientations: motion.frames.iter().map(|p| p.root_orientation).collect(),
        joint_angles: motion
            .frames
            .iter()
            .map(|p| {
                p.joint_values
                    .iter()
                    .filter_map(|v| match v {
                        JointValue::Angle(a) => Some(*a),
                        JointValue::Orientation(_) => None,
                    })
                    .collect()
            })
            .collect(),
    }
}

fn motion_from_state(
    state: &MotionState,
    template: &MotionSequence,
    humanoid: &Skeleton,
) -> MotionSequence {
    let frames = state
        .root_positions
        .iter()
        .zip(&state.root_orientations)
        .zip(&state.joint_angles)
        .map(|((pos, ori), angles)| Pose {
            root_position: *pos,
            root_orientation: *ori,
            joint_values: angles.iter().map(|a| JointValue::Angle(*a)).collect(),
        })
        .collect();
    MotionSequence {
        fps: template.fps,
        skeleton_id: humanoid.name.clone(),
        frames,
        torques: None,
        actions: None,
        object: template.object.clone(),
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Acceleration-gradient smoothing per unit step size, in frame steps
/// squared: one optimizer step perturbs J̈ by about this times the step.
const ACC_SMOOTHING_STEPS: f64 = 4.0;

impl Adam {
    fn new(len: usize) -> Self {
        Adam { m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }

    /// One update at the given step size. Returns the step to subtract from
    /// each parameter.
    fn deltas(&mut self, lr: f64, gradient: &[f64], out: &mut [f64]) {
        self.step += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        for (i, &g) in gradient.iter().enumerate() {
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            out[i] = lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

/// Optimizes a humanoid motion against targets from the human motion.
/// Initialization is rotation transfer; the best iterate by total loss is
/// returned together with the best-so-far checkpoint curve.
pub fn optimize_motion(
    human_motion: &MotionSequence,
    human_skeleton: &Skeleton,
    humanoid: &Skeleton,
    mapping: &JointMapping,
    config: &RetargetConfig,
) -> Result<RetargetOutcome, RetargetError> {
    let problem = OptimizationProblem::new(human_motion, human_skeleton, humanoid, mapping, config)?;
    let init = copy_rotation_motion(human_motion, human_skeleton, humanoid, mapping)?;
    let mut state = state_from_motion(&init);
    let frames = problem.frames();
    let dof = problem.dof();

    let init_loss = problem.loss(&state)?;
    if !init_loss.total.is_finite() {
        return Err(RetargetError::Initialization(format!(
            "initial loss is not finite ({})",
            init_loss.total
        )));
    }
    let mut best_state = state.clone();
    let mut best_loss = init_loss;
    if config.epochs == 0 {
        return Ok(RetargetOutcome {
            motion: motion_from_state(&state, human_motion, humanoid),
            final_loss: Some(init_loss),
            checkpoints: Vec::new(),
        });
    }

    let limits: Vec<Option<(f64, f64)>> = humanoid
        .joints()
        .iter()
        .filter(|j| matches!(j.kind, JointKind::Revolute { .. }))
        .map(|j| j.limits)
        .collect();

    // Flat layout per frame: [t(3), δ(3), J(dof)].
    let width = 6 + dof;
    let mut flat_grad = vec![0.0; frames * width];
    let mut deltas = vec![0.0; frames * width];
    let mut adam = Adam::new(frames * width);
    let mut gradient = StateGradient::zeros(frames, dof);
    let mut checkpoints = Vec::new();

    // Cosine-annealed step size: the orientation and smoothness terms have
    // constant-magnitude gradients, so any fixed rate ends up orbiting the
    // optimum at step-size amplitude; the shrinking tail lets them settle.
    // The acceleration smoothing keeps pace with the step size so that
    // term's kinks never wall off steps bigger than the jitter they forgive.
    let acc_jitter = ACC_SMOOTHING_STEPS * problem.fps * problem.fps;
    for epoch in 0..config.epochs {
        let lr = config.learning_rate
            * 0.5
            * (1.0 + (std::f64::consts::PI * epoch as f64 / config.epochs as f64).cos());
        let loss = problem.evaluate(&state, Some(&mut gradient), acc_jitter * lr)?;
        if !loss.total.is_finite() {
            break;
        }
        if loss.total < best_loss.total {
            best_loss = loss;
            best_state = state.clone();
        }
        if (epoch + 1) % config.checkpoint_interval == 0 {
            checkpoints.push(best_loss.total);
        }

        for f in 0..frames {
            let base = f * width;
            flat_grad[base..base + 3].copy_from_slice(gradient.root_positions[f].as_slice());
            flat_grad[base + 3..base + 6].copy_from_slice(gradient.root_increments[f].as_slice());
            flat_grad[base + 6..base + width].copy_from_slice(&gradient.joint_angles[f]);
        }
        adam.deltas(lr, &flat_grad, &mut deltas);
        for f in 0..frames {
            let base = f * width;
            state.root_positions[f] -= Vector3::from_column_slice(&deltas[base..base + 3]);
            // Fold the orientation step as a world-side increment; the δ
            // parameter itself stays zero while its moments accumulate.
            let inc = -Vector3::from_column_slice(&deltas[base + 3..base + 6]);
            state.root_orientations[f] =
                Rotation::from_rotation_vector(&inc).compose(&state.root_orientations[f]);
            for col in 0..dof {
                let value = &mut state.joint_angles[f][col];
                *value -= deltas[base + 6 + col];
                if let Some((lo, hi)) = limits[col] {
                    *value = value.clamp(lo, hi);
                }
            }
        }
    }

    let final_loss = problem.loss(&state)?;
    if final_loss.total.is_finite() && final_loss.total < best_loss.total {
        best_loss = final_loss;
        best_state = state;
    }

    Ok(RetargetOutcome {
        motion: motion_from_state(&best_state, human_motion, humanoid),
        final_loss: Some(best_loss),
        checkpoints,
    })
}
