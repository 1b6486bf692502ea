//! `score-rewards` subcommand: scores a motion's per-frame tracking rewards
//! against a reference and writes one CSV row per frame.
//!
//! Torques for the energy term come from the motion's torque channel when
//! present, else from PD control of its action channel (needs --gains), else
//! they are taken as zero so the breakdown stays computable.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;

use humotion::{
    derive_kinematics, pd_torques, reward_tracking, track_states, JointValue, MotionSequence,
    PdGains, Skeleton, TaskId,
};

use crate::pipeline::{load_gains_file, load_motion_file, load_skeleton_file, write_output};

const HEADER: &str =
    "frame,r_pos,r_ori,r_root,r_wrist,r_w_to_o,r_object,r_action,r_vel,r_acc,r_energy,r_overall";

#[derive(Args)]
pub struct ScoreRewardsArgs {
    /// Tracked humanoid motion JSON file.
    #[arg(long)]
    motion: PathBuf,
    /// Reference humanoid motion JSON file.
    #[arg(long)]
    reference: PathBuf,
    /// Humanoid skeleton JSON file.
    #[arg(long)]
    skeleton: PathBuf,
    /// Task code (SC, SS, LB, LS, T, L); decides which terms apply and the
    /// root height penalty weight.
    #[arg(long)]
    task: String,
    /// PD gains JSON used to derive torques from the action channel.
    #[arg(long)]
    gains: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: ScoreRewardsArgs) -> Result<ExitCode> {
    let task: TaskId = args
        .task
        .parse()
        .with_context(|| format!("parsing task code {:?}", args.task))?;
    let skeleton = load_skeleton_file(&args.skeleton)?;
    let motion = load_motion_file(&args.motion, &skeleton)?;
    let reference = load_motion_file(&args.reference, &skeleton)?;
    let gains = match &args.gains {
        Some(path) => Some(load_gains_file(path)?),
        None => None,
    };

    let states = track_states(&motion, &reference, &skeleton).context("pairing frames")?;
    let torques = torque_rows(&motion, &skeleton, gains.as_ref())?;
    let lambda_height = task.height_penalty_weight();

    let mut csv = String::from(HEADER);
    csv.push('\n');
    for (frame, (state, torque)) in states.iter().zip(&torques).enumerate() {
        let r = reward_tracking(task, state, torque, lambda_height)
            .with_context(|| format!("scoring frame {frame}"))?;
        csv.push_str(&format!(
            "{frame},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.r_pos,
            r.r_ori,
            r.r_root,
            opt(r.r_wrist),
            opt(r.r_w_to_o),
            opt(r.r_object),
            r.r_action,
            r.r_vel,
            r.r_acc,
            r.r_energy,
            r.r_overall,
        ));
    }
    write_output(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn opt(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| v.to_string())
}

/// One torque row per frame: the recorded channel, else PD from actions,
/// else zeros.
fn torque_rows(
    motion: &MotionSequence,
    skeleton: &Skeleton,
    gains: Option<&PdGains>,
) -> Result<Vec<Vec<f64>>> {
    if let Some(torques) = &motion.torques {
        return Ok(torques.clone());
    }
    if let (Some(actions), Some(gains)) = (&motion.actions, gains) {
        let derived = derive_kinematics(motion, skeleton)?;
        let angles: Vec<Vec<f64>> = motion
            .frames
            .iter()
            .map(|pose| {
                pose.joint_values
                    .iter()
                    .filter_map(|v| match v {
                        JointValue::Angle(a) => Some(*a),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        let torques = pd_torques(actions, &angles, &derived.joint_velocities, &gains.kp, &gains.kd)
            .context("deriving PD torques")?;
        return Ok(torques);
    }
    Ok(vec![vec![0.0; skeleton.dof()]; motion.frames.len()])
}
