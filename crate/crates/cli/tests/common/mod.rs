//! Fixture corpora and process helpers shared by the CLI test files.

#![allow(dead_code)]

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::Output;

use nalgebra::Vector3;

use humotion::{
    load_skeleton, save_motion, JointValue, MotionSequence, Pose, Rotation, Skeleton,
};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_humotion")
}

pub fn asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

pub fn asset_str(rel: &str) -> String {
    asset(rel).to_str().expect("asset path is valid UTF-8").to_owned()
}

/// Runs the binary with the given arguments and waits for it.
pub fn humotion<S: AsRef<OsStr>>(args: &[S]) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("spawning the pipeline binary")
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process exited with a code")
}

pub fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

pub fn human_skeleton() -> Skeleton {
    load_skeleton(asset("skeletons/core4d_human.json")).expect("human skeleton loads")
}

pub fn h1_skeleton() -> Skeleton {
    load_skeleton(asset("skeletons/h1.json")).expect("humanoid skeleton loads")
}

/// Writes `count` smoothly varying human motions (10 to 18 frames) into
/// `dir`, named seq_0.json .. in corpus order.
pub fn write_human_corpus(dir: &Path, count: usize) {
    let skeleton = human_skeleton();
    for k in 0..count {
        let frames: Vec<Pose> = (0..10 + 2 * k)
            .map(|t| {
                let phase = t as f64 / 30.0;
                let joint_values = (1..skeleton.len())
                    .map(|j| {
                        let axis = match j % 3 {
                            0 => Vector3::x(),
                            1 => Vector3::y(),
                            _ => Vector3::z(),
                        };
                        let angle = 0.2 * (0.7 * j as f64 + 3.0 * phase + k as f64).sin();
                        JointValue::Orientation(Rotation::from_axis_angle(&axis, angle))
                    })
                    .collect();
                Pose {
                    root_position: Vector3::new(
                        0.05 * phase + 0.02 * k as f64,
                        0.1 * (2.0 * phase).sin(),
                        0.9,
                    ),
                    root_orientation: Rotation::from_axis_angle(
                        &Vector3::z(),
                        0.1 * (phase + k as f64).sin(),
                    ),
                    joint_values,
                }
            })
            .collect();
        let motion = MotionSequence {
            fps: 30.0,
            skeleton_id: skeleton.name.clone(),
            frames,
            torques: None,
            actions: None,
            object: None,
        };
        save_motion(&motion, dir.join(format!("seq_{k}.json"))).expect("writing fixture motion");
    }
}

fn h1_pose(root_z: f64, angles: &[f64]) -> Pose {
    Pose {
        root_position: Vector3::new(0.0, 0.1, root_z),
        root_orientation: Rotation::identity(),
        joint_values: angles.iter().map(|a| JointValue::Angle(*a)).collect(),
    }
}

fn h1_motion(frames: Vec<Pose>) -> MotionSequence {
    MotionSequence {
        fps: 30.0,
        skeleton_id: "unitree_h1".into(),
        frames,
        torques: None,
        actions: None,
        object: None,
    }
}

/// A humanoid that sits still at chair height the whole time.
pub fn perfect_sit_motion() -> MotionSequence {
    let dof = h1_skeleton().dof();
    let mut motion = h1_motion((0..15).map(|_| h1_pose(0.55, &vec![0.0; dof])).collect());
    motion.torques = Some(vec![vec![0.0; dof]; 15]);
    motion
}

/// Five humanoid motions covering the evaluation outcomes: a quiet sit, a
/// sit whose torques come from PD actions, a sit burning absurd torque while
/// waving, a stand that never reaches the seat, and a sit with no effort
/// channels at all.
pub fn write_sitting_corpus(dir: &Path) {
    let dof = h1_skeleton().dof();
    let zeros = vec![0.0; dof];

    save_motion(&perfect_sit_motion(), dir.join("a_quiet.json")).expect("writing fixture motion");

    let mut actions = h1_motion((0..15).map(|_| h1_pose(0.55, &zeros)).collect());
    actions.actions = Some(vec![zeros.clone(); 15]);
    save_motion(&actions, dir.join("b_actions.json")).expect("writing fixture motion");

    let mut energetic = h1_motion(
        (0..15)
            .map(|t| {
                let mut angles = zeros.clone();
                let ramp = 0.6 * t as f64 / 14.0;
                angles[dof - 2] = ramp;
                angles[dof - 1] = -ramp;
                h1_pose(0.55, &angles)
            })
            .collect(),
    );
    energetic.torques = Some(vec![vec![1.0e5; dof]; 15]);
    save_motion(&energetic, dir.join("c_energetic.json")).expect("writing fixture motion");

    let mut standing = h1_motion((0..15).map(|_| h1_pose(1.0, &zeros)).collect());
    standing.torques = Some(vec![zeros.clone(); 15]);
    save_motion(&standing, dir.join("d_standing.json")).expect("writing fixture motion");

    let silent = h1_motion((0..15).map(|_| h1_pose(0.55, &zeros)).collect());
    save_motion(&silent, dir.join("e_silent.json")).expect("writing fixture motion");
}
