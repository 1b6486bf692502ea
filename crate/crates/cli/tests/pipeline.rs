//! Exit-code and artifact pins for each subcommand: the documented error
//! paths, the filter flag, report aggregation, and the perception and
//! reward outputs.

use std::fs;

mod common;

use common::{
    asset_str, exit_code, humotion, perfect_sit_motion, stderr_text, write_human_corpus,
    write_sitting_corpus,
};

fn copy_args(input: &str, out: &str) -> Vec<String> {
    [
        "retarget",
        "--algo",
        "copy",
        "--mapping",
        "core4d",
        "--human-skeleton",
        &asset_str("skeletons/core4d_human.json"),
        "--humanoid-skeleton",
        &asset_str("skeletons/h1.json"),
        "--in",
        input,
        "--out",
        out,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn copy_retarget_emits_one_file_per_input() {
    let dir = tempfile::tempdir().unwrap();
    let human = dir.path().join("human");
    fs::create_dir(&human).unwrap();
    write_human_corpus(&human, 1);
    let out = dir.path().join("out");
    let output = humotion(&copy_args(human.to_str().unwrap(), out.to_str().unwrap()));
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    assert!(out.join("seq_0.json").is_file());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["algorithm"], "copy");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["sequences"][0]["status"], "ok");
}

#[test]
fn hand_weight_is_rejected_for_tasks_without_a_wrist_term() {
    let dir = tempfile::tempdir().unwrap();
    let output = humotion(&[
        "retarget",
        "--algo",
        "optimize",
        "--task",
        "SC",
        "--lambda-hand",
        "0.5",
        "--in",
        dir.path().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_text(&output).contains("lambda_hand"));
}

#[test]
fn empty_corpus_succeeds_with_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let human = dir.path().join("human");
    fs::create_dir(&human).unwrap();
    let out = dir.path().join("out");
    let output = humotion(&copy_args(human.to_str().unwrap(), out.to_str().unwrap()));
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["sequences"].as_array().unwrap().len(), 0);
}

#[test]
fn unreadable_corpus_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = dir.path().join("out");
    let output = humotion(&copy_args(missing.to_str().unwrap(), out.to_str().unwrap()));
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn unknown_algorithm_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = humotion(&[
        "retarget",
        "--algo",
        "teleport",
        "--in",
        dir.path().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    let err = stderr_text(&output);
    assert!(err.contains("align-optimize") && err.contains("copy") && err.contains("optimize"));
}

#[test]
fn broken_sequences_are_isolated_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let human = dir.path().join("human");
    fs::create_dir(&human).unwrap();
    write_human_corpus(&human, 2);
    fs::write(human.join("aa_broken.json"), "{not json").unwrap();
    let out = dir.path().join("out");
    let output = humotion(&copy_args(human.to_str().unwrap(), out.to_str().unwrap()));
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let sequences = manifest["sequences"].as_array().unwrap();
    assert_eq!(sequences.len(), 3);
    assert_eq!(sequences[0]["file"], "aa_broken.json");
    assert_eq!(sequences[0]["status"], "error");
    assert!(!out.join("aa_broken.json").exists());
    assert_eq!(sequences[1]["status"], "ok");
    assert_eq!(sequences[2]["status"], "ok");
    assert!(out.join("seq_0.json").is_file() && out.join("seq_1.json").is_file());
}

#[test]
fn filter_drops_motions_that_fail_the_kinematic_check() {
    let dir = tempfile::tempdir().unwrap();
    let human = dir.path().join("human");
    fs::create_dir(&human).unwrap();
    write_human_corpus(&human, 2);
    let out = dir.path().join("out");
    let mut args = copy_args(human.to_str().unwrap(), out.to_str().unwrap());
    args.push("--filter".into());
    args.push("--scene".into());
    args.push(asset_str("scenes/sit_chair.json"));
    let output = humotion(&args);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for seq in manifest["sequences"].as_array().unwrap() {
        assert_eq!(seq["status"], "filtered");
        let name = seq["file"].as_str().unwrap();
        assert!(!out.join(name).exists(), "{name} was emitted despite failing");
    }
}

#[test]
fn config_file_drives_the_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let human = dir.path().join("human");
    fs::create_dir(&human).unwrap();
    write_human_corpus(&human, 1);
    let out = dir.path().join("out");
    let config = dir.path().join("pipeline.json");
    fs::write(
        &config,
        serde_json::json!({
            "input": human.to_str().unwrap(),
            "output": out.to_str().unwrap(),
            "algorithm": "copy",
            "mapping": "core4d",
            "human_skeleton": asset_str("skeletons/core4d_human.json"),
            "humanoid_skeleton": asset_str("skeletons/h1.json"),
            "seed": 7,
        })
        .to_string(),
    )
    .unwrap();
    let output = humotion(&["retarget", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);

    let out2 = dir.path().join("out2");
    let output = humotion(&[
        "retarget",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out2.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"inputt\": \"x\"}").unwrap();
    let output = humotion(&["retarget", "--config", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn mapping_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let human = dir.path().join("human");
    fs::create_dir(&human).unwrap();
    write_human_corpus(&human, 1);
    let mapping = dir.path().join("mapping.json");
    fs::write(&mapping, "{\"pairs\": [{\"human\": 0, \"humanoid\": 0}]}").unwrap();
    let out = dir.path().join("out");
    let mut args = copy_args(human.to_str().unwrap(), out.to_str().unwrap());
    args[4] = mapping.to_str().unwrap().to_string();
    let output = humotion(&args);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    assert!(out.join("seq_0.json").is_file());
}

#[test]
fn perfect_sit_corpus_summarizes_to_full_rates() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    humotion::save_motion(&perfect_sit_motion(), corpus.join("perfect.json")).unwrap();
    let csv_path = dir.path().join("eval.csv");
    let output = humotion(&[
        "eval",
        "--in",
        corpus.to_str().unwrap(),
        "--scene",
        &asset_str("scenes/sit_chair.json"),
        "--skeleton",
        &asset_str("skeletons/h1.json"),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines,
        vec![
            "motion_id,kinematic,e_max,pass_1e6,pass_2e6,pass_4e6,pass_8e6,success_avg",
            "perfect,true,0,true,true,true,true,1",
            "summary,1,,,,,,1",
        ]
    );
}

#[test]
fn eval_covers_every_outcome_and_flags_failure_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    write_sitting_corpus(&corpus);
    let csv_path = dir.path().join("eval.csv");
    let output = humotion(&[
        "eval",
        "--in",
        corpus.to_str().unwrap(),
        "--scene",
        &asset_str("scenes/sit_chair.json"),
        "--skeleton",
        &asset_str("skeletons/h1.json"),
        "--gains",
        &asset_str("gains/h1_gains.json"),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("a_quiet,true,0,true,true,true,true,1"));
    assert!(lines[2].starts_with("b_actions,true,0,true,true,true,true,1"));
    assert!(lines[3].starts_with("c_energetic,true,") && lines[3].ends_with(",0"));
    assert!(lines[4].starts_with("d_standing,false,0,true,true,true,true,0"));
    assert!(lines[5].starts_with("e_silent,true,no-energy,false,false,false,false,0"));
    assert!(lines[6].starts_with("summary,0.8,,,,,,"));
}

#[test]
fn missing_scene_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    humotion::save_motion(&perfect_sit_motion(), corpus.join("perfect.json")).unwrap();
    let output = humotion(&[
        "eval",
        "--in",
        corpus.to_str().unwrap(),
        "--scene",
        dir.path().join("nope.json").to_str().unwrap(),
        "--skeleton",
        &asset_str("skeletons/h1.json"),
        "--out",
        dir.path().join("eval.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn all_failing_corpus_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    let mut standing = perfect_sit_motion();
    for frame in &mut standing.frames {
        frame.root_position.z = 1.0;
    }
    humotion::save_motion(&standing, corpus.join("standing.json")).unwrap();
    let output = humotion(&[
        "eval",
        "--in",
        corpus.to_str().unwrap(),
        "--scene",
        &asset_str("scenes/sit_chair.json"),
        "--skeleton",
        &asset_str("skeletons/h1.json"),
        "--out",
        dir.path().join("eval.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1, "{}", stderr_text(&output));
}

#[test]
fn report_folds_evaluation_csvs_by_motion_count() {
    let dir = tempfile::tempdir().unwrap();
    let eval_a = dir.path().join("pass.csv");
    let eval_b = dir.path().join("fail.csv");
    let header = "motion_id,kinematic,e_max,pass_1e6,pass_2e6,pass_4e6,pass_8e6,success_avg";
    fs::write(&eval_a, format!("{header}\nm1,true,0,true,true,true,true,1\nsummary,1,,,,,,1\n"))
        .unwrap();
    fs::write(
        &eval_b,
        format!(
            "{header}\nm2,false,no-energy,false,false,false,false,0\n\
             m3,false,0,true,true,true,true,0\nsummary,0,,,,,,0\n"
        ),
    )
    .unwrap();
    let out = dir.path().join("report.csv");
    let output = humotion(&[
        "report",
        "--in",
        eval_a.to_str().unwrap(),
        "--in",
        eval_b.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let report = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(
        lines,
        vec![
            "report_id,motions,kinematic_rate,energy_avg_rate",
            "pass,1,1,1",
            "fail,2,0,0",
            &format!("overall,3,{},{}", 1.0f64 / 3.0, 1.0f64 / 3.0),
        ]
    );
}

#[test]
fn elevation_renders_touch_targets_on_the_fine_grid() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("targets");
    let output = humotion(&[
        "elevation",
        "--targets",
        "0.4,0.1,0.9;0.3,-0.2,0.95",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let pgm = fs::read(prefix.with_extension("pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n128 128\n255\n"));
    let raw = fs::read(prefix.with_extension("f32")).unwrap();
    assert_eq!(raw.len(), 128 * 128 * 4);
    let heights: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .filter(|h| !h.is_nan())
        .collect();
    let mut sorted = heights.clone();
    sorted.sort_by(f32::total_cmp);
    assert_eq!(sorted, vec![0.9, 0.95]);
}

#[test]
fn elevation_depth_mode_round_trips_through_the_rig() {
    let dir = tempfile::tempdir().unwrap();
    let image = humotion::DepthImage {
        width: 480,
        height: 360,
        camera_id: "right_front".into(),
        data: vec![1.5f32; 480 * 360],
    };
    let raw = dir.path().join("depth.raw");
    let meta = dir.path().join("depth.json");
    humotion::save_depth(&image, &raw, &meta).unwrap();
    let prefix = dir.path().join("map");
    let run = || {
        humotion(&[
            "elevation",
            "--depth",
            raw.to_str().unwrap(),
            "--meta",
            meta.to_str().unwrap(),
            "--root-position",
            "0",
            "0",
            "0.9",
            "--out",
            prefix.to_str().unwrap(),
        ])
    };
    let output = run();
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let first = fs::read(prefix.with_extension("f32")).unwrap();
    assert!(first.chunks_exact(4).any(|c| {
        let h = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        !h.is_nan()
    }));
    let output = run();
    assert_eq!(exit_code(&output), 0);
    assert_eq!(first, fs::read(prefix.with_extension("f32")).unwrap());
}

#[test]
fn perfect_tracking_rewards_hit_the_golden_values() {
    let dir = tempfile::tempdir().unwrap();
    let motion_path = dir.path().join("motion.json");
    humotion::save_motion(&perfect_sit_motion(), &motion_path).unwrap();
    let out = dir.path().join("rewards.csv");
    let output = humotion(&[
        "score-rewards",
        "--motion",
        motion_path.to_str().unwrap(),
        "--reference",
        motion_path.to_str().unwrap(),
        "--skeleton",
        &asset_str("skeletons/h1.json"),
        "--task",
        "SC",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + perfect_sit_motion().frames.len());
    assert_eq!(
        lines[0],
        "frame,r_pos,r_ori,r_root,r_wrist,r_w_to_o,r_object,r_action,r_vel,r_acc,r_energy,r_overall"
    );
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(fields[2].parse::<f64>().unwrap(), 20.0);
    assert_eq!(fields[3].parse::<f64>().unwrap(), 5.0);
    assert_eq!(fields[11].parse::<f64>().unwrap(), 26.0);
    // The object terms stay empty for a sitting task.
    assert_eq!(fields[5], "");
    assert_eq!(fields[6], "");
}

#[test]
fn unknown_task_code_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let motion_path = dir.path().join("motion.json");
    humotion::save_motion(&perfect_sit_motion(), &motion_path).unwrap();
    let output = humotion(&[
        "score-rewards",
        "--motion",
        motion_path.to_str().unwrap(),
        "--reference",
        motion_path.to_str().unwrap(),
        "--skeleton",
        &asset_str("skeletons/h1.json"),
        "--task",
        "XX",
        "--out",
        dir.path().join("rewards.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_text(&output).contains("XX"));
}

#[test]
fn eval_and_retarget_outputs_chain_without_manifest_collisions() {
    let dir = tempfile::tempdir().unwrap();
    let human = dir.path().join("human");
    fs::create_dir(&human).unwrap();
    write_human_corpus(&human, 1);
    let out = dir.path().join("out");
    let output = humotion(&copy_args(human.to_str().unwrap(), out.to_str().unwrap()));
    assert_eq!(exit_code(&output), 0, "{}", stderr_text(&output));
    let csv_path = dir.path().join("eval.csv");
    let output = humotion(&[
        "eval",
        "--in",
        out.to_str().unwrap(),
        "--scene",
        &asset_str("scenes/sit_chair.json"),
        "--skeleton",
        &asset_str("skeletons/h1.json"),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    let code = exit_code(&output);
    assert!(code == 0 || code == 1, "{}", stderr_text(&output));
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.lines().count() == 3, "manifest leaked into the corpus: {csv}");
}
