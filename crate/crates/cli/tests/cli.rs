use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn armshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armshift"))
        .args(args)
        .current_dir(root())
        .env("ARMSHIFT_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn trial_prints_a_record() {
    let o = armshift(&["--posture", "supine", "trial", "--index", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["trial"], 0);
    assert_eq!(v["seed"], 1000);
    assert!(v["success"].is_boolean());
    assert_eq!(v["out_of_range"].as_array().unwrap().len(), 4);
}

#[test]
fn seed_flag_moves_the_trial_seed() {
    let o = armshift(&[
        "--posture",
        "supine",
        "--seed",
        "7",
        "trial",
        "--index",
        "2",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 9);
}

#[test]
fn campaign_writes_files_and_replays_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = armshift(&[
        "--config",
        "configs/sitting.toml",
        "--trials",
        "3",
        "--out",
        out,
        "campaign",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("sitting"));
    for f in ["trials.csv", "timing.csv", "summary.txt", "traces.jsonl"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let rows = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);

    let traces = dir.path().join("traces.jsonl");
    let o = armshift(&[
        "--config",
        "configs/sitting.toml",
        "replay",
        traces.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 with violations"));
}

#[test]
fn age_group_is_applied() {
    let o = armshift(&[
        "--posture",
        "supine",
        "--age-group",
        "80+",
        "--trials",
        "2",
        "campaign",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("80+"));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(
        !armshift(&["--posture", "supine", "--age-group", "90-99", "trial"])
            .status
            .success()
    );
    assert!(
        !armshift(&["--posture", "supine", "--trials", "0", "campaign"])
            .status
            .success()
    );
    assert!(!armshift(&["trial"]).status.success());
    let o = armshift(&[
        "--config",
        "configs/supine.toml",
        "--posture",
        "sitting",
        "trial",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("conflicts"));
}

#[test]
fn grasp_lists_scored_grasps() {
    let o = armshift(&["--posture", "sitting", "grasp"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let de = serde_json::Deserializer::from_str(&text).into_iter::<serde_json::Value>();
    let grasps: Vec<_> = de.map(|v| v.unwrap()).collect();
    assert!(!grasps.is_empty());
    for g in &grasps {
        let w = g["width"].as_f64().unwrap();
        assert!((0.02..=0.10).contains(&w));
        assert_eq!(g["segment"], "forearm");
    }
}

#[test]
fn plan_emits_waypoint_records() {
    let o = armshift(&[
        "--posture",
        "supine",
        "plan",
        "--from",
        "0,0,0.3,0.3",
        "--to",
        "0.2,0.1,0.4,0.6",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines.len() >= 2);
}
