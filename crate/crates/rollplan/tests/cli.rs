use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rollplan::logfile::{read_episode, write_episode};
use rollplan::mapfile::map_to_toml;
use rollplan_core::envmodel::FourArmLayout;

fn rollplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollplan")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path, ext: &str) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(ext))
        .collect();
    v.sort();
    v
}

#[test]
fn validate_map_accepts_the_exported_default() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.toml");
    fs::write(&path, map_to_toml(&FourArmLayout::default().build())).unwrap();
    let o = rollplan(&["validate-map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn validate_map_names_a_dangling_successor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    let text = map_to_toml(&FourArmLayout::default().build()).replacen("successors = [", "successors = [4242, ", 1);
    fs::write(&path, text).unwrap();
    let o = rollplan(&["validate-map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("4242"), "{}", stderr(&o));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(rollplan(&["validate-map", "/nonexistent/map.toml"]).status.code(), Some(2));
    assert_eq!(rollplan(&["run", "--vil", "sideways"]).status.code(), Some(2));
    assert_eq!(rollplan(&["run", "--vil", "easy", "--policy", "gnn:/nonexistent"]).status.code(), Some(2));
    assert_eq!(rollplan(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn run_reports_the_late_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let o = rollplan(&["run", "--vil", "late", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("vil-late single") && stdout.contains("vil-late cyclic"), "{stdout}");
    assert_eq!(files(dir.path(), ".log"), ["vil-late_cyclic.log", "vil-late_single.log"]);
    assert!(dir.path().join("plot_relative_motion_vil-late_cyclic.csv").exists());
}

#[test]
fn run_dumps_the_rollout() {
    let dir = tempfile::tempdir().unwrap();
    let o = rollplan(&["run", "--vil", "easy", "--mode", "single", "--dump-rollout", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("vil-easy_rollout.csv")).unwrap();
    assert!(trace.lines().count() > 10);
}

#[test]
fn batch_writes_two_logs_per_scenario_and_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = rollplan(&["batch", "--scenarios", "3", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(files(&out.join("episodes"), ".log").len(), 6);
    assert_eq!(files(&out.join("scenarios"), ".toml").len(), 3);
    for name in ["summary.md", "deviations.csv", "plot_velocity.csv", "plot_acceleration.csv", "plot_deviation_histogram.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let summary = fs::read_to_string(out.join("summary.md")).unwrap();

    let o = rollplan(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("summary.md")).unwrap(), summary);
}

#[test]
fn episode_logs_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = rollplan(&["run", "--vil", "late", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for mode in ["single", "cyclic"] {
        let text = fs::read_to_string(dir.path().join(format!("vil-late_{mode}.log"))).unwrap();
        let mpo = fs::read_to_string(dir.path().join(format!("vil-late_{mode}.mpo"))).unwrap();
        let log = read_episode(&text, &mpo).unwrap();
        assert_eq!(write_episode(&log), (text, mpo));
    }
}
