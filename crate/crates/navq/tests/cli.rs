use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use navq::formats::{read_json, ReportFile, WorldFile};
use navq::tables::{read_decay, read_reports, read_training_log};

fn navq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navq")).args(args).env_remove("NAV_SEED").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Trains on the default 10×10 world until the episode cap.
fn quick_checkpoint(dir: &Path, rule: &str) -> Output {
    navq(&[
        "train", "--rule", rule, "--seed", "1", "--out", p(dir),
        "--set", "max_episodes=3", "--set", "max_steps_per_episode=20",
    ])
}

#[test]
fn generate_world_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = navq(&["generate-world", "--domain", "forest", "--seed", "7", "--out", p(d),
            "--set", "width=100", "--set", "height=100", "--set", "goal=99,99", "--frame"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("obstacles") && stdout(&o).contains("seed 7"));
    }
    assert_eq!(fs::read(a.join("world.json")).unwrap(), fs::read(b.join("world.json")).unwrap());
    let frame = fs::read(a.join("frame.pgm")).unwrap();
    assert!(frame.starts_with(b"P5\n84 84\n255\n"));
    let world: WorldFile = read_json(&a.join("world.json")).unwrap();
    assert!(!world.obstacles.is_empty());
}

#[test]
fn zero_density_gives_empty_world() {
    let dir = tempfile::tempdir().unwrap();
    let o = navq(&["generate-world", "--out", p(dir.path()), "--set", "density=0"]);
    assert_eq!(code(&o), 0);
    let world: WorldFile = read_json(&dir.path().join("world.json")).unwrap();
    assert!(world.obstacles.is_empty());
}

#[test]
fn invalid_density_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let o = navq(&["generate-world", "--out", p(dir.path()), "--set", "density=-3"]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("density"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "seed = 3\nflavour = mint\n").unwrap();
    let o = navq(&["train", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("flavour"));
}

#[test]
fn training_cap_and_convergence_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let capped = dir.path().join("capped");
    let o = quick_checkpoint(&capped, "eddqn");
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(capped.join("checkpoint.json").is_file());
    assert_eq!(read_training_log(&capped.join("training.csv")).unwrap().len(), 3);
    let header = fs::read_to_string(capped.join("training.csv")).unwrap();
    assert!(header.starts_with("episode,steps,reward_sum,success,streak,loss_mean\n"));

    let done = dir.path().join("done");
    let o = navq(&["train", "--rule", "eddqn", "--seed", "1", "--out", p(&done), "--set", "success_streak=1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let log = read_training_log(&done.join("training.csv")).unwrap();
    assert!(log.last().unwrap().success);
}

#[test]
fn rules_give_different_logs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("ddqn"), dir.path().join("eddqn"));
    for (d, rule) in [(&a, "ddqn"), (&b, "eddqn")] {
        navq(&["train", "--rule", rule, "--seed", "1", "--out", p(d), "--set", "max_episodes=40"]);
    }
    let la = read_training_log(&a.join("training.csv")).unwrap();
    let lb = read_training_log(&b.join("training.csv")).unwrap();
    assert_ne!(la, lb);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_navq"))
        .args(["generate-world", "--out", p(dir.path())])
        .env("NAV_SEED", "42")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("seed 42"));
}

#[test]
fn evaluate_requires_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = navq(&["evaluate", "--out", p(dir.path()), "--checkpoint", p(&dir.path().join("missing.json"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoint"));
}

#[test]
fn single_mission_carries_weather() {
    let dir = tempfile::tempdir().unwrap();
    quick_checkpoint(dir.path(), "eddqn");
    let o = navq(&[
        "evaluate", "--out", p(dir.path()), "--single", "--side", "12", "--distance", "6",
        "--weather", "fog", "--intensity", "0.30", "--seed", "5", "--set", "max_steps_per_mission=200",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_reports(&dir.path().join("report.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].weather, "fog@0.3");
    let text = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(text.starts_with(
        "method,domain,weather,distance_m,time_s,completed,obstacles,predictions,corrections,random\n"
    ));
    let json: ReportFile = read_json(&dir.path().join("report.json")).unwrap();
    let report = &json.missions[0].report;
    assert_eq!(report.route.len() as u64, report.time_s + 1);
    assert!(dir.path().join("svg/01-single.svg").is_file());
}

#[test]
fn sequence_gives_ten_rows_in_order() {
    let dir = tempfile::tempdir().unwrap();
    quick_checkpoint(dir.path(), "eddqn");
    let o = navq(&["evaluate", "--out", p(dir.path()), "--seed", "2", "--set", "max_steps_per_mission=150"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_reports(&dir.path().join("report.csv")).unwrap().len(), 10);
    let json: ReportFile = read_json(&dir.path().join("report.json")).unwrap();
    let labels: Vec<&str> = json.missions.iter().map(|m| m.label.as_str()).collect();
    assert_eq!(labels, navq_core::eval::TEST_SEQUENCE);
    assert_eq!(fs::read_dir(dir.path().join("svg")).unwrap().count(), 10);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    quick_checkpoint(dir.path(), "ddqn");
    let ck = dir.path().join("checkpoint.json");
    let mut outputs = Vec::new();
    for w in ["1", "2"] {
        let out = dir.path().join(format!("w{w}"));
        let o = navq(&[
            "evaluate", "--checkpoint", p(&ck), "--out", p(&out), "--runs", "2", "--workers", w,
            "--set", "missions=F100,f30", "--set", "max_steps_per_mission=100",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push([1, 2].map(|k| fs::read(out.join(format!("run-00{k}/report.json"))).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0][0], outputs[0][1]);
}

#[test]
fn decay_blocks_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, z) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("z"));
    for d in [&a, &b] {
        assert_eq!(code(&navq(&["decay", "--seed", "3", "--out", p(d)])), 0);
    }
    assert_eq!(fs::read(a.join("decay.csv")).unwrap(), fs::read(b.join("decay.csv")).unwrap());
    let rows = read_decay(&a.join("decay.csv")).unwrap();
    assert_eq!(rows.iter().filter(|r| r.rule == "ddqn").count(), 500);
    assert_eq!(rows.iter().filter(|r| r.rule == "eddqn").count(), 500);
    assert_eq!(code(&navq(&["decay", "--updates", "0", "--out", p(&z)])), 0);
    let flat = read_decay(&z.join("decay.csv")).unwrap();
    assert_eq!(flat.len(), 2);
    assert!(flat.iter().all(|r| r.min == -0.04 && r.max == -0.04));
}
