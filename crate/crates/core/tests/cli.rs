use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_passive-isac"))
}

#[test]
fn beampattern_run_writes_tables_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["beampattern", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("beampattern.csv").exists());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 3"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 1\ncalibration_trials = 2000\n[design]\nschemes = [\"comm_only\"]\nn_candidates = 50\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["calibrate", "--pfa", "0.02", "--seed", "8", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("calibrate.csv")).unwrap();
    assert!(csv.contains("# seed: 8"));
    assert!(csv.contains("comm_only"));
}

#[test]
fn infeasible_configuration_exits_two() {
    let out = bin().args(["roc", "--pfa", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["calibrate", "--pfa", "0.001", "--scale", "desk", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    // 1e4 desk calibration trials at pfa 1e-3 meet the floor of ten exceedances
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "calibration_trials = 100\npfa = 0.01\n").unwrap();
    let out = bin().args(["calibrate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unparsable_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.toml");
    std::fs::write(&cfg, "seed = \"not a number\"\n").unwrap();
    let out = bin().args(["roc", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sinr_target_beyond_the_budget_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hard.toml");
    std::fs::write(&cfg, "[design]\ngamma_c_db = 90.0\nschemes = [\"max_pd\"]\n").unwrap();
    let out = bin()
        .args(["beampattern", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
