use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn isac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("exp.json");
    let text = format!(
        r#"{{"schemes": ["tri_hybrid", "pa_hybrid_4x4"], "seeds": [0, 1],
            "system": {{"elements_per_rhs": 8}}, "optimizer": {{"max_outer": 3}},
            "grid_resolution_deg": 5.0, "output_dir": {:?}}}"#,
        dir.join("out").to_str().unwrap()
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_then_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = isac(&["run", "--config", &config, "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = dir.path().join("out/runs");
    assert_eq!(fs::read_dir(&runs).unwrap().count(), 4);
    assert!(dir.path().join("out/aggregate.csv").exists());

    for scheme in ["tri_hybrid", "pa_hybrid_4x4"] {
        let checkpoint = runs.join(format!("{scheme}__base__seed1.json"));
        let csv = dir.path().join(format!("{scheme}.csv"));
        let out = isac(&[
            "pattern",
            "--config",
            &config,
            "--checkpoint",
            checkpoint.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.contains("# seed: 1"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 19 * 72);
    }
}

#[test]
fn seed_offset_and_out_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let other = dir.path().join("elsewhere");
    let out = isac(&["run", "--config", &config, "--seed-offset", "5", "--out", other.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(other.join("runs/tri_hybrid__base__seed6.json").exists());
}

#[test]
fn pattern_rejects_foreign_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    assert!(isac(&["run", "--config", &config]).status.success());
    let checkpoint = dir.path().join("out/runs/tri_hybrid__base__seed0.json");
    let other = dir.path().join("other.json");
    fs::write(&other, r#"{"schemes": ["tri_hybrid"], "seeds": [0], "system": {"elements_per_rhs": 12}}"#).unwrap();
    let out = isac(&["pattern", "--config", other.to_str().unwrap(), "--checkpoint", checkpoint.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"schemes": ["tri_hybrid"], "seeds": [0], "foo": 1}"#).unwrap();
    let out = isac(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("foo"));
    let out = isac(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_passes_on_small_dims() {
    let out = isac(&["gradcheck", "--dims", "2,2,4,2", "--seeds", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    assert_eq!(isac(&["gradcheck", "--dims", "2,2,4"]).status.code(), Some(2));
}
