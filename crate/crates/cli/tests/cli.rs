use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratings-xva")).args(args).output().unwrap()
}

fn write_variant(dir: &Path, from: &str, to: &str) -> PathBuf {
    let text = std::fs::read_to_string(shipped("irs_paper.cfg")).unwrap();
    assert!(text.contains(from));
    let path = dir.join("variant.cfg");
    std::fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn run_writes_tables_and_exits_zero() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        shipped("irs_paper.cfg").to_str().unwrap(),
        "--paths",
        "2000",
        "--seed",
        "3",
        "--out",
        out.path().to_str().unwrap(),
        "--dump-paths",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("IRS alpha = 0 collateral = none paths = 2000"));
    for name in ["irs_alpha0_none.csv", "irs_alpha1_exponential.txt", "irs_alpha0_paths.csv"] {
        assert!(out.path().join(name).exists(), "{name}");
    }
    let dump = std::fs::read_to_string(out.path().join("irs_alpha1_paths.csv")).unwrap();
    assert!(dump.lines().last().unwrap().starts_with("99,"));
}

#[test]
fn same_command_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(&[
            "run",
            shipped("cds_paper.cfg").to_str().unwrap(),
            "--paths",
            "1000",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let file = "cds_alpha1_linear.csv";
    assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap());
}

#[test]
fn validation_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_row = write_variant(dir.path(), "[0.90, 0.08, 0.017, 0.003]", "[0.90, 0.08, 0.017, 0.004]");
    let o = run(&["run", bad_row.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1"));

    let unknown_key = write_variant(dir.path(), "sigma = 0.01", "sigma = 0.01\nvol = 0.02");
    let o = run(&["run", unknown_key.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vol"));

    let o = run(&["run", shipped("irs_paper.cfg").to_str().unwrap(), "--paths", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn embedding_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(shipped("irs_paper.cfg"))
        .unwrap()
        .replace("[0.90, 0.08, 0.017, 0.003]", "[0.0, 1.0, 0.0, 0.0]")
        .replace("[0.05, 0.85, 0.09,  0.01]", "[1.0, 0.0, 0.0, 0.0]");
    let path = dir.path().join("periodic.cfg");
    std::fs::write(&path, text).unwrap();
    let o = run(&["run", path.to_str().unwrap(), "--paths", "100"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_config_exits_one() {
    let o = run(&["run", "/definitely/not/here.cfg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_prints_generators() {
    let o = run(&["check", shipped("cds_paper.cfg").to_str().unwrap()]);
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("reference generator"));
    assert!(s.contains("long-run mean"));
}
