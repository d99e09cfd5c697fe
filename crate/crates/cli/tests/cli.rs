use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn roadheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadheat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn case(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .join("scenario.toml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn purchased(report: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix("purchased energy"))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .expect("report has a purchased-energy line")
}

#[test]
fn zero_duration_gives_an_empty_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = roadheat(&[
        "run",
        case("case1_morning").to_str().unwrap(),
        "--duration",
        "0",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert_eq!(purchased(&report), 0.0);
    assert!(
        report.contains("voltage fluctuation   0.0000 V"),
        "{report}"
    );
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1);
}

#[test]
fn runs_are_byte_identical_and_battery_lowers_cost() {
    let config = case("case2_evening");
    let config = config.to_str().unwrap();
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut reports = Vec::new();
    for d in &dirs {
        let o = roadheat(&[
            "run",
            config,
            "--duration",
            "60",
            "--threads",
            "2",
            "--log-candidates",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(stdout(&o));
    }
    for name in [
        "trajectory.csv",
        "thermal.csv",
        "line_profile.csv",
        "cable_profile.csv",
        "planning_log.csv",
    ] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between runs");
    }
    let d = tempfile::tempdir().unwrap();
    let o = roadheat(&[
        "run",
        config,
        "--duration",
        "60",
        "--no-battery",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(purchased(&stdout(&o)) > purchased(&reports[0]));
}

#[test]
fn comparing_a_scenario_with_itself_shows_no_difference() {
    let config = case("case1_morning");
    let config = config.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("diff.csv");
    let o = roadheat(&[
        "compare",
        config,
        config,
        "--duration",
        "30",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",0.0")), "{text}");
}

#[test]
fn oracles_pass_with_exit_zero() {
    for which in [
        &["oracle", "heat"][..],
        &["oracle", "ladder", "--size", "2000"],
        &["oracle", "enumeration", "--size", "1"],
    ] {
        let o = roadheat(which);
        assert_eq!(o.status.code(), Some(0), "{which:?}: {}", stdout(&o));
        assert!(stdout(&o).contains("PASS"));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = roadheat(&["run", "does/not/exist.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cannot read does/not/exist.toml"), "{err}");
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[grid]\nline_lenght_m = 100.0\n").unwrap();
    let o = roadheat(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diverging_power_flow_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let src = case("case1_morning");
    for entry in fs::read_dir(src.parent().unwrap()).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    let config = dir.path().join("scenario.toml");
    let mut text = fs::read_to_string(&config).unwrap();
    // a cable load this wide exceeds what the line can deliver
    text.push_str("\n[grid]\ncable_load_width_m = 10.0\n");
    fs::write(&config, text).unwrap();
    let out = dir.path().join("out");
    let o = roadheat(&[
        "run",
        config.to_str().unwrap(),
        "--duration",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
