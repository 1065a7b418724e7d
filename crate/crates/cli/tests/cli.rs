use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_behavigram"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", "--out", path(dir)];
    args.extend_from_slice(extra);
    let o = bin(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn abcde(tmp: &TempDir) -> std::path::PathBuf {
    let dir = tmp.path().join("sess");
    simulate(&dir, &["--seed", "3"]);
    dir
}

#[test]
fn validate_lists_six_streams() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    let o = bin(&["validate", path(&dir)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["accel_rh", "accel_lh", "rssi_rh", "rssi_lh", "gaze", "markers"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing:\n{text}");
    }
}

#[test]
fn validate_reports_gaze_range_with_location() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    let gaze = dir.join("gaze.csv");
    let mut lines: Vec<String> = fs::read_to_string(&gaze).unwrap().lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[3].split(',').map(String::from).collect();
    fields[1] = "1.3".into();
    lines[3] = fields.join(",");
    fs::write(&gaze, lines.join("\n") + "\n").unwrap();
    let o = bin(&["validate", path(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("gaze.csv:4"), "{err}");
    assert!(err.contains("1.3"), "{err}");
}

#[test]
fn validate_missing_markers() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    fs::remove_file(dir.join("markers.csv")).unwrap();
    let o = bin(&["validate", path(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing required file"), "{}", stderr(&o));
}

#[test]
fn analyze_abcde_is_consistent() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    let out = tmp.path().join("out");
    let o = bin(&["analyze", path(&dir), "--out", path(&out), "--sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    for label in ["I ", "IIa", "IIb", "III", "IV"] {
        let line = report.lines().find(|l| l.starts_with(label)).unwrap();
        assert!(line.ends_with(" consistent"), "{line}");
    }
    for f in [
        "velocity.csv",
        "rssi_fused.csv",
        "proximity.csv",
        "entropy.csv",
        "low_entropy_mask.csv",
        "phase_summary.csv",
        "report.txt",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let sweep = fs::read_to_string(out.join("robustness.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 26);
    assert!(sweep.starts_with("setting,B10_W2,"));
}

#[test]
fn analyze_without_calibration_source() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("tr");
    simulate(&dir, &["--preset", "two-regime", "--seed", "1"]);
    let o = bin(&["analyze", path(&dir), "--out", path(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no calibration source"), "{}", stderr(&o));

    // Configured ranges are used instead; this trace stays near the patient
    // throughout, so the two windows give the same level.
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, "[calibration]\nnear = [0, 20]\nfar = [20, 40]\n").unwrap();
    let o = bin(&[
        "analyze",
        path(&dir),
        "--out",
        path(&tmp.path().join("o")),
        "--config",
        path(&cfg),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("inverted calibration"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, "[gaze]\nbinz = 3\n").unwrap();
    let o = bin(&[
        "analyze",
        path(&dir),
        "--out",
        path(&tmp.path().join("o")),
        "--config",
        path(&cfg),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("binz"), "{}", stderr(&o));
    let o = bin(&[
        "analyze",
        path(&dir),
        "--out",
        path(&tmp.path().join("o")),
        "--config",
        "/nonexistent.toml",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["analyze"]).status.code(), Some(2));
    assert_eq!(
        bin(&["simulate", "--out", "/tmp/x", "--preset", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bin(&["render", "x", "--out", "/tmp/x", "--variant", "fancy"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn render_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = bin(&["render", path(&dir), "--out", path(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["seed-3_extended.svg", "seed-3_simplified.svg"] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(x.starts_with(b"<svg"));
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn render_flags() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    let out = tmp.path().join("r");
    let o = bin(&[
        "render",
        path(&dir),
        "--out",
        path(&out),
        "--variant",
        "simplified",
        "--width",
        "800",
        "--height",
        "200",
        "--from",
        "10",
        "--to",
        "60",
        "--color-map",
        "green",
        "--no-labels",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!out.join("seed-3_extended.svg").exists());
    let svg = fs::read_to_string(out.join("seed-3_simplified.svg")).unwrap();
    assert!(svg.contains("width=\"800.000\""), "{}", &svg[..200]);
    assert!(!svg.contains("phase-label"));

    let o = bin(&["render", path(&dir), "--out", path(&out), "--from", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&[
        "render",
        path(&dir),
        "--out",
        path(&out),
        "--from",
        "500",
        "--to",
        "600",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sync_recovers_offset_and_aligns() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("sy");
    simulate(&dir, &["--preset", "sync", "--sync-offset", "-0.1", "--seed", "5"]);
    let out = tmp.path().join("aligned");
    let o = bin(&["sync", path(&dir), "--out", path(&out), "--max-lag", "0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("lags.toml")).unwrap();
    let lag: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("gaze = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((lag + 0.1).abs() <= 0.02, "{lag}");
    assert_eq!(bin(&["validate", path(&out)]).status.code(), Some(0));

    // The aligned copy has no residual lag.
    let again = tmp.path().join("again");
    let o = bin(&["sync", path(&out), "--out", path(&again)]);
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(again.join("lags.toml")).unwrap();
    let lag: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("gaze = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(lag.abs() <= 0.02, "{lag}");
}

#[test]
fn sync_without_segment() {
    let tmp = TempDir::new().unwrap();
    let dir = abcde(&tmp);
    let o = bin(&["sync", path(&dir), "--out", path(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sync"), "{}", stderr(&o));
}

#[test]
fn simulate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, &["--seed", "11"]);
    simulate(&b, &["--seed", "11"]);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8, "{names:?}");
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn simulate_from_spec_file() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("scenario.toml");
    fs::write(
        &spec,
        r#"seed = 2

[[phases]]
label = "IIa"
duration_s = 30

[[phases.segments]]
speed_rh = 0
speed_lh = 0
proximity = "near_patient"
gaze = { kind = "fixation", std = 0.002 }
"#,
    )
    .unwrap();
    let dir = tmp.path().join("s");
    let o = bin(&["simulate", "--spec", path(&spec), "--out", path(&dir)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let truth = fs::read_to_string(dir.join("ground_truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 2, "{truth}");

    fs::write(&spec, "seed = 2\nbogus = 1\n").unwrap();
    let o = bin(&["simulate", "--spec", path(&spec), "--out", path(&dir)]);
    assert_eq!(o.status.code(), Some(2));
}
