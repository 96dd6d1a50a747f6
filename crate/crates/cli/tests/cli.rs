use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_uncert")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

const QUDIT: &str = r#"{
  "schema": 1,
  "group": "cyclic:3",
  "metric_q": {"name": "discrete", "exponent": 1.0},
  "metric_p": {"name": "discrete", "exponent": 1.0},
  "t_grid": {"lo": 0.001, "hi": 1000.0, "points": 17}
}"#;

#[test]
fn curve_on_a_qudit_reaches_both_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUDIT);
    let out = run(&["curve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_rows(&dir.path().join("curve.csv"));
    assert_eq!(header, ["t", "energy", "dq", "dp", "envelope_bound"]);
    assert_eq!(rows.len(), 17);
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    assert!((first[2] - 2.0 / 3.0).abs() < 1e-3 && first[3] < 1e-3);
    assert!(last[2] < 1e-3 && (last[3] - 2.0 / 3.0).abs() < 1e-3);
    for r in &rows {
        assert!(r[4] <= r[3] + 1e-9, "envelope above the sweep: {r:?}");
    }
    assert!(!dir.path().join("curve.svg").exists(), "svg written without --svg");
}

#[test]
fn curve_outputs_are_deterministic_and_svg_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUDIT);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let st = run(&["curve", "--config", &cfg, "--out", out.to_str().unwrap(), "--svg"]);
        assert!(st.status.success());
    }
    let a = fs::read(out_a.join("curve.csv")).unwrap();
    let b = fs::read(out_b.join("curve.csv")).unwrap();
    assert_eq!(a, b);
    let svg = fs::read_to_string(out_a.join("curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg, fs::read_to_string(out_b.join("curve.svg")).unwrap());
}

#[test]
fn line_curve_keeps_the_product_near_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "line.json",
        r#"{
  "schema": 1,
  "group": "line:128:10.0",
  "metric_q": {"name": "absolute", "exponent": 2.0},
  "metric_p": {"name": "absolute", "exponent": 2.0},
  "t_grid": {"lo": 0.2, "hi": 5.0, "points": 7}
}"#,
    );
    let out = run(&["curve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_rows(&dir.path().join("curve.csv"));
    for r in &rows {
        assert!((r[2] * r[3] - 0.5).abs() < 1e-2, "dq*dp = {}", r[2] * r[3]);
    }
}

#[test]
fn set_overrides_reshape_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUDIT);
    let out = run(&[
        "curve",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "t_grid.points=5",
    ]);
    assert!(out.status.success());
    let (_, rows) = read_rows(&dir.path().join("curve.csv"));
    assert_eq!(rows.len(), 5);
}

#[test]
fn config_errors_exit_2_and_leave_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    let empty = write_config(
        dir.path(),
        "empty.json",
        r#"{"schema": 1, "group": "cyclic:3",
            "metric_q": {"name": "discrete", "exponent": 1.0},
            "metric_p": {"name": "discrete", "exponent": 1.0},
            "t_grid": {"values": []}}"#,
    );
    let out = run(&["curve", "--config", &empty, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let badgroup = write_config(
        dir.path(),
        "bad.json",
        r#"{"schema": 1, "group": "dodecahedron:5",
            "metric_q": {"name": "discrete", "exponent": 1.0},
            "metric_p": {"name": "discrete", "exponent": 1.0}}"#,
    );
    let out = run(&["mur-check", "--config", &badgroup, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let wrong_schema = write_config(dir.path(), "schema.json", r#"{"schema": 9}"#);
    let out = run(&["curve", "--config", &wrong_schema, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let entries: Vec<_> = fs::read_dir(&out_dir).unwrap().collect();
    assert!(entries.is_empty(), "failed runs left files: {entries:?}");
}

#[test]
fn constant_branches_print_values_and_methods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "constant": {"alpha": 2.0, "beta": 2.0, "n": 3}}"#,
    );
    let out = run(&["constant", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("= 1.5") && text.contains("closed-form"), "{text}");

    let out = run(&["constant", "--config", &cfg, "--set", r#"constant.alpha="inf""#, "--set", "constant.n=2"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success() && text.contains("2.4048255576"), "{text}");

    let out = run(&[
        "constant",
        "--config",
        &cfg,
        "--set",
        r#"constant.alpha="inf""#,
        "--set",
        r#"constant.beta="inf""#,
        "--set",
        "constant.n=1",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success() && text.contains("= inf"), "{text}");
}

#[test]
fn unsupported_constant_branch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "constant": {"alpha": 3.0, "beta": 4.0, "n": 2}}"#,
    );
    let out = run(&["constant", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn mur_check_reports_pass_and_the_sharp_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"schema": 1, "group": "cyclic:2",
            "metric_q": {"name": "discrete", "exponent": 1.0},
            "metric_p": {"name": "discrete", "exponent": 1.0},
            "mur_check": {"samples": 20}}"#,
    );
    let out = run(&["mur-check", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mur_check.json")).unwrap())
            .unwrap();
    assert_eq!(doc["samples"], 20);
    assert_eq!(doc["pass"], true);
    assert!(doc["max_abs_deviation"].as_f64().unwrap() < 1e-8);
    let pair = doc["endpoint_pair"].as_array().unwrap();
    assert!(pair[0].as_f64().unwrap().abs() < 1e-12);
    assert!((pair[1].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn clone_emits_the_ellipse_with_the_exact_copy_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cl.json",
        r#"{"schema": 1, "clone": {"n": 2, "steps": 11}}"#,
    );
    let out = run(&["clone", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--svg"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_rows(&dir.path().join("clone_ellipse.csv"));
    assert_eq!(header, ["a", "b", "dq", "dp"]);
    assert_eq!(rows.len(), 11);
    let first = &rows[0];
    assert!((first[0] - 1.0).abs() < 1e-12 && first[1].abs() < 1e-12);
    assert!(first[2].abs() < 1e-12 && (first[3] - 0.5).abs() < 1e-9);
    let (bh, brows) = read_rows(&dir.path().join("optimal_boundary.csv"));
    assert_eq!(bh, ["dq", "dp"]);
    assert!(!brows.is_empty());
    assert!(dir.path().join("clone.svg").exists());
}

#[test]
fn clone_dimension_out_of_range_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cl.json",
        r#"{"schema": 1, "clone": {"n": 9}}"#,
    );
    let out = run(&["clone", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn meanfield_gaps_stay_tiny_for_matched_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mf.json",
        r#"{"schema": 1,
            "meanfield": {"alpha": 1.0, "beta": 1.0, "n_list": [2, 3, 4]},
            "t_grid": {"lo": 0.01, "hi": 100.0, "points": 17}}"#,
    );
    let out = run(&["meanfield", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for n in [2, 3, 4] {
        assert!(dir.path().join(format!("meanfield_n{n}.csv")).exists());
    }
    let (_, gaps) = read_rows(&dir.path().join("meanfield_gaps.csv"));
    for row in &gaps {
        assert!(row[1] < 1e-10, "gap {row:?}");
    }
    let (_, limit) = read_rows(&dir.path().join("meanfield_limit.csv"));
    let first = &limit[0];
    let last = &limit[limit.len() - 1];
    assert!(first[0].abs() < 1e-12 && (first[1] - 0.5).abs() < 1e-12);
    assert!((last[0] - 0.5).abs() < 1e-12 && last[1].abs() < 1e-12);
}

#[test]
fn meanfield_rejects_oversized_strings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mf.json",
        r#"{"schema": 1, "meanfield": {"alpha": 1.0, "beta": 1.0, "n_list": [13]}}"#,
    );
    let out = run(&["meanfield", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
