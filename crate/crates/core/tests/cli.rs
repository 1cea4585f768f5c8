use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kq")).args(args).output().expect("kq runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn single_tyz_study_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &format!(r#"{{"studies": [{{"kind": "tyz"}}], "out_dir": "{}"}}"#, out.display()));
    let res = kq(&["run", &cfg]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, ["01_tyz.csv", "01_tyz.json"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("01_tyz.json")).unwrap()).unwrap();
    assert_eq!(report["study"], "tyz");
    assert_eq!(report["pass"], true);
    assert_eq!(report["inputs"]["kgrid"], serde_json::json!([16, 32, 64, 128, 256]));
}

#[test]
fn flat_direction_rel_err_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"studies": [{{"kind": "distance", "u0": {{"coeffs": [0.1, -0.1]}}, "u1": {{"coeffs": [0.1, -0.1], "constant": -0.7}}}}],
               "out_dir": "{}"}}"#,
            out.display()
        ),
    );
    let res = kq(&["run", &cfg]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&out.join("01_distance.csv"));
    assert_eq!(rows.len(), 5);
    for r in rows {
        let k = r[0];
        assert!((r[4] - ((1.0 + 1.0 / k).sqrt() - 1.0)).abs() <= 1e-9, "k = {k}: {}", r[4]);
    }
}

#[test]
fn non_convex_potential_exits_2_naming_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"studies": [{"kind": "gradient", "u0": {"coeffs": [0, -40]}}], "out_dir": "o"}"#);
    let res = kq(&["run", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("[0.0, -40.0]"), "{err}");
    assert!(err.contains("config.json:1:"), "{err}");
}

#[test]
fn syntax_error_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\"studies\": [\n  {\"kind\": \"tyz\",}\n], \"out_dir\": \"o\"}");
    let res = kq(&["run", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("config.json:2:"));
}

#[test]
fn invalid_study_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"studies": [{"kind": "distance", "kgrid": [2, 8]}], "out_dir": "o"}"#);
    assert_eq!(kq(&["run", &cfg]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"studies": [{"kind": "sandwich"}], "out_dir": "o"}"#);
    assert_eq!(kq(&["run", &cfg]).status.code(), Some(2));
    assert_eq!(kq(&["run", "/nonexistent/config.json"]).status.code(), Some(2));
}

#[test]
fn tolerance_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &format!(r#"{{"studies": [{{"kind": "distance", "kgrid": [8, 16], "tol": 1e-6}}], "out_dir": "{}"}}"#, out.display()));
    let res = kq(&["run", &cfg]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL distance"));
    assert!(out.join("01_distance.csv").exists());
}

#[test]
fn seeded_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let cfg = write_config(
            dir.path(),
            &format!(r#"{{"studies": [{{"kind": "sandwich", "samples": 3, "kgrid": [8]}}, {{"kind": "ineq1", "samples": 5}}], "out_dir": "{}", "seed": 7}}"#, out.display()),
        );
        assert_eq!(kq(&["run", &cfg]).status.code(), Some(0));
        ["01_sandwich.csv", "01_sandwich.json", "02_ineq1.csv", "02_ineq1.json"].map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn study_subcommand_prints_csv() {
    let res = kq(&["study", "distance", "--k", "8,16", "--u1", "0.5,-0.5", "--tol", "0.1"]);
    assert_eq!(res.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.starts_with("k,value,limit,abs_err,rel_err\n8,"));
    assert_eq!(stdout.lines().count(), 3);
    assert_eq!(kq(&["study", "distance", "--k", "8,16"]).status.code(), Some(1));
    assert_eq!(kq(&["study", "nope"]).status.code(), Some(2));
    assert_eq!(kq(&["study", "distance", "--u1", "0,-40"]).status.code(), Some(2));
}

#[test]
fn density_and_dist_subcommands() {
    let res = kq(&["density", "--k", "4", "--u", "", "--points", "3"]);
    assert_eq!(res.status.code(), Some(0));
    for line in String::from_utf8_lossy(&res.stdout).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - 5.0).abs() < 1e-10 && (v[2] - 5.0).abs() < 1e-12);
    }
    let res = kq(&["dist", "--u0", "", "--u1", r#"{"coeffs": [], "constant": 0.25}"#, "--k", "8"]);
    assert_eq!(res.status.code(), Some(0));
    let out = String::from_utf8_lossy(&res.stdout);
    let inf: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((inf - 0.25).abs() < 1e-15);
}
