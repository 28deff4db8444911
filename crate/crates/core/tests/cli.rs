use std::path::Path;
use std::process::{Command, Output};

fn ubw1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ubw1")).args(args).env("UBW1_THREADS", "2").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn measures(dir: &Path) -> (String, String) {
    let a = write(dir, "a.json", r#"{"points": [[0,0],[1,0],[0,1]], "metric": "euclidean", "weights": [1, 0.5, 0]}"#);
    let b = write(dir, "b.json", r#"{"points": [[0,0],[1,0],[0,1]], "metric": "euclidean", "weights": [0, 1, 2]}"#);
    (a, b)
}

/// Data lines of a CSV file written by the tool, comment lines dropped.
fn csv_rows(path: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn disc_eval_prints_value() {
    let o = ubw1(&["disc", "eval", "--model", "hellinger", "--m0", "1", "--m1", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-12);
}

#[test]
fn negative_mass_is_a_validation_error() {
    let o = ubw1(&["disc", "eval", "--model", "tv", "--m0", "-1", "--m1", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nonnegative"));
}

#[test]
fn unknown_model_and_bad_arguments_exit_2() {
    assert_eq!(ubw1(&["disc", "eval", "--model", "nope", "--m0", "1", "--m1", "1"]).status.code(), Some(2));
    assert_eq!(ubw1(&["disc", "eval", "--model", "tv"]).status.code(), Some(2));
    assert_eq!(ubw1(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn disc_limits_of_tv() {
    let o = ubw1(&["disc", "limits", "--model", "tv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("L0 2.0") && out.contains("L1 2.0"), "{out}");
}

#[test]
fn mismatched_spaces_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = measures(dir.path());
    let c = write(dir.path(), "c.json", r#"{"points": [[0,0],[2,0],[0,1]], "metric": "euclidean", "weights": [1, 1, 1]}"#);
    let o = ubw1(&["solve", "--rho0", &a, "--rho1", &c, "--model", "hellinger"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SpaceMismatch"));
}

#[test]
fn decide_reports_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "nd.json", r#"{"h_s": {"breakpoints": [0, 1, 2, 3], "values": [0, 1, 1.5, 1.75]}}"#);
    let o = ubw1(&["decide", "--model-file", &m]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("NO"), "{}", stdout(&o));

    let o = ubw1(&["decide", "--model", "hellinger"]);
    assert!(stdout(&o).starts_with("YES"), "{}", stdout(&o));
}

#[test]
fn solve_then_dynamic_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = measures(dir.path());
    let sol = dir.path().join("sol.json");
    let sol = sol.to_str().unwrap();
    let o = ubw1(&["solve", "--rho0", &a, "--rho1", &b, "--model", "hellinger", "--out", sol]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sol).unwrap()).unwrap();
    let primal = json["primal_value"].as_f64().unwrap();
    let dual = json["dual_value"].as_f64().unwrap();
    assert!(dual <= primal + 1e-9 && primal - dual < 1e-6);

    let traj = dir.path().join("traj.csv");
    let traj = traj.to_str().unwrap();
    let o = ubw1(&["dynamic", "--from-solution", sol, "--out", traj]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(traj);
    assert_eq!(rows.len(), 3 * 129);
    let first_m: f64 = rows[0][2].parse().unwrap();
    assert!(first_m >= 0.0);

    let o = ubw1(&["dynamic", "--from-solution", sol, "--hd", "tv", "--out", traj]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ModelMismatch"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = measures(dir.path());
    let run = |name: &str, threads: &str| {
        let p = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_ubw1"))
            .args(["solve", "--rho0", &a, "--rho1", &b, "--model", "jensen_shannon", "--out", p.to_str().unwrap()])
            .env("UBW1_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("s1.json", "1"), run("s2.json", "4"));
}

#[test]
fn flow_point_and_table() {
    let o = ubw1(&["flow", "--hd", "hellinger", "--t", "0.5", "--z", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    // Hellinger: F_t(z) = z / (1 + t z).
    assert!((v - 2.0 / 3.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow.csv");
    let out = out.to_str().unwrap();
    let o = ubw1(&["flow", "table", "--hd", "hellinger", "--grid", "-2:2:5", "--t", "0,0.5,1", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("# hd = hellinger"));
    let rows = csv_rows(out);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap());
    }
}

#[test]
fn reconstruct_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let out = out.to_str().unwrap();
    let o = ubw1(&["reconstruct", "--model", "hellinger", "--grid", "-0.9:0.9:7", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in csv_rows(out) {
        let z: f64 = r[0].parse().unwrap();
        let q: f64 = r[1].parse().unwrap();
        assert!((q + z * z).abs() < 1e-6, "z = {z}, q = {q}");
    }
}

#[test]
fn dirac_and_phase() {
    let o = ubw1(&["dirac", "--model", "tv", "--L", "1", "--m00", "1", "--m0L", "0", "--m10", "0", "--m1L", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((json["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phase.csv");
    let out = out.to_str().unwrap();
    let o = ubw1(&["dirac", "phase", "--model", "hellinger", "--Lgrid", "0.1:1:3", "--ratiogrid", "0.5:2:3", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_rows(out).len(), 9);
}

#[test]
fn semicoupling_of_tv() {
    let o = ubw1(&["sc", "--model", "tv", "--dx", "1", "--m0", "1", "--m1", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["primal 1.0", "dual 1.0"]);
}

#[test]
fn selftest_single_criterion() {
    let o = ubw1(&["selftest", "--only", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}
