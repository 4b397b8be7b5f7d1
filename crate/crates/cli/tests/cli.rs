use std::path::Path;
use std::process::{Command, Output};

fn ncbm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncbm"))
        .args(args)
        .current_dir(dir)
        .env_remove("NCBM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Last CSV column of the single data row.
fn single_value(o: &Output) -> f64 {
    assert!(o.status.success(), "{}", stderr(o));
    let text = stdout(o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].ends_with(",value"));
    lines[1].rsplit(',').next().unwrap().parse().unwrap()
}

#[test]
fn density_examples() {
    let dir = tempfile::tempdir().unwrap();
    let v = single_value(&ncbm(&["density", "--name", "survival", "--n", "2", "--t", "1", "--x", "0,2"], dir.path()));
    assert!((v - 0.842_700_792_949_714_9).abs() < 1e-10, "{v}");
    let v = single_value(&ncbm(&["density", "--name", "gue", "--n", "1", "--t", "1", "--x", "0"], dir.path()));
    assert!((v - 0.398_942_280_401_432_7).abs() < 1e-12, "{v}");
    let v = single_value(&ncbm(&["density", "--name", "f", "--n", "2", "--t", "1", "--x", "0,2", "--y", "0,2"], dir.path()));
    assert!((v - 0.156_240).abs() < 5e-7, "{v}");
}

#[test]
fn density_grid_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncbm(&["density", "--name", "p", "--t", "1", "--s", "0.5", "--x", "-1,1", "--y", "-1,0.5", "--y", "0,1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("x1,x2,y1,y2,value\n"));
    assert_eq!(text.lines().count(), 3);

    let o = ncbm(&["density", "--name", "nope", "--x", "0"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nope"));
    let o = ncbm(&["density", "--name", "survival", "--t", "1", "--x", "0,1", "--y", "0,1"], dir.path());
    assert!(!o.status.success());
    let o = ncbm(&["density", "--name", "g", "--t", "1", "--x", "0,1", "--y", "0,1"], dir.path());
    assert!(stderr(&o).contains("--horizon"));
}

#[test]
fn simulate_is_deterministic_and_writes_only_its_output() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let o = ncbm(&["simulate", "--model", "noncolliding", "--n", "3", "--steps", "128", "--seed", "11", "--out", name], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("0 failed"));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with(b"time,x1,x2,x3\n"));
    let mut names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["a.csv", "b.csv"]);
}

#[test]
fn xit_ends_real() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncbm(&["simulate", "--model", "xit", "--n", "2", "--horizon", "1", "--steps", "16", "--seed", "4", "--out", "x.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    let imag: Vec<f64> = header.iter().zip(&last).filter(|(h, _)| h.starts_with("im_")).map(|(_, v)| *v).collect();
    assert_eq!(imag.len(), 4);
    assert!(imag.iter().all(|v| *v == 0.0));
    let mid: Vec<f64> = text.lines().nth(8).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_ne!(mid[4], 0.0);
}

#[test]
fn one_particle_increment_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncbm(&["simulate", "--model", "dyson", "--n", "1", "--steps", "2048", "--reps", "4", "--seed", "8", "--out", "runs"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("increment variance")).map(str::to_string).expect("variance line");
    assert!(line.ends_with(": ok"), "{line}");
    assert_eq!(std::fs::read_dir(dir.path().join("runs")).unwrap().count(), 4);
}

#[test]
fn seed_sources_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--model", "gue", "--n", "2", "--steps", "4", "--out", "g.csv"];
    let o = ncbm(&args, dir.path());
    assert!(stderr(&o).contains("# random"), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_ncbm")).args(args).current_dir(dir.path()).env("NCBM_SEED", "99").output().unwrap();
    assert!(stderr(&o).contains("seed = 99  # env"), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_ncbm"))
        .args(args)
        .args(["--seed", "5"])
        .current_dir(dir.path())
        .env("NCBM_SEED", "99")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("seed = 5  # flag"));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "# test run\nmodel = dyson\nn = 3\nsteps = 64\nseed = 12\nout = c.csv\n").unwrap();
    let o = ncbm(&["simulate", "--config", "run.conf", "--steps", "32"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("n = 3  # file"));
    assert!(err.contains("steps = 32  # flag"));
    assert!(err.contains("horizon = 1  # default"));
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.starts_with("time,x1,x2,x3\n"));
    assert_eq!(text.lines().count(), 34);

    std::fs::write(dir.path().join("bad.conf"), "model = dyson\nout = d.csv\nstepz = 3\n").unwrap();
    let o = ncbm(&["simulate", "--config", "bad.conf"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("stepz"));
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON report on stdout")
}

#[test]
fn verify_one_particle_suites_are_green() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncbm(&["verify", "hc", "--n", "1", "--reps", "1000", "--seed", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&o);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["green"], true);
    assert_eq!(r["config"]["seed"], "1");

    let o = ncbm(&["verify", "imhof", "--n", "1", "--reps", "500", "--steps", "64", "--seed", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(&o)["green"], true);
}

#[test]
fn red_verify_names_the_failing_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncbm(&["verify", "hc", "--n", "2", "--reps", "200", "--se-window", "0.001", "--seed", "3", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("failing statistic: hc x="), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["green"], false);
    assert!(!r["failing"].as_array().unwrap().is_empty());
}

#[test]
fn verify_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "theorem22", "--n", "2", "--reps", "300", "--steps", "64", "--seed", "21"];
    let a = ncbm(&args, dir.path());
    let b = ncbm(&args, dir.path());
    assert!(a.status.code().is_some());
    assert_eq!(a.stdout, b.stdout);
    let o = ncbm(&["verify", "kernels", "--n", "2"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("does not take --n"));
}

#[test]
fn verify_matrix_agreement_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncbm(&["verify", "theorem22", "--n", "2", "--horizon", "1", "--reps", "10000", "--seed", "20261018"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&o);
    let tests = r["report"]["attempts"].as_array().unwrap().last().unwrap()["tests"].as_array().unwrap().clone();
    assert_eq!(tests.len(), 14);
    assert!(tests.iter().all(|t| t["p_value"].as_f64().is_some()));
}
