use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hrscore(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrscore"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> &Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn config(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn csv(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn simulate_pareto(dir: &Path, d: &str, n: &str) {
    ok(&hrscore(&["simulate", "--d", d, "--n", n, "--design", "pareto", "--seed", "7", "--out", "s.csv"], dir));
}

#[test]
fn simulate_writes_samples_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    simulate_pareto(dir.path(), "5", "100");
    let rows = csv(&dir.path().join("s.csv"));
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.len() == 5 && r.iter().any(|v| *v > 1.0)));
    let manifest = read_json(dir.path().join("s.manifest.json"));
    assert_eq!(manifest["n_u"], 100);
    assert_eq!(manifest["source"], "exact_pareto");
    assert_eq!(manifest["seed"], 7);
    assert!(manifest["quantile"].is_null());

    let first = fs::read(dir.path().join("s.csv")).unwrap();
    simulate_pareto(dir.path(), "5", "100");
    assert_eq!(first, fs::read(dir.path().join("s.csv")).unwrap());
}

#[test]
fn simulate_maxstable_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = hrscore(
        &["simulate", "--d", "10", "--n", "4000", "--design", "maxstable", "--quantile", "0.95", "--seed", "1", "--out", "m.csv"],
        dir.path(),
    );
    ok(&out);
    let manifest = read_json(dir.path().join("m.manifest.json"));
    let n_u = manifest["n_u"].as_u64().unwrap() as f64;
    assert!((0.08..0.17).contains(&(n_u / 4000.0)), "retention {}", n_u / 4000.0);
    assert_eq!(manifest["source"], "max_stable_thresholded");
    assert_eq!(manifest["quantile"], 0.95);
    assert_eq!(csv(&dir.path().join("m.csv")).len() as f64, n_u);
}

#[test]
fn simulate_rejects_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let missing_q = hrscore(&["simulate", "--d", "3", "--n", "10", "--design", "maxstable", "--out", "x.csv"], dir.path());
    assert_eq!(missing_q.status.code(), Some(2));
    let bad_d = hrscore(&["simulate", "--d", "1", "--n", "10", "--out", "x.csv"], dir.path());
    assert_eq!(bad_d.status.code(), Some(2));
    let unknown = hrscore(&["simulate", "--d", "3", "--n", "10", "--design", "gauss", "--out", "x.csv"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
    let no_command = hrscore(&[], dir.path());
    assert_eq!(no_command.status.code(), Some(2));
}

#[test]
fn fit_reports_and_writes_estimate() {
    let dir = tempfile::tempdir().unwrap();
    simulate_pareto(dir.path(), "5", "300");
    let out = hrscore(&["fit", "--data", "s.csv", "--out", "e.json"], dir.path());
    let summary = stdout_json(ok(&out));
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["zero_ratio"], 0.0);
    let est = read_json(dir.path().join("e.json"));
    assert_eq!(est["d"], 5);
    assert_eq!(est["mu"].as_array().unwrap().len(), 5);
    assert_eq!(est["lambda_upper"].as_array().unwrap().len(), 10);
    assert_eq!(est["lambda_upper"][0][0], 1);
    assert_eq!(est["objective"], summary["objective"]);

    let huge = hrscore(&["fit", "--data", "s.csv", "--r", "1e6", "--out", "e.json"], dir.path());
    assert_eq!(stdout_json(ok(&huge))["zero_ratio"], 1.0);
}

#[test]
fn fit_names_the_bad_cell() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "1.5,2\n3,abc\n").unwrap();
    let out = hrscore(&["fit", "--data", "bad.csv", "--out", "e.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("column 2"), "{err}");

    fs::write(dir.path().join("neg.csv"), "1.5,2\n3,-1\n").unwrap();
    let out = hrscore(&["fit", "--data", "neg.csv", "--out", "e.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let out = hrscore(&["fit", "--data", "absent.csv", "--out", "e.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn path_default_grid_and_sorting() {
    let dir = tempfile::tempdir().unwrap();
    simulate_pareto(dir.path(), "6", "400");
    ok(&hrscore(&["path", "--data", "s.csv", "--out", "p.json"], dir.path()));
    let path = read_json(dir.path().join("p.json"));
    assert_eq!(path["estimates"].as_array().unwrap().len(), 7);
    assert_eq!(path["grid_multipliers"][0], 1000.0);

    let out = hrscore(&["path", "--data", "s.csv", "--grid-multipliers", "1,100,0", "--out", "q.json"], dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("descending"));
    let q = read_json(dir.path().join("q.json"));
    let mults: Vec<f64> = q["grid_multipliers"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(mults, vec![100.0, 1.0, 0.0]);
}

#[test]
fn single_point_path_equals_fit() {
    let dir = tempfile::tempdir().unwrap();
    simulate_pareto(dir.path(), "4", "200");
    ok(&hrscore(&["path", "--data", "s.csv", "--grid-multipliers", "0", "--out", "p.json"], dir.path()));
    ok(&hrscore(&["fit", "--data", "s.csv", "--r", "0", "--out", "e.json"], dir.path()));
    let path = read_json(dir.path().join("p.json"));
    let est = read_json(dir.path().join("e.json"));
    assert_eq!(path["estimates"][0], est);
}

#[test]
fn reproduce_is_byte_identical_without_timings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("table1_small.json");
    ok(&hrscore(&["reproduce", "--config", &cfg, "--out", "a.csv", "--no-timings"], dir.path()));
    ok(&hrscore(&["--threads", "4", "reproduce", "--config", &cfg, "--out", "b.csv", "--no-timings"], dir.path()));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8, "header plus one row per grid point");
    assert!(lines[0].starts_with("r_multiplier,r_value,rmse_theta_mean"));
}

#[test]
fn reproduce_maxstable_config_reports_effective_size() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hrscore(&["reproduce", "--config", &config("table3_small.json"), "--out", "t.json"], dir.path()));
    let rows = read_json(dir.path().join("t.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 7);
    let n_u = rows[0]["n_u_mean"].as_f64().unwrap();
    assert!(n_u > 0.0 && n_u < 3500.0);
    assert!(rows[0]["t_opt_mean"].is_number());
}

#[test]
fn reproduce_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = hrscore(&["reproduce", "--config", "missing.json", "--out", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    fs::write(dir.path().join("bad.json"), r#"{"d": 5, "n": 100, "N": 0, "design": "pareto", "seed": 1}"#).unwrap();
    let out = hrscore(&["reproduce", "--config", "bad.json", "--out", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N:"));
    fs::write(dir.path().join("typo.json"), r#"{"d": 5, "n": 100, "N": 1, "desing": "pareto", "seed": 1}"#).unwrap();
    let out = hrscore(&["reproduce", "--config", "typo.json", "--out", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("desing"));
}

fn write_brownian(dir: &Path, d: usize) {
    let s = (d as f64).sqrt();
    let text: String = (0..d)
        .map(|i| {
            let row: Vec<String> = (0..d).map(|j| format!("{:e}", i.abs_diff(j) as f64 / s)).collect();
            row.join(",") + "\n"
        })
        .collect();
    fs::write(dir.join("g.csv"), text).unwrap();
}

#[test]
fn convert_brownian_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = 20;
    write_brownian(dir.path(), d);
    ok(&hrscore(&["convert", "--in", "g.csv", "--what", "gamma2theta", "--out", "t.csv"], dir.path()));
    let theta = csv(&dir.path().join("t.csv"));
    let s = (d as f64).sqrt();
    for i in 0..d {
        for j in 0..d {
            let want = match i.abs_diff(j) {
                0 if i == 0 || i == d - 1 => s,
                0 => 2.0 * s,
                1 => -s,
                _ => 0.0,
            };
            assert!((theta[i][j] - want).abs() < 1e-9, "({i},{j}) {} vs {want}", theta[i][j]);
        }
    }
    let out = hrscore(&["convert", "--in", "t.csv", "--what", "theta2gamma", "--m", "7", "--out", "g2.csv"], dir.path());
    let diag = stdout_json(ok(&out));
    assert!(diag["max_anchor_discrepancy"].as_f64().unwrap() < 1e-8);
    let g = csv(&dir.path().join("g.csv"));
    let g2 = csv(&dir.path().join("g2.csv"));
    for (a, b) in g.iter().flatten().zip(g2.iter().flatten()) {
        assert!((a - b).abs() < 1e-9);
    }

    ok(&hrscore(&["convert", "--in", "g.csv", "--what", "gamma2mulambda", "--m", "1", "--out", "ml.json"], dir.path()));
    let ml = read_json(dir.path().join("ml.json"));
    assert_eq!(ml["mu"].as_array().unwrap().len(), d);
    // Only neighbours interact.
    let lambda = ml["lambda_upper"].as_array().unwrap();
    assert_eq!(lambda.len(), d * (d - 1) / 2);
    let nonzero = lambda.iter().filter(|e| e[2].as_f64().unwrap().abs() > 1e-9).count();
    assert_eq!(nonzero, d - 1);
}

#[test]
fn convert_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("z.csv"), "0,0,0\n0,0,0\n0,0,0\n").unwrap();
    let out = hrscore(&["convert", "--in", "z.csv", "--what", "theta2gamma", "--out", "g.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("singular"));
    write_brownian(dir.path(), 3);
    let out = hrscore(&["convert", "--in", "g.csv", "--what", "gamma2theta", "--m", "0", "--out", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
