use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blowlab_core::data::{build_u0n, construction_grid, build_bump, BumpSpec, Schedule};
use blowlab_core::littlewood_paley::{besov_norm_spectral, build_filter_bank};
use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn result(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert!(v["version"].is_string());
    assert_eq!(v["config"]["format_version"], 1);
    v["result"].clone()
}

/// Data rows (after the `#` lines and the header) split on commas.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# blowlab "));
    assert!(lines.next().unwrap().starts_with("# config: {"));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn certificate_at_twice_threshold_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["certificate", "--b", "4", "--delta", "1", "--A", "2x"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = result(&dir.path().join("verdict.json"));
    assert_eq!(r["verdict"]["verdict"], "DIVERGES");
    assert_eq!(r["verdict"]["marginal"], false);
    let (header, rows) = csv_rows(&dir.path().join("certificate.csv"));
    assert_eq!(header, ["k", "t_k", "log_alpha_k", "Lambda_k"]);
    assert!(rows.len() > 2);

    let o = run(dir.path(), &["certificate", "--A", "0.9x"]);
    assert_eq!(code(&o), 0);
    let r = result(&dir.path().join("verdict.json"));
    assert_eq!(r["verdict"]["verdict"], "CONVERGES_TO_ZERO");
}

#[test]
fn fujita_regime_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["data", "--b", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("n(b-1)/2 > 1"), "{}", stderr(&o));
    let o = run(dir.path(), &["data", "--b", "2", "--n", "2"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("n(b-1)/2 > 1"));
}

#[test]
fn invalid_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["certificate", "--A", "-3"][..],
        &["certificate", "--delta", "0"],
        &["besov", "--q", "0.5"],
        &["bump", "--r", "6"],
        &["simulate", "--dt-min", "1", "--dt-max", "0.1"],
        &["sweep", "--q", "8,4"],
        &["nonsense"],
    ] {
        let o = run(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn besov_total_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["besov", "--q", "8", "--N", "6", "--b", "4", "--n", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("besov_blocks.csv"));
    assert_eq!(header, ["j", "block_norm", "weighted", "total"]);
    assert_eq!(rows.len(), 7);
    let total: f64 = rows[0][3].parse().unwrap();

    let grid = construction_grid(1, 4, 6, Some(6)).unwrap();
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(4)).unwrap();
    let (_, u_hat) = build_u0n(&grid, 6, &Schedule::paper(4), &w_hat).unwrap();
    let bank = build_filter_bank(&grid, 0, 6).unwrap();
    let expected = besov_norm_spectral(&u_hat, -0.5, 6.0, 8.0, &bank).unwrap().total;
    assert_eq!(total, expected);
    for (j, row) in rows.iter().enumerate() {
        assert_eq!(row[0], j.to_string());
        assert_eq!(row[3], rows[0][3]);
    }
    assert!(dir.path().join("besov_summary.csv").exists());
}

#[test]
fn config_file_reproduces_flag_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&a, &["certificate", "--b", "5", "--delta", "0.5", "--A", "3x", "--k-max", "20"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(a.join("verdict.json")).unwrap()).unwrap();
    let config_path = dir.path().join("run.json");
    fs::write(&config_path, serde_json::to_string_pretty(&v["config"]).unwrap()).unwrap();
    let o = run(&b, &["--config", config_path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["verdict.json", "certificate.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    // partial configs fall back to the flag defaults
    fs::write(&config_path, r#"{"format_version": 1, "command": {"certificate": {"A": "2x"}}}"#).unwrap();
    let o = run(&b, &["--config", config_path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn config_rejects_unknown_keys_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let p = path.to_str().unwrap();
    for text in [
        r#"{"format_version": 1, "command": {"certificate": {"b": 4, "gamma": 2}}}"#,
        r#"{"format_version": 1, "command": {"certificate": {}}, "extra": true}"#,
        r#"{"format_version": 2, "command": {"certificate": {}}}"#,
        r#"{"format_version": 1, "command": {"teleport": {}}}"#,
    ] {
        fs::write(&path, text).unwrap();
        let o = run(dir.path(), &["--config", p]);
        assert_eq!(code(&o), 2, "{text}");
    }
    fs::write(&path, r#"{"format_version": 1, "command": {"certificate": {}}}"#).unwrap();
    let o = run(dir.path(), &["--config", p, "certificate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &[&str]); 4] = [
        (&["data", "--N", "3"], &["data.json", "u0_hat.json", "u0.csv"]),
        (&["besov", "--N", "4", "--q", "inf"], &["besov_blocks.csv", "besov_summary.csv"]),
        (&["simulate", "--A", "1x"], &["trajectory.csv", "blowup.json"]),
        (
            &["sweep", "--kind", "amplitude", "--A", "0.5x,1x,2x"],
            &["sweep.csv"],
        ),
    ];
    for (args, files) in cases {
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        assert_eq!(code(&run(&a, args)), 0, "{args:?}");
        assert_eq!(code(&run(&b, args)), 0);
        for f in files {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{args:?} {f}");
        }
    }
}

#[test]
fn bump_and_data_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["bump"]);
    assert_eq!(code(&o), 0);
    let r = result(&dir.path().join("bump_hat.json"));
    assert!((r["w_l1"].as_f64().unwrap() - 9.653_359_130_661_858).abs() < 1e-12);
    let field: blowlab_core::spectral::FieldContainer = serde_json::from_value(r["field"].clone()).unwrap();
    assert_eq!(field.grid.m, [256]);
    let (header, rows) = csv_rows(&dir.path().join("bump.csv"));
    assert_eq!(header, ["x0", "w"]);
    assert_eq!(rows.len(), 256);

    let o = run(dir.path(), &["data", "--n", "2", "--b", "3", "--N", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = result(&dir.path().join("data.json"));
    assert_eq!(r["descriptor"]["N"], 2);
    let rebuilt: blowlab_core::data::DataDescriptor =
        serde_json::from_value(r["descriptor"].clone()).unwrap();
    let stored = result(&dir.path().join("u0_hat.json"));
    let stored = serde_json::to_string(&stored).unwrap();
    let stored = blowlab_core::SpectralField::from_json(&stored).unwrap();
    assert_eq!(rebuilt.build().unwrap().1, stored);
    let (header, _) = csv_rows(&dir.path().join("u0.csv"));
    assert_eq!(header, ["x0", "x1", "u0"]);
}

#[test]
fn threshold_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["threshold", "--w-l1", "0.1", "--cap", "1000000000"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let r = result(&dir.path().join("threshold.json"));
    assert_eq!(r["outcome"]["status"], "NOT_FOUND");
    assert!(r["N_min"].is_null());

    let o = run(dir.path(), &["threshold", "--w-l1", "3.6", "--schedule", "constant", "--eps", "1"]);
    assert_eq!(code(&o), 0);
    let r = result(&dir.path().join("threshold.json"));
    assert_eq!(r["outcome"]["status"], "FOUND");
    assert!(r["N_min"].as_u64().unwrap() > 100);
}

#[test]
fn simulate_and_verify_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--A", "2x"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = result(&dir.path().join("blowup.json"));
    let t_star = r["summary"]["T_star_num"].as_f64().unwrap();
    assert!(t_star > 0.0 && t_star <= 0.525);
    let (header, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(header[..4], ["t", "dt", "l1_spectrum", "sup_norm"]);
    assert!(rows.len() > 2);

    let o = run(dir.path(), &["simulate", "--init", "data", "--N", "2"]);
    assert_eq!(code(&o), 2, "relative amplitude with data init");
    let o = run(dir.path(), &["simulate", "--init", "data", "--N", "2", "--A", "0.01", "--t-end", "0.05"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = run(dir.path(), &["verify", "--A", "2x"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("lower_bounds.csv"));
    assert_eq!(header, ["k", "t_k", "t_probe", "status", "margin", "tolerance", "bound_max"]);
    assert_eq!(rows.len(), 3);
    let r = result(&dir.path().join("verify.json"));
    assert_eq!(r["report"]["entries"].as_array().unwrap().len(), 3);

    // small data: the solution survives past every probe
    let o = run(dir.path(), &["verify", "--A", "0.001", "--k-max", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = csv_rows(&dir.path().join("lower_bounds.csv"));
    assert!(rows.iter().all(|r| r[3] == "PASS"), "{rows:?}");
}

fn sweep_values(dir: &Path, args: &[&str]) -> Vec<Vec<String>> {
    let o = run(dir, args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.join("sweep.csv"));
    assert_eq!(
        header,
        ["kind", "b", "n", "q", "N", "delta", "A", "metric", "value", "status"]
    );
    rows
}

fn column(rows: &[Vec<String>], q: &str) -> Vec<f64> {
    rows.iter()
        .filter(|r| r[3] == q)
        .map(|r| r[8].parse().unwrap())
        .collect()
}

#[test]
fn besov_series_sweep_trends() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep_values(dir.path(), &["sweep", "--b", "4", "--q", "4,8"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[9] == "ok" && r[0] == "besov-series"));
    let q_eq_b = column(&rows, "4e0");
    let q_2b = column(&rows, "8e0");
    assert!(q_2b.windows(2).all(|w| w[1] < w[0]), "{q_2b:?}");
    // q = b: ε_N·(Σ_{j<=N} 1/(1+j))^{1/4}; grows only once (ln N)^{1/4} beats ln ln N
    for (v, n) in q_eq_b.iter().zip([10u64, 100, 1000, 10000]) {
        let harmonic: f64 = (0..=n).map(|j| 1.0 / (1.0 + j as f64)).sum();
        let eps = 1.0 / (3.0 + n as f64).ln().ln();
        assert!((v / (eps * harmonic.powf(0.25)) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn amplitude_ladder_blowup_time_is_nonincreasing() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep_values(
        dir.path(),
        &["sweep", "--kind", "amplitude", "--A", "0.25x,0.5x,1x,2x,4x"],
    );
    assert_eq!(rows.len(), 5);
    let amps: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(amps.windows(2).all(|w| w[1] > w[0]));
    let times: Vec<f64> = rows
        .iter()
        .map(|r| {
            assert_eq!(r[9], "ok");
            r[8].parse().unwrap()
        })
        .collect();
    assert!(times.windows(2).all(|w| w[1] <= w[0]), "{times:?}");
}

#[test]
fn failing_cells_become_rows() {
    let dir = tempfile::tempdir().unwrap();
    // q = 0.5 is not a summation exponent; the q = 8 cells still run
    let rows = sweep_values(dir.path(), &["sweep", "--q", "0.5,8", "--N", "10,20"]);
    assert_eq!(rows.len(), 4);
    let ok: Vec<bool> = rows.iter().map(|r| r[9] == "ok").collect();
    assert_eq!(ok, [false, false, true, true], "{rows:?}");
    assert!(rows[0][9].starts_with("\"error: "));
    assert!(rows[0][8].is_empty());
}
