//! End-to-end tests of the command-line contract: exit codes, file
//! formats, idempotence, and the text a user actually sees.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_influxion"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

/// A small cache most solve tests can share the shape of: H = 1, K = L = 8.
fn precompute(dir: &Path) -> PathBuf {
    let cache = dir.join("basis.json");
    let out = bin()
        .args(["precompute", "--H", "1", "--K", "8", "--L", "8", "--out"])
        .arg(&cache)
        .output()
        .expect("spawn precompute");
    assert_eq!(code(&out), 0, "precompute failed: {}", stderr(&out));
    cache
}

#[test]
fn precompute_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cache = precompute(dir.path());
    assert!(cache.is_file());

    let again = bin()
        .args(["precompute", "--H", "1", "--K", "8", "--L", "8", "--out"])
        .arg(&cache)
        .output()
        .unwrap();
    assert_eq!(code(&again), 0);
    assert!(
        stdout(&again).contains("cache up to date"),
        "second run should reuse the cache: {}",
        stdout(&again)
    );
}

#[test]
fn precompute_warns_about_the_weak_spectral_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["precompute", "--H", "1", "--K", "8", "--L", "8", "--out"])
        .arg(dir.path().join("basis.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(
        stderr(&out).contains("weak spectral gap"),
        "expected the rank warning on stderr: {}",
        stderr(&out)
    );
}

#[test]
fn degenerate_height_is_a_solver_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["precompute", "--H", "2", "--K", "8", "--L", "8", "--out"])
        .arg(dir.path().join("basis.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let err = stderr(&out);
    assert!(
        err.contains("degenerate") && err.contains("k=0 single-layer density"),
        "expected an explanation of the H = 2 breakdown: {err}"
    );
}

#[test]
fn contradictory_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // Both width spellings at once.
    let out = bin()
        .args([
            "converge", "--m", "0", "--delta", "0.5", "--delta2", "0.25", "--N", "6..8", "--out",
        ])
        .arg(dir.path().join("conv.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));

    // Unknown flag goes through the parser's own exit path.
    let out = bin().args(["precompute", "--nonsense"]).output().unwrap();
    assert_eq!(code(&out), 2);

    // A malformed source expression.
    let cache = precompute(dir.path());
    let out = bin()
        .args(["solve", "--source", "m=0,width=1", "--out"])
        .arg(dir.path().join("f.csv"))
        .arg("--basis")
        .arg(&cache)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn missing_cache_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["solve", "--source", "m=0,delta=0.5", "--basis"])
        .arg(dir.path().join("no-such-cache.json"))
        .arg("--out")
        .arg(dir.path().join("f.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
}

#[test]
fn rho_file_shape_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cache = precompute(dir.path());
    let rho = dir.path().join("rho.csv");
    // Header declares K = 6 against the K = 8 cache.
    let mut text = String::from("# cheb-coeffs K=6 L=8 H=1\n");
    for _ in 0..7 {
        text.push_str(&vec!["0.0"; 9].join(","));
        text.push('\n');
    }
    fs::write(&rho, text).unwrap();
    let out = bin()
        .args(["solve", "--rho-file"])
        .arg(&rho)
        .arg("--basis")
        .arg(&cache)
        .arg("--out")
        .arg(dir.path().join("f.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("K=6"), "stderr: {}", stderr(&out));
}

#[test]
fn zero_source_solves_to_the_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cache = precompute(dir.path());
    let rho = dir.path().join("rho.csv");
    let mut text = String::from("# cheb-coeffs K=8 L=8 H=1\n");
    for _ in 0..9 {
        text.push_str(&vec!["0.0"; 9].join(","));
        text.push('\n');
    }
    fs::write(&rho, text).unwrap();
    let field = dir.path().join("f.csv");
    let out = bin()
        .args(["solve", "--grid", "5x5", "--rho-file"])
        .arg(&rho)
        .arg("--basis")
        .arg(&cache)
        .arg("--out")
        .arg(&field)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&field).unwrap();
    for line in text.lines().skip(1) {
        let phi: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(phi.abs() <= 1e-14, "nonzero value in {line}");
    }
}

#[test]
fn field_csv_has_the_requested_grid_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cache = precompute(dir.path());
    let field = dir.path().join("f.csv");
    let out = bin()
        .args(["solve", "--grid", "3x3", "--source", "m=0,delta=0.6", "--reference", "analytic"])
        .arg("--basis")
        .arg(&cache)
        .arg("--out")
        .arg(&field)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let text = fs::read_to_string(&field).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,phi");
    assert_eq!(lines.len(), 1 + 9, "3x3 grid plus header");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["command"], "solve");
    assert_eq!(summary["grid"], serde_json::json!([3, 3]));
    assert!(summary["relative_error"].is_number(), "summary: {summary}");
    assert!(summary["neumann_residual"].as_f64().unwrap() < 1e-10);
    assert!(summary["timings"]["solve_seconds"].is_number());
}

#[test]
fn converge_emits_one_row_per_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("conv.csv");
    let out = bin()
        .args(["converge", "--m", "0", "--delta2", "0.15", "--N", "8..8", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,E,E_self,cond,seconds");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "8");
    let e: f64 = fields[1].parse().unwrap();
    assert!(e > 0.0 && e < 0.05, "headline-scale error, got {e}");
    // A single-row study is its own finest resolution.
    let e_self: f64 = fields[2].parse().unwrap();
    assert_eq!(e_self, 0.0);
}

#[test]
fn cond_fits_a_quadratic_when_it_can() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cond.csv");
    let out = bin()
        .args(["cond", "--N", "4..8,2", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("N,cond,sv1,sv2,sv3,sv4,sv5"));
    assert_eq!(text.lines().count(), 1 + 3 + 1, "header, three rows, fit line");
    assert!(text.lines().last().unwrap().starts_with("# fit a="), "{text}");

    // Two resolutions are not enough for the quadratic.
    let path2 = dir.path().join("cond2.csv");
    let out = bin()
        .args(["cond", "--N", "4..6,2", "--out"])
        .arg(&path2)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text2 = fs::read_to_string(&path2).unwrap();
    assert!(text2.lines().last().unwrap().starts_with("# fit omitted"), "{text2}");
}

#[test]
fn cache_dir_env_var_supplies_the_default_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["precompute", "--H", "1.5", "--K", "6", "--L", "6"])
        .env("INFLUXION_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let written: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(written.len(), 1, "exactly one cache file: {written:?}");
    assert!(
        written[0].starts_with("basis-H1.5-K6-L6-lobatto"),
        "unexpected cache name {written:?}"
    );
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["precompute", "--H", "1", "--K", "4", "--L", "4", "--out"])
        .arg(dir.path().join("missing-subdir").join("basis.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
}
