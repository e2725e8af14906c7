//! End-to-end contracts of the `depauw` binary: headers, exit codes,
//! byte-level determinism, manifest echo, and the analyze/verify pipelines.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_depauw"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("depauw-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn field_export_header_and_values() {
    let dir = tmp_dir("field");
    run_ok(bin().args([
        "field",
        "--t",
        "0.6",
        "--grid-n",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]));
    let text = read(&dir.join("field.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,b1,b2"));
    assert_eq!(lines.count(), 4);
    // Truncated time: all-zero field columns.
    run_ok(bin().args([
        "field",
        "--t",
        "1e-9",
        "--grid-n",
        "2",
        "--out",
        dir.to_str().unwrap(),
        "--out-file",
        "early.csv",
    ]));
    let early = read(&dir.join("early.csv"));
    for line in early.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cols[4].parse::<f64>().unwrap(), 0.0);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn field_density_export() {
    let dir = tmp_dir("density");
    run_ok(bin().args([
        "field", "--t", "1.0", "--grid-n", "4", "--density",
        "--out", dir.to_str().unwrap(), "--out-file", "rho.csv",
    ]));
    let text = read(&dir.join("rho.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,rhoB"));
    // At the final time the density is the side-1/2 checkerboard: 8 of the
    // 16 grid cells are colored 1.
    let ones = lines
        .filter(|l| l.ends_with(",1"))
        .count();
    assert_eq!(ones, 8);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn flow_trajectory_rows() {
    let dir = tmp_dir("flow");
    // Degenerate time range: single row at x0.
    run_ok(bin().args([
        "flow", "--x0", "0.25,0.5", "--t-from", "0.5", "--t-to", "0.5", "--steps", "1",
        "--out", dir.to_str().unwrap(), "--out-file", "point.csv",
    ]));
    let text = read(&dir.join("point.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x1,x2");
    // Degenerate time range: a single row at x0.
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains("2.5000000000000000e-1"));
    // A perpetually empty start point stays constant.
    run_ok(bin().args([
        "flow", "--x0", "0.3333333333333333,0", "--steps", "8",
        "--out", dir.to_str().unwrap(), "--out-file", "frozen.csv",
    ]));
    let frozen = read(&dir.join("frozen.csv"));
    let rows: Vec<&str> = frozen.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    let first_coords = rows[0].split_once(',').unwrap().1;
    for row in &rows {
        assert_eq!(row.split_once(',').unwrap().1, first_coords);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sde_outputs_and_determinism() {
    let dir_a = tmp_dir("sde-a");
    let dir_b = tmp_dir("sde-b");
    let args = |dir: &Path| {
        vec![
            "sde".to_string(),
            "--nu".into(),
            "0.1".into(),
            "--n-paths".into(),
            "10".into(),
            "--dt-base".into(),
            "0.015625".into(),
            "--save-times".into(),
            "1.0".into(),
            "--seed".into(),
            "42".into(),
            "--out".into(),
            dir.to_str().unwrap().to_string(),
        ]
    };
    run_ok(bin().args(args(&dir_a)));
    run_ok(bin().args(args(&dir_b)));
    let csv_a = read(&dir_a.join("samples.csv"));
    let csv_b = read(&dir_b.join("samples.csv"));
    assert_eq!(csv_a, csv_b, "same seed must give byte-identical CSV");
    assert_eq!(csv_a.lines().next(), Some("path_id,t,x1,x2"));
    assert_eq!(csv_a.lines().count(), 11);

    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir_a.join("manifest.json"))).expect("valid JSON");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["nu"], 0.1);
    assert_eq!(manifest["n_paths"], 10);
    assert_eq!(manifest["integrator"], "drift_splitting");
    assert!(manifest["wall_time_s"].as_f64().is_some());
    assert_eq!(manifest["effective_config"]["bins"], 16);
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn sde_noiseless_point_run_matches_exact_flow() {
    let dir = tmp_dir("sde-exact");
    run_ok(bin().args([
        "sde", "--nu", "0", "--n-paths", "3", "--initial", "point:0.123,0.456",
        "--save-times", "1.0", "--seed", "7", "--out", dir.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "flow", "--x0", "0.123,0.456", "--steps", "1",
        "--out", dir.to_str().unwrap(), "--out-file", "exact.csv",
    ]));
    let samples = read(&dir.join("samples.csv"));
    let exact = read(&dir.join("exact.csv"));
    let endpoint = exact.lines().last().unwrap();
    let (_, exact_coords) = endpoint.split_once(',').unwrap();
    for line in samples.lines().skip(1) {
        let coords = line.splitn(3, ',').nth(2).unwrap();
        let parse = |s: &str| -> Vec<f64> {
            s.split(',').map(|v| v.parse().unwrap()).collect()
        };
        let a = parse(coords);
        let b = parse(exact_coords);
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_uniformity_branching_backward() {
    let dir = tmp_dir("analyze");
    run_ok(bin().args([
        "sde", "--nu", "0.2", "--n-paths", "2000", "--save-times", "0.0,1.0",
        "--seed", "11", "--out", dir.to_str().unwrap(),
    ]));
    let samples = dir.join("samples.csv");

    run_ok(bin().args([
        "analyze", "--kind", "uniformity", "--input", samples.to_str().unwrap(),
        "--bins", "4", "--out", dir.to_str().unwrap(), "--out-file", "uniformity.json",
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.join("uniformity.json"))).unwrap();
    assert_eq!(report["kind"], "uniformity");
    assert!(report["inputs"][0]["digest_fnv1a64"].as_str().unwrap().len() == 16);
    let times = report["metrics"]["times"].as_array().unwrap();
    assert_eq!(times.len(), 2);
    for entry in times {
        assert!(entry["p_value"].as_f64().unwrap() > 0.001);
        assert_eq!(entry["n"], 2000);
    }

    run_ok(bin().args([
        "analyze", "--kind", "branching", "--input", samples.to_str().unwrap(),
        "--out", dir.to_str().unwrap(), "--out-file", "branching.json",
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.join("branching.json"))).unwrap();
    let frac = report["metrics"]["black_fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&frac));
    assert!(report["metrics"]["ci95_halfwidth"].as_f64().unwrap() > 0.0);

    run_ok(bin().args([
        "analyze", "--kind", "backward", "--input", samples.to_str().unwrap(),
        "--bins", "4", "--out", dir.to_str().unwrap(), "--out-file", "backward.json",
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.join("backward.json"))).unwrap();
    assert_eq!(report["metrics"]["n_pairs"], 2000);
    assert!(report["metrics"]["median_bin_spread"].as_f64().unwrap() > 0.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_branching_on_synthetic_all_black_file() {
    let dir = tmp_dir("black");
    // Points placed in color-1 cells of the scale-1 checkerboard.
    let mut csv = String::from("path_id,t,x1,x2\n");
    for i in 0..100 {
        let x1 = 0.55 + 0.4 * (i as f64 / 100.0); // ⌊2x1⌋ = 1
        csv.push_str(&format!("{i},1.0,{x1},0.2\n")); // ⌊2x2⌋ = 0 → color 1
    }
    let input = dir.join("black.csv");
    std::fs::write(&input, csv).unwrap();
    run_ok(bin().args([
        "analyze", "--kind", "branching", "--input", input.to_str().unwrap(),
        "--out", dir.to_str().unwrap(),
    ]));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.join("report.json"))).unwrap();
    assert_eq!(report["metrics"]["black_fraction"], 1.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_backward_on_deterministic_pairs() {
    // second = first + (0.25, 0.25): conditioning on the second coordinate
    // confines the firsts to one bin-sized preimage, so the per-bin spread
    // sits at the bin-diameter scale.
    let dir = tmp_dir("det-pairs");
    let mut csv = String::from("path_id,t,x1,x2\n");
    let n = 4096;
    for i in 0..n {
        // Low-discrepancy fill of the unit square.
        let x1 = (i as f64 + 0.5) / n as f64;
        let x2 = (i as f64 * 0.6180339887498949).fract();
        csv.push_str(&format!("{i},0.0,{x1},{x2}\n"));
        csv.push_str(&format!(
            "{i},1.0,{},{}\n",
            (x1 + 0.25).fract(),
            (x2 + 0.25).fract()
        ));
    }
    let input = dir.join("pairs.csv");
    std::fs::write(&input, csv).unwrap();
    run_ok(bin().args([
        "analyze", "--kind", "backward", "--input", input.to_str().unwrap(),
        "--bins", "4", "--out", dir.to_str().unwrap(),
    ]));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.join("report.json"))).unwrap();
    let median = report["metrics"]["median_bin_spread"].as_f64().unwrap();
    let bin_side = 0.25;
    assert!(
        median > 0.05 * bin_side && median < bin_side,
        "median bin spread {median} should sit at the bin-diameter scale {bin_side}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_rejects_malformed_csv_with_line_number() {
    let dir = tmp_dir("malformed");
    let input = dir.join("bad.csv");
    std::fs::write(&input, "path_id,t,x1,x2\n0,0.5,0.1,0.2\n1,nonsense,0.3,0.4\n").unwrap();
    let out = bin()
        .args([
            "analyze", "--kind", "uniformity", "--input", input.to_str().unwrap(),
            "--out", dir.to_str().unwrap(),
        ])
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":3"), "error should name line 3: {stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_errors_exit_with_code_2() {
    // Unknown flag: clap usage error.
    let out = bin().args(["sde", "--does-not-exist"]).output().expect("spawn");
    assert_eq!(out.status.code(), Some(2));
    // Unknown analysis kind: our usage error.
    let out = bin()
        .args(["analyze", "--kind", "nonsense", "--input", "x.csv"])
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(2));
    // Bad integrator name through the sde path.
    let out = bin()
        .args(["sde", "--integrator", "rk4"])
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_corruption_hook_fails() {
    let out = run_ok(bin().arg("verify"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS property-R-permutation"));
    assert!(!stdout.contains("FAIL"));

    let out = bin()
        .args(["verify", "--corrupt-speed-factor", "1.05"])
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL property-R-permutation"));
}

#[test]
fn config_file_precedence() {
    let dir = tmp_dir("config");
    let cfg = dir.join("run.conf");
    std::fs::write(
        &cfg,
        "# experiment configuration\nnu = 0.25\nn_paths = 5\nsave_times = 0.5, 1.0\nseed = 9\n",
    )
    .unwrap();
    // CLI --seed overrides the file; nu comes from the file.
    run_ok(bin().args([
        "sde", "--config", cfg.to_str().unwrap(), "--seed", "123",
        "--out", dir.to_str().unwrap(),
    ]));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 123);
    assert_eq!(manifest["nu"], 0.25);
    assert_eq!(manifest["n_paths"], 5);
    assert_eq!(manifest["save_times"].as_array().unwrap().len(), 2);
    std::fs::remove_dir_all(&dir).ok();
}
