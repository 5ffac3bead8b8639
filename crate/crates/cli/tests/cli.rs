//! End-to-end tests driving the compiled binary.

use std::process::{Command, Output};

fn qesband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qesband"))
        .args(args)
        .env_remove("QESBAND_TOL")
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = qesband(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_column(text: &str, idx: usize) -> Vec<String> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

#[test]
fn edges_a_zero_single_row() {
    let out = stdout_of(&["edges", "--a", "0", "--b", "1", "--m", "0.5"]);
    let energies = csv_column(&out, 0);
    assert_eq!(energies.len(), 1);
    assert!(energies[0].parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn edges_a_two_contains_expected_levels() {
    let out = stdout_of(&["edges", "--a", "2", "--b", "1", "--m", "0.5"]);
    let energies: Vec<f64> = csv_column(&out, 0)
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(energies.len(), 5);
    let r7 = 7.0_f64.sqrt();
    for want in [0.0, r7, -r7] {
        assert!(
            energies.iter().any(|e| (e - want).abs() < 1e-9),
            "missing {want} in {energies:?}"
        );
    }
}

#[test]
fn edges_json_schema_and_dsg_values() {
    let out = stdout_of(&["edges", "--a", "1", "--b", "1", "--m", "0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["params"]["a"].as_f64().unwrap(), 1.0);
    assert_eq!(v["params"]["m"].as_f64().unwrap(), 0.0);
    let edges = v["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 3);
    for e in edges {
        assert!(e["E"].is_number());
        assert!(e["sector"].is_string());
        assert!(e["nodes"].is_number());
        let p = e["periodicity"].as_str().unwrap();
        assert!(p == "4K" || p == "8K");
        assert!(e["coeffs"].is_array());
    }
    let r5 = 5.0_f64.sqrt();
    let want = [(1.0 - r5) / 2.0, 1.0, (1.0 + r5) / 2.0];
    for (e, w) in edges.iter().zip(want) {
        assert!((e["E"].as_f64().unwrap() - w).abs() < 1e-10);
    }
}

#[test]
fn output_is_byte_deterministic() {
    for args in [
        vec!["edges", "--a", "1.5", "--b", "0.7", "--m", "0.3", "--format", "json"],
        vec!["sweep", "--a", "1", "--m-grid", "0.2:0.6:0.2", "--b-grid", "1,0.5"],
        vec!["check", "--a", "0.5", "--b", "1", "--m", "0.5", "--n-basis", "32"],
    ] {
        let first = stdout_of(&args);
        let second = stdout_of(&args);
        assert_eq!(first, second, "nondeterministic output for {args:?}");
    }
}

#[test]
fn domain_errors_exit_two() {
    let out = qesband(&["edges", "--a", "1", "--b", "1", "--m", "1.2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qesband(&["edges", "--a", "0.3", "--b", "1", "--m", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qesband(&["boundstates", "--a", "1", "--beta", "1", "--half-width", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_four() {
    let out = qesband(&[
        "edges",
        "--a",
        "1",
        "--b",
        "1",
        "--m",
        "0.5",
        "--output",
        "/nonexistent-dir/out.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn check_passes_for_reference_point() {
    let out = qesband(&["check", "--a", "1", "--b", "1", "--m", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let status = line.split(',').nth(1).unwrap();
        assert!(status == "pass" || status == "skip", "unexpected row: {line}");
    }
    // Floquet membership is measured, not assumed.
    assert!(text.contains("floquet_membership,pass"));
}

#[test]
fn check_reports_symmetry_defect_without_judging_it_for_large_a() {
    let out = stdout_of(&["check", "--a", "3", "--b", "1", "--m", "0.5", "--n-basis", "64"]);
    let row = out
        .lines()
        .find(|l| l.starts_with("half_modulus_symmetry"))
        .unwrap();
    assert!(row.contains("info"), "a > 2 symmetry is reported, not asserted: {row}");
}

#[test]
fn sweep_cardinality_and_invariances() {
    let out = stdout_of(&[
        "sweep",
        "--a",
        "1.5",
        "--m-grid",
        "0.1:0.9:0.2",
        "--b-grid",
        "0.5,1,2",
    ]);
    let rows: Vec<&str> = out.lines().skip(1).filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 15 * 4, "5 m-values × 3 b-values × 4 levels");

    // b → −b leaves the energy column unchanged.
    let plus = stdout_of(&["sweep", "--a", "1.5", "--m-grid", "0.3:0.3:1", "--b-grid", "1"]);
    let minus = stdout_of(&["sweep", "--a", "1.5", "--m-grid", "0.3:0.3:1", "--b-grid", "-1"]);
    let ep: Vec<f64> = csv_column(&plus, 4).iter().map(|s| s.parse().unwrap()).collect();
    let em: Vec<f64> = csv_column(&minus, 4).iter().map(|s| s.parse().unwrap()).collect();
    for (a, b) in ep.iter().zip(&em) {
        assert!((a - b).abs() < 1e-9);
    }

    // At m = 1/2 the level column is symmetric about zero.
    let half = stdout_of(&["sweep", "--a", "1.5", "--m-grid", "0.5:0.5:1", "--b-grid", "1"]);
    let es: Vec<f64> = csv_column(&half, 4).iter().map(|s| s.parse().unwrap()).collect();
    for (lo, hi) in es.iter().zip(es.iter().rev()) {
        assert!((lo + hi).abs() < 1e-9, "{es:?}");
    }
}

#[test]
fn boundstates_match_limits_and_are_beta_independent() {
    let out = stdout_of(&["boundstates", "--a", "2", "--beta", "1.5"]);
    let rows: Vec<&str> = out.lines().skip(1).filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        let diff: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(diff < 1e-4, "{row}");
    }
    let other = stdout_of(&["boundstates", "--a", "2", "--beta", "0.5"]);
    let e1: Vec<f64> = csv_column(&out, 0).iter().map(|s| s.parse().unwrap()).collect();
    let e2: Vec<f64> = csv_column(&other, 0).iter().map(|s| s.parse().unwrap()).collect();
    for (a, b) in e1.iter().zip(&e2) {
        assert!((a - b).abs() < 2e-4);
    }
}

#[test]
fn wavefunction_ground_pair_has_one_sign_change() {
    let out = stdout_of(&[
        "wavefunction",
        "--a",
        "0.5",
        "--b",
        "1",
        "--m",
        "0.5",
        "--index",
        "0",
        "--samples",
        "512",
    ]);
    let psi: Vec<f64> = csv_column(&out, 1).iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(psi.len(), 512);
    let changes = psi
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum() && w[0] != 0.0 && w[1] != 0.0)
        .count();
    assert_eq!(changes, 1, "ground antiperiodic level has one node per period");
}

#[test]
fn wavefunction_rejects_out_of_range_index() {
    let out = qesband(&[
        "wavefunction",
        "--a",
        "0.5",
        "--b",
        "1",
        "--m",
        "0.5",
        "--index",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_env_scales_check() {
    // An absurdly tight scale makes a healthy point fail; exit code 3.
    let out = Command::new(env!("CARGO_BIN_EXE_qesband"))
        .args(["check", "--a", "1", "--b", "1", "--m", "0.5", "--n-basis", "32"])
        .env("QESBAND_TOL", "1e-12")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_file_written() {
    let path = std::env::temp_dir().join(format!("qesband-test-{}.csv", std::process::id()));
    let _ = std::fs::remove_file(&path);
    let out = qesband(&[
        "edges",
        "--a",
        "1",
        "--b",
        "1",
        "--m",
        "0.5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let content = std::fs::read_to_string(&path).unwrap();
    assert!(content.starts_with("E,sector,nodes,periodicity,coeffs"));
    std::fs::remove_file(&path).unwrap();
}
