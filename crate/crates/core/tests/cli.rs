use std::process::Command;

use psilab::cli::{run, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION};

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("psilab").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("psilab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn constants_table_rows() {
    let (code, out, _) = call(&["constants", "--table"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "psi,H_psi,C_psi");
    let log: Vec<f64> = lines[1].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    let sqrt: Vec<f64> = lines[2].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert!((log[0] - 2.0).abs() < 1e-9 && (log[1] - 0.795).abs() < 5e-3);
    assert!((sqrt[0] - 8.0).abs() < 1e-9 && sqrt[1] == 0.0);
}

#[test]
fn degenerate_constant_exits_one() {
    assert_eq!(call(&["constants", "--psi", "sqrt"]).0, EXIT_VIOLATION);
    assert_eq!(call(&["constants", "--psi", "log"]).0, EXIT_OK);
}

#[test]
fn liyau_passes_at_critical_dimension() {
    let d = format!("{}", 2.0 / 0.7951229668476554);
    let (code, out, _) = call(&["liyau-check", "--graph", "cycle12", "--psi", "log", "--d", &d]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, _, _) = call(&["liyau-check", "--graph", "cycle12", "--psi", "log", "--d", "0.1"]);
    assert_eq!(code, EXIT_VIOLATION);
}

#[test]
fn cdpsi_small_d_gives_witness() {
    let args = ["cdpsi-check", "--graph", "cycle12", "--psi", "log", "--d", "0.1", "--budget", "1000", "--seed", "0"];
    let (code, out, _) = call(&args);
    assert_eq!(code, EXIT_VIOLATION);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["verdict"]["verdict"], "violated", "{out}");
    let witness = doc["verdict"]["witness"]["values"].as_object().unwrap();
    let x = doc["verdict"]["vertex"].as_u64().unwrap().to_string();
    assert_eq!(witness[&x], 1.0);
    assert_eq!(call(&args).1, out, "reports must be byte-identical");
}

#[test]
fn usage_and_input_errors_exit_two() {
    let (code, _, err) = call(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("frobnicate"));

    let (code, _, err) = call(&["curvature", "--graph", "no-such-graph"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("no-such-graph"));

    let bad = tmp("bad.edges");
    std::fs::write(&bad, "0 1\n1 x\n").unwrap();
    let (code, _, err) = call(&["curvature", "--graph", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("bad.edges") && err.contains("`x`"), "{err}");

    let (code, _, err) = call(&["psi-ops", "--graph", "cycle4", "--psi", "power:1.5", "--f", "1 2 3 4"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("power:1.5"), "{err}");

    let (code, _, err) = call(&["psi-ops", "--graph", "cycle4", "--psi", "log", "--f", "1 2 -3 4"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("vertex 2"), "{err}");
}

#[test]
fn cayley_file_feeds_ricci_flat() {
    let path = tmp("z3z3.edges");
    let (code, _, _) = call(&[
        "cayley", "--orders", "3,3", "--generators", "(1,0);(0,1)", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let (code, out, _) = call(&["ricci-flat", "--graph", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["certificate"]["degree"], 4);

    assert_eq!(call(&["ricci-flat", "--graph", "path3"]).0, EXIT_VIOLATION);
}

#[test]
fn operator_and_heat_reports() {
    let f = tmp("f.json");
    std::fs::write(&f, "[1.0, 2.0, 0.5, 1.5]").unwrap();
    let (code, out, _) = call(&["psi-ops", "--graph", "cycle4", "--psi", "sqrt", "--f", f.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["psi_laplacian", "gamma_psi", "omega_psi", "gamma2_psi"] {
        assert_eq!(doc[key].as_array().unwrap().len(), 4, "{key}");
    }

    let (code, out, _) = call(&["heat", "--graph", "cycle4", "--f0", "1 2 3 4", "--times", "0,1,2"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["values"].as_array().unwrap().len(), 3);

    let (code, out, _) = call(&["curvature", "--graph", "hypercube3"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((doc["graph_value"].as_f64().unwrap() - 3.0).abs() < 1e-8);
}

#[test]
fn harnack_check_writes_csv() {
    let csv = tmp("slack.csv");
    let d = format!("{}", 2.0 / 0.7951229668476554);
    let (code, out, _) = call(&[
        "harnack-check", "--graph", "cycle6", "--psi", "log", "--d", &d,
        "--times", "log:0.1:5:8", "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x1,x2,t1,t2,slack\n"));
    assert_eq!(text.lines().count() - 1, 36);
}

#[test]
fn semigroup_check_runs() {
    let d = format!("{}", 2.0 / 0.7951229668476554);
    let (code, out, _) = call(&["semigroup-check", "--graph", "cycle6", "--psi", "log", "--d", &d, "--samples", "3"]);
    assert_eq!(code, EXIT_OK, "{out}");
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_psilab");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(status(&["constants", "--table"]), 0);
    assert_eq!(status(&["cdpsi-check", "--graph", "cycle6", "--psi", "log", "--d", "0.1", "--budget", "200"]), 1);
    assert_eq!(status(&["heat", "--graph", "cycle6"]), 2);
}
