use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn domains() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/domains")
}

fn qdomain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdomain")).args(args).output().unwrap()
}

fn run(cmd: &str, domain: &str, out: &Path, extra: &[&str]) -> Output {
    let d = domains().join(format!("{domain}.json"));
    let mut args = vec![cmd, "--domain", d.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qdomain(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_documents_csv_columns_and_exit_codes() {
    let o = qdomain(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("node,x,y,order,k,weight_re,weight_im"));
    assert!(text.contains("Exit codes"));
}

#[test]
fn disc_kernels_have_empty_fprime_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("kernels", "disc", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fprime = std::fs::read_to_string(dir.path().join("fprime.csv")).unwrap();
    assert_eq!(fprime.lines().count(), 1);
    let r = report(dir.path());
    assert_eq!(r["connectivity"], 1);
    assert!(r["note"].as_str().unwrap().contains("empty F' table"));
    assert_eq!(r["pass"], true);
    let szego = std::fs::read_to_string(dir.path().join("szego.csv")).unwrap();
    assert_eq!(szego.lines().count(), 1 + 64);
}

#[test]
fn annulus_kernels_pass_modulus_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("kernels", "annulus", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(dir.path());
    let modulus = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "ahlfors_modulus_on_boundary").unwrap();
    assert!(modulus["value"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn malformed_domain_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"curves\": [ {\"coeffs\": 3 ]").unwrap();
    let o = qdomain(&["kernels", "--domain", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("input error"));
}

#[test]
fn missing_domain_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdomain(&["kernels", "--domain", "/nonexistent/domain.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_configuration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run("kernels", "disc", dir.path(), &["--grid", "100"])), 2);
    assert_eq!(code(&run("quadratize", "disc", dir.path(), &["--tol", "-1"])), 2);
    assert_eq!(code(&run("quadratize", "disc", dir.path(), &["--variant", "thm17", "--eps", "0.1"])), 2);
}

#[test]
fn annulus_quadratize_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("quadratize", "annulus", dir.path(), &["--tol", "1e-4", "--max-degree", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(dir.path());
    assert!(r["max_relative_residual"].as_f64().unwrap() <= 1e-6);
    let table = std::fs::read_to_string(dir.path().join("verification.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 11);
    for f in ["gustafsson.json", "quadrature.json", "g_boundary.csv", "nodes.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn loose_fit_is_an_injectivity_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("quadratize", "annulus", dir.path(), &["--fit-tol", "0.1"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("injectivity"), "{}", stderr(&o));
}

#[test]
fn confined_disc_nodes_are_simple() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("quadratize", "disc", dir.path(), &["--variant", "thm17", "--w0", "0,0", "--eps", "0.1", "--tol", "0.05"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let q: Value = serde_json::from_slice(&std::fs::read(dir.path().join("quadrature.json")).unwrap()).unwrap();
    assert!(q["orders"].as_array().unwrap().iter().all(|o| o == 1));
}

#[test]
fn disc_zip_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("disc.archive.json");
    let a = archive.to_str().unwrap();
    let o = run("zip", "disc", dir.path(), &["--base", "0,0", "--archive", a]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stored: Value = serde_json::from_slice(&std::fs::read(&archive).unwrap()).unwrap();
    assert_eq!(stored["h_poles"].as_array().unwrap().len(), 1);

    let out = dir.path().join("unzip");
    let o = qdomain(&["unzip", "--archive", a, "--out", out.to_str().unwrap(), "--bound", "1e-10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&out);
    assert!(r["h_vs_reflected"].as_f64().unwrap() <= 1e-10);
    assert!(r["pullback"]["residual"].as_f64().unwrap() <= 1e-10);
    assert!(out.join("unzip.csv").exists());
}

#[test]
fn truncated_archive_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("archive.json");
    let a = archive.to_str().unwrap();
    assert_eq!(code(&run("zip", "disc", dir.path(), &["--base", "0,0", "--archive", a])), 0);
    let bytes = std::fs::read(&archive).unwrap();
    std::fs::write(&archive, &bytes[..bytes.len() / 2]).unwrap();
    let o = qdomain(&["unzip", "--archive", a, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("checksum"), "{}", stderr(&o));
}

#[test]
fn circle_relation_from_domain() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("algebraic", "disc", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(dir.path());
    let rel = &r["boundary"]["relation"];
    assert_eq!(rel["degree"], 2);
    assert!(rel["residual"].as_f64().unwrap() <= 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("relation.csv")).unwrap();
    assert!(csv.starts_with("s,t,re,im\n"));
}

#[test]
fn annulus_joint_boundary_has_no_quadratic_relation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("algebraic", "annulus", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(dir.path());
    assert!(r["quadratic"]["residual"].as_f64().unwrap() >= 1e-2);
    assert_eq!(r["boundary"]["relation"]["degree"], 4);
}

#[test]
fn ambiguous_decisions_exit_with_four() {
    let f = qdomain_cli::Failure::from(qdomain::Error::Ambiguous("two singular values".into()));
    assert_eq!(f.exit_code(), 4);
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for _ in 0..2 {
        let o = run("quadratize", "disc", dir.path(), &["--seed", "9"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        seen.push(files);
    }
    assert_eq!(seen[0], seen[1]);
}
