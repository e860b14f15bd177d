//! End-to-end runs of the binary: exit codes, report files, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_noether-kit");

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn relativistic_fixture_passes_and_reports_deterministically() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let file = fixture("relativistic_particle.toml");

    let out = run(&[
        "analyze",
        &file,
        "--report-dir",
        dir_a.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("primary constraints"));
    assert!(text.contains("overall: all requested checks PASS"));

    let json_a = dir_a.path().join("relativistic-particle.report.json");
    let txt_a = dir_a.path().join("relativistic-particle.report.txt");
    assert!(json_a.exists() && txt_a.exists());

    let out = run(&[
        "analyze",
        &file,
        "--report-dir",
        dir_b.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json_b = dir_b.path().join("relativistic-particle.report.json");
    assert_eq!(
        fs::read(&json_a).unwrap(),
        fs::read(&json_b).unwrap(),
        "machine reports differ between identical runs"
    );
}

#[test]
fn nonprojectable_generator_fails_with_its_residual() {
    let dir = tempfile::tempdir().unwrap();
    let file = fixture("example2.toml");
    let out = run(&[
        "analyze",
        &file,
        "--generator",
        "p_y*y",
        "--report-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("PARTIAL-NONPROJECTABLE"));

    let json = fs::read_to_string(dir.path().join("auxiliary-oscillator.report.json")).unwrap();
    assert!(json.contains("\"verdict\": \"PARTIAL-NONPROJECTABLE\""));
    assert!(json.contains("\"residual\": \"-y^2\""));
    assert!(json.contains("\"schema_version\": 1"));
}

#[test]
fn declared_generators_alone_pass_example_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "analyze",
        &fixture("example2.toml"),
        "--report-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn free_particle_reports_a_closed_constant_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "analyze",
        &fixture("free_particle.toml"),
        "--report-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let json = fs::read_to_string(dir.path().join("free-particle.report.json")).unwrap();
    assert!(json.contains("\"all_constant\": true"));
    assert!(json.contains("\"fields_close\": true"));
}

#[test]
fn probe_seed_does_not_change_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "analyze",
        &fixture("relativistic_particle.toml"),
        "--probe-seed",
        "12345",
        "--probe-points",
        "25",
        "--report-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn declaration_without_generators_still_analyzes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bare.toml");
    fs::write(
        &file,
        "name = \"bare\"\ncoordinates = [\"q\"]\nlagrangian = \"1/2*qdot^2\"\n",
    )
    .unwrap();
    let out = run(&[
        "analyze",
        file.to_str().unwrap(),
        "--report-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("derivation"));
    assert!(dir.path().join("bare.report.json").exists());
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();

    let out = run(&["analyze", "/does/not/exist.toml"]);
    assert_eq!(out.status.code(), Some(2));

    let bad_toml = dir.path().join("bad.toml");
    fs::write(&bad_toml, "name = [unclosed\n").unwrap();
    let out = run(&["analyze", bad_toml.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let undeclared = dir.path().join("undeclared.toml");
    fs::write(
        &undeclared,
        "name = \"u\"\ncoordinates = [\"q\"]\nlagrangian = \"1/2*rdot^2\"\n",
    )
    .unwrap();
    let out = run(&["analyze", undeclared.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let mismatch = dir.path().join("mismatch.toml");
    fs::write(
        &mismatch,
        "name = \"m\"\ncoordinates = [\"q\"]\nlagrangian = \"1/2*qdot^2\"\nhamiltonian = \"p_q^2\"\n",
    )
    .unwrap();
    let out = run(&["analyze", mismatch.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn self_test_is_green_and_probe_count_does_not_change_verdicts() {
    let out = run(&["self-test"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("ok"));
    assert!(!text.contains("MISMATCH"));

    let out = run(&["self-test", "--probe-points", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}
