//! End-to-end runs of the `curvlab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curvlab::manifolds::ManifoldSpec;
use curvlab::report::{Report, Status, CSV_HEADER};
use curvlab::scenario::{CheckEntry, CheckSpec, Scenario};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn curvlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_scenario(dir: &Path, s: &Scenario) -> PathBuf {
    let p = dir.join(format!("{}.json", s.name));
    std::fs::write(&p, s.to_json().unwrap()).unwrap();
    p
}

#[test]
fn passing_scenario_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_path("cp2_times_circle.json");
    let o = curvlab(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--samples", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = Report::from_json(&stdout(&o)).unwrap();
    assert!(r.checks.iter().all(|c| c.status == Status::Pass));
    assert_eq!(r.metadata.samples, 30);
}

#[test]
fn violated_bound_exits_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_path("flat_torus_tensor_bound.json");
    let o = curvlab(dir.path(), &["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let json = std::fs::read_to_string(dir.path().join("flat_torus_tensor_bound.report.json")).unwrap();
    let r = Report::from_json(&json).unwrap();
    let c = &r.checks[0];
    assert_eq!(c.status, Status::Fail);
    assert!(c.witness.is_some());
    assert!(c.max_violation.unwrap() > c.tolerance);
    let csv = std::fs::read_to_string(dir.path().join("flat_torus_tensor_bound.report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(csv.lines().count(), 1 + r.checks.len());
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvlab(dir.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(2));

    let o = curvlab(dir.path(), &["verify", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(dir.path().join("bad.json"), r#"{"name": "x", "manifold": {"kind": "flat_torus", "periods": [-1.0]}}"#)
        .unwrap();
    let o = curvlab(dir.path(), &["verify", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn check_error_outranks_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::new(ManifoldSpec::FlatTorus { periods: vec![1.0; 3] });
    s.name = "mixed".into();
    s.samples = 5;
    s.weighted_function = serde_json::from_str(r#"{"kind": "tensor_norm", "components": [[1,0,0],[0,0,0],[0,0,0]]}"#).unwrap();
    s.checks.push(CheckEntry::new(CheckSpec::Hypothesis { tolerance: 1e-8 }));
    // Needs a hypersurface the scenario does not have.
    s.checks.push(CheckEntry::new(CheckSpec::GaussIdentity { tolerance: 1e-6 }));
    let cfg = write_scenario(dir.path(), &s);
    let o = curvlab(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let r = Report::from_json(&stdout(&o)).unwrap();
    assert_eq!(r.checks[0].status, Status::Fail);
    assert_eq!(r.checks[1].status, Status::Error);
}

#[test]
fn reports_are_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_path("s4_times_circle.json");
    let run = |seed: &str| {
        stdout(&curvlab(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--seed", seed, "--samples", "25"]))
    };
    let a = run("11");
    assert_eq!(a, run("11"));
    assert_ne!(a, run("12"));
}

#[test]
fn report_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_path("transformation_law.json");
    let o = curvlab(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]);
    let r = Report::from_json(&stdout(&o)).unwrap();
    assert_eq!(Report::from_json(&r.to_json().unwrap()).unwrap(), r);
}

#[test]
fn csv_has_one_row_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_path("s2xs2_times_circle.json");
    let o = curvlab(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--format", "csv", "--samples", "10"]);
    let s = Scenario::load(&cfg).unwrap();
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    assert_eq!(rdr.records().count(), s.checks.len());
}

#[test]
fn empty_check_list_is_a_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::new(ManifoldSpec::FlatTorus { periods: vec![1.0; 2] });
    s.name = "empty".into();
    let cfg = write_scenario(dir.path(), &s);
    let out = dir.path().join("r.json");
    let o = curvlab(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = Report::from_json(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(r.checks.is_empty());
    assert_eq!(r.scenario.name, "empty");
}

#[test]
fn tolerance_override_applies_to_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_path("flat_torus_tensor_bound.json");
    let o = curvlab(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--tol", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let r = Report::from_json(&stdout(&o)).unwrap();
    assert!(r.checks.iter().all(|c| c.tolerance == 10.0));
}

#[test]
fn theorem_subcommands_classify() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file, needle) in [
        ("theorem1", "flat_t4_theorem1.json", "case_ii"),
        ("theorem1", "sigma_injection.json", "case_i"),
        ("theorem2", "flat_t5_theorem2.json", "case_ii"),
        ("corollary1", "corollary1_cp2.json", "self_dual_kahler"),
        ("corollary1", "corollary1_s4.json", "strict_inequality_somewhere"),
    ] {
        let cfg = scenario_path(file);
        let o = curvlab(dir.path(), &[cmd, "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains(needle), "{file}");
    }
}

#[test]
fn stability_writes_the_eigenfunction_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_path("sigma_injection.json");
    let o = curvlab(dir.path(), &["stability", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("sigma_injection.eigen.csv")).unwrap();
    assert!(table.lines().count() > 16 * 16 * 16);
}

#[test]
fn catalog_lists_loadable_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvlab(dir.path(), &["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for entry in v.as_array().unwrap() {
        let spec: ManifoldSpec = serde_json::from_value(entry["example"].clone()).unwrap();
        spec.validate().unwrap();
    }
}
