//! The `glauert` binary end to end: outputs, exit codes and error messages.

use std::path::Path;
use std::process::{Command, Output};

const SMALL_CASE: &str = r#"
formulation = "stable"
[mesh]
kind = "shell"
inner = [0.5, 0.5, 0.5]
outer = [1.0, 1.0, 1.0]
n_inner = 1
n_outer = 2
[frequency]
k_hat = 1.5
[incident]
kind = "plane_wave"
direction = [1.0, 0.0, 0.0]
[output]
probe_radius = 2.0
probe_count = 10
"#;

fn glauert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glauert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_case(dir: &Path, text: &str) -> String {
    let path = dir.join("case.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_all_outputs_for_the_shipped_case() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/mach0_sphere.toml"
    );
    let out = glauert(&["run", config, "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in [
        "summary.json",
        "probes.csv",
        "residuals.csv",
        "solution.vtk",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["formulation"], "stable");
    assert!(std::fs::read_to_string(dir.path().join("solution.vtk"))
        .unwrap()
        .starts_with("# vtk DataFile"));
}

#[test]
fn repeated_runs_are_bytewise_identical() {
    // Same output directory both times, since the summary echoes it.
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), SMALL_CASE);
    let out_dir = dir.path().join("out");
    let names = [
        "summary.json",
        "probes.csv",
        "residuals.csv",
        "solution.vtk",
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = glauert(&["run", &case, "--out-dir", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        runs.push(names.map(|n| std::fs::read_to_string(out_dir.join(n)).unwrap()));
    }
    for (i, name) in names.iter().enumerate() {
        assert!(runs[0][i] == runs[1][i], "{name} differs between runs");
    }
}

#[test]
fn purely_imaginary_eta_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), SMALL_CASE);
    let out = glauert(&[
        "run",
        &case,
        "--eta",
        "0,1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("eta"), "{}", stderr(&out));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn missing_mesh_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_CASE.replace(
        "kind = \"shell\"\ninner = [0.5, 0.5, 0.5]\nouter = [1.0, 1.0, 1.0]\nn_inner = 1\nn_outer = 2",
        "kind = \"gmsh\"\npath = \"nowhere.msh\"",
    );
    let case = write_case(dir.path(), &text);
    let out = glauert(&["validate", &case]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nowhere.msh"), "{}", stderr(&out));
}

#[test]
fn iteration_cap_exits_with_status_two_and_keeps_the_history() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(
        dir.path(),
        &format!("{SMALL_CASE}[solver]\nmax_iter = 3\npreconditioner = \"none\"\n"),
    );
    let out = glauert(&["run", &case, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let history = std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert_eq!(history.lines().count(), 5, "{history}");
}

#[test]
fn sweep_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), SMALL_CASE);
    let out_dir = dir.path().to_str().unwrap();
    let out = glauert(&[
        "sweep",
        &case,
        "--k-hat-min",
        "1",
        "--k-hat-max",
        "2",
        "--steps",
        "2",
        "--out-dir",
        out_dir,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");

    let out = glauert(&[
        "sweep",
        &case,
        "--k-hat-min",
        "1",
        "--k-hat-max",
        "2",
        "--steps",
        "2",
        "--eta-sweep",
        "0.1,10",
        "--out-dir",
        out_dir,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for eta in ["0.1", "10"] {
        assert!(dir.path().join(format!("sweep_eta_{eta}.csv")).is_file());
    }
}

#[test]
fn validate_and_mesh_info_report_the_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let case = write_case(dir.path(), SMALL_CASE);
    let out = glauert(&["validate", "--config", &case]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("within tolerance"));

    let out = glauert(&["mesh-info", &case]);
    assert!(out.status.success(), "{}", stderr(&out));
    let info: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(info["tetrahedra"].as_u64().unwrap() > 0);
    assert!(info["mean_edge"].as_f64().unwrap() > 0.0);
}
