use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], out_env: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cem-bench"))
        .args(args)
        .env("CEM_OUT_DIR", out_env)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn cem-bench")
}

#[test]
fn builtin_run_writes_artifacts_under_env_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["builtin", "kalthoff", "--param", "total=2e-6", "--cadence", "10"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("kalthoff");
    for f in ["timeseries.csv", "crack_path.csv", "manifest.json", "snapshot_00000.vtk"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("scenario      kalthoff"));
}

#[test]
fn explicit_out_overrides_env() {
    let env_root = tempfile::tempdir().unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let target = out_dir.path().join("here");
    let out = bench(
        &["builtin", "kalthoff", "--param", "total=1e-6", "--no-vtk", "--out", target.to_str().unwrap()],
        env_root.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("timeseries.csv").exists());
    assert!(!target.join("snapshot_00000.vtk").exists());
    assert!(!env_root.path().join("kalthoff").exists());
}

#[test]
fn printed_config_runs_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let printed = bench(&["builtin", "bending3p", "--param", "gamma=0.5", "--print-config"], dir.path());
    assert_eq!(printed.status.code(), Some(0));
    let text = String::from_utf8(printed.stdout).unwrap();
    assert!(text.contains("gamma = 0.5"));
    let cfg = dir.path().join("beam.toml");
    std::fs::write(&cfg, text.replace("total = 0.004", "total = 2e-6")).unwrap();
    let out = bench(&["run", cfg.to_str().unwrap(), "--no-vtk"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("bending3p").join("crack_path.csv").exists());
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["sweep", "kalthoff", "--param", "v0=10,20", "--param", "total=1e-6", "--no-vtk"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for v in ["v0_10", "v0_20"] {
        assert!(dir.path().join("kalthoff").join(v).join("timeseries.csv").exists());
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["builtin", "no-such-scenario"],
        &["builtin", "kalthoff", "--param", "v0"],
        &["builtin", "bending3p", "--param", "gamma=1.5"],
        &["builtin", "kalthoff", "--param", "colour=3"],
        &["run", "/nonexistent/scenario.toml"],
    ];
    for args in cases {
        let out = bench(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn instability_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(
        &["builtin", "kalthoff", "--dt", "1.76e-6", "--param", "total=7e-4", "--no-vtk"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn mesh_info_reports_a_gmsh_file() {
    let dir = tempfile::tempdir().unwrap();
    let msh = dir.path().join("square.msh");
    std::fs::write(
        &msh,
        "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
         $Elements\n2\n1 2 2 1 1 1 2 3\n2 2 2 1 1 1 3 4\n$EndElements\n",
    )
    .unwrap();
    let out = bench(&["mesh-info", msh.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains('4') && text.contains('2'), "{text}");
}
