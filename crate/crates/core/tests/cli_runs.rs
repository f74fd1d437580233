//! End-to-end runs of the command-line driver on a small grid.

use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use fsi_core::cli::{refinement_levels, resolve_config, run, Cli, EXIT_CHECK_FAILED};
use fsi_core::config::{RunConfig, RunManifest};
use fsi_core::grid::GeometryConfig;
use fsi_core::output::sha256_hex;

const SMALL: &str = "
[geometry]
nx = 8
ny = 8

[evolution]
t_end = 2.0
dt = 0.05
settle_time = 0.2
settle_dt = 0.01

[sweep]
n_samples = 101
";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

fn cli(dir: &Path, args: &[&str]) -> Cli {
    let cfg = dir.join("small.toml");
    let out = dir.join("out");
    let mut all = vec!["fsi-lab", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    Cli::parse_from(all)
}

fn manifest(dir: &Path, cmd: &str) -> RunManifest {
    let text = std::fs::read_to_string(dir.join("out").join(cmd).join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn sweep_writes_both_half_axes() {
    let dir = setup();
    let outcome = run(&cli(dir.path(), &["sweep"])).unwrap();
    assert_eq!(outcome.exit_code, 0);
    let csv = std::fs::read_to_string(dir.path().join("out/sweep/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 201);
    assert!(dir.path().join("out/sweep/sweep.svg").exists());
}

#[test]
fn simulate_is_reproducible_and_checksummed() {
    let dir = setup();
    let read = || std::fs::read(dir.path().join("out/simulate/energy.csv")).unwrap();
    run(&cli(dir.path(), &["simulate"])).unwrap();
    let first = read();
    run(&cli(dir.path(), &["simulate"])).unwrap();
    assert_eq!(first, read());

    let m = manifest(dir.path(), "simulate");
    assert!(m.success);
    assert!(m.results.contains_key("decay_delta"));
    for f in &m.files {
        let bytes = std::fs::read(dir.path().join("out/simulate").join(&f.path)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes);
        assert_eq!(sha256_hex(&bytes), f.sha256);
    }

    // a different seed changes the data
    run(&cli(dir.path(), &["--seed", "9", "simulate"])).unwrap();
    assert_ne!(first, read());
}

#[test]
fn refinement_runs_every_level() {
    let dir = setup();
    run(&cli(dir.path(), &["--refine", "2", "nullspace"])).unwrap();
    let root = dir.path().join("out/nullspace");
    assert!(root.join("4x4/null_vector.csv").exists());
    assert!(root.join("8x8/null_vector.csv").exists());
    let m = manifest(dir.path(), "nullspace");
    assert!(m.results.keys().any(|k| k.ends_with("@4x4")));
    assert!(m.results.keys().any(|k| k.ends_with("@8x8")));

    let levels = refinement_levels(&GeometryConfig::new(1.0, 1.0, 32, 16), 3).unwrap();
    assert_eq!(levels.iter().map(|g| (g.nx, g.ny)).collect::<Vec<_>>(), [(8, 4), (16, 8), (32, 16)]);
    assert!(refinement_levels(&GeometryConfig::new(1.0, 1.0, 12, 12), 3).is_err());
}

#[test]
fn config_overrides_and_round_trip() {
    let dir = setup();
    let c = cli(dir.path(), &["--seed", "4", "--beta-max", "7.5", "sweep"]);
    let cfg = resolve_config(&c).unwrap();
    assert_eq!(cfg.geometry.nx, 8);
    assert_eq!(cfg.evolution.seed, 4);
    assert_eq!(cfg.sweep.beta_max, 7.5);
    assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);

    std::fs::write(dir.path().join("small.toml"), "[geometry]\nnx = 7\n").unwrap();
    assert!(resolve_config(&c).is_err());
    std::fs::write(dir.path().join("small.toml"), "[geometry]\ncells = 7\n").unwrap();
    assert!(resolve_config(&c).is_err());
}

#[test]
fn plot_rejects_empty_csv() {
    let dir = setup();
    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "t,energy\n").unwrap();
    let c = Cli::parse_from(["fsi-lab", "plot", csv.to_str().unwrap(), "--kind", "energy"]);
    assert!(run(&c).is_err());

    std::fs::write(&csv, "t,energy\n0,1\n1,0.5\n").unwrap();
    run(&c).unwrap();
    assert!(std::fs::read_to_string(csv.with_extension("svg")).unwrap().starts_with("<svg"));
}

#[test]
fn binary_exit_codes() {
    let dir = setup();
    let exe = env!("CARGO_BIN_EXE_fsi-lab");
    let status = Process::new(exe)
        .args(["--out", dir.path().join("out").to_str().unwrap(), "verify", "--only", "3,10"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert!(dir.path().join("out/verify/verify.csv").exists());

    let bad = Process::new(exe).args(["--config", "/nonexistent.toml", "nullspace"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert_ne!(bad.status.code(), Some(EXIT_CHECK_FAILED));

    let defaults = Process::new(exe).arg("default-config").output().unwrap();
    let text = String::from_utf8(defaults.stdout).unwrap();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), RunConfig::default());
}
