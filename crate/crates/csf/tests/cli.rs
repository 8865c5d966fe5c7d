//! Black-box tests of the command-line binary: exit codes, file outputs and
//! the stable CSV contract.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_csf")
}

/// Fresh scratch directory for one test case.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("csf-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, text: &str) -> PathBuf {
    let path = dir.join("run.ini");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_cli(subcommand: &str, config: &PathBuf, out: &PathBuf) -> Output {
    Command::new(bin())
        .args([
            subcommand,
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ])
        .env("CSF_THREADS", "2")
        .output()
        .expect("binary must launch")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process must exit normally")
}

#[test]
fn malformed_config_exits_with_one() {
    let dir = scratch("badcfg");
    let cfg = write_config(&dir, "mode = simulate\n"); // key outside a section
    let out = run_cli("simulate", &cfg, &dir);
    assert_eq!(exit_code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stderr.is_empty(), "a config error must be reported on stderr");
}

#[test]
fn unknown_key_exits_with_one() {
    let dir = scratch("unknownkey");
    let cfg = write_config(&dir, "[mode]\nmode = simulate\nfrobnicate = 3\n");
    let out = run_cli("simulate", &cfg, &dir);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobnicate"));
}

#[test]
fn subcommand_config_mode_mismatch_exits_with_one() {
    let dir = scratch("mismatch");
    let cfg = write_config(&dir, "[mode]\nmode = simulate\n");
    let out = run_cli("blowup", &cfg, &dir);
    assert_eq!(exit_code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("simulate") && err.contains("blowup"), "stderr: {err}");
}

#[test]
fn bounded_simulation_writes_the_trajectory_contract() {
    let dir = scratch("simulate");
    let cfg = write_config(
        &dir,
        "[parameters]\n\
         preset = desk\n\
         beta_over_rho = 1.0\n\
         [grid]\n\
         n_z = 51\n\
         dt = 1e-3\n\
         t_end = 0.1\n\
         [ic]\n\
         preset = sine4\n\
         amplitude = 0.1\n\
         [mode]\n\
         mode = simulate\n\
         solver = fd\n\
         [output]\n\
         format = both\n",
    );
    let out = run_cli("simulate", &cfg, &dir);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(!csv.contains('\r'), "line endings must be bare LF");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,z,u,eta,p"));
    // header + one row per (snapshot, node): 101 time levels x 51 nodes
    assert_eq!(csv.lines().count(), 1 + 101 * 51);
    let first = lines.next().unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields.len(), 5);
    for v in &fields {
        assert!(v.contains('e'), "fields use scientific notation, got `{v}`");
        v.parse::<f64>().unwrap();
    }
    assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(fields[1].parse::<f64>().unwrap(), 0.0);

    assert!(dir.join("trajectory.dat").exists(), "format = both must add the .dat export");
    let diag = std::fs::read_to_string(dir.join("diagnostics.txt")).unwrap();
    assert!(diag.contains("blowup_detected: false"), "diagnostics: {diag}");
}

#[test]
fn steepening_simulation_exits_with_two() {
    let dir = scratch("blowup-sim");
    let cfg = write_config(
        &dir,
        "[parameters]\n\
         preset = desk\n\
         beta_over_rho = 0.5\n\
         length = 2.0\n\
         delta_tissue = 5e-4\n\
         [grid]\n\
         n_z = 1001\n\
         dt = 1e-4\n\
         t_end = 0.5\n\
         snapshot_stride = 100\n\
         [ic]\n\
         preset = negexp\n\
         [mode]\n\
         mode = simulate\n\
         grad_threshold = 30\n",
    );
    let out = run_cli("simulate", &cfg, &dir);
    assert_eq!(exit_code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let diag = std::fs::read_to_string(dir.join("diagnostics.txt")).unwrap();
    assert!(diag.contains("blowup_detected: true"), "diagnostics: {diag}");
    assert!(diag.contains("blowup_time:"), "diagnostics: {diag}");
}

#[test]
fn blowup_analysis_mode_exits_with_zero() {
    let dir = scratch("blowup-scan");
    let cfg = write_config(
        &dir,
        "[parameters]\n\
         preset = desk\n\
         beta_over_rho = 0.5\n\
         length = 2.0\n\
         [ic]\n\
         preset = negexp\n\
         [mode]\n\
         mode = blowup\n",
    );
    let out = run_cli("blowup", &cfg, &dir);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("blowup.txt")).unwrap();
    assert!(text.contains("min_blowup_time"), "report: {text}");
}

#[test]
fn periodic_mode_reports_residual_and_stability() {
    let dir = scratch("periodic");
    let cfg = write_config(
        &dir,
        "[parameters]\n\
         preset = desk\n\
         [grid]\n\
         n_z = 101\n\
         dt = 5e-4\n\
         t_end = 0.5\n\
         [mode]\n\
         mode = periodic\n\
         deltas = 1e-3, 1e-2\n",
    );
    let out = run_cli("periodic", &cfg, &dir);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("periodic.txt")).unwrap();
    assert!(text.contains("residual"), "report: {text}");
    assert!(text.contains("1e-3") || text.contains("0.001") || text.contains("e-3"));
}

#[test]
fn check_mode_reports_compatibility() {
    let dir = scratch("check");
    let cfg = write_config(
        &dir,
        "[ic]\n\
         preset = sine4\n\
         amplitude = 0.1\n\
         [mode]\n\
         mode = check\n",
    );
    let out = run_cli("check", &cfg, &dir);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("check.txt")).unwrap();
    assert!(text.contains("compatibility:"), "report: {text}");
    assert!(text.contains("admissibility:"), "report: {text}");
}

#[test]
fn compare_mode_reconciles_both_solvers() {
    let dir = scratch("compare");
    let cfg = write_config(
        &dir,
        "[grid]\n\
         n_z = 51\n\
         dt = 2e-3\n\
         t_end = 0.1\n\
         [ic]\n\
         preset = custom\n\
         expression = 0.01 * sin(pi * z)\n\
         [mode]\n\
         mode = compare\n",
    );
    let out = run_cli("compare", &cfg, &dir);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("compare.txt")).unwrap();
    assert!(text.contains("linf_u_max"), "report: {text}");
}
