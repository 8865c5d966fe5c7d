//! `csf` — config-driven runner for the cerebrospinal-fluid compartment
//! model: time-marching simulation, blow-up analysis, periodic-regime
//! checks, initial-data compatibility reports and solver comparison.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use csf::conditions::{
    self, boundary_traces, check_compatibility, membrane_initial_pressure, InitialData,
};
use csf::characteristics::{CharacteristicFan, Lifespan};
use csf::config::{
    load_config, Mode, OutputFormat, PressureInit, RunConfig, SolverChoice,
};
use csf::fd::{self, SolverOptions, State};
use csf::periodic::{build_periodic, residual, stability_experiment, Production};
use csf::{parallel, picard, Grid};

#[derive(Parser)]
#[command(name = "csf", version, about = "1D cerebrospinal-fluid compartment model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the INI-style run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's [output] directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress stdout; files are still written.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Time-march the coupled system and export the trajectory.
    Simulate(Common),
    /// Classify the initial velocity against the gradient blow-up criterion.
    Blowup(Common),
    /// Verify the explicit periodic regime and run perturbation experiments.
    Periodic(Common),
    /// Check the compatibility of initial and boundary data.
    Check(Common),
    /// Run both solvers on identical data and tabulate their divergence.
    Compare(Common),
}

const EXIT_BLOWUP: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected_mode, common) = match &cli.command {
        Command::Simulate(c) => (Mode::Simulate, c),
        Command::Blowup(c) => (Mode::Blowup, c),
        Command::Periodic(c) => (Mode::Periodic, c),
        Command::Check(c) => (Mode::Check, c),
        Command::Compare(c) => (Mode::Compare, c),
    };
    match run(expected_mode, common) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(expected_mode: Mode, common: &Common) -> Result<u8, String> {
    apply_thread_cap()?;
    let cfg = load_config(&common.config).map_err(|e| e.to_string())?;
    if cfg.mode != expected_mode {
        return Err(format!(
            "config declares mode `{}` but the `{}` subcommand was invoked",
            cfg.mode.name(),
            expected_mode.name()
        ));
    }
    let out_dir = common
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| format!("cannot create output directory: {e}"))?;
    let echo = |text: &str| {
        if !common.quiet {
            print!("{text}");
        }
    };
    match cfg.mode {
        Mode::Simulate => cmd_simulate(&cfg, &out_dir, &echo),
        Mode::Blowup => cmd_blowup(&cfg, &out_dir, &echo),
        Mode::Periodic => cmd_periodic(&cfg, &out_dir, &echo),
        Mode::Check => cmd_check(&cfg, &out_dir, &echo),
        Mode::Compare => cmd_compare(&cfg, &out_dir, &echo),
    }
}

fn apply_thread_cap() -> Result<(), String> {
    if let Ok(v) = std::env::var("CSF_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("CSF_THREADS expects an integer, got `{v}`"))?;
        if n > 0 {
            parallel::limit_threads(n);
        }
    }
    Ok(())
}

/// Build the starting fields per the configured preset and pressure policy.
fn initial_fields(cfg: &RunConfig) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), String> {
    let f = cfg.ic.velocity(&cfg.grid);
    let g = cfg.ic.displacement(&cfg.grid);
    let p0 = match cfg.pressure_init {
        PressureInit::Membrane => {
            membrane_initial_pressure(&cfg.model, &f, &g).map_err(|e| e.to_string())?
        }
        PressureInit::Ode => conditions::build_initial_pressure(&cfg.model, &f, &g, &cfg.grid)
            .map_err(|e| e.to_string())?,
    };
    Ok((f, g, p0))
}

// ---------------------------------------------------------------- output

/// 17-significant-digit float, stable across runs.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn trajectory_csv(snapshots: &[fd::Snapshot], grid: &Grid) -> String {
    let mut s = String::from("t,z,u,eta,p\n");
    let zs = grid.zs();
    for snap in snapshots {
        for (j, &z) in zs.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_float(snap.t),
                fmt_float(z),
                fmt_float(snap.u[j]),
                fmt_float(snap.eta[j]),
                fmt_float(snap.p[j])
            );
        }
    }
    s
}

/// Whitespace-separated table, one blank line between snapshots, suitable
/// for `gnuplot ... using 2:3 every :::k::k`.
fn trajectory_dat(snapshots: &[fd::Snapshot], grid: &Grid) -> String {
    let mut s = String::from("# t z u eta p\n");
    let zs = grid.zs();
    for snap in snapshots {
        for (j, &z) in zs.iter().enumerate() {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                fmt_float(snap.t),
                fmt_float(z),
                fmt_float(snap.u[j]),
                fmt_float(snap.eta[j]),
                fmt_float(snap.p[j])
            );
        }
        s.push('\n');
    }
    s
}

fn write_trajectory(
    snapshots: &[fd::Snapshot],
    grid: &Grid,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<(), String> {
    if matches!(cfg.format, OutputFormat::Csv | OutputFormat::Both) {
        write_text(&out_dir.join("trajectory.csv"), &trajectory_csv(snapshots, grid))?;
    }
    if matches!(cfg.format, OutputFormat::Dat | OutputFormat::Both) {
        write_text(&out_dir.join("trajectory.dat"), &trajectory_dat(snapshots, grid))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- simulate

fn cmd_simulate(
    cfg: &RunConfig,
    out_dir: &Path,
    echo: &dyn Fn(&str),
) -> Result<u8, String> {
    match cfg.solver {
        SolverChoice::Fd => simulate_fd(cfg, out_dir, echo),
        SolverChoice::Picard => simulate_picard(cfg, out_dir, echo),
    }
}

fn simulate_fd(cfg: &RunConfig, out_dir: &Path, echo: &dyn Fn(&str)) -> Result<u8, String> {
    let started = Instant::now();
    let (f, g, p0) = initial_fields(cfg)?;
    let bt = boundary_traces(&cfg.model, g[0], g[cfg.grid.n_z - 1]);
    let state = State::new(&f, &g, &p0, &cfg.model, &cfg.grid).map_err(|e| e.to_string())?;
    let opts = SolverOptions {
        grad_threshold: cfg.grad_threshold,
        u_threshold: cfg.u_threshold,
        pressure_coupling: true,
        snapshot_stride: cfg.snapshot_stride,
    };
    let run = fd::run(state, &bt, &cfg.model, &cfg.grid, &opts).map_err(|e| e.to_string())?;
    write_trajectory(&run.snapshots, &cfg.grid, cfg, out_dir)?;

    let mut report = String::new();
    let d = &run.diagnostics;
    let _ = writeln!(report, "mode: simulate");
    let _ = writeln!(report, "solver: fd");
    let _ = writeln!(report, "steps: {}", d.steps);
    let _ = writeln!(report, "snapshots: {}", run.snapshots.len());
    let _ = writeln!(report, "cfl_max: {}", fmt_float(d.cfl_max));
    let _ = writeln!(report, "max_grad: {}", fmt_float(d.max_grad));
    if cfg.snapshot_stride <= 1 && run.snapshots.len() >= 3 {
        let r = fd::trajectory_residual(&run.snapshots, &cfg.model, &cfg.grid);
        let _ = writeln!(report, "residual_mass: {}", fmt_float(r.mass));
        let _ = writeln!(report, "residual_membrane: {}", fmt_float(r.membrane));
        let _ = writeln!(report, "residual_momentum: {}", fmt_float(r.momentum));
    }
    let code = match d.blowup {
        Some((t_blow, max_grad)) => {
            let _ = writeln!(report, "blowup_detected: true");
            let _ = writeln!(report, "blowup_time: {}", fmt_float(t_blow));
            let _ = writeln!(report, "blowup_grad: {}", fmt_float(max_grad));
            EXIT_BLOWUP
        }
        None => {
            let _ = writeln!(report, "blowup_detected: false");
            0
        }
    };
    let _ = writeln!(report, "wall_clock_s: {:.3}", started.elapsed().as_secs_f64());
    write_text(&out_dir.join("diagnostics.txt"), &report)?;
    echo(&report);
    Ok(code)
}

fn simulate_picard(
    cfg: &RunConfig,
    out_dir: &Path,
    echo: &dyn Fn(&str),
) -> Result<u8, String> {
    let started = Instant::now();
    let f = cfg.ic.velocity(&cfg.grid);
    let g = cfg.ic.displacement(&cfg.grid);
    let run = picard::iterate(&f, &g, &cfg.model, &cfg.grid, cfg.tol, cfg.n_max)
        .map_err(|e| e.to_string())?;
    let snapshots = picard_snapshots(&run, &cfg.grid, cfg.snapshot_stride);
    write_trajectory(&snapshots, &cfg.grid, cfg, out_dir)?;

    let resid = picard::system_residual(&run.u, &run.eta, &run.p, &cfg.model, &cfg.grid);
    let mut report = String::new();
    let _ = writeln!(report, "mode: simulate");
    let _ = writeln!(report, "solver: picard");
    let _ = writeln!(report, "iterations: {}", run.iterations);
    let _ = writeln!(report, "converged: {}", run.converged);
    let _ = writeln!(
        report,
        "ratios: {}",
        run.ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
    );
    let _ = writeln!(report, "residual_mass: {}", fmt_float(resid.mass));
    let _ = writeln!(report, "residual_membrane: {}", fmt_float(resid.membrane));
    let _ = writeln!(report, "residual_momentum: {}", fmt_float(resid.momentum));
    let _ = writeln!(report, "blowup_detected: false");
    let _ = writeln!(report, "wall_clock_s: {:.3}", started.elapsed().as_secs_f64());
    write_text(&out_dir.join("diagnostics.txt"), &report)?;
    echo(&report);
    Ok(0)
}

fn picard_snapshots(run: &picard::PicardRun, grid: &Grid, stride: usize) -> Vec<fd::Snapshot> {
    let stride = stride.max(1);
    let n_t = run.u.n_t;
    let mut snaps = Vec::new();
    let mut i = 0;
    while i < n_t {
        snaps.push(fd::Snapshot {
            t: i as f64 * grid.dt,
            u: run.u.row(i).to_vec(),
            eta: run.eta.row(i).to_vec(),
            p: run.p.row(i).to_vec(),
        });
        if i == n_t - 1 {
            break;
        }
        i = (i + stride).min(n_t - 1);
    }
    snaps
}

// ---------------------------------------------------------------- blowup

fn cmd_blowup(cfg: &RunConfig, out_dir: &Path, echo: &dyn Fn(&str)) -> Result<u8, String> {
    let length = cfg.grid.length();
    let f_fn = cfg.ic.velocity_fn(length);
    let eta0 = cfg.ic.eta0;
    let ic = InitialData::build(&cfg.model, cfg.grid, &f_fn, |_| eta0)
        .map_err(|e| e.to_string())?;
    let verdict =
        conditions::admissibility(&ic, &cfg.model, cfg.k_max).map_err(|e| e.to_string())?;

    let h = 1e-6 * length;
    let fprime = |z: f64| (f_fn((z + h).min(length)) - f_fn((z - h).max(0.0)))
        / ((z + h).min(length) - (z - h).max(0.0));
    let fan = CharacteristicFan::from_fns(&f_fn, fprime, length, cfg.grid.n_z, cfg.model.beta_over_rho());
    let report = csf::characteristics::scan_fan(&fan);

    let finite: Vec<(f64, f64)> = fan
        .lambdas
        .iter()
        .zip(&report.classifications)
        .filter_map(|(&l, c)| match c {
            Lifespan::FiniteTime(t) => Some((l, *t)),
            Lifespan::Global => None,
        })
        .collect();

    let mut text = String::new();
    let _ = writeln!(text, "mode: blowup");
    let _ = writeln!(text, "admissibility: {}", verdict.verdict);
    let _ = writeln!(text, "min_slope: {}", fmt_float(verdict.min_slope));
    let _ = writeln!(text, "slope_threshold: {}", fmt_float(-verdict.threshold));
    let _ = writeln!(text, "h_k_norm: {}", fmt_float(verdict.h_k_norm));
    let _ = writeln!(text, "criterion_margin: {}", fmt_float(report.criterion_margin));
    let _ = writeln!(text, "feet_total: {}", fan.lambdas.len());
    let _ = writeln!(text, "feet_finite_time: {}", finite.len());
    if report.any_finite() {
        let _ = writeln!(text, "min_blowup_time: {}", fmt_float(report.min_blowup_time));
        if let Some((l, t)) = finite
            .iter()
            .copied()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite times"))
        {
            let _ = writeln!(text, "earliest_foot: {}", fmt_float(l));
            let _ = writeln!(text, "earliest_time: {}", fmt_float(t));
        }
    } else {
        let _ = writeln!(text, "min_blowup_time: none");
    }
    write_text(&out_dir.join("blowup.txt"), &text)?;
    echo(&text);
    Ok(0)
}

// ---------------------------------------------------------------- periodic

fn cmd_periodic(cfg: &RunConfig, out_dir: &Path, echo: &dyn Fn(&str)) -> Result<u8, String> {
    let model = &cfg.model;
    let sol = build_periodic(model, Production::sinusoidal(model)).map_err(|e| e.to_string())?;
    let period = sol.period();
    let ts: Vec<f64> = (0..100).map(|i| i as f64 / 100.0 * 2.0 * period).collect();
    let r = residual(&sol, &ts);

    let mut text = String::new();
    let _ = writeln!(text, "mode: periodic");
    let _ = writeln!(text, "period: {}", fmt_float(period));
    let _ = writeln!(text, "residual_max: {}", fmt_float(r));
    let _ = writeln!(text, "residual_ok: {}", r < 1e-10);

    if model.coeffs.q_tilde == 0.0 {
        let _ = writeln!(text, "stability_grid: n_z={} dt={}", cfg.grid.n_z, cfg.grid.dt);
        let _ = writeln!(text, "delta sup_deviation deviation_per_delta bounded");
        for &delta in &cfg.deltas {
            let res = stability_experiment(delta, model, &cfg.grid).map_err(|e| e.to_string())?;
            let per = if delta > 0.0 { res.sup_deviation / delta } else { f64::NAN };
            let _ = writeln!(
                text,
                "{} {} {} {}",
                fmt_float(res.delta),
                fmt_float(res.sup_deviation),
                if per.is_nan() { "n/a".into() } else { fmt_float(per) },
                res.bound_satisfied
            );
        }
    } else {
        let _ = writeln!(
            text,
            "stability_experiment: skipped (needs zero mean production, q_p = 0)"
        );
    }
    write_text(&out_dir.join("periodic.txt"), &text)?;
    echo(&text);
    Ok(0)
}

// ---------------------------------------------------------------- check

fn cmd_check(cfg: &RunConfig, out_dir: &Path, echo: &dyn Fn(&str)) -> Result<u8, String> {
    let length = cfg.grid.length();
    let f_fn = cfg.ic.velocity_fn(length);
    let eta0 = cfg.ic.eta0;
    let ic = InitialData::build(&cfg.model, cfg.grid, &f_fn, |_| eta0)
        .map_err(|e| e.to_string())?;
    let bt = boundary_traces(&cfg.model, ic.g[0], ic.g[cfg.grid.n_z - 1]);
    let report = check_compatibility(&ic, &bt, &cfg.model);
    let verdict =
        conditions::admissibility(&ic, &cfg.model, cfg.k_max).map_err(|e| e.to_string())?;

    let mut text = String::new();
    let _ = writeln!(text, "mode: check");
    let _ = writeln!(text, "u_left: {}", fmt_float(report.u_left));
    let _ = writeln!(text, "u_right: {}", fmt_float(report.u_right));
    let _ = writeln!(text, "eta_left: {}", fmt_float(report.eta_left));
    let _ = writeln!(text, "eta_right: {}", fmt_float(report.eta_right));
    let _ = writeln!(text, "p_left: {}", fmt_float(report.p_left));
    let _ = writeln!(text, "s_end_mismatch: {}", fmt_float(report.s_end_mismatch));
    let _ = writeln!(text, "compatibility: {}", if report.pass { "PASS" } else { "FAIL" });
    let _ = writeln!(text, "admissibility: {}", verdict.verdict);
    write_text(&out_dir.join("check.txt"), &text)?;
    echo(&text);
    Ok(0)
}

// ---------------------------------------------------------------- compare

fn cmd_compare(cfg: &RunConfig, out_dir: &Path, echo: &dyn Fn(&str)) -> Result<u8, String> {
    let (f, g, p0) = initial_fields(cfg)?;
    let bt = boundary_traces(&cfg.model, g[0], g[cfg.grid.n_z - 1]);
    let state = State::new(&f, &g, &p0, &cfg.model, &cfg.grid).map_err(|e| e.to_string())?;
    let opts = SolverOptions {
        grad_threshold: cfg.grad_threshold,
        u_threshold: cfg.u_threshold,
        pressure_coupling: true,
        snapshot_stride: cfg.snapshot_stride,
    };
    let fd_run =
        fd::run(state, &bt, &cfg.model, &cfg.grid, &opts).map_err(|e| e.to_string())?;
    if fd_run.diagnostics.blowup.is_some() {
        return Err("comparison aborted: the time-marching run blew up".into());
    }
    let pic = picard::iterate(&f, &g, &cfg.model, &cfg.grid, cfg.tol, cfg.n_max)
        .map_err(|e| e.to_string())?;

    let mut text = String::new();
    let _ = writeln!(text, "mode: compare");
    let _ = writeln!(text, "picard_iterations: {}", pic.iterations);
    let _ = writeln!(text, "picard_converged: {}", pic.converged);
    let _ = writeln!(text, "t linf_u linf_eta linf_p");
    let mut worst_u = 0.0_f64;
    for snap in &fd_run.snapshots {
        let i = (snap.t / cfg.grid.dt).round() as usize;
        if i >= pic.u.n_t {
            continue;
        }
        let linf = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let du = linf(&snap.u, pic.u.row(i));
        let de = linf(&snap.eta, pic.eta.row(i));
        let dp = linf(&snap.p, pic.p.row(i));
        worst_u = worst_u.max(du);
        let _ = writeln!(
            text,
            "{} {} {} {}",
            fmt_float(snap.t),
            fmt_float(du),
            fmt_float(de),
            fmt_float(dp)
        );
    }
    let _ = writeln!(text, "linf_u_max: {}", fmt_float(worst_u));
    let scale = 10.0 * (cfg.grid.dt + cfg.grid.dz);
    let _ = writeln!(text, "first_order_scale: {}", fmt_float(scale));
    let _ = writeln!(text, "within_scale: {}", worst_u <= scale);
    write_text(&out_dir.join("compare.txt"), &text)?;
    echo(&text);
    Ok(0)
}
