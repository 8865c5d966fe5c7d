//! Declarative run configuration: a flat INI-style key=value format with
//! sections `[parameters]`, `[grid]`, `[ic]`, `[mode]`, `[output]`. Unknown
//! keys are errors; a handful of fields accept explicit units.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::expr::{self, Expr};
use crate::grid::Grid;
use crate::model::{Model, PhysicalParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("field `{field}`: {msg}")]
    Unit { field: String, msg: String },
    #[error("invalid custom expression: {0}")]
    Expr(#[from] expr::ExprError),
    #[error("invalid parameters: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("invalid grid: {0}")]
    Grid(#[from] crate::grid::GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Blowup,
    Periodic,
    Check,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Blowup => "blowup",
            Mode::Periodic => "periodic",
            Mode::Check => "check",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Fd,
    Picard,
}

/// How the initial pressure profile is produced: directly from the
/// displacement equation at t = 0 (robust for thin tissue) or by marching
/// the compatibility ODE from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureInit {
    Membrane,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Dat,
    Both,
}

#[derive(Debug, Clone)]
pub enum IcPreset {
    Zero,
    Sine4,
    NegExp,
    Custom(Expr),
}

/// Initial-condition block: a named velocity profile scaled by `amplitude`,
/// plus a constant initial displacement offset.
#[derive(Debug, Clone)]
pub struct IcSpec {
    pub preset: IcPreset,
    pub amplitude: f64,
    pub eta0: f64,
}

impl IcSpec {
    pub fn velocity(&self, grid: &Grid) -> Vec<f64> {
        let length = grid.length();
        grid.sample(|z| {
            self.amplitude
                * match &self.preset {
                    IcPreset::Zero => 0.0,
                    IcPreset::Sine4 => 4.0 * (std::f64::consts::PI * z / length).sin(),
                    IcPreset::NegExp => -z.exp(),
                    IcPreset::Custom(e) => e.eval(z),
                }
        })
    }

    pub fn velocity_fn(&self, length: f64) -> impl Fn(f64) -> f64 + '_ {
        let amplitude = self.amplitude;
        move |z: f64| {
            amplitude
                * match &self.preset {
                    IcPreset::Zero => 0.0,
                    IcPreset::Sine4 => 4.0 * (std::f64::consts::PI * z / length).sin(),
                    IcPreset::NegExp => -z.exp(),
                    IcPreset::Custom(e) => e.eval(z),
                }
        }
    }

    pub fn displacement(&self, grid: &Grid) -> Vec<f64> {
        grid.sample(|_| self.eta0)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub grid: Grid,
    pub ic: IcSpec,
    pub mode: Mode,
    pub solver: SolverChoice,
    pub pressure_init: PressureInit,
    pub tol: f64,
    pub n_max: usize,
    pub deltas: Vec<f64>,
    pub grad_threshold: f64,
    pub u_threshold: f64,
    pub k_max: usize,
    pub snapshot_stride: usize,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

struct Entry {
    line: usize,
    value: String,
}

type Section = BTreeMap<String, Entry>;

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find(['#', ';']) {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                msg: "unterminated section header".into(),
            })?;
            current = Some(name.trim().to_string());
            sections.entry(current.clone().unwrap()).or_default();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let section = current.clone().ok_or_else(|| ConfigError::Parse {
            line: line_no,
            msg: "key outside any [section]".into(),
        })?;
        sections.entry(section).or_default().insert(
            key.trim().to_string(),
            Entry { line: line_no, value: value.trim().to_string() },
        );
    }
    Ok(sections)
}

fn parse_number(field: &str, e: &Entry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line: e.line,
        msg: format!("`{field}` expects a number, got `{}`", e.value),
    })
}

fn parse_usize(field: &str, e: &Entry) -> Result<usize, ConfigError> {
    e.value.parse::<usize>().map_err(|_| ConfigError::Parse {
        line: e.line,
        msg: format!("`{field}` expects an integer, got `{}`", e.value),
    })
}

/// Number with an optional unit suffix; the accepted units and their SI
/// conversion factors are given per field.
fn parse_with_units(
    field: &str,
    e: &Entry,
    units: &[(&str, f64)],
) -> Result<f64, ConfigError> {
    let v = e.value.trim();
    let (num, unit) = match v.split_once(char::is_whitespace) {
        Some((n, u)) => (n, u.trim()),
        None => (v, ""),
    };
    let x: f64 = num.parse().map_err(|_| ConfigError::Parse {
        line: e.line,
        msg: format!("`{field}` expects a number, got `{v}`"),
    })?;
    if unit.is_empty() {
        return Ok(x);
    }
    for (name, factor) in units {
        if unit == *name {
            return Ok(x * factor);
        }
    }
    Err(ConfigError::Unit {
        field: field.to_string(),
        msg: format!(
            "unknown unit `{unit}` (accepted: {})",
            units.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        ),
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let sections = split_sections(text)?;
    for name in sections.keys() {
        if !["parameters", "grid", "ic", "mode", "output"].contains(&name.as_str()) {
            return Err(ConfigError::UnknownKey(format!("[{name}]")));
        }
    }
    let empty = Section::new();
    let sec = |name: &str| sections.get(name).unwrap_or(&empty);

    // [parameters]
    let pars = sec("parameters");
    for key in pars.keys() {
        if ![
            "preset",
            "beta_over_rho",
            "rho",
            "mu",
            "r_lumen",
            "delta_tissue",
            "area",
            "k_e",
            "k_d",
            "q_p",
            "p_tissue",
            "alpha_bar",
            "omega",
            "length",
        ]
        .contains(&key.as_str())
        {
            return Err(ConfigError::UnknownKey(format!("parameters.{key}")));
        }
    }
    let preset_name = pars.get("preset").map(|e| e.value.as_str()).unwrap_or("desk");
    let mut params = match preset_name {
        "desk" => {
            let bor = match pars.get("beta_over_rho") {
                Some(e) => parse_number("beta_over_rho", e)?,
                None => 1.0,
            };
            PhysicalParams::desk(bor)
        }
        "clinical" => {
            if let Some(e) = pars.get("beta_over_rho") {
                return Err(ConfigError::Parse {
                    line: e.line,
                    msg: "`beta_over_rho` only applies to the desk preset".into(),
                });
            }
            PhysicalParams::clinical()
        }
        other => {
            let line = pars.get("preset").map(|e| e.line).unwrap_or(0);
            return Err(ConfigError::Parse {
                line,
                msg: format!("unknown parameter preset `{other}` (desk, clinical)"),
            });
        }
    };
    let set = |key: &str, slot: &mut f64| -> Result<(), ConfigError> {
        if let Some(e) = pars.get(key) {
            *slot = parse_number(key, e)?;
        }
        Ok(())
    };
    let mut p = params;
    set("rho", &mut p.rho)?;
    set("mu", &mut p.mu)?;
    set("r_lumen", &mut p.r_lumen)?;
    set("delta_tissue", &mut p.delta_tissue)?;
    set("area", &mut p.area)?;
    set("k_e", &mut p.k_e)?;
    set("k_d", &mut p.k_d)?;
    set("alpha_bar", &mut p.alpha_bar)?;
    set("omega", &mut p.omega)?;
    set("length", &mut p.length)?;
    params = p;
    if let Some(e) = pars.get("q_p") {
        params.q_p = parse_with_units("q_p", e, &[("m3/s", 1.0), ("cm3/min", 1.0 / (1e6 * 60.0))])?;
    }
    if let Some(e) = pars.get("p_tissue") {
        params.p_tissue = parse_with_units("p_tissue", e, &[("Pa", 1.0), ("mmHg", 133.322)])?;
    }
    let model = Model::new(params)?;

    // [grid]
    let gr = sec("grid");
    let mut n_z = 201usize;
    let mut dt = 5e-3;
    let mut t_end = 1.0;
    let mut snapshot_stride = 1usize;
    for (key, e) in gr {
        match key.as_str() {
            "n_z" => n_z = parse_usize("n_z", e)?,
            "dt" => dt = parse_number("dt", e)?,
            "t_end" => t_end = parse_number("t_end", e)?,
            "snapshot_stride" => snapshot_stride = parse_usize("snapshot_stride", e)?,
            other => return Err(ConfigError::UnknownKey(format!("grid.{other}"))),
        }
    }
    let grid = Grid::new(n_z, model.params.length, dt, t_end)?;

    // [ic]
    let ic_sec = sec("ic");
    let mut preset = IcPreset::Zero;
    let mut amplitude = 1.0;
    let mut eta0 = 0.0;
    let mut expression: Option<&Entry> = None;
    for (key, e) in ic_sec {
        match key.as_str() {
            "preset" => {
                preset = match e.value.as_str() {
                    "zero" => IcPreset::Zero,
                    "sine4" => IcPreset::Sine4,
                    "negexp" => IcPreset::NegExp,
                    "custom" => IcPreset::Custom(Expr::Num(0.0)), // patched below
                    other => {
                        return Err(ConfigError::Parse {
                            line: e.line,
                            msg: format!(
                                "unknown ic preset `{other}` (zero, sine4, negexp, custom)"
                            ),
                        })
                    }
                }
            }
            "amplitude" => amplitude = parse_number("amplitude", e)?,
            "eta0" => eta0 = parse_number("eta0", e)?,
            "expression" => expression = Some(e),
            other => return Err(ConfigError::UnknownKey(format!("ic.{other}"))),
        }
    }
    if matches!(preset, IcPreset::Custom(_)) {
        let e = expression.ok_or_else(|| ConfigError::Parse {
            line: 0,
            msg: "ic preset `custom` needs an `expression` key".into(),
        })?;
        preset = IcPreset::Custom(expr::parse(&e.value)?);
    } else if let Some(e) = expression {
        return Err(ConfigError::Parse {
            line: e.line,
            msg: "`expression` only applies to the custom ic preset".into(),
        });
    }
    let ic = IcSpec { preset, amplitude, eta0 };

    // [mode]
    let md = sec("mode");
    let mode_entry = md.get("mode").ok_or_else(|| ConfigError::Parse {
        line: 0,
        msg: "missing required key `mode` in [mode]".into(),
    })?;
    let mode = match mode_entry.value.as_str() {
        "simulate" => Mode::Simulate,
        "blowup" => Mode::Blowup,
        "periodic" => Mode::Periodic,
        "check" => Mode::Check,
        "compare" => Mode::Compare,
        other => {
            return Err(ConfigError::Parse {
                line: mode_entry.line,
                msg: format!(
                    "unknown mode `{other}` (simulate, blowup, periodic, check, compare)"
                ),
            })
        }
    };
    let mut solver = SolverChoice::Fd;
    let mut pressure_init = PressureInit::Membrane;
    let mut tol = 1e-8;
    let mut n_max = 50usize;
    let mut deltas = vec![1e-4, 1e-3, 1e-2];
    let mut grad_threshold = 1e4;
    let mut u_threshold = 1e6;
    let mut k_max = 2usize;
    for (key, e) in md {
        match key.as_str() {
            "mode" => {}
            "solver" => {
                solver = match e.value.as_str() {
                    "fd" => SolverChoice::Fd,
                    "picard" => SolverChoice::Picard,
                    other => {
                        return Err(ConfigError::Parse {
                            line: e.line,
                            msg: format!("unknown solver `{other}` (fd, picard)"),
                        })
                    }
                }
            }
            "pressure_init" => {
                pressure_init = match e.value.as_str() {
                    "membrane" => PressureInit::Membrane,
                    "ode" => PressureInit::Ode,
                    other => {
                        return Err(ConfigError::Parse {
                            line: e.line,
                            msg: format!("unknown pressure_init `{other}` (membrane, ode)"),
                        })
                    }
                }
            }
            "tol" => tol = parse_number("tol", e)?,
            "n_max" => n_max = parse_usize("n_max", e)?,
            "grad_threshold" => grad_threshold = parse_number("grad_threshold", e)?,
            "u_threshold" => u_threshold = parse_number("u_threshold", e)?,
            "k_max" => k_max = parse_usize("k_max", e)?,
            "deltas" => {
                deltas = e
                    .value
                    .split(',')
                    .map(|s| {
                        s.trim().parse::<f64>().map_err(|_| ConfigError::Parse {
                            line: e.line,
                            msg: format!("`deltas` expects comma-separated numbers, got `{s}`"),
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            other => return Err(ConfigError::UnknownKey(format!("mode.{other}"))),
        }
    }

    // [output]
    let out = sec("output");
    let mut out_dir = None;
    let mut format = OutputFormat::Csv;
    for (key, e) in out {
        match key.as_str() {
            "directory" => out_dir = Some(PathBuf::from(&e.value)),
            "format" => {
                format = match e.value.as_str() {
                    "csv" => OutputFormat::Csv,
                    "dat" => OutputFormat::Dat,
                    "both" => OutputFormat::Both,
                    other => {
                        return Err(ConfigError::Parse {
                            line: e.line,
                            msg: format!("unknown format `{other}` (csv, dat, both)"),
                        })
                    }
                }
            }
            other => return Err(ConfigError::UnknownKey(format!("output.{other}"))),
        }
    }

    Ok(RunConfig {
        model,
        grid,
        ic,
        mode,
        solver,
        pressure_init,
        tol,
        n_max,
        deltas,
        grad_threshold,
        u_threshold,
        k_max,
        snapshot_stride,
        out_dir,
        format,
    })
}
