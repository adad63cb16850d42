//! Command-line front end: `relax`, `channel`, `diffuse`, `transmit`, `wl`.
//!
//! Settings come from flags and an optional flat `key = value` file
//! (`--config`); flags win. Exit status is 0 on success, 2 for invalid input
//! and 3 for numerical failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::angular_momentum::TwiceJ;
use crate::error::Error;
use crate::liouville::SpinOperator;
use crate::spin_diffusion::{orientation, spin_state, transmitted_polarization, SpinMediumParams};
use crate::spin_relax::{
    exact_eigenvalues, multipole_decay_with, qubit_kraus, relaxation_channel, verify_spectrum, RelaxationModel,
};
use crate::tensor_ops::build_tensor_basis;
use crate::transport::{
    chapman_enskog_d, default_grid_points, fourier_mode_evolution, random_walk_d, AngularGrid, DiffusionMethod,
    DiffusionResult, KineticState, MediumParams,
};
use crate::weak_loc::{wl_correction, WLParams};

/// Environment variable capping the worker thread count (0 = automatic).
pub const THREADS_ENV: &str = "SPINFLOW_THREADS";

#[derive(Parser, Debug)]
#[command(name = "spinflow", version, about = "Spin relaxation, diffusion and weak localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relaxation spectrum of the isotropic spin Lindbladian.
    Relax(CommandArgs),
    /// Finite-time relaxation channel and its CPTP checks.
    Channel(CommandArgs),
    /// Diffusion constant from kinetics or a random walk.
    Diffuse(CommandArgs),
    /// Spin polarization transmitted through a diffusive slab.
    Transmit(CommandArgs),
    /// Weak-localization correction with spin-flip dephasing.
    Wl(CommandArgs),
}

impl Command {
    fn split(self) -> (CommandKind, CommandArgs) {
        match self {
            Command::Relax(a) => (CommandKind::Relax, a),
            Command::Channel(a) => (CommandKind::Channel, a),
            Command::Diffuse(a) => (CommandKind::Diffuse, a),
            Command::Transmit(a) => (CommandKind::Transmit, a),
            Command::Wl(a) => (CommandKind::Wl, a),
        }
    }
}

#[derive(Args, Debug)]
struct CommandArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Relax,
    Channel,
    Diffuse,
    Transmit,
    Wl,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Relax => "relax",
            CommandKind::Channel => "channel",
            CommandKind::Diffuse => "diffuse",
            CommandKind::Transmit => "transmit",
            CommandKind::Wl => "wl",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        const OUT: [&str; 3] = ["format", "output", "log_scale"];
        match self {
            CommandKind::Relax => &["twice_s", "gamma_s", "t_max", "n_steps", OUT[0], OUT[1], OUT[2]],
            CommandKind::Channel => &["twice_s", "gamma_s", "t", "t_max", "n_steps", OUT[0], OUT[1], OUT[2]],
            CommandKind::Diffuse => &[
                "d", "v", "gamma_el", "mode", "q", "grid_points", "walkers", "seed", "t_max", OUT[0], OUT[1],
                OUT[2],
            ],
            CommandKind::Transmit => &[
                "twice_s", "gamma_el", "gamma_sf", "v", "d", "L", "t_max", "n_steps", OUT[0], OUT[1], OUT[2],
            ],
            CommandKind::Wl => &[
                "d", "D0", "nu", "l_el", "l_phi", "l_sys", "tau_sf", "twice_s", "sweep", "sweep_from",
                "sweep_to", "sweep_points", OUT[0], OUT[1], OUT[2],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DiffuseMode {
    /// Chapman-Enskog closed form.
    Ce,
    /// Decay of a Fourier mode in the kinetic solver.
    Fourier,
    /// Random-walk Monte Carlo.
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    LPhi,
    LSys,
    LEl,
    TauSf,
}

/// Every configurable value. `None` means unset; defaults are filled in per
/// command by [`RunConfig::resolve`].
#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct Settings {
    /// Twice the spin quantum number.
    #[arg(long = "twice-s")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twice_s: Option<u32>,
    /// Spin relaxation rate.
    #[arg(long = "gamma-s")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_s: Option<f64>,
    /// Elastic scattering rate.
    #[arg(long = "gamma-el")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_el: Option<f64>,
    /// Spin-flip scattering rate.
    #[arg(long = "gamma-sf")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_sf: Option<f64>,
    /// Spatial dimension.
    #[arg(long = "d")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Carrier speed.
    #[arg(long = "v")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    /// Slab length.
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Fourier wave number.
    #[arg(long = "q")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Channel time.
    #[arg(long = "t")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// End of the time grid (simulation length for random walks).
    #[arg(long = "t-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Number of time steps in output curves.
    #[arg(long = "n-steps")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Diffusion estimator.
    #[arg(long = "mode", value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<DiffuseMode>,
    /// Angular grid resolution of the kinetic solver.
    #[arg(long = "grid-points")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Number of Monte Carlo walkers.
    #[arg(long = "walkers")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walkers: Option<usize>,
    /// Monte Carlo seed.
    #[arg(long = "seed")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Diffusion constant for the weak-localization integral.
    #[arg(long = "D0")]
    #[serde(rename = "D0", skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    /// Density of states.
    #[arg(long = "nu")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Elastic mean free path (ultraviolet cutoff).
    #[arg(long = "l-el")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_el: Option<f64>,
    /// Phase-coherence length.
    #[arg(long = "l-phi")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_phi: Option<f64>,
    /// System size.
    #[arg(long = "l-sys")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_sys: Option<f64>,
    /// Spin-flip time.
    #[arg(long = "tau-sf")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_sf: Option<f64>,
    /// Parameter swept in CSV mode.
    #[arg(long = "sweep", value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepParam>,
    #[arg(long = "sweep-from")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_from: Option<f64>,
    #[arg(long = "sweep-to")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_to: Option<f64>,
    /// Log-spaced sweep points.
    #[arg(long = "sweep-points")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_points: Option<usize>,
    /// Output format.
    #[arg(long = "format", value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    /// Output file (standard output if absent).
    #[arg(long = "output")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Logarithmic y axis for SVG plots.
    #[arg(long = "log-scale", num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_scale: Option<bool>,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Values of `self`, falling back to `base`.
    fn over(self, base: Settings) -> Settings {
        overlay!(self, base; twice_s, gamma_s, gamma_el, gamma_sf, d, v, length, q, t, t_max, n_steps,
            mode, grid_points, walkers, seed, d0, nu, l_el, l_phi, l_sys, tau_sf, sweep, sweep_from,
            sweep_to, sweep_points, format, output, log_scale)
    }

    fn to_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        }
    }
}

/// A failure carrying its exit status.
#[derive(Debug)]
pub struct CliError {
    pub status: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError {
            status: 2,
            code: "invalid_config".into(),
            message: message.into(),
        }
    }

    /// `error: <code>: <message>` on a single line.
    pub fn line(&self) -> String {
        format!("error: {}: {}", self.code, self.message.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            status: if e.is_numerical() { 3 } else { 2 },
            code: e.code().into(),
            message: e.to_string(),
        }
    }
}

/// A validated command with every setting resolved.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub settings: Settings,
}

fn parse_config_file(kind: CommandKind, path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut argv: Vec<String> = vec!["spinflow".into(), kind.name().into()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        if key == "config" || key == "dry_run" || !ALL_KEYS.contains(&key) {
            return Err(CliError::invalid(format!("config line {}: unknown key `{key}`", lineno + 1)));
        }
        argv.push(format!("--{}={}", key.replace('_', "-"), value.trim()));
    }
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::invalid(first_line(&e.to_string())))?;
    Ok(cli.command.split().1.settings)
}

const ALL_KEYS: &[&str] = &[
    "twice_s", "gamma_s", "gamma_el", "gamma_sf", "d", "v", "L", "q", "t", "t_max", "n_steps", "mode",
    "grid_points", "walkers", "seed", "D0", "nu", "l_el", "l_phi", "l_sys", "tau_sf", "sweep", "sweep_from",
    "sweep_to", "sweep_points", "format", "output", "log_scale",
];

fn first_line(s: &str) -> String {
    let line = s.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    line.strip_prefix("error: ").unwrap_or(line).to_string()
}

impl RunConfig {
    /// Applies per-command defaults and validates the result.
    pub fn resolve(command: CommandKind, given: Settings) -> Result<Self, CliError> {
        let map = given.to_map();
        if let Some(key) = map.keys().find(|k| !command.keys().contains(&k.as_str())) {
            return Err(CliError::invalid(format!("key `{key}` is not used by `{}`", command.name())));
        }
        let mut s = given;
        s.format = s.format.or(Some(OutputFormat::Json));
        s.log_scale = s.log_scale.or(Some(false));
        match command {
            CommandKind::Relax => {
                s.twice_s = s.twice_s.or(Some(1));
                s.gamma_s = s.gamma_s.or(Some(1.0));
                s.t_max = s.t_max.or(Some(5.0));
                s.n_steps = s.n_steps.or(Some(100));
            }
            CommandKind::Channel => {
                s.twice_s = s.twice_s.or(Some(1));
                s.gamma_s = s.gamma_s.or(Some(1.0));
                s.t = s.t.or(Some(1.0));
                s.t_max = s.t_max.or(Some(5.0));
                s.n_steps = s.n_steps.or(Some(50));
            }
            CommandKind::Diffuse => {
                s.d = s.d.or(Some(3));
                s.v = s.v.or(Some(1.0));
                s.gamma_el = s.gamma_el.or(Some(1.0));
                s.mode = s.mode.or(Some(DiffuseMode::Ce));
                let medium = MediumParams::new(s.d.unwrap(), s.v.unwrap(), s.gamma_el.unwrap())?;
                match s.mode.unwrap() {
                    DiffuseMode::Ce => {}
                    DiffuseMode::Fourier => {
                        s.q = s.q.or(Some(0.01 / medium.mean_free_path()));
                        s.grid_points = s.grid_points.or(Some(default_grid_points(medium.dim)));
                        s.t_max = s.t_max.or(Some(50.0 * medium.tau_el()));
                    }
                    DiffuseMode::Mc => {
                        s.walkers = s.walkers.or(Some(100_000));
                        s.seed = s.seed.or(Some(42));
                        s.t_max = s.t_max.or(Some(100.0 * medium.tau_el()));
                    }
                }
            }
            CommandKind::Transmit => {
                s.twice_s = s.twice_s.or(Some(1));
                s.gamma_el = s.gamma_el.or(Some(10.0));
                s.gamma_sf = s.gamma_sf.or(Some(0.1));
                s.v = s.v.or(Some(1.0));
                s.d = s.d.or(Some(3));
                s.length = s.length.or(Some(5.0));
                let p = spin_params(&s)?;
                s.t_max = s.t_max.or(Some(if p.gamma_sf > 0.0 { 5.0 * p.tau1() } else { 10.0 }));
                s.n_steps = s.n_steps.or(Some(100));
            }
            CommandKind::Wl => {
                s.d = s.d.or(Some(2));
                s.d0 = s.d0.or(Some(1.0));
                s.nu = s.nu.or(Some(1.0));
                s.l_el = s.l_el.or(Some(1.0));
                s.twice_s = s.twice_s.or(Some(0));
                if s.sweep.is_some() {
                    s.sweep_points = s.sweep_points.or(Some(21));
                    if s.sweep_from.is_none() || s.sweep_to.is_none() {
                        return Err(CliError::invalid("a sweep needs sweep_from and sweep_to"));
                    }
                } else if s.sweep_from.is_some() || s.sweep_to.is_some() || s.sweep_points.is_some() {
                    return Err(CliError::invalid("sweep bounds given without a sweep parameter"));
                }
                wl_params(&s)?.validate()?;
            }
        }
        if let Some(n) = s.n_steps {
            if n == 0 {
                return Err(CliError::invalid("n_steps must be positive"));
            }
        }
        if let Some(t) = s.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::invalid(format!("t_max must be positive, got {t}")));
            }
        }
        let format = s.format.unwrap();
        let has_curve = match command {
            CommandKind::Diffuse => s.mode != Some(DiffuseMode::Ce) && s.mode != Some(DiffuseMode::Mc),
            CommandKind::Wl => s.sweep.is_some(),
            _ => true,
        };
        if format != OutputFormat::Json && !has_curve {
            return Err(CliError::invalid(format!(
                "`{}` has no curve to write as {format:?} with these settings",
                command.name()
            )));
        }
        Ok(RunConfig { command, settings: s })
    }

    /// The resolved configuration in the config-file syntax.
    pub fn to_config_text(&self) -> String {
        let mut out = format!("# command = {}\n", self.command.name());
        for (k, v) in self.settings.to_map() {
            let v = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn echo(&self) -> Value {
        let mut m = self.settings.to_map();
        m.insert("command".into(), json!(self.command.name()));
        Value::Object(m)
    }
}

fn spin_params(s: &Settings) -> Result<SpinMediumParams, Error> {
    let medium = MediumParams::new(s.d.unwrap(), s.v.unwrap(), s.gamma_el.unwrap())?;
    SpinMediumParams::new(medium, s.gamma_sf.unwrap(), TwiceJ::spin(s.twice_s.unwrap())?)
}

fn relax_model(s: &Settings) -> Result<RelaxationModel, Error> {
    RelaxationModel::new(TwiceJ::spin(s.twice_s.unwrap())?, s.gamma_s.unwrap())
}

fn wl_params(s: &Settings) -> Result<WLParams, Error> {
    Ok(WLParams {
        dim: s.d.unwrap(),
        d0: s.d0.unwrap(),
        nu: s.nu.unwrap(),
        l_el: s.l_el.unwrap(),
        l_phi: s.l_phi,
        l_sys: s.l_sys,
        tau_sf: s.tau_sf,
        twice_s: TwiceJ::spin(s.twice_s.unwrap())?,
    })
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    /// Column names and rows for CSV and SVG output.
    pub table: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

fn time_grid(s: &Settings) -> Vec<f64> {
    let n = s.n_steps.unwrap();
    let t_max = s.t_max.unwrap();
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

fn run_relax(s: &Settings) -> Result<Report, Error> {
    let model = relax_model(s)?;
    let check = verify_spectrum(&model)?;
    let basis = build_tensor_basis(model.twice_s)?;
    let rho0 = SpinOperator::basis_projector(model.twice_s, 0);
    let d = model.twice_s.dim();
    let mut rows = Vec::new();
    for t in time_grid(s) {
        let rho = multipole_decay_with(&model, &basis, &rho0, t)?;
        rows.push(vec![t, rho.matrix[(0, 0)].re, rho.matrix[(d - 1, d - 1)].re, orientation(&rho)]);
    }
    Ok(Report {
        json: json!({
            "lambda": exact_eigenvalues(&model),
            "tau1": model.tau1(),
            "verify_residual": check.max_relative_error(),
            "degeneracies": check.degeneracies,
        }),
        table: Some((cols(&["t", "p_up", "p_down", "orientation"]), rows)),
    })
}

fn run_channel(s: &Settings) -> Result<Report, Error> {
    let model = relax_model(s)?;
    let t = s.t.unwrap();
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let (map, report) = relaxation_channel(&model, t)?;
    let mut out = json!({
        "t": t,
        "trace_preservation_residual": report.trace_preserving,
        "choi_min_eigenvalue": report.choi_min_eigenvalue,
        "cptp": report.is_cptp(1e-12),
    });
    if model.twice_s.twice() == 1 {
        let kraus = qubit_kraus(&model, t)?;
        out["kraus_completeness"] = json!(kraus.kraus_completeness);
        out["kraus_vs_exponential"] = json!(kraus.superop.max_abs_diff(&map));
    }
    let mut rows = Vec::new();
    for t in time_grid(s) {
        let (_, r) = relaxation_channel(&model, t)?;
        rows.push(vec![t, r.choi_min_eigenvalue, r.trace_preserving]);
    }
    Ok(Report {
        json: out,
        table: Some((cols(&["t", "choi_min_eigenvalue", "trace_preservation_residual"]), rows)),
    })
}

fn run_diffuse(s: &Settings) -> Result<Report, Error> {
    let medium = MediumParams::new(s.d.unwrap(), s.v.unwrap(), s.gamma_el.unwrap())?;
    let ce = chapman_enskog_d(&medium);
    let diffusion_json = |r: &DiffusionResult| {
        json!({ "D": r.d, "method": r.method, "uncertainty": r.uncertainty, "D_chapman_enskog": ce.d })
    };
    match s.mode.unwrap() {
        DiffuseMode::Ce => Ok(Report {
            json: diffusion_json(&ce),
            table: None,
        }),
        DiffuseMode::Mc => {
            let r = random_walk_d(&medium, s.walkers.unwrap(), s.t_max.unwrap(), s.seed.unwrap())?;
            Ok(Report {
                json: diffusion_json(&r),
                table: None,
            })
        }
        DiffuseMode::Fourier => {
            let grid = Arc::new(AngularGrid::uniform(medium.dim, s.grid_points.unwrap())?);
            let q = s.q.unwrap();
            let state = KineticState::isotropic(grid, [q, 0.0, 0.0], 1.0);
            let t_end = s.t_max.unwrap();
            let series = fourier_mode_evolution(&state, &medium, t_end)?;
            let rate = series.fit_decay_rate(5.0 * medium.tau_el(), t_end)?;
            let r = DiffusionResult {
                d: rate / (q * q),
                method: DiffusionMethod::FourierDecay,
                uncertainty: None,
            };
            let mut out = diffusion_json(&r);
            out["decay_rate"] = json!(rate);
            out["max_continuity_residual"] = json!(series.max_continuity_residual());
            out["warning"] = json!(series.warning);
            let rows = series
                .samples
                .iter()
                .map(|p| vec![p.t, p.n.re, p.n.im, p.j_parallel.re, p.j_parallel.im])
                .collect();
            Ok(Report {
                json: out,
                table: Some((cols(&["t", "re_n", "im_n", "re_j", "im_j"]), rows)),
            })
        }
    }
}

fn run_transmit(s: &Settings) -> Result<Report, Error> {
    let p = spin_params(s)?;
    let out = transmitted_polarization(&p, s.length.unwrap())?;
    let d = p.twice_s.dim();
    let mut rows = Vec::new();
    for t in time_grid(s) {
        let rho = spin_state(&p, t)?;
        let (up, down) = (rho.matrix[(0, 0)].re, rho.matrix[(d - 1, d - 1)].re);
        rows.push(vec![t, up, down, (up - down) / (up + down)]);
    }
    let mut json = serde_json::to_value(&out).map_err(|e| Error::Computation(e.to_string()))?;
    json["lambda_sf"] = json!(p.lambda_sf());
    Ok(Report {
        json,
        table: Some((cols(&["t", "p_up", "p_down", "pi"]), rows)),
    })
}

fn run_wl(s: &Settings) -> Result<Report, Error> {
    let base = wl_params(s)?;
    let Some(sweep) = s.sweep else {
        let result = wl_correction(&base)?;
        let json = json!({
            "delta_D_over_D0": result.delta_d_over_d0,
            "per_channel": result.per_channel,
            "quadrature_discrepancy": result.quadrature_discrepancy,
        });
        return Ok(Report { json, table: None });
    };
    let (from, to, n) = (s.sweep_from.unwrap(), s.sweep_to.unwrap(), s.sweep_points.unwrap());
    if !(from > 0.0 && to > 0.0) || n < 2 {
        return Err(Error::InvalidParameter("sweep needs positive bounds and at least 2 points".into()));
    }
    let values: Vec<f64> = (0..n)
        .map(|k| match k {
            0 => from,
            k if k == n - 1 => to,
            k => from * (to / from).powf(k as f64 / (n - 1) as f64),
        })
        .collect();
    let rows: Vec<Result<Vec<f64>, Error>> = values
        .par_iter()
        .map(|&x| {
            let mut p = base;
            match sweep {
                SweepParam::LPhi => p.l_phi = Some(x),
                SweepParam::LSys => p.l_sys = Some(x),
                SweepParam::LEl => p.l_el = x,
                SweepParam::TauSf => p.tau_sf = Some(x),
            }
            let r = wl_correction(&p)?;
            let mut row = vec![x, r.delta_d_over_d0];
            row.extend(r.per_channel.iter().map(|c| c.contribution));
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let sweep_name = serde_json::to_value(sweep)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    let mut names = vec![sweep_name.clone(), "delta_D_over_D0".to_string()];
    names.extend((0..rows[0].len() - 2).map(|k| format!("K{k}")));
    let json = json!({
        "sweep": sweep_name,
        "values": values,
        "delta_D_over_D0": rows.iter().map(|r| r[1]).collect::<Vec<_>>(),
    });
    Ok(Report {
        json,
        table: Some((names, rows)),
    })
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Runs a resolved command and renders its primary output.
pub fn execute(config: &RunConfig) -> Result<String, CliError> {
    let s = &config.settings;
    let report = match config.command {
        CommandKind::Relax => run_relax(s),
        CommandKind::Channel => run_channel(s),
        CommandKind::Diffuse => run_diffuse(s),
        CommandKind::Transmit => run_transmit(s),
        CommandKind::Wl => run_wl(s),
    }?;
    Ok(match s.format.unwrap() {
        OutputFormat::Json => {
            let mut obj = match report.json {
                Value::Object(m) => m,
                other => {
                    let mut m = Map::new();
                    m.insert("result".into(), other);
                    m
                }
            };
            obj.insert("config".into(), config.echo());
            let mut text = serde_json::to_string_pretty(&Value::Object(obj))
                .map_err(|e| CliError::from(Error::Computation(e.to_string())))?;
            text.push('\n');
            text
        }
        OutputFormat::Csv => {
            let (names, rows) = report.table.expect("validated");
            render_csv(config, &names, &rows)
        }
        OutputFormat::Svg => {
            let (names, rows) = report.table.expect("validated");
            let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            render_svg(
                &format!("spinflow {}: {} vs {}", config.command.name(), names[1], names[0]),
                &xs,
                &ys,
                s.log_scale.unwrap_or(false),
            )
        }
    })
}

fn render_csv(config: &RunConfig, names: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for line in config.to_config_text().lines() {
        let line = line.strip_prefix("# ").unwrap_or(line);
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{}", names.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// A single polyline plot; non-positive values are dropped on a log axis.
pub fn render_svg(title: &str, xs: &[f64], ys: &[f64], log_y: bool) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| !log_y || **y > 0.0)
        .map(|(x, y)| (*x, if log_y { y.log10() } else { *y }))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let path: Vec<String> = pts
        .iter()
        .map(|(x, y)| {
            let px = M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
            let py = H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    let axis = if log_y { "log10 y" } else { "y" };
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{M}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n\
         <line x1=\"{M}\" y1=\"{yb}\" x2=\"{xr}\" y2=\"{yb}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{yb}\" stroke=\"black\"/>\n\
         <text x=\"{M}\" y=\"{yl}\" font-family=\"sans-serif\" font-size=\"11\">x: {x0} .. {x1}   {axis}: {y0} .. {y1}</text>\n\
         <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n\
         </svg>\n",
        escape(title),
        path.join(" "),
        yb = H - M,
        xr = W - M,
        yl = H - 15.0,
    )
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
    }
}

/// Parses arguments, runs the command, and writes to `stdout` or the
/// configured output file. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match try_run(args, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.line());
            e.status
        }
    }
}

fn try_run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return Ok(());
        }
        Err(e) => {
            return Err(CliError {
                status: 2,
                code: "usage".into(),
                message: first_line(&e.to_string()),
            })
        }
    };
    let (kind, args) = cli.command.split();
    let file = match &args.config {
        Some(path) => parse_config_file(kind, path)?,
        None => Settings::default(),
    };
    let config = RunConfig::resolve(kind, args.settings.over(file))?;
    if args.dry_run {
        write!(stdout, "{}", config.to_config_text()).map_err(io_error)?;
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::from(Error::Computation(e.to_string())))?;
    let text = pool.install(|| execute(&config))?;
    match &config.settings.output {
        Some(path) => std::fs::write(path, text).map_err(io_error),
        None => stdout.write_all(text.as_bytes()).map_err(io_error),
    }
}

fn io_error(e: std::io::Error) -> CliError {
    CliError {
        status: 3,
        code: "io".into(),
        message: e.to_string(),
    }
}
