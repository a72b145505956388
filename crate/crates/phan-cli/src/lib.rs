//! Configuration, dispatch and output files of the `phan` command.
//!
//! Every setting can come from a flag, from a flat JSON config file
//! (`--config`), or from its default; flags win over the file. Keys in the
//! file are the flag names without dashes, with `_` and `-` interchangeable.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use thiserror::Error;

use phan_core::analysis::{classify_limit, phan_sweep_runs, SweepConfig};
use phan_core::eigen::{
    linearized_spectrum_at_zero, principal_eigenvalue_mu1_with_tol, solve_lambda1,
};
use phan_core::equilibrium::{monotone_iterate, Branch};
use phan_core::flow::{
    max_principle_check, ramp_profile, random_admissible_state, run, RunSettings, RunStatus,
};
use phan_core::io::{json17, profile_csv, to_json17, trajectory_csv};
use phan_core::tol::{MONOTONE_TOL, TOL_CONV, TOL_EQ, TOL_MP, TOL_ROOT};
use phan_core::{make_grid, validate_params, Grid, PhanError, PhysParams};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "NEMATIC_PHAN_OUT";
pub const DEFAULT_OUT: &str = "phan-out";
pub const DEFAULT_D_LIST: [f64; 8] = [0.5, 0.6, 0.7, 0.75, 0.85, 0.9, 1.0, 1.2];

/// Amplitude of the initial tilt `amp (d - x3) / d` of flow runs.
const INITIAL_TILT: f64 = 0.1;
const INITIAL_NOISE: f64 = 0.05;
/// Distance below which a flow limit is named P or HAN.
const CLASS_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadFlag(String),
    #[error("{name}: {reason}")]
    BadValue { name: String, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{0}")]
    Numerical(PhanError),
    #[error("run diverged at t = {t}")]
    Diverged { t: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadFlag(_) | CliError::BadValue { .. } | CliError::UnknownKey(_) => 1,
            CliError::Numerical(e) if e.is_input_error() => 1,
            CliError::Numerical(_) | CliError::Diverged { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::BadFlag(_) => "BadFlag",
            CliError::BadValue { .. } => "BadValue",
            CliError::UnknownKey(_) => "UnknownKey",
            CliError::Numerical(e) => e.code(),
            CliError::Diverged { .. } => "Diverged",
            CliError::Io { .. } => "Io",
        }
    }

    /// The one-line `code<TAB>message` diagnostic.
    pub fn diagnostic(&self) -> String {
        format!(
            "{}\t{}",
            self.code(),
            self.to_string().replace(['\n', '\t'], " ")
        )
    }
}

impl From<PhanError> for CliError {
    fn from(e: PhanError) -> Self {
        match e {
            PhanError::NonPositiveParameter(name) => {
                let name = if name == "L_H" { "lh" } else { name };
                bad_value(name.replace('_', "-"), "must be positive")
            }
            e => CliError::Numerical(e),
        }
    }
}

fn bad_value(name: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::BadValue {
        name: name.into(),
        reason: reason.into(),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workflow {
    Eigen,
    Equilibrium,
    Flow,
    Stability,
    Sweep,
}

#[derive(Parser, Debug)]
#[command(
    name = "phan",
    version,
    about = "Planar/hybrid transition of a nematic film"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Principal root lambda1 of the threshold equation.
    Eigen(Flags),
    /// Least-energy profile by monotone iteration.
    Equilibrium(Flags),
    /// Coupled director / flow run from perturbed initial data.
    Flow(Flags),
    /// Principal eigenvalues of the linearizations at the equilibrium and at zero.
    Stability(Flags),
    /// Thickness sweep across the transition.
    Sweep(Flags),
}

/// One layer of settings; unset fields fall through to the next layer.
#[derive(Args, Debug, Default, Clone)]
struct Flags {
    /// Field strength [default: 1]
    #[arg(long = "h", allow_negative_numbers = true)]
    h: Option<f64>,
    /// Anchoring strength on the homeotropic wall [default: 1]
    #[arg(long = "lh", allow_negative_numbers = true)]
    lh: Option<f64>,
    /// Film thickness [default: 1]
    #[arg(long = "d", allow_negative_numbers = true)]
    d: Option<f64>,
    /// Comma-separated thicknesses for `sweep` [default: 0.5,0.6,0.7,0.75,0.85,0.9,1.0,1.2]
    #[arg(long = "d-list", allow_negative_numbers = true)]
    d_list: Option<String>,
    /// Spatial dimension 1, 2 or 3 [default: 1]
    #[arg(long = "dim", allow_negative_numbers = true)]
    dim: Option<i64>,
    /// Cells per tangential axis [default: 32]
    #[arg(long = "n-tangential", allow_negative_numbers = true)]
    n_tangential: Option<i64>,
    /// Cells across the film [default: 128]
    #[arg(long = "n-normal", allow_negative_numbers = true)]
    n_normal: Option<i64>,
    /// Time step [default: 0.001]
    #[arg(long = "dt", allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Final time [default: 100 for flow, 5000 for sweep]
    #[arg(long = "t-end", allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Steps between recorded samples [default: 100]
    #[arg(long = "sample-every", allow_negative_numbers = true)]
    sample_every: Option<i64>,
    /// Residual bound reported for the threshold root [default: 1e-12]
    #[arg(long = "tol-root", allow_negative_numbers = true)]
    tol_root: Option<f64>,
    /// Residual bound for accepted equilibria [default: 1e-6]
    #[arg(long = "tol-eq", allow_negative_numbers = true)]
    tol_eq: Option<f64>,
    /// Stationarity threshold of flow runs [default: 1e-8]
    #[arg(long = "tol-conv", allow_negative_numbers = true)]
    tol_conv: Option<f64>,
    /// Slack of the angle band check [default: 1e-8]
    #[arg(long = "tol-mp", allow_negative_numbers = true)]
    tol_mp: Option<f64>,
    /// Seed of the random initial data [default: 0]
    #[arg(long = "seed", allow_negative_numbers = true)]
    seed: Option<i64>,
    /// Output directory [default: $NEMATIC_PHAN_OUT, else phan-out]
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// JSON file with flat keys named like the flags
    #[arg(long = "config")]
    config: Option<PathBuf>,
    /// Parallel sweep pipelines [default: number of cores]
    #[arg(long = "jobs", allow_negative_numbers = true)]
    jobs: Option<i64>,
}

impl Flags {
    fn or(self, lower: Flags) -> Flags {
        Flags {
            h: self.h.or(lower.h),
            lh: self.lh.or(lower.lh),
            d: self.d.or(lower.d),
            d_list: self.d_list.or(lower.d_list),
            dim: self.dim.or(lower.dim),
            n_tangential: self.n_tangential.or(lower.n_tangential),
            n_normal: self.n_normal.or(lower.n_normal),
            dt: self.dt.or(lower.dt),
            t_end: self.t_end.or(lower.t_end),
            sample_every: self.sample_every.or(lower.sample_every),
            tol_root: self.tol_root.or(lower.tol_root),
            tol_eq: self.tol_eq.or(lower.tol_eq),
            tol_conv: self.tol_conv.or(lower.tol_conv),
            tol_mp: self.tol_mp.or(lower.tol_mp),
            seed: self.seed.or(lower.seed),
            out: self.out.or(lower.out),
            config: self.config.or(lower.config),
            jobs: self.jobs.or(lower.jobs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workflow: Workflow,
    pub params: PhysParams,
    pub d_list: Vec<f64>,
    pub dim: usize,
    pub n_tangential: usize,
    pub n_normal: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub tol_root: f64,
    pub tol_eq: f64,
    pub tol_conv: f64,
    pub tol_mp: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// `None` uses every core.
    pub jobs: Option<usize>,
}

fn clap_error(e: clap::Error) -> CliError {
    let arg = match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s
            .trim_start_matches('-')
            .split([' ', '='])
            .next()
            .unwrap_or("")
            .to_string(),
        _ => String::new(),
    };
    let message = e
        .to_string()
        .lines()
        .next()
        .unwrap_or("")
        .trim_start_matches("error: ")
        .to_string();
    match e.kind() {
        ErrorKind::InvalidValue | ErrorKind::ValueValidation if !arg.is_empty() => {
            bad_value(arg, message)
        }
        _ => CliError::BadFlag(message),
    }
}

fn number(key: &str, v: &Value) -> Result<f64, CliError> {
    v.as_f64()
        .ok_or_else(|| bad_value(key, "expected a number"))
}

fn integer(key: &str, v: &Value) -> Result<i64, CliError> {
    v.as_i64()
        .ok_or_else(|| bad_value(key, "expected an integer"))
}

fn text(key: &str, v: &Value) -> Result<String, CliError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| bad_value(key, "expected a string"))
}

/// Reads a flat JSON object into a settings layer.
fn file_layer(path: &Path) -> Result<Flags, CliError> {
    let raw = fs::read_to_string(path).map_err(io_error(path))?;
    let map: Map<String, Value> = serde_json::from_str(&raw)
        .map_err(|e| bad_value("config", format!("{}: {e}", path.display())))?;
    let mut f = Flags::default();
    for (key, v) in &map {
        let key = key.replace('_', "-");
        let k = key.as_str();
        match k {
            "h" => f.h = Some(number(k, v)?),
            "lh" => f.lh = Some(number(k, v)?),
            "d" => f.d = Some(number(k, v)?),
            "d-list" => {
                f.d_list = Some(match v {
                    Value::Array(items) => items
                        .iter()
                        .map(|x| number(k, x).map(|x| x.to_string()))
                        .collect::<Result<Vec<_>, _>>()?
                        .join(","),
                    _ => text(k, v)?,
                })
            }
            "dim" => f.dim = Some(integer(k, v)?),
            "n-tangential" => f.n_tangential = Some(integer(k, v)?),
            "n-normal" => f.n_normal = Some(integer(k, v)?),
            "dt" => f.dt = Some(number(k, v)?),
            "t-end" => f.t_end = Some(number(k, v)?),
            "sample-every" => f.sample_every = Some(integer(k, v)?),
            "tol-root" => f.tol_root = Some(number(k, v)?),
            "tol-eq" => f.tol_eq = Some(number(k, v)?),
            "tol-conv" => f.tol_conv = Some(number(k, v)?),
            "tol-mp" => f.tol_mp = Some(number(k, v)?),
            "seed" => f.seed = Some(integer(k, v)?),
            "out" => f.out = Some(PathBuf::from(text(k, v)?)),
            "jobs" => f.jobs = Some(integer(k, v)?),
            _ => return Err(CliError::UnknownKey(key)),
        }
    }
    Ok(f)
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad_value(name, "must be positive"))
    }
}

fn count(name: &str, x: i64, min: i64) -> Result<usize, CliError> {
    if x >= min {
        Ok(x as usize)
    } else {
        Err(bad_value(name, format!("must be at least {min}")))
    }
}

fn parse_d_list(s: &str) -> Result<Vec<f64>, CliError> {
    let ds = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| bad_value("d-list", format!("`{p}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for &d in &ds {
        positive("d-list", d)?;
    }
    if ds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(bad_value("d-list", "must be strictly increasing"));
    }
    Ok(ds)
}

/// Resolves flags, the optional config file and the defaults into a
/// validated configuration. `env_out` is the value of [`OUT_ENV`].
pub fn parse_config<I, S>(argv: I, env_out: Option<&str>) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(clap_error)?;
    let (workflow, flags) = match cli.command {
        Command::Eigen(f) => (Workflow::Eigen, f),
        Command::Equilibrium(f) => (Workflow::Equilibrium, f),
        Command::Flow(f) => (Workflow::Flow, f),
        Command::Stability(f) => (Workflow::Stability, f),
        Command::Sweep(f) => (Workflow::Sweep, f),
    };
    let file = match &flags.config {
        Some(path) => file_layer(path)?,
        None => Flags::default(),
    };
    let f = flags.or(file);

    let h = positive("h", f.h.unwrap_or(1.0))?;
    let lh = positive("lh", f.lh.unwrap_or(1.0))?;
    let d = positive("d", f.d.unwrap_or(1.0))?;
    let params = validate_params(h, lh, d)?;
    let d_list = match &f.d_list {
        Some(s) => parse_d_list(s)?,
        None => DEFAULT_D_LIST.to_vec(),
    };
    let dim = count("dim", f.dim.unwrap_or(1), 1)?;
    if dim > 3 {
        return Err(bad_value("dim", "must be 1, 2 or 3"));
    }
    let n_tangential = count("n-tangential", f.n_tangential.unwrap_or(32), 4)?;
    let n_normal = count("n-normal", f.n_normal.unwrap_or(128), 4)?;
    let default_t_end = if workflow == Workflow::Sweep {
        5000.0
    } else {
        100.0
    };
    let output_dir = f
        .out
        .or_else(|| env_out.filter(|s| !s.is_empty()).map(PathBuf::from));
    Ok(RunConfig {
        workflow,
        params,
        d_list,
        dim,
        n_tangential,
        n_normal,
        dt: positive("dt", f.dt.unwrap_or(1e-3))?,
        t_end: positive("t-end", f.t_end.unwrap_or(default_t_end))?,
        sample_every: count("sample-every", f.sample_every.unwrap_or(100), 1)?,
        tol_root: positive("tol-root", f.tol_root.unwrap_or(TOL_ROOT))?,
        tol_eq: positive("tol-eq", f.tol_eq.unwrap_or(TOL_EQ))?,
        tol_conv: positive("tol-conv", f.tol_conv.unwrap_or(TOL_CONV))?,
        tol_mp: positive("tol-mp", f.tol_mp.unwrap_or(TOL_MP))?,
        seed: count("seed", f.seed.unwrap_or(0), 0)? as u64,
        output_dir: output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        jobs: f.jobs.map(|j| count("jobs", j, 1)).transpose()?,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_error(path))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn line(v: &Value) -> String {
    serde_json::to_string(v).expect("JSON values always serialize")
}

fn j17<T: serde::Serialize>(v: &T) -> Value {
    to_json17(v).expect("result types always serialize")
}

fn base_summary(cfg: &RunConfig) -> Map<String, Value> {
    let p = &cfg.params;
    let mut m = Map::new();
    m.insert("h".into(), json17(p.h));
    m.insert("lh".into(), json17(p.l_h));
    m.insert("d".into(), json17(p.d));
    m.insert("d_c".into(), json17(p.d_c));
    m
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    Ok(dir)
}

fn eigen(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = solve_lambda1(&cfg.params)?;
    let mut m = base_summary(cfg);
    m.insert("lambda1".into(), json17(r.lambda1));
    m.insert("residual".into(), json17(r.residual));
    m.insert(
        "residual_below_tol_root".into(),
        Value::Bool(r.residual < cfg.tol_root),
    );
    Ok(Value::Object(m))
}

fn equilibrium(cfg: &RunConfig) -> Result<Value, CliError> {
    let grid = Grid::line(cfg.params.d, cfg.n_normal)?;
    let (eq, trace) = monotone_iterate(&cfg.params, &grid, MONOTONE_TOL)?;
    if !(eq.bvp_residual < cfg.tol_eq) {
        return Err(PhanError::ResidualTooLarge {
            residual: eq.bvp_residual,
            tol: cfg.tol_eq,
        }
        .into());
    }
    let dir = prepare_out(cfg)?;
    write_file(&dir.join("profile.csv"), &profile_csv(&eq.profile))?;
    let mut m = base_summary(cfg);
    m.insert("n_normal".into(), json!(cfg.n_normal));
    m.insert("branch".into(), j17(&eq.branch));
    m.insert("phi0".into(), json17(eq.profile.values[0]));
    m.insert("energy".into(), json17(eq.energy));
    m.insert("bvp_residual".into(), json17(eq.bvp_residual));
    m.insert("iterations".into(), json!(eq.iterations));
    m.insert(
        "monotone_violations".into(),
        json!(trace.total_violations()),
    );
    let v = Value::Object(m);
    write_file(&dir.join("equilibrium.json"), &pretty(&v))?;
    Ok(v)
}

fn flow(cfg: &RunConfig) -> Result<Value, CliError> {
    let p = &cfg.params;
    let grid = make_grid(p, cfg.dim, cfg.n_tangential, cfg.n_normal)?;
    let line_grid = Grid::line(p.d, cfg.n_normal)?;
    let candidate = if p.above_threshold() {
        match monotone_iterate(p, &line_grid, MONOTONE_TOL) {
            Ok((eq, _)) if eq.branch == Branch::Positive => Some(eq),
            Ok(_) | Err(PhanError::AmbiguousLimit { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let base = ramp_profile(p.d, cfg.n_normal, INITIAL_TILT);
    let initial = random_admissible_state(&grid, p, &base, cfg.seed, INITIAL_NOISE, INITIAL_NOISE)?;
    let settings = RunSettings {
        dt: cfg.dt,
        t_end: cfg.t_end,
        sample_every: cfg.sample_every,
        tol_conv: cfg.tol_conv,
    };
    let traj = run(
        &initial,
        p,
        &settings,
        candidate.as_ref().map(|c| &c.profile),
    )?;

    let dir = prepare_out(cfg)?;
    write_file(&dir.join("trajectory.csv"), &trajectory_csv(&traj.samples))?;
    let band = max_principle_check(&traj.final_state.phi, (0.0, PI), cfg.tol_mp);
    let sampled_band_ok = traj
        .samples
        .iter()
        .all(|s| s.phi_min >= -cfg.tol_mp && s.phi_max <= PI + cfg.tol_mp);
    let limit = match classify_limit(&traj, candidate.as_ref(), CLASS_TOL) {
        Ok(c) => j17(&c),
        Err(_) => Value::Null,
    };
    let mut m = base_summary(cfg);
    m.insert("dim".into(), json!(cfg.dim));
    m.insert("n_tangential".into(), json!(grid.n_tangential));
    m.insert("n_normal".into(), json!(cfg.n_normal));
    m.insert("dt".into(), json17(cfg.dt));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("status".into(), j17(&traj.status));
    m.insert("steps".into(), json!(traj.steps));
    m.insert(
        "initial_projected".into(),
        Value::Bool(traj.initial_projected),
    );
    m.insert("energy_increase".into(), json17(traj.energy_increase));
    m.insert("limit".into(), limit);
    m.insert(
        "angle_band_ok".into(),
        Value::Bool(band.pass && sampled_band_ok),
    );
    m.insert(
        "final".into(),
        j17(traj
            .samples
            .last()
            .expect("a run records its initial state")),
    );
    let v = Value::Object(m);
    write_file(&dir.join("flow.json"), &pretty(&v))?;
    if traj.status == RunStatus::Diverged {
        return Err(CliError::Diverged {
            t: traj.final_state.t,
        });
    }
    Ok(v)
}

fn stability(cfg: &RunConfig) -> Result<Value, CliError> {
    let p = &cfg.params;
    let grid = Grid::line(p.d, cfg.n_normal)?;
    let (eq, _) = monotone_iterate(p, &grid, MONOTONE_TOL)?;
    let mu1 = principal_eigenvalue_mu1_with_tol(&eq.profile, p, &grid, cfg.tol_eq)?.mu1;
    let nu1 = linearized_spectrum_at_zero(p, &grid)?.nu1;
    let mut m = base_summary(cfg);
    m.insert("n_normal".into(), json!(cfg.n_normal));
    m.insert("branch".into(), j17(&eq.branch));
    m.insert("mu1".into(), mu1.map_or(Value::Null, json17));
    m.insert("nu1".into(), nu1.map_or(Value::Null, json17));
    Ok(Value::Object(m))
}

/// File name of the trajectory of one sweep entry.
pub fn sweep_trajectory_name(d: f64) -> String {
    format!("trajectory_d{d}.csv")
}

fn sweep(cfg: &RunConfig) -> Result<Value, CliError> {
    let sc = SweepConfig {
        n_normal: cfg.n_normal,
        dt: cfg.dt,
        t_end: cfg.t_end,
        sample_every: cfg.sample_every,
        tol_conv: cfg.tol_conv,
        ..SweepConfig::default()
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| bad_value("jobs", e.to_string()))?;
    let (report, runs) = pool.install(|| phan_sweep_runs(&cfg.params, &cfg.d_list, &sc))?;

    let dir = prepare_out(cfg)?;
    let mut details = Vec::with_capacity(runs.len());
    for r in &runs {
        let name = sweep_trajectory_name(r.d);
        write_file(&dir.join(&name), &trajectory_csv(&r.trajectory.samples))?;
        details.push(json!({
            "d": json17(r.d),
            "class": j17(&r.class),
            "status": j17(&r.trajectory.status),
            "steps": r.trajectory.steps,
            "fit": r.fit.as_ref().map_or(Value::Null, j17),
            "trajectory": name,
        }));
    }
    let v = j17(&report);
    write_file(&dir.join("sweep.json"), &pretty(&v))?;
    write_file(
        &dir.join("sweep_runs.json"),
        &pretty(&Value::Array(details)),
    )?;
    Ok(v)
}

/// Runs the configured workflow and writes its one-line JSON summary to
/// `stdout`.
pub fn dispatch(cfg: &RunConfig, stdout: &mut impl Write) -> Result<(), CliError> {
    let summary = match cfg.workflow {
        Workflow::Eigen => eigen(cfg)?,
        Workflow::Equilibrium => equilibrium(cfg)?,
        Workflow::Flow => flow(cfg)?,
        Workflow::Stability => stability(cfg)?,
        Workflow::Sweep => sweep(cfg)?,
    };
    writeln!(stdout, "{}", line(&summary)).map_err(io_error(Path::new("<stdout>")))
}

/// Full command: parse, dispatch, report. Returns the process exit code.
pub fn main_with<I, S>(
    argv: I,
    env_out: Option<&str>,
    stdout: &mut impl Write,
    stderr: &mut impl Write,
) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<S> = argv.into_iter().collect();
    // help and version requests are not errors
    if let Err(e) = Cli::try_parse_from(argv.clone()) {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = write!(stdout, "{e}");
            return 0;
        }
    }
    let result = parse_config(argv, env_out).and_then(|cfg| dispatch(&cfg, stdout));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.diagnostic());
            e.exit_code()
        }
    }
}
