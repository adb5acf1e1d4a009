//! `vortex`: command-line front end for forked-grating diffraction and
//! SESANS simulations.

mod commands;
mod config;
mod output;

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use vortex_core::specfun::Side;

use config::{Config, SesansMode};
use output::OutputDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] vortex_core::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(_) => "input",
            CliError::Io { .. } => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "vortex", version, about = "Forked-grating diffraction and spin-echo SANS simulations")]
struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Far-field pattern: binary grid, radial profiles for n = 1 and 3.
    Diffract(DiffractArgs),
    /// Spin-echo polarization map, slice or time-of-flight curve.
    Sesans(SesansArgs),
    /// Fit the groove depth to a measured curve.
    Fit(FitArgs),
    /// Closed-form donut profile of one diffraction order.
    Donut(DonutArgs),
    /// Spin-echo length calculator.
    Xi(XiArgs),
}

#[derive(Args)]
struct Io {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct GratingFlags {
    /// Topological charge m.
    #[arg(long, allow_negative_numbers = true)]
    charge: Option<i32>,
    /// Groove depth in nm.
    #[arg(long)]
    depth: Option<f64>,
    /// Wavelength in nm.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    samples_per_period: Option<usize>,
}

impl GratingFlags {
    fn apply(&self, cfg: &mut Config) {
        if let Some(m) = self.charge {
            cfg.grating.charge = m;
        }
        if let Some(d) = self.depth {
            cfg.grating.depth = d;
        }
        if let Some(l) = self.lambda {
            cfg.simulation.lambda_nm = l;
        }
        if let Some(s) = self.samples_per_period {
            cfg.simulation.samples_per_period = s;
        }
    }
}

#[derive(Args)]
struct DiffractArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    grating: GratingFlags,
    /// Zero-padding factor of the FFT grid.
    #[arg(long)]
    pad: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct SesansArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    grating: GratingFlags,
    #[arg(long, value_enum)]
    mode: Option<SesansMode>,
    /// Spin-echo direction in degrees from the grating vector (0 = perpendicular to grooves).
    #[arg(long, allow_negative_numbers = true)]
    orientation: Option<f64>,
    #[arg(long, value_enum)]
    resolution: Option<Switch>,
    /// Number of identical gratings in the beam.
    #[arg(long)]
    stack: Option<usize>,
    #[arg(long)]
    n_lambda: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    io: Io,
    /// Measured curve CSV.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    grating: GratingFlags,
    #[arg(long, allow_negative_numbers = true)]
    orientation: Option<f64>,
    #[arg(long)]
    xi_column: Option<String>,
    #[arg(long)]
    pol_column: Option<String>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long)]
    n_lambda: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Plus,
    Minus,
}

#[derive(Args)]
struct DonutArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    grating: GratingFlags,
    /// Diffraction order n.
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    /// Dimensionless regulator radius R.
    #[arg(long)]
    regulator: Option<f64>,
    #[arg(long)]
    q_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct XiArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write xi.json and a manifest here.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Wavelengths (nm) to convert.
    #[arg(long, num_args = 1..)]
    lambda: Vec<f64>,
    #[arg(long)]
    xi0: Option<f64>,
    #[arg(long)]
    freq_hz: Option<f64>,
    #[arg(long)]
    length_m: Option<f64>,
    #[arg(long)]
    theta_deg: Option<f64>,
}

type Inputs = Vec<(PathBuf, Vec<u8>)>;

fn load(path: Option<&Path>) -> Result<(Config, Inputs), CliError> {
    match path {
        Some(p) => {
            let (cfg, bytes) = Config::load(p)?;
            Ok((cfg, vec![(p.to_path_buf(), bytes)]))
        }
        None => Ok((Config::default(), Vec::new())),
    }
}

fn run(command: Command) -> Result<PathBuf, CliError> {
    match command {
        Command::Diffract(a) => {
            let (mut cfg, inputs) = load(Some(&a.io.config))?;
            a.grating.apply(&mut cfg);
            if let Some(p) = a.pad {
                cfg.simulation.pad = p;
            }
            if let Some(b) = a.bins {
                cfg.simulation.radial_bins = b;
            }
            cfg.validate()?;
            let mut out = OutputDir::create(&a.io.out)?;
            commands::diffract(&cfg, &mut out)?;
            out.finish("diffract", Some(&a.io.config), &inputs)
        }
        Command::Sesans(a) => {
            let (mut cfg, inputs) = load(Some(&a.io.config))?;
            a.grating.apply(&mut cfg);
            let sim = &mut cfg.simulation;
            if let Some(m) = a.mode {
                sim.mode = m;
            }
            if let Some(o) = a.orientation {
                sim.orientation_deg = o;
            }
            if let Some(r) = a.resolution {
                sim.resolution = matches!(r, Switch::On);
            }
            if let Some(s) = a.stack {
                sim.stack = s;
            }
            if let Some(n) = a.n_lambda {
                sim.n_lambda = n;
            }
            cfg.validate()?;
            let mut out = OutputDir::create(&a.io.out)?;
            commands::sesans(&cfg, &mut out)?;
            out.finish("sesans", Some(&a.io.config), &inputs)
        }
        Command::Fit(a) => {
            let (mut cfg, mut inputs) = load(Some(&a.io.config))?;
            a.grating.apply(&mut cfg);
            if let Some(o) = a.orientation {
                cfg.simulation.orientation_deg = o;
            }
            if let Some(n) = a.n_lambda {
                cfg.simulation.n_lambda = n;
            }
            let f = &mut cfg.fit;
            if let Some(c) = a.xi_column {
                f.xi_column = c;
            }
            if let Some(c) = a.pol_column {
                f.pol_column = c;
            }
            if let Some(d) = a.d_min {
                f.d_min_nm = d;
            }
            if let Some(d) = a.d_max {
                f.d_max_nm = d;
            }
            if let Some(n) = a.n_grid {
                f.n_grid = n;
            }
            cfg.validate()?;
            let data = std::fs::read(&a.data)
                .map_err(|e| CliError::Config(format!("cannot read data file {}: {e}", a.data.display())))?;
            let mut out = OutputDir::create(&a.io.out)?;
            commands::fit(&cfg, &data, &mut out)?;
            inputs.push((a.data, data));
            out.finish("fit", Some(&a.io.config), &inputs)
        }
        Command::Donut(a) => {
            let (mut cfg, inputs) = load(a.config.as_deref())?;
            a.grating.apply(&mut cfg);
            let d = &mut cfg.donut;
            if let Some(n) = a.order {
                d.order = n;
            }
            if let Some(s) = a.side {
                d.side = match s {
                    SideArg::Plus => Side::Plus,
                    SideArg::Minus => Side::Minus,
                };
            }
            if let Some(r) = a.regulator {
                d.regulator = r;
            }
            if let Some(q) = a.q_max {
                d.q_max = q;
            }
            if let Some(p) = a.points {
                d.points = p;
            }
            cfg.validate()?;
            let mut out = OutputDir::create(&a.out)?;
            commands::donut(&cfg, &mut out)?;
            out.finish("donut", a.config.as_deref(), &inputs)
        }
        Command::Xi(a) => {
            let (mut cfg, inputs) = load(a.config.as_deref())?;
            let inst = &mut cfg.instrument;
            if let Some(x) = a.xi0 {
                inst.xi0 = x;
            }
            if let Some(f) = a.freq_hz {
                inst.freq_hz = f;
            }
            if let Some(l) = a.length_m {
                inst.length_rf_m = l;
            }
            if let Some(t) = a.theta_deg {
                inst.theta0 = t.to_radians();
            }
            inst.validate()?;
            let report = commands::xi_report(inst, &a.lambda)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("JSON values serialize"));
            match a.out {
                Some(dir) => {
                    let mut out = OutputDir::create(&dir)?;
                    out.write_json("xi.json", &report)?;
                    out.finish("xi", a.config.as_deref(), &inputs)
                }
                None => Ok(PathBuf::new()),
            }
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("VORTEX_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("VORTEX_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn report(err: &CliError) -> ExitCode {
    let code = err.exit_code();
    let body = json!({ "error": { "kind": err.kind(), "message": err.to_string() }, "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => report(&CliError::Usage(e.render().to_string().trim().to_string())),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Err(e) = configure_threads() {
        return report(&e);
    }
    match run(cli.command) {
        Ok(manifest) => {
            if !manifest.as_os_str().is_empty() {
                println!("{}", manifest.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
