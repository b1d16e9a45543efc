//! Command-line front end.
//!
//! Every subcommand starts from [`RunConfig`]: defaults, then the optional
//! `--config` file, then each `--set key=value` in order. Results go to
//! `--out` or standard output as CSV (the default) or JSON.
//!
//! Exit status is 0 on success, 1 for usage and configuration errors and 2
//! when the numerics fail.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classify::{classify_phase, Classification};
use crate::config::RunConfig;
use crate::dynamics::evolve_meanfield;
use crate::error::{Error, Result};
use crate::stability;
use crate::steady::{analytic_critical_pump, solve_from_seed};
use crate::sweep::{self, Axis, SweepParam, SweepSpec, Task};
use crate::twa::run_ensemble;

#[derive(Debug, Parser)]
#[command(name = "bec-cavity", version, about = "Driven-dissipative BEC in a lossy cavity")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON file of configuration keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles and sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one mean-field trajectory and write its observables.
    Evolve,
    /// Solve for the stationary state and report its residual.
    Steady,
    /// Growth rate of the stationary state.
    Stability,
    /// Integrate one trajectory and label its long-time phase.
    Classify,
    /// Truncated-Wigner ensemble statistics.
    Twa,
    /// Two-dimensional parameter sweep.
    Sweep(SweepArgs),
    /// List every configuration key with its default value.
    Keys,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Slow axis as `name:min:max:count` (eta, delta_c, u0n or g1d).
    #[arg(long, value_name = "AXIS")]
    axis1: String,
    /// Fast axis; a single point at the base value when omitted.
    #[arg(long, value_name = "AXIS")]
    axis2: Option<String>,
    /// Comma-separated tasks per point: classify, stability, steady.
    #[arg(long, default_value = "classify")]
    tasks: String,
    /// Checkpoint log; an existing one is resumed.
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    checkpoint_interval: usize,
}

fn parse_axis(text: &str) -> Result<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("axis {text:?} is not of the form name:min:max:count"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let param: SweepParam = parts[0].parse()?;
    let min: f64 = parts[1].parse().map_err(|_| bad())?;
    let max: f64 = parts[2].parse().map_err(|_| bad())?;
    let count: usize = parts[3].parse().map_err(|_| bad())?;
    Ok(Axis::new(param, min, max, count))
}

fn base_value(cfg: &RunConfig, param: SweepParam) -> f64 {
    match param {
        SweepParam::Eta => cfg.eta,
        SweepParam::DeltaC => cfg.delta_c,
        SweepParam::U0n => cfg.u0n,
        SweepParam::G1d => cfg.g1d,
    }
}

#[derive(Serialize)]
struct SteadyRow {
    delta_c: f64,
    eta: f64,
    u0n: f64,
    theta: f64,
    bmean: f64,
    intensity: f64,
    re_a: f64,
    im_a: f64,
    mu: f64,
    energy: f64,
    residual: f64,
    extrapolated: bool,
    iterations: usize,
    eta_c_analytic: Option<f64>,
}

#[derive(Serialize)]
struct StabilityRow {
    delta_c: f64,
    eta: f64,
    u0n: f64,
    max_growth: f64,
    stable: bool,
    steady_theta: f64,
    steady_residual: f64,
}

#[derive(Serialize)]
struct ClassifyRow {
    delta_c: f64,
    eta: f64,
    u0n: f64,
    label: String,
    ipr: Option<f64>,
    mean_intensity: f64,
    intensity_spread: f64,
    activity: f64,
    dominant_frequency: Option<f64>,
    low_confidence: bool,
    truncation_alarm: bool,
}

fn cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes one flat record as a two-line CSV table or a JSON object.
fn write_row<T: Serialize, W: Write>(row: &T, format: Format, mut w: W) -> Result<()> {
    let value = serde_json::to_value(row)?;
    match format {
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&value)?)?,
        Format::Csv => {
            let serde_json::Value::Object(map) = value else {
                return Err(Error::Format("record is not an object".into()));
            };
            let keys: Vec<&str> = map.keys().map(String::as_str).collect();
            let vals: Vec<String> = map.values().map(cell).collect();
            writeln!(w, "{}", keys.join(","))?;
            writeln!(w, "{}", vals.join(","))?;
        }
    }
    Ok(())
}

fn classify_row(cfg: &RunConfig, c: &Classification<f64>, alarm: bool) -> ClassifyRow {
    ClassifyRow {
        delta_c: cfg.delta_c,
        eta: cfg.eta,
        u0n: cfg.u0n,
        label: c.label.to_string(),
        ipr: c.ipr,
        mean_intensity: c.mean_intensity,
        intensity_spread: c.intensity_spread,
        activity: c.activity,
        dominant_frequency: c.dominant_frequency,
        low_confidence: c.low_confidence,
        truncation_alarm: alarm,
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let g = cli.global;
    let mut cfg = RunConfig::load(g.config.as_deref(), &g.overrides)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let threads = g.threads.unwrap_or_else(sweep::default_workers).max(1);

    let mut file;
    let sink: &mut dyn Write = match &g.out {
        Some(path) => {
            file = BufWriter::new(File::create(path)?);
            &mut file
        }
        None => out,
    };

    match cli.command {
        Command::Keys => {
            let value = serde_json::to_value(&cfg)?;
            match g.format {
                Format::Json => writeln!(sink, "{}", serde_json::to_string_pretty(&value)?)?,
                Format::Csv => {
                    writeln!(sink, "key,value")?;
                    if let serde_json::Value::Object(map) = value {
                        for (k, v) in map {
                            writeln!(sink, "{k},{}", cell(&v).replace(',', ";"))?;
                        }
                    }
                }
            }
        }
        Command::Evolve => {
            let p = cfg.params()?;
            let traj = evolve_meanfield(&cfg.initial_state(), &p, &cfg.integrator())?;
            match g.format {
                Format::Csv => traj.write_csv(&mut *sink)?,
                Format::Json => serde_json::to_writer(&mut *sink, &traj)?,
            }
        }
        Command::Steady => {
            let p = cfg.params()?;
            let ss = solve_from_seed(&p, cfg.steady_branch >= 0, &cfg.imaginary_time())?;
            let row = SteadyRow {
                delta_c: cfg.delta_c,
                eta: cfg.eta,
                u0n: cfg.u0n,
                theta: ss.theta(),
                bmean: ss.bmean(),
                intensity: ss.a.norm_sqr(),
                re_a: ss.a.re,
                im_a: ss.a.im,
                mu: ss.mu,
                energy: ss.energy,
                residual: ss.residual,
                extrapolated: ss.extrapolated,
                iterations: ss.iterations,
                eta_c_analytic: analytic_critical_pump(&p),
            };
            write_row(&row, g.format, &mut *sink)?;
        }
        Command::Stability => {
            let p = cfg.params()?;
            let ss = solve_from_seed(&p, cfg.steady_branch >= 0, &cfg.imaginary_time())?;
            let report = stability::analyze(&ss, &p)?;
            let row = StabilityRow {
                delta_c: cfg.delta_c,
                eta: cfg.eta,
                u0n: cfg.u0n,
                max_growth: report.max_growth,
                stable: report.stable,
                steady_theta: ss.theta(),
                steady_residual: ss.residual,
            };
            write_row(&row, g.format, &mut *sink)?;
        }
        Command::Classify => {
            let p = cfg.params()?;
            let traj = evolve_meanfield(&cfg.initial_state(), &p, &cfg.integrator())?;
            let c = classify_phase(&traj, &cfg.rules())?;
            write_row(&classify_row(&cfg, &c, traj.truncation_alarm), g.format, &mut *sink)?;
        }
        Command::Twa => {
            let p = cfg.params()?;
            let ens = cfg.ensemble();
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            let stats = pool.install(|| run_ensemble(&p, &ens))?;
            match g.format {
                Format::Csv => stats.write_csv(&mut *sink)?,
                Format::Json => serde_json::to_writer(&mut *sink, &stats)?,
            }
        }
        Command::Sweep(args) => {
            let axis1 = parse_axis(&args.axis1)?;
            let axis2 = match &args.axis2 {
                Some(text) => parse_axis(text)?,
                None => {
                    let other = if axis1.param == SweepParam::Eta { SweepParam::DeltaC } else { SweepParam::Eta };
                    Axis::fixed(other, base_value(&cfg, other))
                }
            };
            let tasks = args.tasks.split(',').map(str::parse).collect::<Result<Vec<Task>>>()?;
            let mut spec = SweepSpec::new(axis1, axis2, cfg, tasks);
            spec.checkpoint = args.checkpoint;
            spec.checkpoint_interval = args.checkpoint_interval;
            spec.workers = threads;
            let result = sweep::run_sweep(&spec)?;
            match g.format {
                Format::Csv => sweep::write_csv(&result, &mut *sink)?,
                Format::Json => sweep::write_json(&result, &mut *sink)?,
            }
        }
    }
    sink.flush()?;
    Ok(())
}

fn schema_help() -> String {
    format!("configuration keys: {}", RunConfig::keys().join(", "))
}

/// Runs the tool on `argv` (including the program name), writing results to
/// `out` and diagnostics to standard error. Returns the exit status.
pub fn cli_main<I, S>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    eprintln!("{e}");
                    eprintln!("{}", schema_help());
                    1
                }
            };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) if e.is_numerical() => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(&e, Error::Config(msg) if !msg.contains("valid keys")) {
                eprintln!("{}", schema_help());
            }
            1
        }
    }
}
