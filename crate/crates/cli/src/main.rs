use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod json;
mod svg;

#[derive(Parser, Debug)]
#[command(name = "uctk", version, about = "Undercompressive shocks in three-phase Corey flow")]
struct Cli {
    /// Report failures as a JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct ModelArgs {
    /// Phase viscosities as `mu_w,mu_o,mu_g`.
    #[arg(long, value_parser = parse_triple, default_value = "1,2,0.75")]
    pub mu: [f64; 3],
    /// Capillary-pressure coefficient for the oil–water pair.
    #[arg(long, default_value_t = 1.0)]
    pub c_ow: f64,
    /// Capillary-pressure coefficient for the oil–gas pair.
    #[arg(long, default_value_t = 1.0)]
    pub c_og: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matrix {
    Identity,
    Capillarity,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Umbilic point, classification and distinguished states of each line.
    Model {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace the Hugoniot locus of a base state.
    Hugoniot {
        #[command(flatten)]
        model: ModelArgs,
        /// Base state as `sw,so`.
        #[arg(long, value_parser = parse_pair)]
        base: [f64; 2],
        #[arg(long, default_value_t = 400)]
        resolution: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interval of left states with an undercompressive shock into a right state.
    UcInterval {
        #[command(flatten)]
        model: ModelArgs,
        /// Vertex of the invariant line: G, W or O.
        #[arg(long)]
        line: String,
        /// Right state, as the line coordinate.
        #[arg(long = "sM")]
        s_m: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Undercompressive surface attached to one invariant line.
    UcSurface {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "identity")]
        matrix: Matrix,
        #[arg(long, default_value = "G")]
        line: String,
        /// Right-state samples of the identity surface.
        #[arg(long, default_value_t = 41)]
        samples: usize,
        /// Lattice step along the line for the numeric sweep.
        #[arg(long, default_value_t = 0.01)]
        step_along: f64,
        /// Lattice step across the line for the numeric sweep.
        #[arg(long, default_value_t = 0.004)]
        step_across: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search undercompressive connections from a left state.
    Connect {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_pair)]
        left: [f64; 2],
        /// Restrict the speed search to `a,b`.
        #[arg(long, value_parser = parse_pair)]
        sigma_bracket: Option<[f64; 2]>,
        #[arg(long, value_enum, default_value = "capillarity")]
        matrix: Matrix,
        /// Target section residual.
        #[arg(long, default_value_t = 1e-7)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Crank–Nicolson solver on Riemann data from a TOML or JSON file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Profile CSV (columns t, x, v, s_w, s_o).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Wave-group summary (JSON); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an SVG from any CSV or JSON file written by the other commands.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(v)
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v = parse_list(s, 2)?;
    Ok([v[0], v[1]])
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

/// Input that fails validation, as opposed to a numerical failure.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn classify(err: &anyhow::Error) -> (u8, String) {
    if let Some(e) = err.downcast_ref::<uctk_core::Error>() {
        let code = if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL };
        return (code, e.code().to_string());
    }
    if err.downcast_ref::<ValidationError>().is_some() {
        return (EXIT_VALIDATION, "ValidationError".into());
    }
    if err.downcast_ref::<serde_json::Error>().is_some() || err.downcast_ref::<toml::de::Error>().is_some() {
        return (EXIT_VALIDATION, "ConfigError".into());
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return (EXIT_VALIDATION, "IoError".into());
    }
    (EXIT_NUMERICAL, "Failure".into())
}

fn configure_threads() {
    if let Ok(v) = std::env::var("UCTK_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring UCTK_THREADS={v}"),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Model { model, out } => commands::model(&model, out.as_deref()),
        Command::Hugoniot { model, base, resolution, format, out } => {
            commands::hugoniot(&model, base, resolution, format, out.as_deref())
        }
        Command::UcInterval { model, line, s_m, out } => commands::uc_interval(&model, &line, s_m, out.as_deref()),
        Command::UcSurface { model, matrix, line, samples, step_along, step_across, out } => {
            commands::uc_surface(&model, matrix, &line, samples, step_along, step_across, out.as_deref())
        }
        Command::Connect { model, left, sigma_bracket, matrix, delta, out } => {
            commands::connect(&model, left, sigma_bracket, matrix, delta, out.as_deref())
        }
        Command::Simulate { config, csv, out } => commands::simulate(&config, csv.as_deref(), out.as_deref()),
        Command::Plot { input, out } => svg::plot(&input, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let json_errors = cli.json_errors;
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, name) = classify(&err);
            if json_errors {
                let obj = serde_json::json!({
                    "error": { "code": name, "message": format!("{err:#}"), "exit_code": code }
                });
                eprintln!("{obj}");
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(code)
        }
    }
}
