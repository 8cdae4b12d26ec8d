//! Command-line harness for the hyperwave experiments.
//!
//! Every run writes its CSV or JSON data and a `manifest.json` under `--out`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use hyperwave::SpaceParams;
use serde_json::{json, Value};

use config::{Common, ConvergeArgs, EvolveArgs, MaximalArgs, PhiArgs, SchurArgs, TransformArgs};
use output::Output;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn numerical(e: hyperwave::Error) -> Self {
        Failure::Numerical(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hyperwave", version, about = "Radial Schroedinger experiments on rank-one symmetric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one spherical function value.
    Phi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: PhiArgs,
    },
    /// Spherical transform, its inverse, or a round trip of a test profile.
    Transform {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: TransformArgs,
    },
    /// Propagate a profile to time t.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: EvolveArgs,
    },
    /// Errors of S_t f - f on the unit ball as t decreases.
    Converge {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ConvergeArgs,
    },
    /// Maximal-function ratios over a profile family.
    Maximal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: MaximalArgs,
    },
    /// Schur-test row and column integrals of the kernel.
    Schur {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SchurArgs,
    },
}

fn configure_threads() -> Result<Option<usize>, Failure> {
    let Ok(text) = std::env::var("HYPERWAVE_THREADS") else {
        return Ok(None);
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("HYPERWAVE_THREADS must be a positive integer, got '{text}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the worker pool: {e}")))?;
    Ok(Some(n))
}

fn space_json(space: &SpaceParams) -> Value {
    json!({
        "label": space.label(),
        "m1": space.m1(),
        "m2": space.m2(),
        "n": space.n(),
        "rho": space.rho(),
    })
}

fn run_with<T>(
    kind: &str,
    common: &Common,
    flags: &T,
    body: fn(&SpaceParams, &T, &mut Output) -> Result<commands::Report, Failure>,
) -> Result<(), Failure>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    let start = Instant::now();
    let file = match &common.config {
        Some(path) => Some(config::load(path, kind)?),
        None => None,
    };
    let common = config::merge(common, file.as_ref())?;
    let args: T = config::merge(flags, file.as_ref())?;
    let threads = configure_threads()?;
    let name = common.space.clone().unwrap_or_else(|| "H3R".into());
    let space = SpaceParams::preset(&name, common.n).map_err(|e| Failure::Config(e.to_string()))?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Output::create(&dir)?;
    let report = body(&space, &args, &mut out)?;

    let mut inputs = json!({ "kind": kind, "space": name, "out": dir });
    if let Some(n) = common.n {
        inputs["n"] = json!(n);
    }
    if let Value::Object(extra) = report.inputs {
        inputs.as_object_mut().expect("object").extend(extra);
    }
    let manifest = json!({
        "library": { "name": "hyperwave", "version": hyperwave::VERSION },
        "kind": kind,
        "inputs": inputs,
        "space": space_json(&report.space),
        "calibration": report.space.normalization(),
        "grids": report.grids,
        "summary": report.summary,
        "files": out.files(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    out.json("manifest.json", &manifest)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Phi { common, args } => run_with("phi", common, args, commands::phi),
        Command::Transform { common, args } => run_with("transform", common, args, commands::transform),
        Command::Evolve { common, args } => run_with("evolve", common, args, commands::evolve),
        Command::Converge { common, args } => run_with("converge", common, args, commands::converge),
        Command::Maximal { common, args } => run_with("maximal", common, args, commands::maximal),
        Command::Schur { common, args } => run_with("schur", common, args, commands::schur),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hyperwave: {e}");
            ExitCode::from(e.code())
        }
    }
}
