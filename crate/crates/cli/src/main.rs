//! `slelab`: command-line front end.
//!
//! Every run writes its artifacts plus `manifest.json` into the output
//! directory (`--out`, else `$SLELAB_OUT`, else `./slelab-out`). The manifest
//! holds the fully resolved parameters and output hashes; `slelab replay`
//! reruns it and compares.
//!
//! Exit codes: 0 success, 2 invalid configuration or input, 3 runtime
//! failure, 4 a non-exploratory check failed or a replay did not match.

mod commands;
mod config;
mod svg;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use commands::{Outcome, Output};
use config::Params;

pub const OUT_ENV: &str = "SLELAB_OUT";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "slelab", version, about = "SLE(κ, ρ) simulation, GFF level lines and exact CFT checks")]
struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides $SLELAB_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample SLE(κ) or SLE(κ, ρ) driving functions.
    SleSample(RunArgs),
    /// Loewner trace of a driving function file.
    Trace(RunArgs),
    /// Driving function of a curve file.
    Zip(RunArgs),
    /// GFF samples on the lattice half-disk.
    Gff(RunArgs),
    /// Level lines of GFF samples and their driving functions.
    Levelline(RunArgs),
    /// End-to-end experiment report.
    Experiment(RunArgs),
    /// Exact free-boson identity checks.
    CftCheck(RunArgs),
    /// Rerun a manifest and compare output hashes.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; command-line pairs override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the documented keys and exit.
    #[arg(long)]
    list_keys: bool,
    /// `key=value` parameters.
    params: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    code_version: String,
    command: String,
    params: BTreeMap<String, String>,
    config_hash: String,
    outputs: Vec<OutputEntry>,
    pass: bool,
    summary: serde_json::Value,
}

/// Prints a line, ignoring a closed stdout.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn out_dir(flag: Option<PathBuf>, fallback: PathBuf) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or(fallback)
}

fn execute(command: &str, params: &Params, dir: PathBuf) -> Result<(Manifest, Outcome), CliError> {
    let mut out = Output::new(dir);
    let outcome = commands::run(command, params, &mut out)?;
    let manifest = Manifest {
        schema_version: slelab::io::SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        params: params.values.clone(),
        config_hash: slelab::experiments::config_hash(&params.values),
        outputs: out.files.iter().map(|(file, sha256)| OutputEntry { file: file.clone(), sha256: sha256.clone() }).collect(),
        pass: outcome.pass,
        summary: outcome.summary.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    slelab::io::write_text(&out.dir.join(MANIFEST), &text).map_err(|e| CliError::Runtime(format!("output: {e}")))?;
    Ok((manifest, outcome))
}

fn run_command(command: &str, args: RunArgs, dir: PathBuf) -> Result<(), CliError> {
    let mut pairs = Vec::new();
    if let Some(path) = &args.config {
        let text = slelab::io::read_text(path).map_err(|e| CliError::Validation(e.to_string()))?;
        pairs = config::parse_config_text(&text)?;
    }
    pairs.extend(config::parse_overrides(&args.params)?);
    if args.list_keys {
        let schema = commands::schema_for(command, &pairs)?;
        say(config::describe(schema).trim_end());
        return Ok(());
    }
    let schema = commands::schema_for(command, &pairs)?;
    let params = Params::resolve(schema, &pairs)?;
    let (manifest, outcome) = execute(command, &params, dir.clone())?;
    say(&serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
    say(&format!("wrote {} files and {} to {}", manifest.outputs.len(), MANIFEST, dir.display()));
    if !outcome.pass {
        return Err(CliError::CheckFailed(format!("{command}: see {}", dir.join(MANIFEST).display())));
    }
    Ok(())
}

fn replay(manifest_path: &Path, dir: PathBuf) -> Result<(), CliError> {
    let text = slelab::io::read_text(manifest_path).map_err(|e| CliError::Validation(e.to_string()))?;
    let old: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("manifest: {e}")))?;
    if old.schema_version != slelab::io::SCHEMA_VERSION {
        return Err(CliError::Validation(format!("manifest schema version {} not supported", old.schema_version)));
    }
    if !commands::COMMANDS.contains(&old.command.as_str()) {
        return Err(CliError::Validation(format!("manifest names unknown command {:?}", old.command)));
    }
    let pairs: Vec<(String, String)> = old.params.clone().into_iter().collect();
    let params = Params::resolve(commands::schema_for(&old.command, &pairs)?, &pairs)?;
    let (new, _) = execute(&old.command, &params, dir.clone())?;
    let fresh: BTreeMap<&str, &str> = new.outputs.iter().map(|o| (o.file.as_str(), o.sha256.as_str())).collect();
    let mut mismatched = Vec::new();
    for o in &old.outputs {
        if fresh.get(o.file.as_str()) != Some(&o.sha256.as_str()) {
            mismatched.push(o.file.clone());
        }
    }
    if new.outputs.len() != old.outputs.len() {
        mismatched.push(format!("file count {} vs {}", new.outputs.len(), old.outputs.len()));
    }
    if !mismatched.is_empty() {
        return Err(CliError::CheckFailed(format!("replay differs in {mismatched:?}")));
    }
    say(&format!("replay: {} files identical in {}", old.outputs.len(), dir.display()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("slelab: --workers must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool is built once");
    }
    let result = match cli.command {
        Command::Replay { manifest } => {
            let fallback = manifest.parent().unwrap_or(Path::new(".")).join("replay");
            replay(&manifest, out_dir(cli.out, fallback))
        }
        cmd => {
            let (name, args) = match cmd {
                Command::SleSample(a) => ("sle-sample", a),
                Command::Trace(a) => ("trace", a),
                Command::Zip(a) => ("zip", a),
                Command::Gff(a) => ("gff", a),
                Command::Levelline(a) => ("levelline", a),
                Command::Experiment(a) => ("experiment", a),
                Command::CftCheck(a) => ("cft-check", a),
                Command::Replay { .. } => unreachable!(),
            };
            run_command(name, args, out_dir(cli.out, PathBuf::from("slelab-out")))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slelab: {e}");
            ExitCode::from(e.code())
        }
    }
}
