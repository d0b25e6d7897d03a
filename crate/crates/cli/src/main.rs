//! `qotto`: run cycles, sweeps and spectral diagnostics from a config file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

mod config;
mod output;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qotto_core::analysis::{spectrum_vs_field, transition_probabilities};
use qotto_core::cycle::{run_many, sweep};
use qotto_core::OttoError;

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "qotto",
    version,
    about = "Measurement-driven quantum Otto engine on a spin ladder"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more chained cycles and write the per-cycle ledger.
    Cycle(Common),
    /// Run one cycle configuration per value of a model parameter.
    Sweep(Common),
    /// Energy levels and their field derivatives.
    Spectrum(Common),
    /// Transition probabilities between instantaneous eigenstates.
    Transitions(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination, overriding `[output] path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write a JSON mirror next to the CSV (or print JSON instead of CSV
    /// when writing to standard output).
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<OttoError> for CliError {
    fn from(e: OttoError) -> Self {
        if e.is_runtime() {
            CliError::Runtime(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Outcome = Result<(), CliError>;

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let Some(path) = &common.config else {
        return Ok(ExperimentConfig::default());
    };
    let doc = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&doc).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn cmd_cycle(cfg: &ExperimentConfig, sink: &output::Sink) -> Outcome {
    let config = cfg.cycle_config();
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let history = run_many(&config)?;
    sink.emit(&history, |w| {
        qotto_core::thermo::write_ledger_csv(&history.ledgers, w)
    })?;
    if let (Some(path), Some(v)) = (&cfg.output.vertices, &history.final_vertices) {
        output::write_vertices(path, v)?;
    }
    sink.summary(&output::cycle_summary(&history));
    Ok(())
}

fn cmd_sweep(cfg: &ExperimentConfig, sink: &output::Sink) -> Outcome {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let base = cfg.cycle_config();
    base.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    if spec.values.is_empty() {
        return Err(CliError::Config("[sweep] values is empty".into()));
    }
    for &v in &spec.values {
        let mut c = base.clone();
        c.params
            .set(&spec.variable, v)
            .and_then(|_| c.validate())
            .map_err(|e| CliError::Config(format!("[sweep] {} = {v}: {e}", spec.variable)))?;
    }
    let rows = sweep(&base, &spec.variable, &spec.values)?;
    sink.emit(&rows, |w| output::write_sweep_csv(&spec.variable, &rows, w))?;
    for row in &rows {
        sink.summary(&format!(
            "{} = {}: {}",
            spec.variable,
            row.value,
            output::cycle_summary(&row.history)
        ));
    }
    Ok(())
}

fn cmd_spectrum(cfg: &ExperimentConfig, sink: &output::Sink) -> Outcome {
    let spec = cfg.spectrum.clone().unwrap_or_default();
    cfg.model
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let table = spectrum_vs_field(&cfg.model, &spec.fields, spec.target)
        .map_err(|e| CliError::Config(format!("[spectrum] {e}")))?;
    sink.emit(&table, |w| table.write_csv(w))?;
    sink.summary(&output::spectrum_summary(&table));
    Ok(())
}

fn cmd_transitions(cfg: &ExperimentConfig, sink: &output::Sink) -> Outcome {
    let spec = cfg.transitions.clone().unwrap_or_default();
    cfg.model
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let selection = spec.selection();
    selection
        .resolve(16)
        .map_err(|e| CliError::Config(format!("[transitions] {e}")))?;
    if spec.taus.is_empty() || spec.taus.iter().any(|&t| t.is_nan() || t <= 0.0) {
        return Err(CliError::Config(
            "[transitions] taus must be a non-empty list of positive times".into(),
        ));
    }
    use rayon::prelude::*;
    let mats = spec
        .taus
        .par_iter()
        .map(|&tau| transition_probabilities(&cfg.model, tau, spec.direction, &selection))
        .collect::<Result<Vec<_>, _>>()?;
    sink.emit(&mats, |w| {
        qotto_core::analysis::write_transitions_csv(&mats, w)
    })?;
    sink.summary(&output::transitions_summary(&mats));
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let (common, cmd): (&Common, fn(&ExperimentConfig, &output::Sink) -> Outcome) =
        match &cli.command {
            Command::Cycle(c) => (c, cmd_cycle),
            Command::Sweep(c) => (c, cmd_sweep),
            Command::Spectrum(c) => (c, cmd_spectrum),
            Command::Transitions(c) => (c, cmd_transitions),
        };
    let cfg = load(common)?;
    let sink = output::Sink::new(
        common.out.clone().or_else(|| cfg.output.path.clone()),
        common.json,
    );
    match common.jobs {
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| cmd(&cfg, &sink)),
        None => cmd(&cfg, &sink),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qotto: {e}");
            ExitCode::from(e.code())
        }
    }
}
