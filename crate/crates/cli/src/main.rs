//! Command-line runner for the circular-flow stability solver.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::CliError;
use config::{EffectiveTolerances, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "circstab",
    version,
    about = "Linear stability of surface waves on two-phase circular flows",
    long_about = None
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Command to run (overrides the config): solve-mode, find-modes,
    /// semicircle, verify-oracles, critical-layer, epsilon-scaling, sweep.
    #[arg(long)]
    command: Option<String>,
    /// Output path (overrides the config; stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json (overrides the config).
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for sweep grids (0 = automatic).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Abort sweeps on per-point numerical failures instead of recording
    /// them in the error column.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CIRCSTAB_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let (code, kind) = match &e {
                CliError::Validation(_) => (2, "validation"),
                CliError::Numerical(_) => (3, "numerical"),
            };
            let diag = serde_json::json!({ "error": e.to_string(), "kind": kind, "exit_code": code });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", cli.config.display())))?;
    let cfg = RunConfig::parse(&text)?;
    let command = cli
        .command
        .clone()
        .or_else(|| cfg.command.clone())
        .ok_or_else(|| CliError::Validation("no command given (config `command` or --command)".into()))?;
    let tolerances = EffectiveTolerances::from_spec(cfg.tolerances.as_ref());

    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot configure {} threads: {e}", cli.threads)))?;
    }

    let outcome = commands::execute(&command, &cfg, &text, tolerances, cli.strict)?;

    let format = cli
        .format
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.format.clone()))
        .unwrap_or_else(|| "csv".to_string());
    let payload = match format.as_str() {
        "csv" => outcome.report.to_csv(),
        "json" => outcome.report.to_json(),
        other => return Err(CliError::Validation(format!("unknown format '{other}' (expected csv or json)"))),
    };

    let out_path = cli.out.clone().or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()).map(PathBuf::from));
    match out_path {
        Some(path) => std::fs::write(&path, payload)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{payload}"),
    }

    if let Some(reason) = outcome.failure {
        let diag = serde_json::json!({ "error": reason, "kind": "numerical", "exit_code": 3 });
        eprintln!("{diag}");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
