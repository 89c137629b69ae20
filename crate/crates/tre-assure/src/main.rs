use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tre_assure::cli::{
    cmd_audit, cmd_bound, cmd_compose, cmd_feasible, cmd_provision, cmd_simulate, load_config,
    write_artifact, write_manifest, CliError, RunManifest,
};

/// Tail-risk assurance toolkit: contract bounds, federated provisioning,
/// packet-level validation, and EVT auditing.
#[derive(Parser)]
#[command(name = "tre-assure", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the command's JSON config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override the config's Monte-Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory for artifacts (required by provision and simulate).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip TRE signature verification.
    #[arg(long, global = true)]
    unsigned: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the delay-violation bound of a (possibly tandem) path.
    Bound,
    /// Aggregate a path of TREs into its descriptor.
    Compose,
    /// Check the sufficient feasibility condition for an SLO.
    Feasible,
    /// Solve a federated provisioning instance.
    Provision,
    /// Run a packet-level scenario and emit CSV artifacts.
    Simulate {
        /// sweep-load | isolation | degradation | validate-bound
        scenario: String,
    },
    /// Audit telemetry against deployed contracts.
    Audit,
}

fn require_config(cli: &Cli) -> Result<PathBuf, CliError> {
    cli.config
        .clone()
        .ok_or_else(|| CliError::Input("--config is required".into()))
}

fn require_out(cli: &Cli) -> Result<PathBuf, CliError> {
    cli.out
        .clone()
        .ok_or_else(|| CliError::Input("--out is required for this command".into()))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let config_path = require_config(cli)?;
    let config_str = config_path.display().to_string();
    match &cli.command {
        Command::Bound => {
            let cfg = load_config(&config_path)?;
            let report = cmd_bound(&cfg, cli.unsigned)?;
            print_json(&report)?;
            Ok(0)
        }
        Command::Compose => {
            let cfg = load_config(&config_path)?;
            let descriptor = cmd_compose(&cfg, cli.unsigned)?;
            print_json(&descriptor)?;
            Ok(0)
        }
        Command::Feasible => {
            let cfg = load_config(&config_path)?;
            let report = cmd_feasible(&cfg, cli.unsigned)?;
            print_json(&report)?;
            Ok(if report.feasible { 0 } else { 3 })
        }
        Command::Provision => {
            let out = require_out(cli)?;
            let instance = load_config(&config_path)?;
            let manifest = RunManifest::new(
                "provision",
                &config_str,
                cli.seed,
                &out.display().to_string(),
                cli.trials.unwrap_or(0),
            );
            let report = cmd_provision(&instance, &out, &manifest, cli.unsigned)?;
            print_json(&report.plan)?;
            Ok(0)
        }
        Command::Simulate { scenario } => {
            let out = require_out(cli)?;
            let manifest = RunManifest::new(
                &format!("simulate {scenario}"),
                &config_str,
                cli.seed,
                &out.display().to_string(),
                cli.trials.unwrap_or(0),
            );
            let written = cmd_simulate(scenario, &config_path, &out, &manifest)?;
            eprintln!("wrote {} artifact(s) to {}", written.len(), out.display());
            Ok(0)
        }
        Command::Audit => {
            let cfg = load_config(&config_path)?;
            let report = cmd_audit(&cfg, cli.unsigned)?;
            print_json(&report)?;
            if let Some(out) = &cli.out {
                let manifest = RunManifest::new(
                    "audit",
                    &config_str,
                    cli.seed,
                    &out.display().to_string(),
                    cli.trials.unwrap_or(0),
                );
                write_manifest(out, &manifest)?;
                write_artifact(
                    out,
                    "audit.json",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| CliError::Input(e.to_string()))?
                        .as_bytes(),
                )?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("TRE_ASSURE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
