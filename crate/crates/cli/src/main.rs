mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::ConfigError;
use output::{ErrorReport, OutDir, RunManifest, ARTIFACT_VERSION};

#[derive(Parser)]
#[command(name = "stoplab", version, about = "Data-driven optimal stopping experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "STOPLAB_OUT", default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate one path (and optionally a fixed-barrier impulse strategy).
    Simulate,
    /// Estimate ρ, F, ξ and the barrier from one path.
    Estimate,
    /// Simple-regret sweep over horizons and replications.
    RegretSweep,
    /// Cumulative regret of the exploration-exploitation strategy.
    Cumulative,
    /// Tabulate PAC horizons.
    Pac,
    /// Build lower-bound hypothesis pairs and check separation.
    Hypotheses,
    /// Check the margin condition and class membership of the payoff.
    MarginCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::RegretSweep => "regret-sweep",
            Command::Cumulative => "cumulative",
            Command::Pac => "pac",
            Command::Hypotheses => "hypotheses",
            Command::MarginCheck => "margin-check",
        }
    }
}

fn run(cli: &Cli, out: &mut OutDir) -> anyhow::Result<()> {
    let started = Instant::now();
    let path = cli.config.as_ref().ok_or_else(|| ConfigError {
        path: "--config".into(),
        message: "a config file is required".into(),
    })?;
    let mut cfg = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        stoplab::exec::set_worker_threads(n);
    }
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, out)?,
        Command::Estimate => commands::estimate(&cfg, out)?,
        Command::RegretSweep => commands::regret_sweep(&cfg, out)?,
        Command::Cumulative => commands::cumulative(&cfg, out)?,
        Command::Pac => commands::pac(&cfg, out)?,
        Command::Hypotheses => commands::hypotheses(&cfg, out)?,
        Command::MarginCheck => commands::margin_check(&cfg, out)?,
    }
    let hash = config::hash(&cfg);
    let mut outputs: Vec<String> = out.written().iter().map(|p| p.display().to_string()).collect();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        config_hash: &hash,
        subcommand: cli.command.name(),
        master_seed: cfg.master_seed,
        artifact_version: ARTIFACT_VERSION,
        outputs,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    out.json("manifest.json", &manifest)?;
    Ok(())
}

fn report(err: &anyhow::Error, out: Option<&mut OutDir>) {
    let config_error = err.downcast_ref::<ConfigError>();
    let core_error = err.chain().find_map(|e| e.downcast_ref::<stoplab::Error>());
    let kind = match (config_error, core_error) {
        (Some(_), _) => "config",
        (None, Some(_)) => "model",
        _ => "io",
    };
    let message = format!("{err:#}");
    let report = ErrorReport {
        error: &message,
        kind,
        path: config_error.map(|e| e.path.as_str()),
    };
    eprintln!("{}", serde_json::to_string(&report).expect("error report serialises"));
    if let Some(out) = out {
        let _ = out.json("error.json", &report);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = match OutDir::create(&cli.out) {
        Ok(out) => out,
        Err(e) => {
            report(&e, None);
            return ExitCode::from(2);
        }
    };
    match run(&cli, &mut out) {
        Ok(()) => {
            eprintln!("{}: outputs in {}", cli.command.name(), out.root().display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            report(&e, Some(&mut out));
            ExitCode::from(2)
        }
    }
}
