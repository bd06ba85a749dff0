use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hplab_cli::config::ConfigError;
use hplab_cli::{parse_config, run, Command, EXIT_CONFIG};

/// Sample truncated Hua-Pickrell ensembles and check them against their
/// determinantal kernels.
#[derive(Parser, Debug)]
#[command(name = "hp-lab", version)]
struct Cli {
    /// One of: sample, basis, verify-dpp, gauge-check, converge.
    command: String,
    /// Strict JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<hplab_cli::ExperimentConfig, ConfigError> {
    let requested: Command = cli.command.parse()?;
    let text = fs::read_to_string(&cli.config).map_err(|e| ConfigError::Read {
        path: cli.config.display().to_string(),
        reason: e.to_string(),
    })?;
    // The positional command fills in a missing `command` key.
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| ConfigError::Json(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.entry("command").or_insert_with(|| requested.name().into());
    }
    let mut config = parse_config(&value.to_string())?;
    if config.command != requested {
        return Err(ConfigError::CommandMismatch {
            config: config.command,
            cli: requested,
        });
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if cli.workers == Some(0) {
        return Err(ConfigError::Invalid {
            field: "workers",
            reason: "must be at least 1".into(),
        });
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(&config, &config.output_dir, cli.workers) {
        Ok(m) => {
            println!("{}: {}", if m.pass { "PASS" } else { "FAIL" }, m.summary);
            if let Some(f) = &m.failure {
                eprintln!("error: {}", f.message);
            }
            println!("manifest: {}", config.output_dir.join(hplab_cli::manifest::MANIFEST_FILE).display());
            ExitCode::from(m.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
