//! Batch front end: `btlab <command> --config run.json [--out DIR]
//! [--seed N] [--threads N]`. Exit codes: 0 success, 2 a hypothesis check
//! reported FAIL (a valid scientific outcome), 1 operational error.

mod commands;
mod config;
mod manifest;

use anyhow::{bail, Result};
use clap::Parser;
use config::RunConfig;
use manifest::{now_unix, RunManifest, MANIFEST_SCHEMA};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "btlab", version, about = "Berezin-Toeplitz quantization laboratory")]
struct Cli {
    /// command to run; must match the config's "command" field
    command: String,
    /// path to the run configuration JSON
    #[arg(long)]
    config: PathBuf,
    /// output directory (overrides the config's "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config's "seed")
    #[arg(long)]
    seed: Option<u64>,
    /// rayon thread count (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let err = serde_json::json!({
                "schema": "btlab-error/1",
                "command": cli.command,
                "error": format!("{e:#}"),
            });
            eprintln!("{}", serde_json::to_string_pretty(&err).unwrap_or_default());
            // failure marker in the run directory when one was resolvable
            if let Ok(dir) = resolve_out(&cli) {
                let _ = std::fs::create_dir_all(&dir);
                let _ = std::fs::write(
                    dir.join("error.json"),
                    serde_json::to_vec_pretty(&err).unwrap_or_default(),
                );
            }
            ExitCode::from(1)
        }
    }
}

fn resolve_out(cli: &Cli) -> Result<PathBuf> {
    if let Some(o) = &cli.out {
        return Ok(o.clone());
    }
    let cfg = RunConfig::load(&cli.config)?;
    Ok(cfg
        .out
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("btlab-out/{}", cfg.command))))
}

fn real_main(cli: &Cli) -> Result<u8> {
    let cfg = RunConfig::load(&cli.config)?;
    if cfg.command != cli.command {
        bail!(
            "command line says {:?} but the config says {:?}",
            cli.command,
            cfg.command
        );
    }
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out = resolve_out(cli)?;
    std::fs::create_dir_all(&out)?;
    let started = now_unix();
    // config echo with the effective seed
    let mut echo = serde_json::to_value(&cfg)?;
    echo["seed"] = serde_json::json!(seed);
    manifest::write_atomic(&out.join("config.json"), &serde_json::to_vec_pretty(&echo)?)?;
    let outcome = commands::run(&cfg, &out, seed)?;
    let mut outputs = vec!["config.json".to_string()];
    outputs.extend(outcome.outputs.iter().cloned());
    let m = RunManifest {
        schema: MANIFEST_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.clone(),
        started,
        finished: now_unix(),
        config: echo,
        seed,
        verdicts: outcome.verdicts,
        outputs,
        warnings: outcome.warnings,
    };
    m.write(&out)?;
    Ok(outcome.exit as u8)
}
