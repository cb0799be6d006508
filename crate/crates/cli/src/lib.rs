//! Experiment runner behind the `csa` binary.

// Negated comparisons are the NaN-rejecting form of the range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod selfcheck;

use std::path::PathBuf;

use clap::Parser;
use serde_json::json;

use config::{ExperimentConfig, ExperimentKind, Format};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] csa_core::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("selfcheck failed")]
    SelfCheckFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::SelfCheckFailed => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "csa", version, about = "Cooperative spectrum access experiments")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    /// TOML (or .json) experiment config; optional for `selfcheck`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set protocol.alpha=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Loads the config named by `args` with overrides and CLI flags applied.
pub fn resolve_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p, &args.set)?,
        None => {
            return Err(CliError::Config(format!(
                "{} needs --config",
                args.kind.name()
            )))
        }
    };
    if let Some(k) = cfg.experiment {
        if k != args.kind {
            return Err(CliError::Config(format!(
                "config is for {} but {} was requested",
                k.name(),
                args.kind.name()
            )));
        }
    }
    cfg.experiment = Some(args.kind);
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    if let Some(p) = &args.out {
        cfg.output.path = Some(p.display().to_string());
    }
    Ok(cfg)
}

/// Runs one invocation and writes its table.
pub fn run(args: &Args) -> Result<(), CliError> {
    if args.kind == ExperimentKind::Selfcheck && args.config.is_none() {
        let r = selfcheck::run();
        let format = args.format.unwrap_or_default();
        let text = output::render(&r.table, format, json!({ "experiment": "selfcheck" }));
        output::emit_table(&text, args.out.as_deref()).map_err(|e| CliError::Io(e.to_string()))?;
        return if r.passed { Ok(()) } else { Err(CliError::SelfCheckFailed) };
    }
    let cfg = resolve_config(args)?;
    let (table, passed) = if args.kind == ExperimentKind::Selfcheck {
        let r = selfcheck::run();
        (r.table, r.passed)
    } else {
        (experiments::run_experiment(args.kind, &cfg)?, true)
    };
    let meta = json!({
        "experiment": args.kind.name(),
        "seed": cfg.seed,
        "config": cfg.plan(),
    });
    let text = output::render(&table, cfg.output.format, meta);
    let path = cfg.output.path.as_ref().map(PathBuf::from);
    output::emit_table(&text, path.as_deref()).map_err(|e| {
        CliError::Io(match &path {
            Some(p) => format!("{}: {e}", p.display()),
            None => e.to_string(),
        })
    })?;
    if passed {
        Ok(())
    } else {
        Err(CliError::SelfCheckFailed)
    }
}
