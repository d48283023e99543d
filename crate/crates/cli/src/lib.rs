//! Command-line front end for the shear-flow spectral toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod tasks;

use config::{ExperimentConfig, Overrides};
use error::{CliError, CliResult};
use output::Emitter;
use std::path::{Path, PathBuf};

pub const TASKS: [&str; 5] = ["spectrum", "dos", "evolve", "ergodic", "fiber"];

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub task: String,
    pub config_hash: String,
    pub written: Vec<PathBuf>,
    pub message: String,
}

/// Loads `config`, runs `task` and writes its outputs.
///
/// A run whose diagnostics fail still writes its files and then returns
/// [`CliError::Numeric`].
pub fn execute(task: &str, config: &Path, overrides: &Overrides) -> CliResult<RunSummary> {
    if !TASKS.contains(&task) {
        return Err(CliError::Config(format!("unknown task '{task}', expected one of {}", TASKS.join(", "))));
    }
    let cfg = ExperimentConfig::load(config, overrides)?;
    if cfg.task_name() != task {
        return Err(CliError::Config(format!("task '{task}' requested but the config describes '{}'", cfg.task_name())));
    }
    let model = cfg.model()?;
    let mut em = Emitter::new(&cfg.out_dir(), &cfg.output)?;
    let outcome = match task {
        "spectrum" => tasks::run_spectrum(&cfg, &model, &mut em),
        "dos" => tasks::run_dos(&cfg, &model, &mut em),
        "evolve" => tasks::run_evolve(&cfg, &model, &mut em),
        "ergodic" => tasks::run_ergodic(&cfg, &model, &mut em),
        _ => tasks::run_fiber(&cfg, &model, &mut em),
    }?;
    if !outcome.pass {
        return Err(CliError::Numeric(format!("{task}: tolerance check failed: {}", outcome.message)));
    }
    Ok(RunSummary { task: task.into(), config_hash: cfg.hash(), written: em.written, message: outcome.message })
}
