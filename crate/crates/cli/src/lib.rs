//! Config-driven experiments for the gKdV decay study and the `gkdv`
//! command-line front end.
//!
//! A run reads an [`config::ExperimentConfig`], evolves the requested data
//! with [`gkdv_core`], and writes a run directory holding `manifest.json`,
//! `diagnostics.csv`, `verdicts.json`, `summary.txt` and two-column `.dat`
//! series. Every verdict names the acceptance clause it checks.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod report;

pub use gkdv_core;

use std::path::{Path, PathBuf};

use config::ExperimentConfig;
use report::Report;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Run(#[from] experiments::RunError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Runs `cfg` and writes its outputs to `out_root/<run_id>`, or to the
/// config's own `output_dir` when `out_root` is `None`.
pub fn run_config(cfg: &ExperimentConfig, out_root: Option<&Path>) -> Result<(Report, PathBuf), Error> {
    let report = experiments::run(cfg)?;
    let root = out_root
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.as_ref().map(|d| cfg.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let dir = root.join(cfg.run_id());
    report::write_run(&dir, cfg, &report).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    Ok((report, dir))
}
