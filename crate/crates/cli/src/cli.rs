//! Argument parsing and subcommands. Exit codes: 0 all verdicts pass,
//! 2 any fail, 3 inconclusive, 1 usage or configuration error.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentName};
use crate::report::{combine, StoredRun};
use crate::{experiments, run_config};

pub const EXIT_USAGE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "gkdv", version, about = "gKdV decay experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one or more experiment configs, in parallel.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Root for run directories; each run writes to `<out>/<run_id>`.
        /// Defaults to the config's `output_dir`, else `./runs`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the experiment names.
    ListExperiments,
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Re-render the verdicts of a finished run.
    Report { run_dir: PathBuf },
}

pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match args.command {
        Command::ListExperiments => {
            for e in ExperimentName::ALL {
                println!("{:<22} {}", e.as_str(), e.summary());
            }
            0
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.experiment);
                0
            }
            Err(msg) => {
                eprintln!("{msg}");
                EXIT_USAGE
            }
        },
        Command::Report { run_dir } => match StoredRun::load(&run_dir) {
            Ok(run) => {
                print!("{}", run.render());
                run.status().exit_code()
            }
            Err(e) => {
                eprintln!("{}: {e}", run_dir.display());
                EXIT_USAGE
            }
        },
        Command::Run { configs, out } => run_many(&configs, out),
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let cfg = ExperimentConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    experiments::validate(&cfg).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(cfg)
}

fn run_many(paths: &[PathBuf], out: Option<PathBuf>) -> i32 {
    let mut cfgs = Vec::new();
    for p in paths {
        match load(p) {
            Ok(c) => cfgs.push(c),
            Err(msg) => {
                eprintln!("{msg}");
                return EXIT_USAGE;
            }
        }
    }
    let mut seen = HashSet::new();
    for c in &cfgs {
        if !seen.insert(c.run_id()) {
            eprintln!("run_id `{}` appears more than once; runs would overwrite each other", c.run_id());
            return EXIT_USAGE;
        }
    }
    let results: Vec<_> = cfgs.par_iter().map(|c| run_config(c, out.as_deref())).collect();
    let mut statuses = Vec::new();
    let mut failed = false;
    for (path, r) in paths.iter().zip(results) {
        match r {
            Ok((report, dir)) => {
                let stored = StoredRun::load(&dir);
                match stored {
                    Ok(s) => print!("{}", s.render()),
                    Err(_) => println!("{}: {}", dir.display(), report.status().as_str()),
                }
                println!("  -> {}", dir.display());
                statuses.push(report.status());
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failed = true;
            }
        }
    }
    if failed {
        EXIT_USAGE
    } else {
        combine(statuses).exit_code()
    }
}
