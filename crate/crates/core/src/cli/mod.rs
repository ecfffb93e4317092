//! Batch front-end: `bergman-lab --config run.json --out dir`.
//!
//! Exit status is 0 when every check passed, 1 when a check failed (or a
//! warning was raised under `--strict`) and 2 when the run could not be
//! completed, in which case `error.json` is written to the output directory.

pub mod config;
pub mod output;
pub mod run;

use std::fs;
use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, Command, CommandConfig, GridSizes, RunConfig, Tolerances};
pub use output::{format_float, render_json, Cell, Check, Table};
pub use run::{error_record, execute, run, CommandReport, RunOptions};

use crate::error::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Seed of the randomized identity suites when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Output directory when neither `--out` nor the config's `output` is set.
pub const DEFAULT_OUT: &str = "bergman-lab-out";

#[derive(Debug, Parser)]
#[command(
    name = "bergman-lab",
    version,
    about = "Bergman kernel and holomorphic Morse inequality reports"
)]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Seed for the randomized operator-identity suites.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Treat warnings as failures.
    #[arg(long)]
    pub strict: bool,
}

/// Runs the front-end and returns the process exit status.
pub fn main_with_args(args: Args) -> i32 {
    if let Some(jobs) = args.jobs {
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    let mut out_dir = args.out.clone();
    let mut attempt = || -> Result<bool> {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| Error::Io(format!("reading {}: {e}", args.config.display())))?;
        let config = parse_config(&text)?;
        let dir = args
            .out
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        out_dir = Some(dir.clone());
        run(
            &config,
            &RunOptions {
                out_dir: dir,
                seed: args.seed,
                strict: args.strict,
            },
        )
    };
    match attempt() {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            let dir = out_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            if fs::create_dir_all(&dir).is_ok() {
                let _ = fs::write(dir.join("error.json"), error_record(&e));
            }
            eprintln!("bergman-lab: {e}");
            EXIT_ERROR
        }
    }
}
