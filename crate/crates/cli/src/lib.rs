//! Command-line runner for the verification suite and the result tables.

pub mod config;
pub mod report;
pub mod suite;
pub mod tables;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{parse_list, parse_signs, ConfigError, Format, RunConfig};
use report::{all_pass, write_records, write_rows, CheckRecord};
use suite::Context;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dhlab", version, about = "Deutsch-Hayden representation checks for a three-particle spin system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; built-in defaults are used without one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated κ values, e.g. 0.02,0.05,0.1.
    #[arg(long, global = true)]
    pub kappa: Option<String>,
    /// Sign assignment s1,s2,s3, e.g. 1,1,-1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub signs: Option<String>,
    /// Tolerance for exact identities.
    #[arg(long, global = true)]
    pub tol_exact: Option<f64>,
    /// Seed for the random directions added to the grids.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run every check and write the check records; exit 1 if any fails.
    Verify,
    /// Spin correlation table over directions and κ.
    Correlations,
    /// Field-operator locality with and without auxiliary modes.
    Locality,
    /// Exact and second-order three-qubit values.
    Qubit,
}

impl Cli {
    /// Config file (or defaults) with the command-line overrides applied.
    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(k) = &self.kappa {
            cfg.physics.kappas = parse_list(k)?;
        }
        if let Some(s) = &self.signs {
            cfg.physics.signs = parse_signs(s)?;
        }
        if let Some(t) = self.tol_exact {
            cfg.tolerances.exact = t;
        }
        if let Some(s) = self.seed {
            cfg.directions.seed = s;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(p) = &self.out {
            cfg.output.path = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sink(cfg: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.output.path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn summarize(records: &[CheckRecord]) {
    let failed: Vec<&CheckRecord> = records.iter().filter(|r| !r.pass).collect();
    eprintln!("{} checks, {} failed", records.len(), failed.len());
    for r in failed {
        eprintln!(
            "  FAIL {}: actual {:?}, expected {:?}, error {:?} > {:e}",
            r.id, r.actual, r.expected, r.abs_error, r.tolerance
        );
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match cli.run_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("dhlab: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(cli.command, &cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dhlab: {e}");
            EXIT_FAIL
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Core(#[from] dhlab_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("cannot write output: {0}")]
    Json(#[from] serde_json::Error),
}

fn execute(cmd: Command, cfg: &RunConfig) -> Result<i32, RunError> {
    let format = cfg.output.format;
    if cmd == Command::Verify {
        let records = suite::run_suite(cfg);
        write_records(&records, format, sink(cfg)?)?;
        summarize(&records);
        return Ok(if all_pass(&records) { EXIT_OK } else { EXIT_FAIL });
    }
    let ctx = Context::new(cfg)?;
    let mut w = sink(cfg)?;
    match cmd {
        Command::Verify => unreachable!("handled above"),
        Command::Correlations => write_rows(&tables::correlations(&ctx)?, format, &mut w)?,
        Command::Qubit => write_rows(&tables::qubit_table(&ctx)?, format, &mut w)?,
        Command::Locality => {
            let out = tables::locality(&ctx)?;
            match format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &out)?;
                    writeln!(w)?;
                }
                Format::Csv => write_rows(&out.rows(), format, &mut w)?,
            }
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}
