//! `wave3d <subcommand> --config path [--seed u64] [--workers k] [--out dir] [--print-config]`.
//!
//! Exit codes: 0 after a completed run (failed checks included), 2 for an
//! invalid configuration, 3 for a numerical blow-up, 1 for anything else.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use wave3d_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::experiments::{run, Context, Subcommand};
use crate::output::{error_record, write_manifest, write_outcome, RunManifest, Timings};

pub const WORKERS_ENV: &str = "WAVE3D_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "wave3d", version, about = "Stochastic wave equation experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// JSON configuration; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `noise.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to `WAVE3D_WORKERS`, then to the core count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Prints the effective configuration and exits.
    #[arg(long)]
    pub print_config: bool,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        Error::NumericalBlowup { .. } => 3,
        _ => 1,
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    let workers = match flag {
        Some(w) => w,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::config("workers", format!("{WORKERS_ENV}={v} is not a positive integer")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if workers == 0 {
        return Err(Error::config("workers", "must be at least 1"));
    }
    Ok(workers)
}

fn execute(cli: &Cli, cfg: ExperimentConfig) -> Result<()> {
    let workers = resolve_workers(cli.workers)?;
    let name = cli.subcommand.name();
    let started_unix = unix_now();
    let clock = Instant::now();
    let ctx = Context::new(cfg, workers)?;
    let outcome = run(cli.subcommand, &ctx)?;
    let cfg = &ctx.config;
    let fingerprint = cfg.fingerprint();
    let mut artifacts = write_outcome(&cfg.out, name, &fingerprint, cfg.noise.seed, cfg.noise.beta, &outcome)?;
    artifacts.extend(outcome.artifacts.iter().cloned());
    let manifest = RunManifest {
        subcommand: name.into(),
        fingerprint,
        master_seed: cfg.noise.seed,
        replica_seeds: outcome.seeds.clone(),
        workers,
        artifacts,
        timings: Timings { started_unix, finished_unix: unix_now(), wall_seconds: clock.elapsed().as_secs_f64() },
        config: serde_json::to_value(cfg)?,
    };
    write_manifest(&cfg.out, &manifest)?;
    for c in &outcome.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = outcome.checks.iter().filter(|c| !c.pass).count();
    println!("{name}: {} checks, {failed} failed; output in {}", outcome.checks.len(), cfg.out.display());
    Ok(())
}

fn report_error(subcommand: &str, out: &Path, err: &Error) -> i32 {
    let record = error_record(subcommand, err);
    eprintln!("{record}");
    if std::fs::create_dir_all(out).is_ok() {
        // best effort: the record on stderr is authoritative
        let _ = std::fs::write(out.join("error.json"), serde_json::to_vec_pretty(&record).unwrap_or_default());
    }
    exit_code(err)
}

/// Runs the command line and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let name = cli.subcommand.name();
    let fallback_out = cli.out.clone().unwrap_or_else(|| ExperimentConfig::default().out);
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => return report_error(name, &fallback_out, &e),
    };
    if cli.print_config {
        match serde_json::to_string_pretty(&cfg) {
            Ok(text) => {
                println!("{text}");
                return 0;
            }
            Err(e) => return report_error(name, &cfg.out, &e.into()),
        }
    }
    let out = cfg.out.clone();
    match execute(&cli, cfg) {
        Ok(()) => 0,
        Err(e) => report_error(name, &out, &e),
    }
}
