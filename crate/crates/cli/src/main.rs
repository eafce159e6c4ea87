//! `exciton2des` batch front-end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use exciton2des::config::{Level, RunConfig};
use exciton2des::error::Error;
use serde_json::json;

use crate::output::Output;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "exciton2des", version, about = "2D electronic spectroscopy of an excitonic dimer with spatially correlated noise")]
struct Args {
    /// TOML run configuration (all fields optional).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment: absorption, rephasing2d, nonrephasing2d, beatmap, pathway-report, figure:2|4|5|6|7.
    #[arg(long)]
    experiment: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for Monte-Carlo disorder sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the secular approximation.
    #[arg(long)]
    secular: bool,
    /// Worker threads (0 = automatic).
    #[arg(long, env = "EXCITON2DES_THREADS")]
    threads: Option<usize>,
    /// Also write a CSV next to every grid file.
    #[arg(long)]
    csv: bool,
}

fn resolve(args: &Args) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(e) = &args.experiment {
        cfg.run.experiment = e.clone();
    }
    if let Some(o) = &args.out {
        cfg.run.out = o.to_string_lossy().into_owned();
    }
    if let Some(s) = args.seed {
        cfg.disorder.seed = s;
    }
    if args.secular {
        cfg.run.secular = true;
    }
    if let Some(t) = args.threads {
        cfg.run.threads = t;
    }
    if args.csv {
        cfg.run.csv = true;
    }
    Ok(cfg)
}

fn exit_for(e: &Error) -> ExitCode {
    if e.is_config() {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::from(EXIT_NUMERIC)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let start = Instant::now();
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let diagnostics = cfg.validate();
    for d in &diagnostics {
        let level = match d.level {
            Level::Error => "error",
            Level::Warning => "warning",
        };
        eprintln!("{level}: {}: {}", d.field, d.message);
    }
    if diagnostics.iter().any(|d| d.level == Level::Error) {
        return ExitCode::from(EXIT_CONFIG);
    }
    if cfg.run.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.run.threads).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let mut out = match Output::create(PathBuf::from(&cfg.run.out).as_path(), cfg.run.csv) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create output directory {}: {e}", cfg.run.out);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match experiments::run(&cfg, &mut out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = json!({
        "program": "exciton2des",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.run.experiment,
        "config": cfg,
        "threads": rayon::current_num_threads(),
        "panels": report.panels,
        "diagnostics": diagnostics,
        "warnings": report.warnings,
        "outputs": out.records,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = std::fs::write(out.dir().join("manifest.json"), text + "\n") {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(EXIT_NUMERIC);
    }
    eprintln!("{}: wrote {} files to {}", cfg.run.experiment, out.records.len() + 1, out.dir().display());
    ExitCode::SUCCESS
}
