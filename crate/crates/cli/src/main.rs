//! Batch driver: `vibrouq [options] <assemble|excite|offline|sweep|compare>`.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 numerical failure
//! (flagged frequency, residual breach, violated compare threshold), 4 I/O.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vibrouq::config::{FlatTable, RunConfig};
use vibrouq::pipeline;
use vibrouq::sweep::SweepMode;
use vibrouq::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "vibrouq", version, about = "Low-rank reduced-order uncertainty propagation for a plate-cavity model")]
struct Cli {
    /// Configuration file (TOML with dotted keys).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override one key, e.g. `--set sweep.step=4`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads for sweeps and load generation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overwrite outputs of an earlier run.
    #[arg(long, global = true)]
    force: bool,

    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,

    /// More log output; repeat for trace level.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mesh and assemble; writes K, M, C_sf and model metadata.
    Assemble,
    /// Write load ensembles for the sweep grid and expansion points.
    Excite,
    /// Build the projection basis at the expansion points.
    Offline,
    /// Frequency sweep in one mode.
    Sweep {
        /// fom, rom or fom-lowrank (default: sweep.mode).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Error measures and timing table from two sweeps.
    Compare,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut table = match &cli.config {
        Some(path) => FlatTable::read(path)?,
        None => FlatTable::default(),
    };
    for o in &cli.overrides {
        table.set(o)?;
    }
    RunConfig::from_table(&table)
}

fn run(cli: &Cli, cfg: &RunConfig, command: &Command) -> Result<u8, Error> {
    match command {
        Command::Assemble => {
            let r = pipeline::assemble(cfg, cli.force)?;
            println!(
                "assembled n = {} ({} structure + {} fluid DOFs) in {}",
                r.n(),
                r.n_s,
                r.n_f,
                cfg.paths.model.display()
            );
        }
        Command::Excite => {
            let r = pipeline::excite(cfg, cli.force)?;
            println!("wrote {} ensemble files to {}", r.files.len(), cfg.paths.ensembles.display());
        }
        Command::Offline => {
            let r = pipeline::offline(cfg, cli.force)?;
            println!(
                "basis r = {} (nominal {}, {} deflated; ranks {:?}) in {:.1} s",
                r.r, r.nominal, r.deflations, r.ranks, r.seconds
            );
        }
        Command::Sweep { mode } => {
            let mode: SweepMode = match mode {
                Some(m) => m.parse()?,
                None => cfg.sweep.mode,
            };
            let r = pipeline::sweep(cfg, mode, cli.force)?;
            println!(
                "{mode} sweep: {} frequencies, {} flagged, results in {}",
                r.results.len(),
                r.flagged.len(),
                cfg.paths.sweep(mode).display()
            );
            if !r.flagged.is_empty() {
                for f in &r.flagged {
                    eprintln!("flagged {} Hz: {}", f.frequency_hz, f.reason);
                }
                return Ok(EXIT_NUMERICAL);
            }
        }
        Command::Compare => {
            let r = pipeline::compare(cfg, cli.force)?;
            print!("{}", std::fs::read_to_string(cfg.paths.report.join(pipeline::SUMMARY)).unwrap_or_default());
            if !r.timing.is_empty() {
                print!("\n{}", r.timing.to_text());
            }
            if !r.violations.is_empty() {
                return Ok(EXIT_NUMERICAL);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("VIBROUQ_LOG")
        .format_timestamp(None)
        .init();

    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            // a malformed config file is a usage problem, not a data one
            return ExitCode::from(match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_USAGE,
            });
        }
    };
    if cli.print_config {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("error: a subcommand is required (assemble, excite, offline, sweep, compare)");
        return ExitCode::from(EXIT_USAGE);
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(&cli, &cfg, command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
