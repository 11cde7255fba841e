use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dynmit_bench::config::{ConfigFile, ExperimentSpec, Suite};
use dynmit_bench::params::ParamCache;
use dynmit_bench::report::{emit_report, Format};
use dynmit_bench::suite::run_suite;
use dynmit_bench::verify;

#[derive(Parser)]
#[command(
    name = "dynmit",
    version,
    about = "Error-mitigation benchmarks for dynamic circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment suite and write its report.
    Run {
        #[arg(long)]
        suite: Option<Suite>,
        /// JSON config; omitted fields take the suite defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Adds n = 12 to the default ground-state grid.
        #[arg(long)]
        large: bool,
        /// Ignore cached ansatz parameters.
        #[arg(long)]
        retrain: bool,
        #[arg(long, default_value = "params")]
        cache: PathBuf,
    },
    /// Check the simulator against its oracles.
    Verify {
        /// Also run the noisy suite checks (minutes).
        #[arg(long)]
        full: bool,
        #[arg(long, default_value = "params")]
        cache: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            suite,
            config,
            out,
            seed,
            large,
            retrain,
            cache,
        } => {
            let mut file = match &config {
                Some(path) => ConfigFile::load(path)?,
                None => ConfigFile::default(),
            };
            if seed.is_some() {
                file.seed = seed;
            }
            let spec = ExperimentSpec::resolve(file, suite, large)?;
            let cache = ParamCache::new(cache, retrain);
            let report = run_suite(&spec, &cache).context("suite failed")?;
            for path in emit_report(&report, &out, &Format::ALL)? {
                println!("wrote {}", path.display());
            }
            for f in &report.failures {
                eprintln!("n={} h={} failed: {}", f.n, f.h, f.message);
            }
            Ok(if report.partial {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Verify { full, cache } => {
            let checks = if full {
                verify::all_checks(&ParamCache::new(cache, false))
            } else {
                verify::quick_checks()
            };
            for c in &checks {
                println!("{c}");
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
