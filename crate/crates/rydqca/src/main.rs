use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rydqca::compare::compare_runs;
use rydqca::config::LoadedConfig;
use rydqca::error::Result;
use rydqca::io::Table;
use rydqca::ops::{detect_qp, qp_histogram, spam_correct, SpamParamsFile};
use rydqca::run::run_config;

#[derive(Parser)]
#[command(name = "rydqca", version, about = "Dual-species Rydberg quantum cellular automaton simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the tables of two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Fail when any deviation exceeds this value.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Per-site SPAM correction of a shot file.
    SpamCorrect {
        shots: PathBuf,
        /// TOML file with a `[spam]` table (calibrated defaults when omitted).
        params: Option<PathBuf>,
        /// Species pattern such as ABABA, if the shot file lacks one.
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Quasiparticle detection on a shot file.
    DetectQp {
        shots: PathBuf,
        /// Print the position histogram for this quasiparticle number instead.
        #[arg(long)]
        histogram: Option<usize>,
    },
}

fn print(t: &Table) -> Result<()> {
    print!("{}", t.to_csv()?);
    Ok(())
}

fn main_inner(cli: Cli) -> Result<bool> {
    rydqca::init_threads()?;
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = LoadedConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.config.seed = s;
            }
            let res = run_config(&cfg, out.as_deref())?;
            println!("{}", res.dir.display());
            Ok(true)
        }
        Command::Compare { a, b, tolerance } => {
            let cmp = compare_runs(&a, &b)?;
            for file in &cmp.files {
                for c in &file.columns {
                    println!("{}\t{}\t{:e}", file.file, c.column, c.max_abs);
                }
            }
            println!("max\t{:e}", cmp.max_abs());
            Ok(tolerance.is_none_or(|t| cmp.max_abs() <= t))
        }
        Command::SpamCorrect { shots, params, pattern } => {
            let p = match params {
                Some(path) => SpamParamsFile::read(&path)?,
                None => SpamParamsFile::default(),
            };
            print(&spam_correct(&shots, &p, pattern.as_deref())?)?;
            Ok(true)
        }
        Command::DetectQp { shots, histogram } => {
            match histogram {
                Some(q) => print(&qp_histogram(&shots, q)?)?,
                None => print(&detect_qp(&shots)?)?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
