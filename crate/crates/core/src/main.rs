use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use entropylab::experiment::{self, ExperimentConfig, ExperimentError};

#[derive(Parser)]
#[command(
    name = "entropylab",
    version,
    about = "Entropy estimators for area-preserving torus maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by an INI config.
    Run {
        config: PathBuf,
        /// Worker threads (default: available cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory, overriding `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiment kinds.
    List,
    /// Describe one experiment kind and its parameters.
    Describe { kind: String },
}

fn run(
    config: PathBuf,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<bool, ExperimentError> {
    let mut cfg = ExperimentConfig::from_path(&config)?;
    if out.is_some() {
        cfg.out_dir = out;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool");
    let manifest = pool.install(|| experiment::run(&cfg))?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = &manifest.error {
        eprintln!("error: {e}");
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&manifest.summary).unwrap_or_default()
    );
    Ok(manifest.succeeded())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", experiment::list_experiments());
            ExitCode::SUCCESS
        }
        Command::Describe { kind } => match experiment::describe(&kind) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            threads,
            out,
        } => match run(config, threads, out) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(3),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
