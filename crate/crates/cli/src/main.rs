use cccompact::{run_scenario, validate_file, CliError, OutputDir};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical laboratory for Carnot-Carathéodory spaces: distances, flows,
/// coverings, BV calculus and compactness extraction, driven by JSON
/// scenario recipes.
#[derive(Parser)]
#[command(name = "cccompact", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write its report tree.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (a subdirectory per scenario name is created).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Single-threaded execution; recorded in the report.
        #[arg(long)]
        deterministic: bool,
    },
    /// Check a scenario file and list every configuration problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            deterministic,
        } => {
            let threads = if deterministic {
                Some(1)
            } else {
                std::env::var("CCCOMPACT_THREADS")
                    .ok()
                    .and_then(|v| v.parse::<usize>().ok())
            };
            if let Some(t) = threads {
                // ignore failure when a global pool already exists
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t.max(1))
                    .build_global();
            }
            let mut scenario = match validate_file(&config) {
                Ok(s) => s,
                Err(issues) => {
                    eprintln!("configuration errors in {}:", config.display());
                    for issue in issues {
                        eprintln!("  {issue}");
                    }
                    return ExitCode::from(1);
                }
            };
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let outdir = match OutputDir::create(&out, &scenario.name) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("cannot create output directory: {e}");
                    return ExitCode::from(1);
                }
            };
            match run_scenario(&scenario, &outdir, deterministic) {
                Ok(summary) => {
                    println!("{}", summary.line);
                    ExitCode::from(summary.status.exit_code() as u8)
                }
                Err(CliError::Config(msg)) => {
                    eprintln!("configuration error: {msg}");
                    ExitCode::from(1)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Validate { config } => match validate_file(&config) {
            Ok(s) => {
                println!("ok: scenario '{}' ({})", s.name, s.spec.kind_name());
                ExitCode::SUCCESS
            }
            Err(issues) => {
                eprintln!("configuration errors in {}:", config.display());
                for issue in issues {
                    eprintln!("  {issue}");
                }
                ExitCode::from(1)
            }
        },
    }
}
