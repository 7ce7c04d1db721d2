use std::path::PathBuf;
use std::process::ExitCode;

use asymlab_cli::error::{CliError, CliResult};
use asymlab_cli::{list, run, tolerances, validate, RunOptions, Validated};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "asymlab", version, about = "Run truncation-ladder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a spec file or `builtin:<name>`.
    Run {
        spec: String,
        /// Output directory; overrides `output_dir` in the spec.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the rung pool.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Tolerance override, e.g. `--tol iterative=1e-9`.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// List the built-in specs.
    List,
    /// Check a spec file, or verify the hashes listed in a manifest.json.
    Validate { path: String },
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { spec, out, jobs, tol } => {
            let options = RunOptions {
                out,
                jobs,
                tolerances: tolerances(&tol)?,
            };
            let (dir, manifest) = in_pool(jobs, || run(&spec, &options))?;
            println!("wrote {} files to {}", manifest.files.len() + 1, dir.display());
            for (k, v) in &manifest.verdicts {
                println!("  {k} = {v}");
            }
            Ok(())
        }
        Command::List => list(&mut std::io::stdout().lock()).map_err(|e| CliError::io("stdout", e)),
        Command::Validate { path } => {
            match validate(&path)? {
                Validated::Spec(name) => println!("{path}: valid spec `{name}`"),
                Validated::Manifest { files } => println!("{path}: {files} file hashes verified"),
            }
            Ok(())
        }
    }
}

#[cfg(feature = "parallel")]
fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn in_pool<T: Send>(_jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Numerical { source, .. } = &e {
                eprintln!("payload: {source:?}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
