use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qaheat_cli::{render, run_solve, run_sweep, ExperimentConfig, HarnessError, Overrides};

#[derive(Parser)]
#[command(
    name = "qaheat",
    version,
    about = "Block Gauss-Seidel heat-equation solver with QUBO block solves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed for all sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: config value, then $QAHEAT_OUT_DIR, then ./out]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Block backend: exact, exhaustive or sa.
    #[arg(long)]
    backend: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write trace.csv, field.csv and summary.json.
    Solve {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every combination in the [sweep] section and write sweep.csv.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Convert field.csv to a PGM image and print a preview.
    Render { field: PathBuf, out: PathBuf },
}

fn load(path: &Path, common: Common) -> Result<ExperimentConfig, HarnessError> {
    let mut config = ExperimentConfig::load(path)?;
    config.apply(&Overrides {
        seed: common.seed,
        out_dir: common.out_dir,
        backend: common.backend,
    })?;
    Ok(config)
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Solve { config, common } => {
            let config = load(&config, common)?;
            let report = run_solve(&config)?;
            let last = report.trace.last();
            println!(
                "{} after {} iterations: residual {:.3e}, relative error {:.3e}, kappa {:.2}",
                if report.trace.converged {
                    "converged"
                } else {
                    "not converged"
                },
                report.trace.iterations(),
                last.map_or(f64::NAN, |r| r.residual),
                last.and_then(|r| r.relative_error).unwrap_or(f64::NAN),
                report.kappa,
            );
            println!("wrote {}", report.out_dir.display());
            Ok(report.exit_code())
        }
        Command::Sweep { config, common } => {
            let config = load(&config, common)?;
            let report = run_sweep(&config)?;
            for entry in &report.entries {
                let label = entry.combination.label();
                match &entry.outcome {
                    Ok(t) => println!(
                        "{label}: {} iterations, converged={}, error {:.3e}",
                        t.iterations(),
                        t.converged,
                        t.last().and_then(|r| r.relative_error).unwrap_or(f64::NAN)
                    ),
                    Err(e) => eprintln!("{label}: failed: {e}"),
                }
            }
            println!("wrote {}", report.out_dir.display());
            Ok(report.exit_code())
        }
        Command::Render { field, out } => {
            print!("{}", render::render_field(&field, &out)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap's own usage errors exit 2, which is reserved for non-convergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
