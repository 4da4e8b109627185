use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand};

use visolve::cli::{self, CliError, ExitStatus, SweepParam, MAX_ITER_ENV};
use visolve::config::RunConfig;

#[derive(Parser)]
#[command(name = "visolve", version, about = "Projected viscosity iteration for systems of variational inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's output_path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the iteration trace as CSV.
    Run(Common),
    /// Run the sampled operator checks and oracle comparisons, write a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Re-solve over a list of parameter values and write a summary CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// lambda1, lambda2, lambda3, tol or schedule_shift.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn open_output(flag: &Option<PathBuf>, config: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    let path: Option<&Path> = flag.as_deref().or(config.output_path.as_deref());
    Ok(match path {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let env = std::env::var(MAX_ITER_ENV).ok();
    cli::load_config(&common.config, common.seed, env.as_deref())
}

fn execute(command: Command) -> Result<ExitStatus, CliError> {
    match command {
        Command::Run(common) => {
            let config = load(&common)?;
            let mut out = open_output(&common.out, &config)?;
            let outcome = cli::cmd_run(&config, &mut out)?;
            out.flush()?;
            let trace = &outcome.trace;
            eprintln!(
                "{} after {} iterations, |x - p| = {:e}",
                if trace.converged() { "converged" } else { "iteration cap reached" },
                trace.iterations(),
                trace.final_point.distance(&outcome.reference_p),
            );
            Ok(outcome.status)
        }
        Command::Verify { common, samples } => {
            if samples == 0 {
                return Err(CliError::Usage("--samples must be at least 1".into()));
            }
            let config = load(&common)?;
            let mut out = open_output(&common.out, &config)?;
            let (status, report) = cli::cmd_verify(&config, samples, &mut out)?;
            out.flush()?;
            for (name, result) in report.iter().filter(|(_, r)| !r.passed) {
                eprintln!("FAILED {name}: worst margin {:e}", result.worst_margin);
            }
            Ok(status)
        }
        Command::Sweep { common, param, values } => {
            let param: SweepParam = param.parse()?;
            let values = cli::parse_values(&values)?;
            let config = load(&common)?;
            let mut out = open_output(&common.out, &config)?;
            let status = cli::cmd_sweep(&config, param, &values, &mut out)?;
            out.flush()?;
            Ok(status)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitStatus::Invalid.code() } else { 0 };
            let _ = e.print();
            process::exit(code);
        }
    };
    let status = match execute(cli.command) {
        Ok(status) => status,
        Err(e) => {
            if let CliError::Validation(v) = &e {
                eprintln!("error: problem fails validation");
                for violation in &v.violations {
                    eprintln!("  - {violation}");
                }
            } else {
                eprintln!("error: {e}");
            }
            e.exit_status()
        }
    };
    process::exit(status.code());
}
