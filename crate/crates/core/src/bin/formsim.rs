use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use formsim::cli::{self, CliError, ExitStatus};

#[derive(Debug, Parser)]
#[command(
    name = "formsim",
    version,
    about = "Multiplex formation control simulator"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv and report.json.
    Run {
        scenario: PathBuf,
        /// Output directory (overrides FORMSIM_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail tracking error for each gain.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
    },
    /// Re-run the bundled scenarios and verify their claims.
    Check {
        /// Use the *.json files in this directory instead of the bundled set.
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Print the Laplacian spectrum of a scenario's graph.
    Spectrum { scenario: PathBuf },
}

fn execute(command: Command) -> Result<ExitStatus, CliError> {
    match command {
        Command::Run { scenario, out } => {
            let s = cli::load_scenario(&scenario)?;
            let outcome = cli::run_scenario(&s)?;
            let dir = cli::resolve_out_dir(out);
            let (traj, report) = cli::write_outputs(&dir, &outcome)?;
            let c = &outcome.report.convergence;
            println!(
                "{}: {} residual {:.6e} (tol {:.1e}) -> {}",
                outcome.report.scenario,
                outcome.report.metric,
                c.final_residual,
                c.tolerance,
                if c.converged {
                    "converged"
                } else {
                    "not converged"
                }
            );
            println!("wrote {} and {}", traj.display(), report.display());
            Ok(outcome.status())
        }
        Command::Sweep { scenario, alphas } => {
            let s = cli::load_scenario(&scenario)?;
            let rows = cli::sweep(&s, &alphas)?;
            print!("{}", cli::sweep_table(&rows));
            Ok(ExitStatus::Success)
        }
        Command::Check { scenarios } => {
            let sources = match scenarios {
                Some(dir) => cli::scenario_sources(&dir)?,
                None => cli::bundled_sources(),
            };
            let results = cli::check(&sources);
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} passed, {failed} failed", results.len() - failed);
            Ok(if failed == 0 {
                ExitStatus::Success
            } else {
                ExitStatus::Error
            })
        }
        Command::Spectrum { scenario } => {
            let s = cli::load_scenario(&scenario)?;
            print!("{}", cli::spectrum_text(&s.graph));
            Ok(ExitStatus::Success)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let status = match execute(args.command) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::Error
        }
    };
    ExitCode::from(status.code() as u8)
}
