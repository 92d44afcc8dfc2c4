use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finsler_flow::scenario::{
    cmd_curvature, cmd_flow, cmd_report, cmd_verify, default_out, Scenario,
};

/// Curvature, flows and certificates for Finsler metrics on the 2-torus.
///
/// The worker count is read from FINSLER_THREADS.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate phi, det g, Ric and Ric_jk of the scenario metric.
    Curvature {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the scenario and write a run directory.
    Flow {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the certificate suite on a run directory.
    Verify {
        /// Run directory; defaults to the scenario's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Use this tolerance for every certificate.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Summarize a run directory.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn run_dir(out: Option<PathBuf>, scenario: Option<PathBuf>) -> finsler_flow::Result<PathBuf> {
    match (out, scenario) {
        (Some(dir), _) => Ok(dir),
        (None, Some(path)) => Ok(default_out(&Scenario::load(&path)?)),
        (None, None) => Err(finsler_flow::Error::Config(
            "give the run directory with --out or --scenario".into(),
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("FINSLER_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: FINSLER_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(1);
            }
        }
    }
    let outcome = match cli.command {
        Command::Curvature { scenario, out } => Scenario::load(&scenario)
            .and_then(|s| cmd_curvature(&s, &out.unwrap_or_else(|| default_out(&s)))),
        Command::Flow { scenario, out } => Scenario::load(&scenario)
            .and_then(|s| cmd_flow(&s, &out.unwrap_or_else(|| default_out(&s)))),
        Command::Verify { out, scenario, tol } => {
            run_dir(out, scenario).and_then(|d| cmd_verify(&d, tol))
        }
        Command::Report { out, scenario } => run_dir(out, scenario).and_then(|d| cmd_report(&d)),
    };
    match outcome {
        Ok(o) => {
            print!("{}", o.summary);
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
