use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tba_cli::{config, run, scan, verify, CliError};
use tba_core::spectral;

#[derive(Parser)]
#[command(
    name = "tba",
    about = "Solve coupled TBA integral equations and verify Y-system identities",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configured instance; writes solution CSV and report JSON.
    Solve {
        /// Path to the run configuration (JSON).
        config: PathBuf,
    },
    /// Scan the contraction constant of a single TBA equation over c.
    KappaScan {
        /// Coupling value g of the single equation.
        #[arg(long)]
        g: f64,
        /// Lower end of the c range (inside (-2, 2)).
        #[arg(long)]
        min: f64,
        /// Upper end of the c range (inside (-2, 2)).
        #[arg(long)]
        max: f64,
        /// Number of scan points.
        #[arg(long)]
        n: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the verification suites configured in a run file.
    Verify {
        /// Path to the run configuration (JSON).
        config: PathBuf,
    },
    /// Print a catalog adjacency matrix and its Perron root.
    Catalog {
        /// Family letter: A, B, C, D, E, F, G or T.
        family: String,
        /// Rank within the family.
        rank: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve { config } => {
            let artifacts = run::run_solve(&config)?;
            println!("solution: {}", artifacts.csv_path.display());
            println!("report:   {}", artifacts.report_path.display());
            println!(
                "converged in {} iterations (last update {:.3e}, kappa bound {:.6}, observed {:.6})",
                artifacts.report.iterations,
                artifacts.report.final_residual,
                artifacts.report.kappa_estimate,
                artifacts.report.kappa_observed,
            );
            if let Some(res) = artifacts.report.ysystem_residual {
                println!("y-system residual: {res:.3e}");
            }
            if let Some(dev) = artifacts.report.c_independence_deviation {
                println!("c-independence deviation: {dev:.3e}");
            }
            Ok(())
        }
        Command::KappaScan {
            g,
            min,
            max,
            n,
            out,
        } => {
            let out = config::resolve_output_path(&out);
            scan::kappa_scan(g, min, max, n, &out)?;
            println!("scan: {}", out.display());
            Ok(())
        }
        Command::Verify { config } => {
            let (report, path) = verify::verify_all(&config)?;
            for (name, result) in &report {
                println!(
                    "{}: {} (measured {:.3e}, tolerance {:.3e})",
                    name,
                    if result.pass { "pass" } else { "FAIL" },
                    result.measured,
                    result.tolerance
                );
            }
            println!("report: {}", path.display());
            match verify::verification_error(&report) {
                None => Ok(()),
                Some(e) => Err(e),
            }
        }
        Command::Catalog { family, rank } => {
            let fam = config::parse_family(&family)?;
            let g = spectral::dynkin_adjacency(fam, rank).map_err(CliError::Core)?;
            for row in g.rows() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                println!("[{}]", cells.join(", "));
            }
            match spectral::perron_frobenius(&g, 1e-12, 500_000) {
                Ok(pf) => println!("lambda_pf = {:.12}", pf.lambda_pf),
                Err(e) => println!("lambda_pf: {e}"),
            }
            Ok(())
        }
    }
}
