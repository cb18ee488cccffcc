//! The `solve` command: run one instance, emit solution CSV and report JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use tba_core::analytic;
use tba_core::model::{Grid, ModelSpec, SampledFunction};
use tba_core::solver::{self, CIndependenceReport, SolveReport, SolverOptions};
use tba_core::Error;

use crate::config::resolve_output_path;
use crate::error::{CliError, CliResult};

/// Report emitted by `solve` as JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub kappa_estimate: f64,
    pub kappa_observed: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ysystem_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_independence_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_independence: Option<CIndependenceReport>,
}

/// Paths written by a run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
    pub report: RunReport,
}

/// Writes `content` atomically (temp file + rename).
pub fn write_atomic(path: &Path, content: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Solution CSV: header `x,f_1,...,f_N,Y_1,...,Y_N`, one row per node,
/// floats at 17 significant digits (round-trip exact for f64).
pub fn solution_csv(spec: &ModelSpec, grid: &Grid, f_star: &SampledFunction) -> String {
    let n = spec.n();
    let mut out = String::from("x");
    for c in 1..=n {
        out.push_str(&format!(",f_{c}"));
    }
    for c in 1..=n {
        out.push_str(&format!(",Y_{c}"));
    }
    out.push('\n');
    for (i, x) in grid.nodes().enumerate() {
        out.push_str(&format!("{x:.16e}"));
        let a = spec.asymptotics_at(Complex64::new(x, 0.0));
        for c in 0..n {
            out.push_str(&format!(",{:.16e}", f_star.value(i, c).re));
        }
        for c in 0..n {
            let y = (a[c].re + f_star.value(i, c).re).exp();
            out.push_str(&format!(",{y:.16e}"));
        }
        out.push('\n');
    }
    out
}

/// Runs one configured solve and writes its artifacts.
pub fn run_solve(config_path: &Path) -> CliResult<RunArtifacts> {
    let config = crate::config::load_config(config_path)?;
    let spec = config.model_spec()?;
    let grid = config.build_grid()?;
    let opts = config.solver_options();

    let report_path = resolve_output_path(&config.outputs.report_path);
    let csv_path = resolve_output_path(&config.outputs.csv_path);

    let (f_star, solve_report) = match solver::solve_tba(&spec, &grid, &opts) {
        Ok(pair) => pair,
        Err(Error::NoConvergence { report, .. }) => {
            // still write the diagnostics before failing
            let run_report = assemble_report(&report, None, None, None);
            let json = serde_json::to_string_pretty(&run_report)
                .expect("report serialization cannot fail");
            write_atomic(&report_path, json.as_bytes())?;
            return Err(CliError::Solve {
                message: format!(
                    "no convergence after {} iterations (last update {:.3e})",
                    report.iterations, report.final_residual
                ),
                report,
            });
        }
        Err(Error::GridTooCoarse { h, s }) => {
            return Err(CliError::config(
                "grid",
                format!("spacing {h:.3e} too coarse for s = {s} (need h < s/4)"),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let _ = f_star.max_abs();

    let ysystem_residual = if config.verify.ysystem {
        Some(analytic::ysystem_residual(&spec, &grid, &f_star)?)
    } else {
        None
    };
    let (ci_dev, ci_full) = if config.verify.c_independence.is_empty() {
        (None, None)
    } else {
        let gauges = config.c_independence_gauges(spec.coupling())?;
        let ci = ci_sweep(&spec, &grid, &gauges, &opts)?;
        (Some(ci.max_deviation), Some(ci))
    };

    let run_report = assemble_report(&solve_report, ysystem_residual, ci_dev, ci_full);
    let json = serde_json::to_string_pretty(&run_report).expect("report serialization cannot fail");
    write_atomic(&report_path, json.as_bytes())?;
    let csv = solution_csv(&spec, &grid, &f_star);
    write_atomic(&csv_path, csv.as_bytes())?;

    Ok(RunArtifacts {
        csv_path,
        report_path,
        report: run_report,
    })
}

fn ci_sweep(
    spec: &ModelSpec,
    grid: &Grid,
    gauges: &[tba_core::spectral::CouplingMatrix],
    opts: &SolverOptions,
) -> CliResult<CIndependenceReport> {
    Ok(solver::verify_c_independence(spec, grid, gauges, opts)?)
}

fn assemble_report(
    solve: &SolveReport,
    ysystem_residual: Option<f64>,
    c_independence_deviation: Option<f64>,
    c_independence: Option<CIndependenceReport>,
) -> RunReport {
    RunReport {
        iterations: solve.iterations,
        final_residual: solve.final_residual,
        kappa_estimate: solve.kappa_estimate,
        kappa_observed: solve.kappa_observed,
        converged: solve.converged,
        ysystem_residual,
        c_independence_deviation,
        c_independence,
    }
}
