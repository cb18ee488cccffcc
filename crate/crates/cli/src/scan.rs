//! The `kappa-scan` command: contraction constant of a single TBA equation
//! as a function of the gauge parameter c.

use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::run::write_atomic;

/// `kappa(c) = max(|c|, |g - c|) / (2 - c)` for one equation with coupling g.
pub fn kappa_of_c(g: f64, c: f64) -> f64 {
    c.abs().max((g - c).abs()) / (2.0 - c)
}

/// Writes a `c,kappa` CSV over a uniform scan of the gauge parameter.
pub fn kappa_scan(g: f64, c_min: f64, c_max: f64, n_points: usize, out: &Path) -> CliResult<()> {
    let rows = kappa_scan_rows(g, c_min, c_max, n_points)?;
    let mut csv = String::from("c,kappa\n");
    for (c, kappa) in rows {
        csv.push_str(&format!("{c:.16e},{kappa:.16e}\n"));
    }
    write_atomic(out, csv.as_bytes())?;
    Ok(())
}

pub fn kappa_scan_rows(
    g: f64,
    c_min: f64,
    c_max: f64,
    n_points: usize,
) -> CliResult<Vec<(f64, f64)>> {
    if !(c_min > -2.0 && c_max < 2.0 && c_min <= c_max) {
        return Err(CliError::config(
            "kappa-scan",
            format!("range [{c_min}, {c_max}] must lie inside (-2, 2)"),
        ));
    }
    if n_points < 2 {
        return Err(CliError::config("kappa-scan", "need at least 2 points"));
    }
    let step = (c_max - c_min) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let c = c_min + i as f64 * step;
            (c, kappa_of_c(g, c))
        })
        .collect())
}
