//! Run configuration: a single self-describing JSON document per run.
//!
//! Catalog references keep Dynkin instances free of matrix literals:
//!
//! ```json
//! {
//!   "s": 1.0,
//!   "g": { "family": "A", "rank": 2 },
//!   "gauge": "half-g",
//!   "asymptotics": { "kind": "mass-cosh", "r": 1.0, "w": "pf" },
//!   "grid": { "l": 25.0, "m": 4097 },
//!   "solver": { "tol": 1e-12, "max_iter": 10000, "damping": 1.0 },
//!   "outputs": { "csv_path": "solution.csv", "report_path": "report.json" },
//!   "verify": { "c_independence": ["zero", "half-g"], "ysystem": true }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use tba_core::model::{make_grid, AsymptoticsSpec, Grid, ModelSpec};
use tba_core::solver::SolverOptions;
use tba_core::spectral::{self, CouplingMatrix, DynkinFamily};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub s: f64,
    /// Coupling matrix: explicit rows or a catalog reference. Optional so
    /// that kernel-only verification suites need no instance.
    #[serde(default)]
    pub g: Option<MatrixSpec>,
    #[serde(default)]
    pub gauge: GaugeSpec,
    #[serde(default)]
    pub asymptotics: AsymptoticsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Catalog { family: String, rank: usize },
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(untagged)]
pub enum GaugeSpec {
    #[default]
    Default,
    Named(String),
    Custom {
        custom: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub kind: String,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub w: Option<WeightSpec>,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig {
            kind: "zero".into(),
            r: None,
            gamma: None,
            w: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width; defaults to 25 * s.
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default = "default_grid_m")]
    pub m: usize,
}

fn default_grid_m() -> usize {
    4097
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            l: None,
            m: default_grid_m(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
}

fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    10_000
}
fn default_damping() -> f64 {
    1.0
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_iter: default_max_iter(),
            damping: default_damping(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_csv_path")]
    pub csv_path: PathBuf,
    #[serde(default = "default_report_path")]
    pub report_path: PathBuf,
}

fn default_csv_path() -> PathBuf {
    PathBuf::from("solution.csv")
}
fn default_report_path() -> PathBuf {
    PathBuf::from("report.json")
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            csv_path: default_csv_path(),
            report_path: default_report_path(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Gauge names to sweep for solution independence.
    #[serde(default)]
    pub c_independence: Vec<String>,
    #[serde(default)]
    pub ysystem: bool,
    #[serde(default)]
    pub kernel_identities: bool,
}

/// Environment variable that redirects relative output paths.
pub const OUT_DIR_ENV: &str = "TBA_OUT_DIR";

/// Applies the output-directory override to a configured path.
pub fn resolve_output_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config {
        message: format!("{}: {e}", path.display()),
    })?;
    if !(config.s > 0.0) || !config.s.is_finite() {
        return Err(CliError::config("s", "must be a positive real"));
    }
    Ok(config)
}

pub fn parse_family(name: &str) -> CliResult<DynkinFamily> {
    let mut chars = name.chars();
    let (Some(c), None) = (chars.next(), chars.next()) else {
        return Err(CliError::config(
            "g.family",
            format!("unknown family {name:?} (expected one of A B C D E F G T)"),
        ));
    };
    DynkinFamily::from_char(c).ok_or_else(|| {
        CliError::config(
            "g.family",
            format!("unknown family {name:?} (expected one of A B C D E F G T)"),
        )
    })
}

impl RunConfig {
    /// Coupling matrix from rows or catalog reference.
    pub fn coupling(&self) -> CliResult<CouplingMatrix> {
        match &self.g {
            None => Err(CliError::config("g", "required for this command")),
            Some(MatrixSpec::Rows(rows)) => {
                CouplingMatrix::from_rows(rows).map_err(|e| CliError::config("g", e))
            }
            Some(MatrixSpec::Catalog { family, rank }) => {
                let fam = parse_family(family)?;
                spectral::dynkin_adjacency(fam, *rank).map_err(|e| CliError::config("g", e))
            }
        }
    }

    /// Gauge matrix for a given coupling matrix.
    pub fn gauge_matrix(&self, g: &CouplingMatrix) -> CliResult<CouplingMatrix> {
        gauge_by_spec(&self.gauge, g)
    }

    /// Builds the validated model instance, attributing failures to the
    /// config field that caused them.
    pub fn model_spec(&self) -> CliResult<ModelSpec> {
        let g = self.coupling()?;
        let c = self.gauge_matrix(&g)?;
        spectral::check_mat_lt2(&c, spectral::DEFAULT_SPECTRAL_TOL)
            .map_err(|e| CliError::config("gauge", e))?;
        let asym = self.asymptotics_spec(&g)?;
        ModelSpec::new(self.s, g, c, asym).map_err(|e| {
            let field = match &e {
                tba_core::Error::AsymptoticsInvalid { .. }
                | tba_core::Error::BadWeightVector { .. }
                | tba_core::Error::BadAsymptoticsParameter(_) => "asymptotics",
                tba_core::Error::BadShiftParameter { .. } => "s",
                _ => "g",
            };
            CliError::config(field, e)
        })
    }

    pub fn asymptotics_spec(&self, g: &CouplingMatrix) -> CliResult<AsymptoticsSpec> {
        let cfg = &self.asymptotics;
        let kind = cfg.kind.as_str();
        if kind == "zero" {
            return Ok(AsymptoticsSpec::Zero);
        }
        let r = cfg.r.unwrap_or(1.0);
        let w = match &cfg.w {
            None => {
                return Err(CliError::config(
                    "asymptotics.w",
                    "required (component list or \"pf\")",
                ))
            }
            Some(WeightSpec::Values(v)) => v.clone(),
            Some(WeightSpec::Named(name)) if name == "pf" => {
                let pf = spectral::perron_frobenius(g, 1e-13, 500_000)
                    .map_err(|e| CliError::config("asymptotics.w", e))?;
                pf.w
            }
            Some(WeightSpec::Named(other)) => {
                return Err(CliError::config(
                    "asymptotics.w",
                    format!("unknown weight spec {other:?} (expected \"pf\")"),
                ))
            }
        };
        // derive gamma from the eigenvalue of w when not given
        let gamma = match cfg.gamma {
            Some(gam) => gam,
            None => {
                let gw = g.mul_vec(&w);
                let (mut imax, mut best) = (0usize, 0.0f64);
                for (i, &wi) in w.iter().enumerate() {
                    if wi.abs() > best {
                        best = wi.abs();
                        imax = i;
                    }
                }
                let lam = gw[imax] / w[imax];
                if !(lam.abs() < 2.0) {
                    return Err(CliError::config(
                        "asymptotics.gamma",
                        format!("cannot derive gamma: eigenvalue {lam} outside (-2, 2)"),
                    ));
                }
                (lam / 2.0).acos()
            }
        };
        let spec = match kind {
            "mass-cosh" => AsymptoticsSpec::MassCosh { r, gamma, w },
            "exp-plus" => AsymptoticsSpec::ExpPlus { r, gamma, w },
            "exp-minus" => AsymptoticsSpec::ExpMinus { r, gamma, w },
            other => {
                return Err(CliError::config(
                    "asymptotics.kind",
                    format!(
                        "unknown kind {other:?} (expected zero, mass-cosh, exp-plus, exp-minus)"
                    ),
                ))
            }
        };
        Ok(spec)
    }

    pub fn build_grid(&self) -> CliResult<Grid> {
        let l = self.grid.l.unwrap_or(25.0 * self.s);
        make_grid(l, self.grid.m).map_err(|e| CliError::config("grid", e))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            damping: self.solver.damping,
            ..SolverOptions::default()
        }
    }

    /// Gauge matrices for the c-independence sweep.
    pub fn c_independence_gauges(&self, g: &CouplingMatrix) -> CliResult<Vec<CouplingMatrix>> {
        self.verify
            .c_independence
            .iter()
            .map(|name| gauge_by_name(name, g))
            .collect()
    }
}

fn gauge_by_spec(spec: &GaugeSpec, g: &CouplingMatrix) -> CliResult<CouplingMatrix> {
    match spec {
        GaugeSpec::Default => Ok(g.scaled(0.5)),
        GaugeSpec::Named(name) => gauge_by_name(name, g),
        GaugeSpec::Custom { custom } => {
            CouplingMatrix::from_rows(custom).map_err(|e| CliError::config("gauge.custom", e))
        }
    }
}

pub fn gauge_by_name(name: &str, g: &CouplingMatrix) -> CliResult<CouplingMatrix> {
    match name {
        "zero" => Ok(CouplingMatrix::zeros(g.n())),
        "half-g" => Ok(g.scaled(0.5)),
        "g" => Ok(g.clone()),
        other => Err(CliError::config(
            "gauge",
            format!("unknown gauge {other:?} (expected zero, half-g, g, or custom rows)"),
        )),
    }
}
