//! Error type shared by all modules of the crate.

use thiserror::Error;

use crate::model::SampledFunction;
use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square and non-empty")]
    BadMatrixShape,
    #[error("matrix entry ({row},{col}) = {value} is not finite")]
    NonFiniteEntry { row: usize, col: usize, value: f64 },
    #[error("rank {rank} is not valid for family {family}")]
    InvalidRank { family: char, rank: usize },
    #[error("entry ({row},{col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("eigenvalue has imaginary part {imag:.3e} (tolerance {tol:.3e})")]
    ComplexSpectrum { imag: f64, tol: f64 },
    #[error("eigenvector matrix condition number {cond:.3e} exceeds cap {cap:.3e}")]
    NotDiagonalizable { cond: f64, cap: f64 },
    #[error("spectral radius {radius} is not inside (-2, 2)")]
    SpectralRadiusTooLarge { radius: f64 },
    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("power iteration did not converge within {max_iter} iterations")]
    PowerIterationNoConvergence { max_iter: usize },
    #[error("kernel parameter d = {d} is outside the guarded interval (-2, 2)")]
    DOutOfRange { d: f64 },
    #[error("shift parameter s = {s} must be positive")]
    BadShiftParameter { s: f64 },
    #[error("tolerance {tol} must be positive")]
    BadTolerance { tol: f64 },
    #[error("evaluation point within {dist:.3e} of a kernel pole (guard {guard:.3e})")]
    NearPole { dist: f64, guard: f64 },
    #[error("bad grid parameters: half width {half_width}, {n_points} points (need L > 0 and odd M >= 3)")]
    BadGridParams { half_width: f64, n_points: usize },
    #[error("grid spacing {h:.3e} too coarse for strip half-width {s} (need h < s/4)")]
    GridTooCoarse { h: f64, s: f64 },
    #[error("asymptotics invalid: ||G w - 2 cos(gamma) w|| = {residual:.3e} exceeds {tol:.3e}")]
    AsymptoticsInvalid { residual: f64, tol: f64 },
    #[error("asymptotics parameter out of range: {0}")]
    BadAsymptoticsParameter(String),
    #[error("weight vector must have {expected} strictly positive components")]
    BadWeightVector { expected: usize },
    #[error("Hoelder exponent pair invalid: p = {p} (need 1 <= p <= inf)")]
    BadNormExponent { p: f64 },
    #[error("fixed-point iteration did not converge: update {final_residual:.3e} after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        final_residual: f64,
        f_star: Box<SampledFunction>,
        report: Box<SolveReport>,
    },
    #[error("input is not a converged solution: fixed-point residual {residual:.3e} exceeds {threshold:.3e}")]
    NotConverged { residual: f64, threshold: f64 },
    #[error("contraction estimate cross-check failed: formula {formula}, estimate {estimate}")]
    KappaCrossCheck { formula: f64, estimate: f64 },
    #[error("component count mismatch: expected {expected}, got {got}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
}
