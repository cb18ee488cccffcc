//! Admissibility checks and spectral data for coupling matrices.
//!
//! The solvable class consists of real matrices that diagonalise over the
//! reals with all eigenvalues inside (-2, 2); the source term additionally
//! has to be non-negative and irreducible so that Perron-Frobenius theory
//! applies. This module provides those checks, the Perron eigenpair via
//! shifted power iteration, and a catalog of Dynkin/tadpole adjacency
//! matrices, which are the classic examples satisfying all of the above.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Imaginary parts below this are treated as rounding noise of a real
/// eigenvalue (used when the caller does not supply a tolerance).
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;
/// Condition-number cap on the eigenvector matrix; above this the matrix is
/// reported as not diagonalizable.
pub const EIGENVECTOR_COND_CAP: f64 = 1e8;

/// Real square coupling matrix (entries validated finite).
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    mat: Matrix,
}

impl CouplingMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let mat = Matrix::from_rows(rows).ok_or(Error::BadMatrixShape)?;
        for i in 0..mat.n() {
            for j in 0..mat.n() {
                if !mat[(i, j)].is_finite() {
                    return Err(Error::NonFiniteEntry {
                        row: i,
                        col: j,
                        value: mat[(i, j)],
                    });
                }
            }
        }
        Ok(CouplingMatrix { mat })
    }

    pub fn zeros(n: usize) -> Self {
        CouplingMatrix {
            mat: Matrix::zeros(n.max(1)),
        }
    }

    pub fn identity(n: usize) -> Self {
        CouplingMatrix {
            mat: Matrix::identity(n.max(1)),
        }
    }

    pub fn n(&self) -> usize {
        self.mat.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.mat.row(i).to_vec()).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        CouplingMatrix {
            mat: self.mat.scaled(c),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.mat.mul_vec(v)
    }

    pub fn is_non_negative(&self) -> bool {
        self.mat.iter().all(|&x| x >= 0.0)
    }

    pub fn max_norm(&self) -> f64 {
        self.mat.max_norm()
    }

    pub(crate) fn matrix(&self) -> &Matrix {
        &self.mat
    }
}

/// Real eigendecomposition `C = T diag(d) T^{-1}`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Eigenvalues sorted in descending order.
    pub eigenvalues: Vec<f64>,
    /// Right eigenvectors as columns, ordered like `eigenvalues`.
    pub right_eigenvectors: Matrix,
    /// Inverse of the eigenvector matrix.
    pub inverse: Matrix,
    /// Largest absolute eigenvalue.
    pub spectral_radius: f64,
}

/// Perron-Frobenius eigenpair of a non-negative irreducible matrix.
#[derive(Clone, Debug)]
pub struct PerronData {
    pub lambda_pf: f64,
    /// Strictly positive eigenvector, normalized so the largest component is 1.
    pub w: Vec<f64>,
}

/// Families of graphs in the adjacency catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DynkinFamily {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    /// Tadpole T_N = A_N with an extra loop on the first node.
    T,
}

impl DynkinFamily {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(Self::A),
            'B' => Some(Self::B),
            'C' => Some(Self::C),
            'D' => Some(Self::D),
            'E' => Some(Self::E),
            'F' => Some(Self::F),
            'G' => Some(Self::G),
            'T' => Some(Self::T),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Self::A => 'A',
            Self::B => 'B',
            Self::C => 'C',
            Self::D => 'D',
            Self::E => 'E',
            Self::F => 'F',
            Self::G => 'G',
            Self::T => 'T',
        }
    }
}

/// Adjacency matrix of a finite Dynkin diagram or tadpole graph.
///
/// Simply-laced families are plain graph adjacencies; for B, C, F and G the
/// matrix is `2*I - Cartan`, which is non-symmetric but keeps the same
/// Perron root as the underlying diagram.
pub fn dynkin_adjacency(family: DynkinFamily, rank: usize) -> Result<CouplingMatrix> {
    use DynkinFamily::*;
    let bad = || Error::InvalidRank {
        family: family.letter(),
        rank,
    };
    if rank == 0 {
        return Err(bad());
    }
    let n = rank;
    let mut m = Matrix::zeros(n);
    let path = |m: &mut Matrix, upto: usize| {
        for i in 0..upto.saturating_sub(1) {
            m[(i, i + 1)] = 1.0;
            m[(i + 1, i)] = 1.0;
        }
    };
    match family {
        A => path(&mut m, n),
        T => {
            path(&mut m, n);
            m[(0, 0)] = 1.0;
        }
        B | C => {
            path(&mut m, n);
            if n >= 2 {
                // double the last bond on one side; B and C are transposes
                if family == B {
                    m[(n - 1, n - 2)] = 2.0;
                } else {
                    m[(n - 2, n - 1)] = 2.0;
                }
            }
        }
        D => {
            if n < 2 {
                return Err(bad());
            }
            // chain of n-2 nodes with two extra nodes on the last chain node
            path(&mut m, n - 1);
            if n >= 3 {
                m[(n - 3, n - 1)] = 1.0;
                m[(n - 1, n - 3)] = 1.0;
            }
            // n == 2: two disconnected nodes (A_1 + A_1)
        }
        E => {
            if !(6..=8).contains(&n) {
                return Err(bad());
            }
            path(&mut m, n - 1);
            m[(2, n - 1)] = 1.0;
            m[(n - 1, 2)] = 1.0;
        }
        F => {
            if n != 4 {
                return Err(bad());
            }
            path(&mut m, 4);
            m[(2, 1)] = 2.0;
        }
        G => {
            if n != 2 {
                return Err(bad());
            }
            m[(0, 1)] = 1.0;
            m[(1, 0)] = 3.0;
        }
    }
    Ok(CouplingMatrix { mat: m })
}

/// Strong connectivity of the directed graph with an edge i -> j whenever
/// `M_ij > 0`. For N = 1 the convention is that `[0]` is reducible and
/// `[x]` with x > 0 is irreducible.
pub fn is_irreducible(m: &CouplingMatrix) -> Result<bool> {
    let n = m.n();
    for i in 0..n {
        for j in 0..n {
            if m.get(i, j) < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: m.get(i, j),
                });
            }
        }
    }
    if n == 1 {
        return Ok(m.get(0, 0) > 0.0);
    }
    let reach = |transpose: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if transpose { m.get(j, i) } else { m.get(i, j) };
                if edge > 0.0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count
    };
    Ok(reach(false) == n && reach(true) == n)
}

/// Checks that `m` diagonalises over the reals with spectrum inside (-2, 2)
/// and returns the decomposition.
pub fn check_mat_lt2(m: &CouplingMatrix, tol: f64) -> Result<SpectralData> {
    if !(tol > 0.0) {
        return Err(Error::BadTolerance { tol });
    }
    let a = m.matrix();
    let n = a.n();

    let (mut vals, mut vecs): (Vec<f64>, Matrix) = if a.is_symmetric() {
        linalg::jacobi_symmetric(a)
    } else {
        let eigs = linalg::eigenvalues(a);
        let scale = a.max_norm().max(1.0);
        for &(_, im) in &eigs {
            if im.abs() >= tol * scale {
                return Err(Error::ComplexSpectrum {
                    imag: im.abs(),
                    tol: tol * scale,
                });
            }
        }
        let mut vecs = Matrix::zeros(n);
        // group equal eigenvalues so inverse iteration can separate them
        let mut sorted_idx: Vec<usize> = (0..n).collect();
        sorted_idx.sort_by(|&i, &j| eigs[i].0.partial_cmp(&eigs[j].0).unwrap());
        let mut ordinal = vec![0usize; n];
        for w in 1..n {
            let (i, prev) = (sorted_idx[w], sorted_idx[w - 1]);
            if (eigs[i].0 - eigs[prev].0).abs() <= 1e-8 * scale {
                ordinal[i] = ordinal[prev] + 1;
            }
        }
        for (j, &(re, _)) in eigs.iter().enumerate() {
            let v =
                linalg::inverse_iteration(a, re, ordinal[j]).ok_or(Error::NotDiagonalizable {
                    cond: f64::INFINITY,
                    cap: EIGENVECTOR_COND_CAP,
                })?;
            for i in 0..n {
                vecs[(i, j)] = v[i];
            }
        }
        (eigs.into_iter().map(|(re, _)| re).collect(), vecs)
    };

    // sort descending by eigenvalue, carrying the eigenvector columns along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = Matrix::zeros(n);
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[(i, newj)] = vecs[(i, oldj)];
        }
    }
    vals = sorted_vals;
    vecs = sorted_vecs;

    let inverse = linalg::invert(&vecs).ok_or(Error::NotDiagonalizable {
        cond: f64::INFINITY,
        cap: EIGENVECTOR_COND_CAP,
    })?;
    let cond = vecs.inf_norm() * inverse.inf_norm();
    if !cond.is_finite() || cond > EIGENVECTOR_COND_CAP {
        return Err(Error::NotDiagonalizable {
            cond,
            cap: EIGENVECTOR_COND_CAP,
        });
    }

    // reconstruction residual guards against a bogus decomposition
    let mut recon = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += vecs[(i, k)] * vals[k] * inverse[(k, j)];
            }
            recon[(i, j)] = s;
        }
    }
    let resid = recon.sub(a).max_norm();
    let scale = a.max_norm().max(1.0);
    if resid > 1e-8 * scale * cond.max(1.0) {
        return Err(Error::NotDiagonalizable {
            cond,
            cap: EIGENVECTOR_COND_CAP,
        });
    }

    let spectral_radius = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if spectral_radius >= 2.0 {
        return Err(Error::SpectralRadiusTooLarge {
            radius: spectral_radius,
        });
    }

    Ok(SpectralData {
        eigenvalues: vals,
        right_eigenvectors: vecs,
        inverse,
        spectral_radius,
    })
}

/// Perron-Frobenius eigenpair by power iteration on `G + I`.
///
/// The unit shift makes the Perron root strictly dominant even for bipartite
/// graphs (whose spectra are symmetric about zero) without changing the
/// eigenvector. Iteration stops when the eigenvalue settles and the residual
/// `||G w - lambda w||_inf / ||w||_inf` drops below `tol`.
pub fn perron_frobenius(g: &CouplingMatrix, tol: f64, max_iter: usize) -> Result<PerronData> {
    if !(tol > 0.0) {
        return Err(Error::BadTolerance { tol });
    }
    let n = g.n();
    if n == 1 {
        let v = g.get(0, 0);
        if v < 0.0 {
            return Err(Error::NegativeEntry {
                row: 0,
                col: 0,
                value: v,
            });
        }
        return Ok(PerronData {
            lambda_pf: v,
            w: vec![1.0],
        });
    }
    if !is_irreducible(g)? {
        return Err(Error::NotIrreducible);
    }
    let a = g.matrix();
    let shifted = a.add(&Matrix::identity(n));
    let mut v = vec![1.0; n];
    let mut lambda_prev = f64::NAN;
    for _ in 0..max_iter {
        let av = shifted.mul_vec(&v);
        let norm = av.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm == 0.0 {
            return Err(Error::NotIrreducible);
        }
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let vav: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let lambda = vav / vv;
        v = av.iter().map(|x| x / norm).collect();
        // residual in the original (unshifted) matrix
        let gw = a.mul_vec(&v);
        let lam_g = lambda - 1.0;
        let winf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let resid = gw
            .iter()
            .zip(&v)
            .map(|(gwi, wi)| (gwi - lam_g * wi).abs())
            .fold(0.0f64, f64::max)
            / winf;
        if resid < tol && (lambda - lambda_prev).abs() < tol * lambda.abs().max(1.0) {
            let wmax = v.iter().cloned().fold(f64::MIN, f64::max);
            let w: Vec<f64> = v.iter().map(|x| x / wmax).collect();
            if w.iter().any(|&x| x <= 0.0) {
                return Err(Error::NotIrreducible);
            }
            return Ok(PerronData {
                lambda_pf: lam_g,
                w,
            });
        }
        lambda_prev = lambda;
    }
    Err(Error::PowerIterationNoConvergence { max_iter })
}
