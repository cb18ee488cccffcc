//! Dense linear algebra for small square matrices.
//!
//! Everything in this crate works with systems of at most a few dozen
//! components, so the implementations favour robustness and simplicity over
//! asymptotic cleverness: partial-pivot LU, cyclic Jacobi for symmetric
//! matrices and a Francis double-shift QR iteration for the general case.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Square matrix of `f64` in row-major storage.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return None;
        }
        let data = rows.iter().flatten().copied().collect();
        Some(Matrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul_mat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len());
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Maximum absolute row sum (operator norm for the sup norm).
    pub fn inf_norm(&self) -> f64 {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().map(|x| x.abs()).sum())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// LU decomposition with partial pivoting. `None` if numerically singular.
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

pub fn lu_decompose(m: &Matrix) -> Option<Lu> {
    let n = m.n;
    let mut lu = m.data.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let scale = m.max_norm().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut p = k;
        let mut best = lu[k * n + k].abs();
        for i in k + 1..n {
            let v = lu[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= scale * 1e-300 {
            return None;
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            for j in k + 1..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
        }
    }
    Some(Lu { n, lu, piv })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Matrix inverse via LU. `None` if singular to working precision.
pub fn invert(m: &Matrix) -> Option<Matrix> {
    let lu = lu_decompose(m)?;
    let n = m.n;
    let mut out = Matrix::zeros(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Some(out)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns,
/// unsorted.
pub fn jacobi_symmetric(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.n;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };
    let scale = m.max_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        if off(&a) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[(i, i)]).collect();
    (vals, v)
}

/// Eigenvalues of a general real matrix as `(re, im)` pairs.
///
/// Hessenberg reduction followed by Francis double-shift QR with deflation.
pub fn eigenvalues(m: &Matrix) -> Vec<(f64, f64)> {
    let n = m.n;
    if n == 1 {
        return vec![(m[(0, 0)], 0.0)];
    }
    let mut h = hessenberg(m);
    let mut eigs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols 0..hi
    let scale = m.max_norm().max(f64::MIN_POSITIVE);
    let mut iters_since_deflation = 0usize;
    let mut total_iters = 0usize;
    let max_total = 80 * n;
    while hi > 0 {
        // zero out negligible subdiagonals
        for i in 1..hi {
            let tiny =
                f64::EPSILON * (h[(i - 1, i - 1)].abs() + h[(i, i)].abs()).max(scale * 1e-30);
            if h[(i, i - 1)].abs() <= tiny {
                h[(i, i - 1)] = 0.0;
            }
        }
        if hi == 1 {
            eigs.push((h[(0, 0)], 0.0));
            break;
        }
        if h[(hi - 1, hi - 2)] == 0.0 {
            eigs.push((h[(hi - 1, hi - 1)], 0.0));
            hi -= 1;
            iters_since_deflation = 0;
            continue;
        }
        if hi == 2 || h[(hi - 2, hi - 3)] == 0.0 {
            let (e1, e2) = eig2x2(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            );
            eigs.push(e1);
            eigs.push(e2);
            hi -= 2;
            iters_since_deflation = 0;
            continue;
        }
        // find the start of the active block
        let mut lo = hi - 1;
        while lo > 0 && h[(lo, lo - 1)] != 0.0 {
            lo -= 1;
        }
        total_iters += 1;
        iters_since_deflation += 1;
        if total_iters > max_total {
            // stalled; report what remains as the trailing diagonal
            for i in 0..hi {
                eigs.push((h[(i, i)], 0.0));
            }
            break;
        }
        let exceptional = iters_since_deflation % 16 == 0;
        francis_step(&mut h, lo, hi, exceptional);
    }
    eigs
}

fn hessenberg(m: &Matrix) -> Matrix {
    let n = m.n;
    let mut a = m.clone();
    for k in 0..n.saturating_sub(2) {
        let mut norm = 0.0;
        for i in k + 1..n {
            norm = f64::hypot(norm, a[(i, k)]);
        }
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k + 1] = a[(k + 1, k)] - alpha;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        // A <- (I - 2 v v^T / v^T v) A
        for j in 0..n {
            let mut dot = 0.0;
            for i in k + 1..n {
                dot += v[i] * a[(i, j)];
            }
            let f = 2.0 * dot / vtv;
            for i in k + 1..n {
                a[(i, j)] -= f * v[i];
            }
        }
        // A <- A (I - 2 v v^T / v^T v)
        for i in 0..n {
            let mut dot = 0.0;
            for j in k + 1..n {
                dot += a[(i, j)] * v[j];
            }
            let f = 2.0 * dot / vtv;
            for j in k + 1..n {
                a[(i, j)] -= f * v[j];
            }
        }
    }
    a
}

fn eig2x2(a: f64, b: f64, c: f64, d: f64) -> ((f64, f64), (f64, f64)) {
    let tr = a + d;
    let disc = (a - d) * (a - d) + 4.0 * b * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // stable form: larger-magnitude root first
        let l1 = 0.5 * (tr + if tr >= 0.0 { sq } else { -sq });
        let l2 = if l1 != 0.0 {
            (a * d - b * c) / l1
        } else {
            0.5 * (tr - sq)
        };
        ((l1, 0.0), (l2, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        ((0.5 * tr, im), (0.5 * tr, -im))
    }
}

/// One implicit double-shift QR sweep on the Hessenberg block `lo..hi`.
fn francis_step(h: &mut Matrix, lo: usize, hi: usize, exceptional: bool) {
    let n = h.n;
    let m = hi - 1;
    // shifts from the trailing 2x2
    let (s, t) = if exceptional {
        let x = h[(m, m - 1)].abs() + h[(m - 1, m - 2)].abs();
        (1.5 * x, x * x)
    } else {
        let tr = h[(m - 1, m - 1)] + h[(m, m)];
        let det = h[(m - 1, m - 1)] * h[(m, m)] - h[(m - 1, m)] * h[(m, m - 1)];
        (tr, det)
    };
    // first column of (H - aI)(H - bI) with a+b = s, ab = t
    let mut x = h[(lo, lo)] * h[(lo, lo)] + h[(lo, lo + 1)] * h[(lo + 1, lo)] - s * h[(lo, lo)] + t;
    let mut y = h[(lo + 1, lo)] * (h[(lo, lo)] + h[(lo + 1, lo + 1)] - s);
    let mut z = if lo + 2 < hi {
        h[(lo + 2, lo + 1)] * h[(lo + 1, lo)]
    } else {
        0.0
    };
    for k in lo..hi - 2 {
        // Householder on (x, y, z)
        let norm = (x * x + y * y + z * z).sqrt();
        if norm != 0.0 {
            let alpha = if x >= 0.0 { -norm } else { norm };
            let v = [x - alpha, y, z];
            let vtv: f64 = v.iter().map(|a| a * a).sum();
            if vtv > 0.0 {
                let r0 = k;
                let rows = [r0, r0 + 1, r0 + 2];
                let jmin = if k > lo { k - 1 } else { lo };
                for j in jmin..n {
                    let mut dot = 0.0;
                    for (vi, &ri) in v.iter().zip(&rows) {
                        dot += vi * h[(ri, j)];
                    }
                    let f = 2.0 * dot / vtv;
                    for (vi, &ri) in v.iter().zip(&rows) {
                        h[(ri, j)] -= f * vi;
                    }
                }
                let imax = (k + 4).min(hi);
                for i in 0..imax {
                    let mut dot = 0.0;
                    for (vi, &ri) in v.iter().zip(&rows) {
                        dot += h[(i, ri)] * vi;
                    }
                    let f = 2.0 * dot / vtv;
                    for (vi, &ri) in v.iter().zip(&rows) {
                        h[(i, ri)] -= f * vi;
                    }
                }
            }
        }
        x = h[(k + 1, k)];
        y = h[(k + 2, k)];
        z = if k + 3 < hi { h[(k + 3, k)] } else { 0.0 };
    }
    // final 2x1 Givens
    let k = hi - 2;
    let norm = f64::hypot(x, y);
    if norm != 0.0 {
        let c = x / norm;
        let s2 = y / norm;
        let jmin = if k > lo { k - 1 } else { lo };
        for j in jmin..n {
            let a = h[(k, j)];
            let b = h[(k + 1, j)];
            h[(k, j)] = c * a + s2 * b;
            h[(k + 1, j)] = -s2 * a + c * b;
        }
        for i in 0..hi {
            let a = h[(i, k)];
            let b = h[(i, k + 1)];
            h[(i, k)] = c * a + s2 * b;
            h[(i, k + 1)] = -s2 * a + c * b;
        }
    }
}

/// Eigenvector for a (nearly) known real eigenvalue by inverse iteration.
///
/// `ordinal` perturbs the shift so members of a repeated cluster do not all
/// collapse onto the same vector.
pub fn inverse_iteration(m: &Matrix, lambda: f64, ordinal: usize) -> Option<Vec<f64>> {
    let n = m.n;
    let scale = m.max_norm().max(1.0);
    let base = scale * 1e-11;
    let shift = lambda + base * (1.0 + ordinal as f64);
    let mut b = m.clone();
    for i in 0..n {
        b[(i, i)] -= shift;
    }
    let lu = match lu_decompose(&b) {
        Some(lu) => Some(lu),
        None => {
            // exactly singular shift; nudge harder
            for i in 0..n {
                b[(i, i)] -= base;
            }
            lu_decompose(&b)
        }
    }?;
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * ((i + 1 + 7 * ordinal) as f64).sin())
        .collect();
    for _ in 0..4 {
        let w = lu.solve(&v);
        let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        v = w.iter().map(|x| x / norm).collect();
    }
    // fix an overall sign for determinism: largest component positive
    let (mut imax, mut best) = (0, 0.0);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    Some(v)
}
