//! Problem instances: grid, asymptotics, the nonlinear operator and the
//! kernel convolution.
//!
//! The convolution discretizes `(Phi_C * g)(x)` on a uniform grid. Off the
//! grid window the data is extended by its edge values and the kernel tail
//! sums are accumulated on the same lattice, so the discrete operator maps
//! constant functions to constant functions exactly (up to rounding). This
//! matters: with zero asymptotics the true solution is constant, and a
//! windowed quadrature alone would bend it near the edges.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{KernelDecomp, POLE_GUARD};
use crate::linalg::Matrix;
use crate::spectral::{self, CouplingMatrix};

/// Residual tolerance for validating asymptotics against the coupling matrix.
pub const ASYMPTOTICS_TOL: f64 = 1e-8;

/// Uniform symmetric grid on `[-L, L]` with trapezoid weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    half_width: f64,
    n_points: usize,
    h: f64,
}

/// Builds a grid with an odd number of points so that x = 0 is a node.
pub fn make_grid(half_width: f64, n_points: usize) -> Result<Grid> {
    if !(half_width > 0.0) || !half_width.is_finite() || n_points < 3 || n_points % 2 == 0 {
        return Err(Error::BadGridParams {
            half_width,
            n_points,
        });
    }
    Ok(Grid {
        half_width,
        n_points,
        h: 2.0 * half_width / (n_points - 1) as f64,
    })
}

impl Grid {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn mid(&self) -> usize {
        (self.n_points - 1) / 2
    }

    /// Node i, computed as an exact multiple of the spacing about zero.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.mid() as f64) * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.node(i))
    }

    /// Trapezoid weight of node i.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_points - 1 {
            self.h / 2.0
        } else {
            self.h
        }
    }
}

/// Asymptotic behaviour of the driving term, solving
/// `a(x+is) + a(x-is) = G a(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum AsymptoticsSpec {
    Zero,
    /// `r cosh(gamma z / s) w`
    MassCosh {
        r: f64,
        gamma: f64,
        w: Vec<f64>,
    },
    /// `r exp(+gamma z / s) w`
    ExpPlus {
        r: f64,
        gamma: f64,
        w: Vec<f64>,
    },
    /// `r exp(-gamma z / s) w`
    ExpMinus {
        r: f64,
        gamma: f64,
        w: Vec<f64>,
    },
    Sum(Vec<AsymptoticsSpec>),
}

impl AsymptoticsSpec {
    /// Checks scale/eigenvector constraints against the coupling matrix.
    pub fn validate(&self, g: &CouplingMatrix) -> Result<()> {
        match self {
            AsymptoticsSpec::Zero => Ok(()),
            AsymptoticsSpec::MassCosh { r, gamma, w }
            | AsymptoticsSpec::ExpPlus { r, gamma, w }
            | AsymptoticsSpec::ExpMinus { r, gamma, w } => {
                if !(*r > 0.0) || !r.is_finite() {
                    return Err(Error::BadAsymptoticsParameter(format!(
                        "scale r = {r} must be positive"
                    )));
                }
                if !(*gamma > 0.0 && *gamma < std::f64::consts::PI) {
                    return Err(Error::BadAsymptoticsParameter(format!(
                        "gamma = {gamma} must lie in (0, pi)"
                    )));
                }
                if w.len() != g.n() || w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::BadWeightVector { expected: g.n() });
                }
                let gw = g.mul_vec(w);
                let lam = 2.0 * gamma.cos();
                let wmax = w.iter().cloned().fold(0.0f64, f64::max);
                let residual = gw
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - lam * b).abs())
                    .fold(0.0f64, f64::max);
                if residual > ASYMPTOTICS_TOL * wmax.max(1.0) {
                    return Err(Error::AsymptoticsInvalid {
                        residual,
                        tol: ASYMPTOTICS_TOL * wmax.max(1.0),
                    });
                }
                Ok(())
            }
            AsymptoticsSpec::Sum(terms) => {
                for t in terms {
                    if matches!(t, AsymptoticsSpec::Sum(_)) {
                        return Err(Error::BadAsymptoticsParameter(
                            "nested Sum terms are not supported".into(),
                        ));
                    }
                    t.validate(g)?;
                }
                Ok(())
            }
        }
    }

    /// Component values at a strip point `z`.
    pub fn eval(&self, n: usize, s: f64, z: Complex64) -> Vec<Complex64> {
        match self {
            AsymptoticsSpec::Zero => vec![Complex64::new(0.0, 0.0); n],
            AsymptoticsSpec::MassCosh { r, gamma, w } => {
                let c = (z * (*gamma / s)).cosh() * *r;
                w.iter().map(|&wi| c * wi).collect()
            }
            AsymptoticsSpec::ExpPlus { r, gamma, w } => {
                let c = (z * (*gamma / s)).exp() * *r;
                w.iter().map(|&wi| c * wi).collect()
            }
            AsymptoticsSpec::ExpMinus { r, gamma, w } => {
                let c = (-z * (*gamma / s)).exp() * *r;
                w.iter().map(|&wi| c * wi).collect()
            }
            AsymptoticsSpec::Sum(terms) => {
                let mut acc = vec![Complex64::new(0.0, 0.0); n];
                for t in terms {
                    for (a, v) in acc.iter_mut().zip(t.eval(n, s, z)) {
                        *a += v;
                    }
                }
                acc
            }
        }
    }
}

/// Evaluates an asymptotics description at `z` (free-function form).
pub fn eval_asymptotics(spec: &AsymptoticsSpec, n: usize, s: f64, z: Complex64) -> Vec<Complex64> {
    spec.eval(n, s, z)
}

/// A validated problem instance.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    s: f64,
    g: CouplingMatrix,
    c: CouplingMatrix,
    asymptotics: AsymptoticsSpec,
}

impl ModelSpec {
    pub fn new(
        s: f64,
        g: CouplingMatrix,
        c: CouplingMatrix,
        asymptotics: AsymptoticsSpec,
    ) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::BadShiftParameter { s });
        }
        if g.n() != c.n() {
            return Err(Error::ComponentMismatch {
                expected: g.n(),
                got: c.n(),
            });
        }
        if !is_non_negative(&g) {
            return Err(first_negative(&g));
        }
        if !spectral::is_irreducible(&g)? {
            return Err(Error::NotIrreducible);
        }
        spectral::check_mat_lt2(&g, spectral::DEFAULT_SPECTRAL_TOL)?;
        spectral::check_mat_lt2(&c, spectral::DEFAULT_SPECTRAL_TOL)?;
        asymptotics.validate(&g)?;
        Ok(ModelSpec {
            s,
            g,
            c,
            asymptotics,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.g
    }

    pub fn gauge(&self) -> &CouplingMatrix {
        &self.c
    }

    pub fn asymptotics(&self) -> &AsymptoticsSpec {
        &self.asymptotics
    }

    /// Same instance with a different gauge matrix.
    pub fn with_gauge(&self, c: CouplingMatrix) -> Result<ModelSpec> {
        ModelSpec::new(self.s, self.g.clone(), c, self.asymptotics.clone())
    }

    /// Asymptotics values at a strip point.
    pub fn asymptotics_at(&self, z: Complex64) -> Vec<Complex64> {
        self.asymptotics.eval(self.n(), self.s, z)
    }

    /// Real asymptotics values on the whole grid, row-major `M x N`.
    pub fn asymptotics_on_grid(&self, grid: &Grid) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; grid.len() * n];
        for (i, x) in grid.nodes().enumerate() {
            let vals = self.asymptotics.eval(n, self.s, Complex64::new(x, 0.0));
            for (c, v) in vals.iter().enumerate() {
                out[i * n + c] = v.re;
            }
        }
        out
    }
}

fn is_non_negative(m: &CouplingMatrix) -> bool {
    m.is_non_negative()
}

fn first_negative(m: &CouplingMatrix) -> Error {
    for i in 0..m.n() {
        for j in 0..m.n() {
            if m.get(i, j) < 0.0 {
                return Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: m.get(i, j),
                };
            }
        }
    }
    unreachable!("called first_negative on a non-negative matrix")
}

/// N-component function sampled on a grid. Axis-valued data has imaginary
/// parts exactly zero.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    grid: Grid,
    n_comp: usize,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn zeros(grid: Grid, n_comp: usize) -> Self {
        let len = grid.len() * n_comp;
        SampledFunction {
            grid,
            n_comp,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_real(grid: Grid, n_comp: usize, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() * n_comp {
            return Err(Error::ComponentMismatch {
                expected: grid.len() * n_comp,
                got: values.len(),
            });
        }
        Ok(SampledFunction {
            grid,
            n_comp,
            values: values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        })
    }

    pub fn from_complex(grid: Grid, n_comp: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() * n_comp {
            return Err(Error::ComponentMismatch {
                expected: grid.len() * n_comp,
                got: values.len(),
            });
        }
        Ok(SampledFunction {
            grid,
            n_comp,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn value(&self, node: usize, comp: usize) -> Complex64 {
        self.values[node * self.n_comp + comp]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Real parts, row-major `M x N`.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    /// Sup-norm distance to another sampled function.
    pub fn sup_distance(&self, other: &SampledFunction) -> Result<f64> {
        if self.grid != other.grid || self.n_comp != other.n_comp {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm())))
    }
}

/// Stable `log(exp(-a) + exp(f))`.
#[inline]
pub fn log_sum_exp(a: f64, f: f64) -> f64 {
    let m = (-a).max(f);
    m + (-(f + a).abs()).exp().ln_1p()
}

/// The nonlinear operator `L_C[f] = G log(e^{-a} + e^{f}) - C f` at one
/// point, using the overflow-safe log-sum-exp form.
pub fn apply_lc(
    g: &CouplingMatrix,
    c: &CouplingMatrix,
    a_vals: &[f64],
    f_vals: &[f64],
) -> Vec<f64> {
    let n = g.n();
    debug_assert_eq!(a_vals.len(), n);
    debug_assert_eq!(f_vals.len(), n);
    let logterm: Vec<f64> = a_vals
        .iter()
        .zip(f_vals)
        .map(|(&a, &f)| log_sum_exp(a, f))
        .collect();
    let gl = g.mul_vec(&logterm);
    let cf = c.mul_vec(f_vals);
    gl.iter().zip(&cf).map(|(a, b)| a - b).collect()
}

/// Applies `L_C` across a whole grid sample (row-major `M x N` buffers).
pub(crate) fn apply_lc_grid(
    g: &CouplingMatrix,
    c: &CouplingMatrix,
    a_grid: &[f64],
    f_grid: &[f64],
    out: &mut Vec<f64>,
) {
    let n = g.n();
    out.clear();
    for (a_row, f_row) in a_grid.chunks(n).zip(f_grid.chunks(n)) {
        out.extend(apply_lc(g, c, a_row, f_row));
    }
}

/// Hard cap on the kernel table extension used for the edge tails.
const TAIL_CAP_FACTOR: usize = 16;

/// Precomputed translation-invariant kernel data for repeated real-axis
/// convolutions (one build per solve).
pub(crate) struct RealConvolution {
    n: usize,
    m: usize,
    h: f64,
    /// Per eigen-channel kernel values at offsets `0, h, 2h, ...`.
    channel_vals: Vec<Vec<f64>>,
    /// Per-channel suffix sums `ts[k] = h * sum_{m >= k} val[m]`.
    channel_ts: Vec<Vec<f64>>,
    t: Matrix,
    tinv: Matrix,
}

impl RealConvolution {
    pub fn build(k: &KernelDecomp, grid: &Grid) -> RealConvolution {
        let n = k.n();
        let m = grid.len();
        let h = grid.spacing();
        let mut channel_vals = Vec::with_capacity(n);
        for p in k.scalar_params() {
            let scale = p.eval_unchecked(Complex64::new(0.0, 0.0)).norm();
            let cutoff = 1e-22 * scale;
            let cap = TAIL_CAP_FACTOR * m;
            let mut vals: Vec<f64> = Vec::with_capacity(m + 64);
            let mut off = 0usize;
            loop {
                let v = p.eval_unchecked(Complex64::new(off as f64 * h, 0.0)).re;
                vals.push(v);
                off += 1;
                if off >= m && (v.abs() < cutoff || off >= cap) {
                    break;
                }
            }
            channel_vals.push(vals);
        }
        let channel_ts = channel_vals
            .iter()
            .map(|vals| {
                let mut ts = vec![0.0; vals.len() + 1];
                for i in (0..vals.len()).rev() {
                    ts[i] = ts[i + 1] + h * vals[i];
                }
                ts
            })
            .collect();
        RealConvolution {
            n,
            m,
            h,
            channel_vals,
            channel_ts,
            t: k.spectral().right_eigenvectors.clone(),
            tinv: k.spectral().inverse.clone(),
        }
    }

    /// `out[i] = sum_j h Phi[(i-j)h] g[j]` with edge-value extension of `g`
    /// beyond the window. Buffers are row-major `M x N`.
    pub fn apply(&self, g: &[f64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        debug_assert_eq!(g.len(), m * n);
        debug_assert_eq!(out.len(), m * n);
        // into the eigenbasis, channel-major
        let mut gt = vec![0.0; n * m];
        for j in 0..m {
            for ch in 0..n {
                let mut acc = 0.0;
                for comp in 0..n {
                    acc += self.tinv[(ch, comp)] * g[j * n + comp];
                }
                gt[ch * m + j] = acc;
            }
        }
        let mut outt = vec![0.0; n * m];
        for ch in 0..n {
            let vals = &self.channel_vals[ch];
            let ts = &self.channel_ts[ch];
            let gch = &gt[ch * m..(ch + 1) * m];
            let (g_left, g_right) = (gch[0], gch[m - 1]);
            let och = &mut outt[ch * m..(ch + 1) * m];
            for i in 0..m {
                let mut acc = 0.0;
                // j = 0..=i pairs with offsets i, i-1, ..., 0
                for (gj, v) in gch[..=i].iter().rev().zip(&vals[..=i]) {
                    acc += gj * v;
                }
                // j = i+1..m pairs with offsets 1, 2, ...
                for (gj, v) in gch[i + 1..].iter().zip(&vals[1..m - i]) {
                    acc += gj * v;
                }
                acc *= self.h;
                acc += g_left * ts.get(i + 1).copied().unwrap_or(0.0);
                acc += g_right * ts.get(m - i).copied().unwrap_or(0.0);
                och[i] = acc;
            }
        }
        // back to components
        for i in 0..m {
            for comp in 0..n {
                let mut acc = 0.0;
                for ch in 0..n {
                    acc += self.t[(comp, ch)] * outt[ch * m + i];
                }
                out[i * n + comp] = acc;
            }
        }
    }
}

/// Discrete convolution of the matrix kernel with sampled data, evaluated at
/// `x_i + i shift_y`:
///
/// `h(x_i) = sum_j weight_j Phi_C(x_i - x_j + i shift_y) g(x_j)` plus the
/// edge-extension tail sums described in the module docs.
pub fn convolve(
    k: &KernelDecomp,
    grid: &Grid,
    g: &SampledFunction,
    shift_y: f64,
) -> Result<SampledFunction> {
    if g.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let n = k.n();
    if g.n_comp() != n {
        return Err(Error::ComponentMismatch {
            expected: n,
            got: g.n_comp(),
        });
    }
    let s = k.s();
    let guard = POLE_GUARD * s;
    if s - shift_y.abs() < guard {
        return Err(Error::NearPole {
            dist: s - shift_y.abs(),
            guard,
        });
    }
    let m = grid.len();
    let h = grid.spacing();

    // per-channel kernel tables at offsets -(ext)..ext, complex in general
    let mut pos_vals: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut neg_vals: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for p in k.scalar_params() {
        let scale = p
            .eval_unchecked(Complex64::new(0.0, shift_y))
            .norm()
            .max(1e-300);
        let cutoff = 1e-22 * scale;
        let cap = TAIL_CAP_FACTOR * m;
        let mut pos: Vec<Complex64> = Vec::with_capacity(m + 64);
        let mut neg: Vec<Complex64> = Vec::with_capacity(m + 64);
        let mut off = 0usize;
        loop {
            let zp = Complex64::new(off as f64 * h, shift_y);
            let zm = Complex64::new(-(off as f64) * h, shift_y);
            let vp = p.eval_unchecked(zp);
            let vm = p.eval_unchecked(zm);
            pos.push(vp);
            neg.push(vm);
            off += 1;
            if off >= m && ((vp.norm().max(vm.norm())) < cutoff || off >= cap) {
                break;
            }
        }
        pos_vals.push(pos);
        neg_vals.push(neg);
    }
    let suffix = |vals: &Vec<Complex64>| -> Vec<Complex64> {
        let mut ts = vec![Complex64::new(0.0, 0.0); vals.len() + 1];
        for i in (0..vals.len()).rev() {
            ts[i] = ts[i + 1] + h * vals[i];
        }
        ts
    };
    let pos_ts: Vec<Vec<Complex64>> = pos_vals.iter().map(suffix).collect();
    let neg_ts: Vec<Vec<Complex64>> = neg_vals.iter().map(suffix).collect();

    let spectral = k.spectral();
    let (t, tinv) = (&spectral.right_eigenvectors, &spectral.inverse);

    // eigenbasis transform of g, channel-major
    let mut gt = vec![Complex64::new(0.0, 0.0); n * m];
    for j in 0..m {
        for ch in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for comp in 0..n {
                acc += g.value(j, comp) * tinv[(ch, comp)];
            }
            gt[ch * m + j] = acc;
        }
    }

    let mut outt = vec![Complex64::new(0.0, 0.0); n * m];
    for ch in 0..n {
        let pos = &pos_vals[ch];
        let neg = &neg_vals[ch];
        let gch = &gt[ch * m..(ch + 1) * m];
        let (g_left, g_right) = (gch[0], gch[m - 1]);
        for i in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            // j <= i: offset (i - j) >= 0
            for (gj, v) in gch[..=i].iter().rev().zip(&pos[..=i]) {
                acc += gj * v;
            }
            // j > i: offset (i - j) < 0
            for (gj, v) in gch[i + 1..].iter().zip(&neg[1..m - i]) {
                acc += gj * v;
            }
            acc *= h;
            // left tail: offsets +(i+1), +(i+2), ...; right tail: -(m-i), ...
            acc += g_left * pos_ts[ch].get(i + 1).copied().unwrap_or_default();
            acc += g_right * neg_ts[ch].get(m - i).copied().unwrap_or_default();
            outt[ch * m + i] = acc;
        }
    }

    let mut values = vec![Complex64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for comp in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for ch in 0..n {
                acc += outt[ch * m + i] * t[(comp, ch)];
            }
            values[i * n + comp] = acc;
        }
    }
    SampledFunction::from_complex(grid.clone(), n, values)
}
