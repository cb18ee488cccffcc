//! Analytic continuation of solutions into the strip, boundary values at
//! `Im z = +-s`, Y-function construction and Y-system residuals.
//!
//! Inside the strip the continuation is a plain convolution with the
//! complex-shifted kernel. On the boundary line the kernel acquires a simple
//! pole on the integration path; the limit is a principal value plus a local
//! jump term `g(x)/2` coming from the residue `+-1/(2 pi i)` of each scalar
//! kernel at `+- i s`. The discrete principal value omits the singular node
//! and adds two lattice corrections derived from the discrete Hilbert
//! transform symbol: `h r(0) g(x)` for the regular part of the kernel at the
//! pole and `- rho h g'(x)` for the pole part itself.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{self, KernelDecomp};
use crate::model::{self, Grid, ModelSpec, SampledFunction};
use crate::solver::TbaOperator;
use crate::spectral;

/// Strip evaluations keep this margin (in units of s) from the boundary.
pub const STRIP_GUARD: f64 = 1e-3;
/// Fixed-point residual above which boundary values are refused
/// (100 x the default solver tolerance).
pub const BOUNDARY_RESIDUAL_THRESHOLD: f64 = 1e-10;

/// Function values sampled on a horizontal line `Im z = y_shift`.
#[derive(Clone, Debug)]
pub struct StripSample {
    pub x_nodes: Vec<f64>,
    pub y_shift: f64,
    /// Row-major `M x N` values.
    pub values: Vec<Complex64>,
    n_comp: usize,
}

impl StripSample {
    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn value(&self, node: usize, comp: usize) -> Complex64 {
        self.values[node * self.n_comp + comp]
    }
}

/// Y-functions on a horizontal line, `Y_n = exp(a_n + f_n)`.
#[derive(Clone, Debug)]
pub struct YFunctions {
    pub x_nodes: Vec<f64>,
    pub y_shift: f64,
    /// Row-major `M x N` values.
    pub values: Vec<Complex64>,
    n_comp: usize,
}

impl YFunctions {
    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn value(&self, node: usize, comp: usize) -> Complex64 {
        self.values[node * self.n_comp + comp]
    }
}

/// Indices of grid nodes with `|x| <= L - margin * s`; truncation
/// contaminates the band outside.
pub fn interior_band(grid: &Grid, s: f64, margin: f64) -> Vec<usize> {
    let limit = grid.half_width() - margin * s;
    (0..grid.len())
        .filter(|&i| grid.node(i).abs() <= limit)
        .collect()
}

fn source_term(spec: &ModelSpec, grid: &Grid, f_star: &SampledFunction) -> Result<SampledFunction> {
    if f_star.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if f_star.n_comp() != spec.n() {
        return Err(Error::ComponentMismatch {
            expected: spec.n(),
            got: f_star.n_comp(),
        });
    }
    let a_grid = spec.asymptotics_on_grid(grid);
    let f_grid = f_star.real_values();
    let mut g = Vec::new();
    model::apply_lc_grid(spec.coupling(), spec.gauge(), &a_grid, &f_grid, &mut g);
    SampledFunction::from_real(grid.clone(), spec.n(), &g)
}

/// Continuation of a solution to the line `Im z = y` strictly inside the
/// strip, via `f(x + iy) = (Phi_C^{[y]} * L_C[f_star])(x)`.
pub fn evaluate_strip(
    spec: &ModelSpec,
    grid: &Grid,
    f_star: &SampledFunction,
    y: f64,
) -> Result<StripSample> {
    let s = spec.s();
    let guard = STRIP_GUARD * s;
    if y.abs() > s - guard {
        return Err(Error::NearPole {
            dist: s - y.abs(),
            guard,
        });
    }
    let g = source_term(spec, grid, f_star)?;
    let k = kernel::build_kernel(spec.gauge(), s, spectral::DEFAULT_SPECTRAL_TOL)?;
    let out = model::convolve(&k, grid, &g, y)?;
    Ok(StripSample {
        x_nodes: grid.nodes().collect(),
        y_shift: y,
        values: out.values().to_vec(),
        n_comp: spec.n(),
    })
}

/// Principal-value convolution with the boundary kernel `Phi_C(. +- is)`
/// plus the jump term `g/2`. `g` must be real-valued axis data.
pub fn boundary_convolve(
    k: &KernelDecomp,
    grid: &Grid,
    g: &SampledFunction,
    sign: i32,
) -> Result<StripSample> {
    assert!(sign == 1 || sign == -1, "sign must be +-1");
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
    let m = grid.len();
    let h = grid.spacing();
    let s = k.s();
    let spectral_data = k.spectral();
    let (t, tinv) = (&spectral_data.right_eigenvectors, &spectral_data.inverse);

    // eigenbasis transform (real data in, real channels out)
    let g_real = g.real_values();
    let mut gt = vec![0.0; n * m];
    for j in 0..m {
        for ch in 0..n {
            let mut acc = 0.0;
            for comp in 0..n {
                acc += tinv[(ch, comp)] * g_real[j * n + comp];
            }
            gt[ch * m + j] = acc;
        }
    }

    let mut outt = vec![Complex64::new(0.0, 0.0); n * m];
    for (ch, params) in k.scalar_params().iter().enumerate() {
        // table of phi_d(mh + is), m >= 0; the other three quadrants follow
        // from phi(-u + is) = conj(phi(u + is)) and phi(u - is) = conj(phi(u + is))
        let scale = params
            .eval_unchecked(Complex64::new(0.0, 0.9 * s))
            .norm()
            .max(1e-300);
        let cutoff = 1e-22 * scale;
        let cap = 16 * m;
        let mut table: Vec<Complex64> = Vec::with_capacity(m + 64);
        // m = 0 entry is never used in the punctured sum; store the regular
        // part value there to keep indexing simple
        table.push(Complex64::new(params.boundary_regular_part(), 0.0));
        let mut off = 1usize;
        loop {
            let v = params.eval_unchecked(Complex64::new(off as f64 * h, s));
            table.push(v);
            off += 1;
            if off >= m && (v.norm() < cutoff || off >= cap) {
                break;
            }
        }
        // suffix sums of the m >= 1 tail: ts[k] = h sum_{m >= k} table[m]
        let mut ts = vec![Complex64::new(0.0, 0.0); table.len() + 1];
        for idx in (1..table.len()).rev() {
            ts[idx] = ts[idx + 1] + h * table[idx];
        }

        // on the +is line the kernel at positive offsets is the table value;
        // on the -is line it is the conjugate
        let conj_pos = sign == -1;
        let rho = params.residue(sign as i64);
        let r0 = params.boundary_regular_part();
        let gch = &gt[ch * m..(ch + 1) * m];
        let (g_left, g_right) = (gch[0], gch[m - 1]);
        for i in 0..m {
            let mut pos_acc = 0.0f64; // sum over j < i (positive offsets), real g
            let mut pos_im = 0.0f64;
            let mut neg_acc = 0.0f64; // sum over j > i (negative offsets)
            let mut neg_im = 0.0f64;
            for (gj, v) in gch[..i].iter().rev().zip(&table[1..=i]) {
                pos_acc += gj * v.re;
                pos_im += gj * v.im;
            }
            for (gj, v) in gch[i + 1..].iter().zip(&table[1..m - i]) {
                neg_acc += gj * v.re;
                neg_im += gj * v.im;
            }
            // positive offsets carry table (or conj); negative offsets the other
            let pos = if conj_pos {
                Complex64::new(pos_acc, -pos_im)
            } else {
                Complex64::new(pos_acc, pos_im)
            };
            let neg = if conj_pos {
                Complex64::new(neg_acc, neg_im)
            } else {
                Complex64::new(neg_acc, -neg_im)
            };
            let mut acc = (pos + neg) * h;
            // edge-extension tails
            let tail_pos = ts.get(i + 1).copied().unwrap_or_default();
            let tail_neg = ts.get(m - i).copied().unwrap_or_default();
            acc += g_left * if conj_pos { tail_pos.conj() } else { tail_pos };
            acc += g_right * if conj_pos { tail_neg } else { tail_neg.conj() };
            // lattice corrections at the singular node: regular part value
            // and the discrete-Hilbert derivative term
            acc += h * r0 * gch[i];
            let dg = if i == 0 {
                (gch[1] - gch[0]) / h
            } else if i == m - 1 {
                (gch[m - 1] - gch[m - 2]) / h
            } else {
                (gch[i + 1] - gch[i - 1]) / (2.0 * h)
            };
            acc -= rho * h * dg;
            outt[ch * m + i] = acc;
        }
    }

    // back to components, plus the jump term g/2
    let mut values = vec![Complex64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for comp in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for ch in 0..n {
                acc += outt[ch * m + i] * t[(comp, ch)];
            }
            values[i * n + comp] = acc + 0.5 * g_real[i * n + comp];
        }
    }
    Ok(StripSample {
        x_nodes: grid.nodes().collect(),
        y_shift: sign as f64 * s,
        values,
        n_comp: n,
    })
}

/// Boundary value `f(x +- is)` of a converged solution.
pub fn boundary_value(
    spec: &ModelSpec,
    grid: &Grid,
    f_star: &SampledFunction,
    sign: i32,
) -> Result<StripSample> {
    let op = TbaOperator::new(spec, grid)?;
    let residual = op.residual(f_star)?;
    if residual > BOUNDARY_RESIDUAL_THRESHOLD {
        return Err(Error::NotConverged {
            residual,
            threshold: BOUNDARY_RESIDUAL_THRESHOLD,
        });
    }
    let g = source_term(spec, grid, f_star)?;
    let k = kernel::build_kernel(spec.gauge(), spec.s(), spectral::DEFAULT_SPECTRAL_TOL)?;
    boundary_convolve(&k, grid, &g, sign)
}

/// Boundary value via Richardson extrapolation of strip evaluations at
/// `y = +-(s - eps)` over a list of decreasing eps. Independent oracle for
/// [`boundary_value`].
pub fn epsilon_extrapolated_boundary(
    spec: &ModelSpec,
    grid: &Grid,
    f_star: &SampledFunction,
    sign: i32,
    eps_list: &[f64],
) -> Result<StripSample> {
    assert!(sign == 1 || sign == -1, "sign must be +-1");
    if eps_list.is_empty() {
        return Err(Error::BadAsymptoticsParameter(
            "eps_list must not be empty".into(),
        ));
    }
    let s = spec.s();
    for &eps in eps_list {
        if eps < STRIP_GUARD * s {
            return Err(Error::NearPole {
                dist: eps,
                guard: STRIP_GUARD * s,
            });
        }
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadAsymptoticsParameter(
            "eps_list must be strictly decreasing".into(),
        ));
    }
    let samples: Vec<StripSample> = eps_list
        .iter()
        .map(|&eps| evaluate_strip(spec, grid, f_star, sign as f64 * (s - eps)))
        .collect::<Result<Vec<_>>>()?;
    let m = grid.len();
    let n = spec.n();
    let mut values = vec![Complex64::new(0.0, 0.0); m * n];
    let mut work = vec![Complex64::new(0.0, 0.0); eps_list.len()];
    for idx in 0..m * n {
        for (w, sample) in work.iter_mut().zip(&samples) {
            *w = sample.values[idx];
        }
        // Neville tableau evaluated at eps = 0
        let k = eps_list.len();
        for level in 1..k {
            for i in 0..k - level {
                let xi = eps_list[i];
                let xj = eps_list[i + level];
                work[i] = (xj * work[i] - xi * work[i + 1]) / (xj - xi);
            }
        }
        values[idx] = work[0];
    }
    Ok(StripSample {
        x_nodes: grid.nodes().collect(),
        y_shift: sign as f64 * s,
        values,
        n_comp: n,
    })
}

/// Y-functions `Y_n(z) = exp(a_n(z) + f_n(z))` on the line `Im z = y`.
///
/// On the boundary `|y| = s` the continuation uses [`boundary_value`].
pub fn build_y(
    spec: &ModelSpec,
    grid: &Grid,
    f_star: &SampledFunction,
    y: f64,
) -> Result<YFunctions> {
    let s = spec.s();
    let n = spec.n();
    let f_line: StripSample = if (y.abs() - s).abs() < 1e-14 * s {
        boundary_value(spec, grid, f_star, if y > 0.0 { 1 } else { -1 })?
    } else if y == 0.0 {
        StripSample {
            x_nodes: grid.nodes().collect(),
            y_shift: 0.0,
            values: f_star.values().to_vec(),
            n_comp: n,
        }
    } else {
        evaluate_strip(spec, grid, f_star, y)?
    };
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len() * n];
    for (i, x) in grid.nodes().enumerate() {
        let a = spec.asymptotics_at(Complex64::new(x, f_line.y_shift));
        for c in 0..n {
            values[i * n + c] = (a[c] + f_line.value(i, c)).exp();
        }
    }
    Ok(YFunctions {
        x_nodes: f_line.x_nodes,
        y_shift: f_line.y_shift,
        values,
        n_comp: n,
    })
}

/// Stable `log(1 + e^u)`.
fn softplus(u: f64) -> f64 {
    model::log_sum_exp(0.0, u)
}

/// Maximal Y-system defect over the interior band `|x| <= L - 5s`:
///
/// `max |log Y(x+is) + log Y(x-is) - G . log(1 + Y(x))|`
///
/// with the boundary logs built as `a(x +- is) + f(x +- is)`. Does not
/// require `f_star` to be converged, so it doubles as a negative control.
pub fn ysystem_residual(spec: &ModelSpec, grid: &Grid, f_star: &SampledFunction) -> Result<f64> {
    let s = spec.s();
    let n = spec.n();
    let g_term = source_term(spec, grid, f_star)?;
    let k = kernel::build_kernel(spec.gauge(), s, spectral::DEFAULT_SPECTRAL_TOL)?;
    let up = boundary_convolve(&k, grid, &g_term, 1)?;
    let dn = boundary_convolve(&k, grid, &g_term, -1)?;
    let band = interior_band(grid, s, 5.0);
    let gmat = spec.coupling();
    let mut worst = 0.0f64;
    for &i in &band {
        let x = grid.node(i);
        let a_up = spec.asymptotics_at(Complex64::new(x, s));
        let a_dn = spec.asymptotics_at(Complex64::new(x, -s));
        let a_mid = spec.asymptotics_at(Complex64::new(x, 0.0));
        // log(1 + Y_m(x)) on the positive real branch
        let log1py: Vec<f64> = (0..n)
            .map(|c| softplus(a_mid[c].re + f_star.value(i, c).re))
            .collect();
        for comp in 0..n {
            let lhs = a_up[comp] + up.value(i, comp) + a_dn[comp] + dn.value(i, comp);
            let mut rhs = 0.0;
            for mcomp in 0..n {
                rhs += gmat.get(comp, mcomp) * log1py[mcomp];
            }
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}
