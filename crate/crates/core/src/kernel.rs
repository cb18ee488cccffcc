//! Scalar and matrix Green's function kernels.
//!
//! The scalar kernel inverts the difference operator
//! `f(x+is) + f(x-is) - d f(x)` and has the closed form
//!
//! ```text
//! phi_d(z) = sinh((pi - gamma) z / s) / (2 s sin(gamma) sinh(pi z / s)),
//! d = 2 cos(gamma), gamma in (0, pi),
//! ```
//!
//! a meromorphic function with first-order poles on `i s Z \ {0}`. The
//! matrix kernel for a coupling matrix `C` diagonalises into scalar kernels
//! at the eigenvalues of `C`. An independent Fourier-integral evaluation is
//! kept alongside as a test oracle.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::spectral::{self, CouplingMatrix, SpectralData};

/// Guard band keeping `|d|` away from 2, where `1/sin(gamma)` blows up.
pub const D_GUARD: f64 = 1e-6;
/// Pole guard radius in units of `s`.
pub const POLE_GUARD: f64 = 1e-8;

/// Parameters of one scalar kernel.
#[derive(Clone, Copy, Debug)]
pub struct ScalarKernelParams {
    d: f64,
    s: f64,
    gamma: f64,
}

impl ScalarKernelParams {
    pub fn new(d: f64, s: f64) -> Result<Self> {
        if !d.is_finite() || d.abs() > 2.0 - D_GUARD {
            return Err(Error::DOutOfRange { d });
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::BadShiftParameter { s });
        }
        Ok(ScalarKernelParams {
            d,
            s,
            gamma: (d / 2.0).acos(),
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Distance from `z` to the nearest kernel pole `i s n`, n != 0.
    pub fn pole_distance(&self, z: Complex64) -> f64 {
        let s = self.s;
        let rn = (z.im / s).round() as i64;
        let mut best = f64::INFINITY;
        for n in [rn - 1, rn, rn + 1] {
            if n == 0 {
                continue;
            }
            let dist = f64::hypot(z.re, z.im - s * n as f64);
            best = best.min(dist);
        }
        best
    }

    /// Kernel value at `z`; `NearPole` within the guard distance of a pole.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let dist = self.pole_distance(z);
        let guard = POLE_GUARD * self.s;
        if dist < guard {
            return Err(Error::NearPole { dist, guard });
        }
        Ok(self.eval_unchecked(z))
    }

    /// Closed-form evaluation without the pole guard.
    ///
    /// Written as `e^{-gamma w/s} (1 - e^{-2 beta w}) / (2 s sin(gamma) (1 -
    /// e^{-2 pi w/s}))` with `w = +-z` chosen so `Re w >= 0`; this is
    /// algebraically identical to the sinh ratio but never overflows, and the
    /// removable singularity at z = 0 is handled by series expansion.
    pub(crate) fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let s = self.s;
        let gamma = self.gamma;
        let beta = (std::f64::consts::PI - gamma) / s;
        let w = if z.re < 0.0 { -z } else { z };
        let num = one_minus_exp_over(beta, w);
        let den = one_minus_exp_over(std::f64::consts::PI / s, w);
        let pref = (-gamma / s * w).exp() / (2.0 * s * gamma.sin());
        pref * num / den
    }

    /// Residue of the kernel at the pole `i s n`.
    pub fn residue(&self, n: i64) -> Complex64 {
        let ratio = (n as f64 * self.gamma).sin() / self.gamma.sin();
        ratio / (2.0 * std::f64::consts::PI * Complex64::i())
    }

    /// Value at 0 of the regular part `phi_d(u + is) - 1/(2 pi i u)`.
    ///
    /// Needed by the principal-value boundary scheme; the same (real) value
    /// serves both boundary signs.
    pub fn boundary_regular_part(&self) -> f64 {
        let gamma = self.gamma;
        (std::f64::consts::PI - gamma) * gamma.cos()
            / (2.0 * std::f64::consts::PI * self.s * gamma.sin())
    }
}

/// `(1 - exp(-2 a w)) / w`, stable for small `|w|` (limit `2a`).
fn one_minus_exp_over(a: f64, w: Complex64) -> Complex64 {
    let u = 2.0 * a * w;
    if u.norm() < 1e-4 {
        // 2a (1 - u/2 + u^2/6 - u^3/24 + u^4/120)
        let c = Complex64::new(1.0, 0.0) - u / 2.0 + u * u / 6.0 - u * u * u / 24.0
            + u * u * u * u / 120.0;
        2.0 * a * c
    } else {
        (Complex64::new(1.0, 0.0) - (-u).exp()) / w
    }
}

/// Scalar kernel (guarded closed form).
pub fn phi_d(params: &ScalarKernelParams, z: Complex64) -> Result<Complex64> {
    params.eval(z)
}

/// Independent Fourier-integral evaluation of the scalar kernel on the real
/// axis: trapezoid approximation of
/// `(1/2pi) Int e^{ikx} / (2 cosh(sk) - d) dk` over `[-k_max, k_max]`.
///
/// Test oracle only; callers pick `k_max` so the integrand tail is below
/// their accuracy target.
pub fn phi_d_fourier_oracle(d: f64, s: f64, x: f64, k_max: f64, n_k: usize) -> f64 {
    assert!(
        n_k >= 2 && k_max > 0.0,
        "oracle needs a real quadrature range"
    );
    let dk = 2.0 * k_max / (n_k - 1) as f64;
    let mut sum = 0.0;
    for i in 0..n_k {
        let k = -k_max + i as f64 * dk;
        let w = if i == 0 || i == n_k - 1 { 0.5 } else { 1.0 };
        sum += w * (k * x).cos() / (2.0 * (s * k).cosh() - d);
    }
    sum * dk / (2.0 * std::f64::consts::PI)
}

/// Closed form of the Fourier transform of `cosh(x)^{-m}`:
///
/// ```text
/// pi/(m-1)! * prod_{l = m-2, m-4, ..., 1} (k^2 + l^2)
///           * { 1/cosh(pi k/2)   m odd
///             { k/sinh(pi k/2)   m even
/// ```
///
/// with the k -> 0 limit `k/sinh(pi k/2) -> 2/pi` taken analytically.
pub fn cosh_power_fourier(m: usize, k: f64) -> f64 {
    assert!(m >= 1, "m must be a positive integer");
    let pi = std::f64::consts::PI;
    let mut fact = 1.0;
    for i in 2..m {
        fact *= i as f64;
    }
    let mut prod = 1.0;
    let mut l = m as i64 - 2;
    while l >= 1 {
        prod *= k * k + (l * l) as f64;
        l -= 2;
    }
    let shape = if m % 2 == 1 {
        1.0 / (pi * k / 2.0).cosh()
    } else {
        let u = pi * k / 2.0;
        if u.abs() < 1e-7 {
            (2.0 / pi) * (1.0 - u * u / 6.0)
        } else {
            k / u.sinh()
        }
    };
    pi / fact * prod * shape
}

/// Eigendecomposition of a coupling matrix together with the scalar kernels
/// at its eigenvalues. Immutable after construction.
#[derive(Clone, Debug)]
pub struct KernelDecomp {
    spectral: SpectralData,
    s: f64,
    scalar_params: Vec<ScalarKernelParams>,
}

/// Builds the matrix kernel decomposition for gauge matrix `C`.
pub fn build_kernel(c: &CouplingMatrix, s: f64, tol: f64) -> Result<KernelDecomp> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::BadShiftParameter { s });
    }
    let spectral = spectral::check_mat_lt2(c, tol)?;
    let scalar_params = spectral
        .eigenvalues
        .iter()
        .map(|&d| ScalarKernelParams::new(d, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelDecomp {
        spectral,
        s,
        scalar_params,
    })
}

impl KernelDecomp {
    pub fn n(&self) -> usize {
        self.spectral.eigenvalues.len()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn scalar_params(&self) -> &[ScalarKernelParams] {
        &self.scalar_params
    }

    /// Distance from `z` to the nearest pole of any scalar component.
    pub fn pole_distance(&self, z: Complex64) -> f64 {
        // all components share the pole lattice i s Z
        self.scalar_params[0].pole_distance(z)
    }

    /// Scalar kernel values `phi_{d_j}(z)` in eigenvalue order.
    pub fn scalar_values(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.scalar_params.iter().map(|p| p.eval(z)).collect()
    }

    /// Matrix kernel `Phi_C(z) = T diag(phi_{d_j}(z)) T^{-1}`, row-major.
    pub fn phi_matrix(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let phis = self.scalar_values(z)?;
        Ok(self.combine(&phis))
    }

    /// Recombines per-eigenvalue scalars into the matrix entries.
    pub(crate) fn combine(&self, phis: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let t = &self.spectral.right_eigenvectors;
        let tinv = &self.spectral.inverse;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += phis[k] * (t[(i, k)] * tinv[(k, j)]);
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    /// Total integral of the matrix kernel over the real line,
    /// `(2 I - C)^{-1}`, computed from the decomposition.
    pub fn total_integral(&self) -> Matrix {
        let n = self.n();
        let t = &self.spectral.right_eigenvectors;
        let tinv = &self.spectral.inverse;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += t[(i, k)] * tinv[(k, j)] / (2.0 - self.spectral.eigenvalues[k]);
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

/// Total integral as a free function, mirroring the per-operation surface.
pub fn kernel_total_integral(k: &KernelDecomp) -> Matrix {
    k.total_integral()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dynkin_adjacency, DynkinFamily};
    use std::f64::consts::PI;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn phi_zero_matches_sech_form() {
        for s in [0.5, 1.0, 2.0] {
            let p = ScalarKernelParams::new(0.0, s).unwrap();
            for z in [
                c64(0.0, 0.0),
                c64(1.3, 0.2),
                c64(-4.0, -0.7 * s),
                c64(0.2, 0.9 * s),
            ] {
                let expect = 1.0 / (4.0 * s * (PI / (2.0 * s) * z).cosh());
                let got = p.eval(z).unwrap();
                assert!((got - expect).norm() < 1e-13, "s={s} z={z} {got} {expect}");
            }
        }
    }

    #[test]
    fn phi_values_at_origin() {
        let p0 = ScalarKernelParams::new(0.0, 1.0).unwrap();
        assert!((p0.eval(c64(0.0, 0.0)).unwrap().re - 0.25).abs() < 1e-14);
        let p1 = ScalarKernelParams::new(1.0, 1.0).unwrap();
        let expect = 2.0 / (3.0 * 3.0f64.sqrt());
        assert!((p1.eval(c64(0.0, 0.0)).unwrap().re - expect).abs() < 1e-14);
    }

    #[test]
    fn phi_even_and_real_on_axis() {
        let p = ScalarKernelParams::new(0.7, 1.0).unwrap();
        for x in [0.1, 1.7, 8.3, 50.0, 200.0] {
            let a = p.eval(c64(x, 0.0)).unwrap();
            let b = p.eval(c64(-x, 0.0)).unwrap();
            assert!((a - b).norm() < 1e-15 * a.norm().max(1e-300));
            assert!(a.im.abs() < 1e-15);
            assert!(a.re > 0.0);
        }
    }

    #[test]
    fn functional_relation_random_points() {
        let mut state = 0x5eed_1234u64;
        let s = 1.0;
        for _ in 0..1000 {
            let d = -1.95 + 3.9 * splitmix(&mut state);
            let mut x = -10.0 + 20.0 * splitmix(&mut state);
            if x.abs() < 1e-2 {
                x += 0.05;
            }
            let p = ScalarKernelParams::new(d, s).unwrap();
            let r = p.eval(c64(x, s)).unwrap() + p.eval(c64(x, -s)).unwrap()
                - d * p.eval(c64(x, 0.0)).unwrap();
            assert!(r.norm() < 1e-11, "d={d} x={x} residual={}", r.norm());
        }
    }

    #[test]
    fn recursion_relation() {
        let p = ScalarKernelParams::new(0.7, 1.0).unwrap();
        let gamma = p.gamma();
        let z = c64(1.3, 0.35);
        let p1 = p.eval(z + c64(0.0, 1.0)).unwrap();
        let p0 = p.eval(z).unwrap();
        for n in -3i64..=3 {
            let got = p.eval(z + c64(0.0, n as f64)).unwrap();
            let expect = (n as f64 * gamma).sin() / gamma.sin() * p1
                - ((n - 1) as f64 * gamma).sin() / gamma.sin() * p0;
            assert!(
                (got - expect).norm() < 1e-10 * got.norm().max(1.0),
                "n={n}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn near_pole_rejected() {
        let p = ScalarKernelParams::new(0.5, 1.0).unwrap();
        assert!(matches!(p.eval(c64(0.0, 1.0)), Err(Error::NearPole { .. })));
        assert!(matches!(
            p.eval(c64(1e-10, 2.0 + 1e-10)),
            Err(Error::NearPole { .. })
        ));
        // z = 0 is not a pole
        assert!(p.eval(c64(0.0, 0.0)).is_ok());
    }

    #[test]
    fn d_guard_band() {
        assert!(ScalarKernelParams::new(2.0 - 1e-7, 1.0).is_err());
        assert!(ScalarKernelParams::new(-2.0, 1.0).is_err());
        assert!(ScalarKernelParams::new(1.999, 1.0).is_ok());
    }

    #[test]
    fn fourier_oracle_spot_checks() {
        for (d, x) in [(0.0, 0.0), (1.0, 0.0), (-1.5, 2.0), (0.5, 1.3)] {
            let p = ScalarKernelParams::new(d, 1.0).unwrap();
            let oracle = phi_d_fourier_oracle(d, 1.0, x, 40.0, 4097);
            let closed = p.eval(c64(x, 0.0)).unwrap().re;
            assert!(
                (oracle - closed).abs() < 1e-10,
                "d={d} x={x}: {oracle} vs {closed}"
            );
        }
    }

    #[test]
    fn cosh_transform_values() {
        assert!((cosh_power_fourier(1, 0.0) - PI).abs() < 1e-14);
        assert!((cosh_power_fourier(2, 0.0) - 2.0).abs() < 1e-14);
        assert!((cosh_power_fourier(3, 0.0) - PI / 2.0).abs() < 1e-14);
        assert!((cosh_power_fourier(4, 0.0) - 4.0 / 3.0).abs() < 1e-14);
        // continuity of the even branch through k = 0
        let eps = 1e-8;
        let a = cosh_power_fourier(2, eps);
        let b = cosh_power_fourier(2, 2e-7);
        assert!((a - 2.0).abs() < 1e-12);
        assert!((b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn residue_contour_integral() {
        let p = ScalarKernelParams::new(0.5, 1.0).unwrap();
        let gamma = p.gamma();
        for n in 1i64..=2 {
            let nodes = 2048;
            let r = 0.25;
            let mut acc = c64(0.0, 0.0);
            for k in 0..nodes {
                let th = 2.0 * PI * k as f64 / nodes as f64;
                let e = c64(th.cos(), th.sin());
                let z = c64(0.0, n as f64) + r * e;
                acc += p.eval(z).unwrap() * c64(0.0, r) * e;
            }
            acc *= 2.0 * PI / nodes as f64;
            let expect = (n as f64 * gamma).sin() / gamma.sin();
            assert!(
                (acc - c64(expect, 0.0)).norm() < 1e-9,
                "n={n}: {acc} vs {expect}"
            );
        }
    }

    #[test]
    fn build_kernel_diagonal_case() {
        let c = CouplingMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, -0.5]]).unwrap();
        let k = build_kernel(&c, 1.0, 1e-9).unwrap();
        let ds: Vec<f64> = k.scalar_params().iter().map(|p| p.d()).collect();
        assert!((ds[0] - 0.5).abs() < 1e-12);
        assert!((ds[1] + 0.5).abs() < 1e-12);
        let m = k.phi_matrix(c64(0.3, 0.0)).unwrap();
        let p_plus = ScalarKernelParams::new(0.5, 1.0).unwrap();
        let p_minus = ScalarKernelParams::new(-0.5, 1.0).unwrap();
        assert!((m[0] - p_plus.eval(c64(0.3, 0.0)).unwrap()).norm() < 1e-13);
        assert!((m[3] - p_minus.eval(c64(0.3, 0.0)).unwrap()).norm() < 1e-13);
        assert!(m[1].norm() < 1e-13);
        assert!(m[2].norm() < 1e-13);
    }

    #[test]
    fn phi_matrix_a2_combination() {
        let a2 = dynkin_adjacency(DynkinFamily::A, 2).unwrap();
        let k = build_kernel(&a2, 1.0, 1e-9).unwrap();
        let z = c64(0.8, 0.0);
        let m = k.phi_matrix(z).unwrap();
        let p_plus = ScalarKernelParams::new(1.0, 1.0).unwrap().eval(z).unwrap();
        let p_minus = ScalarKernelParams::new(-1.0, 1.0).unwrap().eval(z).unwrap();
        assert!((m[0] - (p_plus + p_minus) / 2.0).norm() < 1e-13);
        assert!((m[1] - (p_plus - p_minus) / 2.0).norm() < 1e-13);
        // strictly positive entries on the real axis
        for entry in &m {
            assert!(entry.re > 0.0);
            assert!(entry.im.abs() < 1e-13);
        }
    }

    #[test]
    fn phi_matrix_even_in_z() {
        let a2 = dynkin_adjacency(DynkinFamily::A, 2).unwrap();
        let k = build_kernel(&a2, 1.0, 1e-9).unwrap();
        for x in [0.4, 1.9, 6.2] {
            let plus = k.phi_matrix(c64(x, 0.0)).unwrap();
            let minus = k.phi_matrix(c64(-x, 0.0)).unwrap();
            for (a, b) in plus.iter().zip(&minus) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn phi_matrix_zero_matrix() {
        let c = CouplingMatrix::zeros(3);
        let k = build_kernel(&c, 1.0, 1e-9).unwrap();
        let m = k.phi_matrix(c64(0.0, 0.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.25 } else { 0.0 };
                assert!((m[i * 3 + j] - c64(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn total_integral_values() {
        let c0 = CouplingMatrix::from_rows(&[vec![0.0]]).unwrap();
        let k0 = build_kernel(&c0, 1.0, 1e-9).unwrap();
        assert!((k0.total_integral()[(0, 0)] - 0.5).abs() < 1e-14);

        let c1 = CouplingMatrix::from_rows(&[vec![1.0]]).unwrap();
        let k1 = build_kernel(&c1, 1.0, 1e-9).unwrap();
        assert!((k1.total_integral()[(0, 0)] - 1.0).abs() < 1e-14);

        let a2 = dynkin_adjacency(DynkinFamily::A, 2).unwrap();
        let k2 = build_kernel(&a2, 1.0, 1e-9).unwrap();
        let ti = k2.total_integral();
        assert!((ti[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((ti[(0, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((ti[(1, 0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((ti[(1, 1)] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn residue_helper_value() {
        let p = ScalarKernelParams::new(1.2, 1.0).unwrap();
        let gamma = p.gamma();
        let r1 = p.residue(1);
        let expect = 1.0 / (2.0 * PI) * ((gamma).sin() / gamma.sin());
        assert!((r1 - c64(0.0, -expect)).norm() < 1e-15);
    }
}
