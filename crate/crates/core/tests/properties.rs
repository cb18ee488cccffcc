//! Cross-module properties: series representations, distributional limits
//! and randomized invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use tba_core::kernel::{self, cosh_power_fourier, ScalarKernelParams};
use tba_core::linalg;
use tba_core::model::{self, make_grid, AsymptoticsSpec, ModelSpec};
use tba_core::spectral::{self, CouplingMatrix};

/// Terms of the Neumann series for the scalar kernel at coupling c:
/// `phi_c(x) = sum_j c^j (1/2pi) Int e^{ikx} (2 cosh(sk))^{-j-1} dk`,
/// with each integral evaluated by the closed-form transform of
/// `cosh^{-m}`.
fn neumann_partial_sum(c: f64, s: f64, x: f64, terms: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..=terms {
        let integral = cosh_power_fourier(j + 1, x / s) / (2.0f64.powi(j as i32 + 1) * s);
        acc += c.powi(j as i32) * integral / (2.0 * std::f64::consts::PI);
    }
    acc
}

#[test]
fn neumann_series_converges_to_kernel() {
    let s = 1.0;
    for c in [0.5, 1.0] {
        let params = ScalarKernelParams::new(c, s).unwrap();
        let phi0_at_zero = 1.0 / (4.0 * s);
        for x in [0.0, 1.0, 2.5] {
            let exact = params.eval(Complex64::new(x, 0.0)).unwrap().re;
            let mut prev_err = f64::INFINITY;
            for terms in [5usize, 10, 20, 40] {
                let approx = neumann_partial_sum(c, s, x, terms);
                let err = (approx - exact).abs();
                let bound = (c / 2.0).powi(terms as i32 + 1) / (1.0 - c / 2.0) * phi0_at_zero;
                assert!(
                    err <= bound + 1e-13,
                    "c={c} x={x} terms={terms}: err {err} > bound {bound}"
                );
                assert!(err <= prev_err + 1e-13);
                prev_err = err;
            }
        }
    }
}

#[test]
fn delta_representation_smoke_test() {
    // Int [phi(x+iy) + phi(x-iy) - d phi(x)] g(x) dx -> g(0) as y -> s
    let s = 1.0;
    let d = 0.7;
    let params = ScalarKernelParams::new(d, s).unwrap();
    let y = s - 1e-3;
    let h = 2e-4;
    let half = 20.0;
    let n = (2.0 * half / h) as usize + 1;
    let mut acc = 0.0;
    for i in 0..n {
        let x = -half + i as f64 * h;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let kernel_sum = params.eval(Complex64::new(x, y)).unwrap()
            + params.eval(Complex64::new(x, -y)).unwrap()
            - d * params.eval(Complex64::new(x, 0.0)).unwrap();
        let g = (-x * x / 2.0).exp();
        acc += w * h * kernel_sum.re * g;
    }
    assert!((acc - 1.0).abs() < 1e-2, "delta limit off: {acc}");
}

#[test]
fn asymptotics_families_satisfy_difference_equation() {
    // every constructible asymptotics obeys a(x+is) + a(x-is) = G a(x)
    let a2 = spectral::dynkin_adjacency(spectral::DynkinFamily::A, 2).unwrap();
    let pf = spectral::perron_frobenius(&a2, 1e-13, 100_000).unwrap();
    let gamma = (pf.lambda_pf / 2.0).acos();
    let s = 1.3;
    let grid = make_grid(8.0, 161).unwrap();
    let specs = vec![
        AsymptoticsSpec::MassCosh {
            r: 0.7,
            gamma,
            w: pf.w.clone(),
        },
        AsymptoticsSpec::ExpPlus {
            r: 1.1,
            gamma,
            w: pf.w.clone(),
        },
        AsymptoticsSpec::ExpMinus {
            r: 0.4,
            gamma,
            w: pf.w.clone(),
        },
        AsymptoticsSpec::Sum(vec![
            AsymptoticsSpec::ExpPlus {
                r: 0.3,
                gamma,
                w: pf.w.clone(),
            },
            AsymptoticsSpec::ExpMinus {
                r: 0.9,
                gamma,
                w: pf.w.clone(),
            },
        ]),
    ];
    for spec in specs {
        spec.validate(&a2).unwrap();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for x in grid.nodes() {
            let up = spec.eval(2, s, Complex64::new(x, s));
            let dn = spec.eval(2, s, Complex64::new(x, -s));
            let mid: Vec<f64> = spec
                .eval(2, s, Complex64::new(x, 0.0))
                .iter()
                .map(|v| v.re)
                .collect();
            let gmid = a2.mul_vec(&mid);
            for c in 0..2 {
                worst = worst.max((up[c] + dn[c] - gmid[c]).norm());
                scale = scale.max(mid[c].abs());
            }
        }
        assert!(
            worst < 1e-10 * scale.max(1.0),
            "residual {worst} at scale {scale}"
        );
    }
}

#[test]
fn total_integral_matches_direct_inverse() {
    // two routes to Int Phi_C: eigendecomposition vs direct LU inverse
    let cases = vec![
        vec![vec![0.3, 0.4], vec![0.2, 0.1]],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![
            vec![0.1, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.1],
        ],
    ];
    for rows in cases {
        let c = CouplingMatrix::from_rows(&rows).unwrap();
        let k = kernel::build_kernel(&c, 1.0, 1e-9).unwrap();
        let via_eigen = k.total_integral();
        let n = c.n();
        let mut two_minus = linalg::Matrix::identity(n).scaled(2.0);
        for i in 0..n {
            for j in 0..n {
                two_minus[(i, j)] -= c.get(i, j);
            }
        }
        let direct = linalg::invert(&two_minus).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (via_eigen[(i, j)] - direct[(i, j)]).abs() < 1e-12,
                    "entry ({i},{j})"
                );
            }
        }
    }
}

#[test]
fn convolve_near_guard_shift_stays_finite() {
    // shifts just inside the pole guard must produce finite values (the
    // kernel peaks like 1/(2 pi (s - |y|)) but stays regular)
    let c = CouplingMatrix::from_rows(&[vec![0.5]]).unwrap();
    let k = kernel::build_kernel(&c, 1.0, 1e-9).unwrap();
    let grid = make_grid(10.0, 513).unwrap();
    let vals: Vec<f64> = grid.nodes().map(|x| (-x * x / 2.0).exp()).collect();
    let g = model::SampledFunction::from_real(grid.clone(), 1, &vals).unwrap();
    let out = model::convolve(&k, &grid, &g, 0.999).unwrap();
    for i in 0..grid.len() {
        assert!(out.value(i, 0).norm().is_finite());
    }
}

#[test]
fn exp_minus_asymptotics_solve() {
    // mirror of the exp-plus case: constant at +infinity, zero at -infinity
    let g = CouplingMatrix::from_rows(&[vec![1.0]]).unwrap();
    let c = g.scaled(0.5);
    let spec = ModelSpec::new(
        1.0,
        g,
        c,
        AsymptoticsSpec::ExpMinus {
            r: 1.0,
            gamma: std::f64::consts::PI / 3.0,
            w: vec![1.0],
        },
    )
    .unwrap();
    let grid = make_grid(20.0, 1025).unwrap();
    let (f, report) = tba_core::solver::solve_tba(&spec, &grid, &Default::default()).unwrap();
    assert!(report.converged);
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    assert!((f.value(grid.len() - 1, 0).re - golden.ln()).abs() < 1e-6);
    assert!(f.value(0, 0).re.abs() < 1e-6);
}

#[test]
fn exp_plus_asymptotics_solve() {
    // one-sided exponential asymptotics: solution interpolates between the
    // a = 0 constant at -infinity and 0 at +infinity
    let g = CouplingMatrix::from_rows(&[vec![1.0]]).unwrap();
    let c = g.scaled(0.5);
    let spec = ModelSpec::new(
        1.0,
        g,
        c,
        AsymptoticsSpec::ExpPlus {
            r: 1.0,
            gamma: std::f64::consts::PI / 3.0,
            w: vec![1.0],
        },
    )
    .unwrap();
    let grid = make_grid(20.0, 1025).unwrap();
    let (f, report) = tba_core::solver::solve_tba(&spec, &grid, &Default::default()).unwrap();
    assert!(report.converged);
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let left = f.value(0, 0).re;
    let right = f.value(grid.len() - 1, 0).re;
    assert!((left - golden.ln()).abs() < 1e-6, "left end {left}");
    assert!(right.abs() < 1e-6, "right end {right}");
}

#[test]
fn nonsymmetric_with_repeated_eigenvalue_diagonalizes() {
    // similarity transform of diag(0.5, 0.5, -0.3): non-symmetric,
    // diagonalizable, with a repeated eigenvalue
    let t = linalg::Matrix::from_rows(&[
        vec![1.0, 0.4, -0.2],
        vec![0.0, 1.0, 0.7],
        vec![0.3, -0.1, 1.0],
    ])
    .unwrap();
    let tinv = linalg::invert(&t).unwrap();
    let mut diag = linalg::Matrix::zeros(3);
    diag[(0, 0)] = 0.5;
    diag[(1, 1)] = 0.5;
    diag[(2, 2)] = -0.3;
    let m = t.mul_mat(&diag).mul_mat(&tinv);
    let rows: Vec<Vec<f64>> = (0..3).map(|i| m.row(i).to_vec()).collect();
    let c = CouplingMatrix::from_rows(&rows).unwrap();
    let sd = spectral::check_mat_lt2(&c, 1e-9).unwrap();
    let mut eigs = sd.eigenvalues.clone();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((eigs[0] + 0.3).abs() < 1e-8);
    assert!((eigs[1] - 0.5).abs() < 1e-8);
    assert!((eigs[2] - 0.5).abs() < 1e-8);
    // the decomposition must reproduce the matrix
    let n = 3;
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += sd.right_eigenvectors[(i, k)] * sd.eigenvalues[k] * sd.inverse[(k, j)];
            }
            assert!((acc - c.get(i, j)).abs() < 1e-7, "entry ({i},{j})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_similarity_diagonalizable_recovered(
        d1 in -1.8f64..1.8,
        gap in 0.05f64..1.0,
        skew in -0.8f64..0.8,
    ) {
        // M = T diag(d1, d2) T^{-1} with a shear: non-symmetric but
        // diagonalizable with real spectrum
        let d2 = if d1 + gap < 1.9 { d1 + gap } else { d1 - gap };
        let t = linalg::Matrix::from_rows(&[vec![1.0, skew], vec![0.2 * skew, 1.0]]).unwrap();
        let tinv = linalg::invert(&t).unwrap();
        let mut diag = linalg::Matrix::zeros(2);
        diag[(0, 0)] = d1;
        diag[(1, 1)] = d2;
        let m = t.mul_mat(&diag).mul_mat(&tinv);
        let rows: Vec<Vec<f64>> = (0..2).map(|i| m.row(i).to_vec()).collect();
        let c = CouplingMatrix::from_rows(&rows).unwrap();
        let sd = spectral::check_mat_lt2(&c, 1e-9).unwrap();
        let mut eigs = sd.eigenvalues.clone();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = [d1, d2];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert!((eigs[0] - want[0]).abs() < 1e-9);
        prop_assert!((eigs[1] - want[1]).abs() < 1e-9);
    }

    #[test]
    fn phi_even_positive_decreasing(
        d in -1.95f64..1.95,
        x in 0.01f64..12.0,
        s in 0.5f64..2.0,
    ) {
        let p = ScalarKernelParams::new(d, s).unwrap();
        let at = |v: f64| p.eval(Complex64::new(v, 0.0)).unwrap();
        let plus = at(x);
        let minus = at(-x);
        prop_assert!(plus.im.abs() < 1e-16);
        prop_assert!((plus - minus).norm() <= 1e-14 * plus.norm());
        prop_assert!(plus.re > 0.0);
        // monotone decay away from the origin on the axis
        prop_assert!(at(0.0).re >= plus.re);
    }

    #[test]
    fn convolve_is_linear(
        scale in 0.1f64..4.0,
        shift in -0.7f64..0.7,
    ) {
        let c = CouplingMatrix::from_rows(&[vec![0.5]]).unwrap();
        let k = kernel::build_kernel(&c, 1.0, 1e-9).unwrap();
        let grid = make_grid(8.0, 129).unwrap();
        let base: Vec<f64> = grid.nodes().map(|x| (-x * x / 3.0).exp()).collect();
        let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
        let g1 = model::SampledFunction::from_real(grid.clone(), 1, &base).unwrap();
        let g2 = model::SampledFunction::from_real(grid.clone(), 1, &scaled).unwrap();
        let o1 = model::convolve(&k, &grid, &g1, shift).unwrap();
        let o2 = model::convolve(&k, &grid, &g2, shift).unwrap();
        for i in 0..grid.len() {
            let lhs = o2.value(i, 0);
            let rhs = o1.value(i, 0) * scale;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn irreducibility_permutation_invariant(perm_seed in 0u64..1000) {
        // random simultaneous row/column permutation of a fixed pattern
        let base = CouplingMatrix::from_rows(&[
            vec![0.0, 1.5, 0.0, 0.0],
            vec![0.0, 0.0, 2.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.5],
            vec![1.0, 0.0, 0.0, 0.0],
        ]).unwrap();
        let n = 4;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = perm_seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let j = (state % (i as u64 + 1)) as usize;
            perm.swap(i, j);
        }
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                rows[i][j] = base.get(perm[i], perm[j]);
            }
        }
        let permuted = CouplingMatrix::from_rows(&rows).unwrap();
        prop_assert_eq!(
            spectral::is_irreducible(&base).unwrap(),
            spectral::is_irreducible(&permuted).unwrap()
        );
    }
}
