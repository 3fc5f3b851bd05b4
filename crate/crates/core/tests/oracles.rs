//! Independent oracles for the spectral operators and the time integrator.

mod support;

use approx::assert_abs_diff_eq;
use qg_core::spectral::Fft2;
use qg_core::{
    chi_norm, exact_decay_reference, forward_transform, nonlinear_term, Complex64, Grid,
    Integrator, SimParams, SimState, SpectralField,
};
use support::{convolution_oracle, random_hermitian, two_mode_benchmark};

#[test]
fn nonlinear_term_matches_convolution_oracle() {
    let grid = Grid::periodic(16).unwrap();
    for seed in 0..20 {
        let theta = random_hermitian(grid, seed, true);
        let fast = nonlinear_term(&theta, false).unwrap();
        let slow = convolution_oracle(&theta);
        let err = fast
            .coeffs()
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "seed {seed}: {err:e}");
    }
}

#[test]
fn nonlinear_term_closed_form_case() {
    let grid = Grid::periodic(16).unwrap();
    let h = grid.spacing();
    let samples: Vec<f64> = (0..grid.len())
        .map(|i| ((i / 16) as f64 * h).cos() + (2.0 * (i % 16) as f64 * h).cos())
        .collect();
    let theta = forward_transform(&samples, grid).unwrap();
    // sin x₁ sin 2x₂ = ¼[cos(x₁−2x₂) − cos(x₁+2x₂)]
    let mut want = SpectralField::zeros(grid);
    want.set_mode_pair(1, -2, Complex64::new(0.25, 0.0)).unwrap();
    want.set_mode_pair(1, 2, Complex64::new(-0.25, 0.0)).unwrap();
    for dealias in [false, true] {
        let got = nonlinear_term(&theta, dealias).unwrap();
        for (a, b) in got.coeffs().iter().zip(want.coeffs()) {
            assert!((a - b).norm() <= 1e-12);
        }
        let oracle = convolution_oracle(&theta);
        for (a, b) in got.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() <= 1e-12);
        }
    }
}

#[test]
fn nonlinear_term_is_hermitian_and_mean_zero() {
    let grid = Grid::periodic(32).unwrap();
    for seed in 0..5 {
        let theta = random_hermitian(grid, seed, true);
        let n = nonlinear_term(&theta, true).unwrap();
        assert_eq!(n.mean(), Complex64::new(0.0, 0.0));
        assert!(n.hermitian_violation() < 1e-14);
    }
}

#[test]
fn dealiased_advection_conserves_l2() {
    // n not divisible by 3, so products of kept modes never alias back
    let grid = Grid::periodic(32).unwrap();
    for seed in 0..5 {
        let theta = qg_core::dealias(&random_hermitian(grid, seed, true));
        let n = nonlinear_term(&theta, true).unwrap();
        let transfer: f64 = theta
            .coeffs()
            .iter()
            .zip(n.coeffs())
            .map(|(c, f)| (c.conj() * f).re)
            .sum();
        assert!(transfer.abs() < 1e-15, "{transfer:e}");
    }
}

#[test]
fn inverse_pair_matches_separate_inverses() {
    let grid = Grid::periodic(16).unwrap();
    let a = random_hermitian(grid, 1, false);
    let b = random_hermitian(grid, 2, false);
    let fft = Fft2::new(&grid);
    let (ra, rb) = fft.inverse_pair(&a, &b);
    let (sa, sb) = (fft.inverse(&a).unwrap(), fft.inverse(&b).unwrap());
    for k in 0..grid.len() {
        assert_abs_diff_eq!(ra[k], sa[k], epsilon = 1e-13);
        assert_abs_diff_eq!(rb[k], sb[k], epsilon = 1e-13);
    }
}

fn integrate(theta0: &SpectralField, params: &SimParams, dt: f64, t_end: f64) -> SpectralField {
    let mut integ = Integrator::new(*theta0.grid(), params);
    let steps = (t_end / dt).round() as usize;
    let mut s = SimState::initial(theta0.clone());
    for _ in 0..steps {
        s = integ.step(&s, dt).unwrap();
    }
    s.theta
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn richardson_order_is_four() {
    let grid = Grid::periodic(32).unwrap();
    let theta0 = two_mode_benchmark(grid);
    let params = SimParams::new(0.75, 0.1, 1.0);
    let dts = [0.1, 0.05, 0.025, 0.0125];
    let sols: Vec<SpectralField> = dts
        .iter()
        .map(|&dt| integrate(&theta0, &params, dt, 1.0))
        .collect();
    let e1 = max_diff(&sols[0], &sols[1]);
    let e2 = max_diff(&sols[1], &sols[2]);
    let e3 = max_diff(&sols[2], &sols[3]);
    let p1 = (e1 / e2).log2();
    let p2 = (e2 / e3).log2();
    eprintln!("richardson errors {e1:e} {e2:e} {e3:e}, orders {p1:.3} {p2:.3}");
    assert!(p2 >= 3.8, "observed order {p2}");
}

#[test]
fn l2_balance_residual_is_tiny() {
    let grid = Grid::periodic(32).unwrap();
    let params = SimParams::new(0.75, 1e-3, 1.0);
    let mut integ = Integrator::new(grid, &params);
    let mut s = SimState::initial(two_mode_benchmark(grid));
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let next = integ.step(&s, 1e-3).unwrap();
        worst = worst.max(integ.l2_balance_residual(&s, &next).abs());
        s = next;
    }
    eprintln!("worst balance residual {worst:e}");
    assert!(worst <= 1e-10);
}

#[test]
fn multi_mode_unidirectional_data_decays_mode_by_mode() {
    // any superposition of modes along one direction has u ⟂ ∇θ
    let grid = Grid::periodic(32).unwrap();
    let mut theta = SpectralField::zeros(grid);
    theta.set_mode_pair(0, 1, Complex64::new(0.1, 0.05)).unwrap();
    theta.set_mode_pair(0, 3, Complex64::new(-0.02, 0.0)).unwrap();
    let params = SimParams::new(0.8, 0.01, 0.5);
    let out = integrate(&theta, &params, 0.01, 0.5);
    for m in [1i64, 3] {
        let factor = exact_decay_reference(1.0, m, 0.8, 1.0, 0.5, grid.l()).unwrap();
        let want = theta.get(0, m).unwrap() * factor;
        assert!((out.get(0, m).unwrap() - want).norm() < 1e-14);
    }
    assert!(chi_norm(&out, -0.6).unwrap() < chi_norm(&theta, -0.6).unwrap());
}
