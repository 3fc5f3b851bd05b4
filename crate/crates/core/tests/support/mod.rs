//! Test-only oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use qg_core::{build, forward_transform, Complex64, Grid, InitKind, InitSpec, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_hermitian(grid: Grid, seed: u64, mean_zero: bool) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut f = forward_transform(&samples, grid).unwrap();
    if mean_zero {
        f.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    }
    f
}

/// Signed frequency of index `j`, written out independently of `Grid`.
pub fn freq(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// `N(θ) = −u·∇θ` as an explicit circular convolution of coefficient arrays.
pub fn convolution_oracle(theta: &SpectralField) -> Vec<Complex64> {
    let grid = *theta.grid();
    let n = grid.n();
    let b = 2.0 * PI / grid.l();
    let c = theta.coeffs();
    let i = Complex64::new(0.0, 1.0);
    let mut u1 = vec![Complex64::new(0.0, 0.0); n * n];
    let mut u2 = u1.clone();
    let mut t1 = u1.clone();
    let mut t2 = u1.clone();
    for j1 in 0..n {
        for j2 in 0..n {
            let idx = j1 * n + j2;
            let (k1, k2) = (b * freq(j1, n) as f64, b * freq(j2, n) as f64);
            let nyq1 = j1 == n / 2;
            let nyq2 = j2 == n / 2;
            let mag = (k1 * k1 + k2 * k2).sqrt();
            if idx != 0 && !nyq1 && !nyq2 {
                // ψ̂ = −θ̂/|κ|, u = (−∂₂ψ, ∂₁ψ)
                let psi = -c[idx] / mag;
                u1[idx] = -(i * k2) * psi;
                u2[idx] = (i * k1) * psi;
            }
            if !nyq1 {
                t1[idx] = i * k1 * c[idx];
            }
            if !nyq2 {
                t2[idx] = i * k2 * c[idx];
            }
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for a1 in 0..n {
        for a2 in 0..n {
            let ia = a1 * n + a2;
            if u1[ia].norm() == 0.0 && u2[ia].norm() == 0.0 {
                continue;
            }
            for b1 in 0..n {
                for b2 in 0..n {
                    let ib = b1 * n + b2;
                    let target = ((a1 + b1) % n) * n + (a2 + b2) % n;
                    out[target] -= u1[ia] * t1[ib] + u2[ia] * t2[ib];
                }
            }
        }
    }
    out[0] = Complex64::new(0.0, 0.0);
    out
}

/// `0.5·(cos x₁ + cos 2x₂)`: two modes with a nonzero advection term.
pub fn two_mode_benchmark(grid: Grid) -> SpectralField {
    let spec = InitSpec::new(
        InitKind::TwoMode {
            first: (1, 0),
            second: (0, 2),
        },
        0.5,
    );
    build(&spec, grid).unwrap()
}
