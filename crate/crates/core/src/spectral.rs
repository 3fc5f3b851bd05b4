//! Periodic grid, 2D real-field transforms and Fourier multipliers.
//!
//! Coefficients follow `f(x) = Σ_κ c_κ exp(iκ·x)` on the box `[0, l)²`, so
//! `c = DFT(samples) / n²`. Both samples and coefficients are stored row-major
//! with the first index along `x₁`. Index `j` maps to the signed frequency
//! `m ∈ {−n/2+1, …, n/2}` and the physical wavenumber `κ = 2π m / l`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{QgError, Result};

/// Absolute slack (scaled by `max(1, max|c|)`) for Hermitian-symmetry checks.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Relative slack for the mean-zero precondition.
pub const MEAN_ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    l: f64,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(QgError::InvalidGrid(format!(
                "n must be an even integer >= 4, got {n}"
            )));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(QgError::InvalidGrid(format!(
                "box length must be positive and finite, got {l}"
            )));
        }
        Ok(Self { n, l })
    }

    /// `n` modes on the standard `2π` box.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Wavenumber of the lowest nonzero mode, `2π/l`.
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.l
    }

    /// Signed integer frequency of storage index `j`.
    pub fn freq(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Storage index of signed frequency `m`, if it is representable.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let n = self.n as i64;
        if m > n / 2 || m <= -n / 2 {
            None
        } else {
            Some(m.rem_euclid(n) as usize)
        }
    }

    pub fn flat_index(&self, m1: i64, m2: i64) -> Option<usize> {
        Some(self.index_of(m1)? * self.n + self.index_of(m2)?)
    }

    /// Flat index of the mode `−κ` (wrapped for the Nyquist row/column).
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n;
        let (j1, j2) = (idx / n, idx % n);
        ((n - j1) % n) * n + (n - j2) % n
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    /// Signed frequency pair `(m₁, m₂)` of a flat index.
    pub fn mode(&self, idx: usize) -> (i64, i64) {
        (self.freq(idx / self.n), self.freq(idx % self.n))
    }

    /// Physical wavevector `(κ₁, κ₂)` of a flat index.
    pub fn kappa(&self, idx: usize) -> (f64, f64) {
        let (m1, m2) = self.mode(idx);
        let b = self.base_wavenumber();
        (b * m1 as f64, b * m2 as f64)
    }

    pub fn kappa_norm(&self, idx: usize) -> f64 {
        let (k1, k2) = self.kappa(idx);
        k1.hypot(k2)
    }

    /// Whether the 2/3 rule removes the mode: `max(|m₁|, |m₂|) > n/3`.
    pub fn is_dealiased(&self, idx: usize) -> bool {
        let (m1, m2) = self.mode(idx);
        3 * m1.unsigned_abs().max(m2.unsigned_abs()) as usize > self.n
    }

    /// Largest `|m|` kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }
}

#[derive(Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nonzero = self.coeffs.iter().filter(|c| c.norm() > 0.0).count();
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("nonzero_modes", &nonzero)
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(QgError::DimensionMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, m1: i64, m2: i64) -> Option<Complex64> {
        self.grid.flat_index(m1, m2).map(|i| self.coeffs[i])
    }

    /// Sets `c_m` and its Hermitian partner `c_{−m} = conj(c_m)`.
    pub fn set_mode_pair(&mut self, m1: i64, m2: i64, c: Complex64) -> Result<()> {
        let idx = self.grid.flat_index(m1, m2).ok_or_else(|| {
            QgError::ModeOverflow(format!("mode ({m1}, {m2}) outside n = {}", self.grid.n))
        })?;
        let mirror = self.grid.mirror(idx);
        if mirror == idx {
            self.coeffs[idx] = Complex64::new(c.re, 0.0);
        } else {
            self.coeffs[idx] = c;
            self.coeffs[mirror] = c.conj();
        }
        Ok(())
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_mean_zero(&self) -> bool {
        self.coeffs[0].norm() <= MEAN_ZERO_TOL * self.max_abs().max(1.0)
    }

    pub fn ensure_mean_zero(&self) -> Result<()> {
        if self.is_mean_zero() {
            Ok(())
        } else {
            Err(QgError::NotMeanZero {
                mean: self.coeffs[0].norm(),
            })
        }
    }

    /// `max_κ |c_{−κ} − conj(c_κ)|`.
    pub fn hermitian_violation(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.mirror(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let violation = self.hermitian_violation();
        if violation > HERMITIAN_TOL * self.max_abs().max(1.0) {
            Err(QgError::NotHermitian { violation })
        } else {
            Ok(())
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(QgError::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Largest `max(|m₁|, |m₂|)` carrying a nonzero coefficient.
    pub fn max_active_mode(&self) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, _)| {
                let (m1, m2) = self.grid.mode(i);
                m1.unsigned_abs().max(m2.unsigned_abs()) as usize
            })
            .max()
            .unwrap_or(0)
    }

    fn map_symbol(&self, mut symbol: impl FnMut(usize) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| symbol(i) * c)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VelocityField {
    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    /// `max_κ |κ₁û₁ + κ₂û₂|`.
    pub fn divergence_residual(&self) -> f64 {
        let grid = self.grid();
        (0..grid.len())
            .map(|i| {
                let (k1, k2) = grid.kappa(i);
                (self.u1.coeffs[i] * k1 + self.u2.coeffs[i] * k2).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Planned 2D complex transforms for one grid size.
///
/// Scratch space is allocated per call, so a shared instance can serve
/// independent simulations.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n: grid.n(),
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn process(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }

    /// Unnormalized forward DFT in place.
    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.process(data, &self.forward);
    }

    /// Unnormalized inverse DFT in place; maps coefficients to samples.
    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.process(data, &self.inverse);
    }

    pub fn forward(&self, samples: &[f64], grid: Grid) -> Result<SpectralField> {
        if samples.len() != grid.len() || grid.n() != self.n {
            return Err(QgError::DimensionMismatch {
                expected: self.n * self.n,
                actual: samples.len(),
            });
        }
        let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut data);
        let norm = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|c| *c *= norm);
        Ok(SpectralField { grid, coeffs: data })
    }

    pub fn inverse(&self, field: &SpectralField) -> Result<Vec<f64>> {
        if field.grid.n() != self.n {
            return Err(QgError::GridMismatch);
        }
        field.ensure_hermitian()?;
        Ok(self.inverse_unchecked(field))
    }

    /// Inverse transform keeping only the real part, without symmetry checks.
    pub fn inverse_unchecked(&self, field: &SpectralField) -> Vec<f64> {
        let mut data = field.coeffs.clone();
        self.inverse_in_place(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Inverts two Hermitian fields with a single complex transform.
    pub fn inverse_pair(&self, a: &SpectralField, b: &SpectralField) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut data: Vec<Complex64> = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + i * y).collect();
        self.inverse_in_place(&mut data);
        data.into_iter().map(|c| (c.re, c.im)).unzip()
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

pub fn forward_transform(samples: &[f64], grid: Grid) -> Result<SpectralField> {
    Fft2::new(&grid).forward(samples, grid)
}

pub fn inverse_transform(field: &SpectralField) -> Result<Vec<f64>> {
    Fft2::new(field.grid()).inverse(field)
}

/// `|κ|^s c_κ`, with the zero mode mapped to zero for every `s`.
pub fn apply_fractional_power(field: &SpectralField, s: f64) -> Result<SpectralField> {
    if s < 0.0 {
        field.ensure_mean_zero()?;
    }
    let grid = field.grid;
    Ok(field.map_symbol(|i| {
        if i == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(grid.kappa_norm(i).powf(s), 0.0)
        }
    }))
}

/// Velocity `u = ∇^⊥ψ` with `Λψ = −θ`, i.e. `û = (iκ₂, −iκ₁) θ̂ / |κ|`.
///
/// The Nyquist row and column are zeroed in both components so that the
/// result stays Hermitian and exactly divergence-free.
pub fn velocity_from_theta(theta: &SpectralField) -> Result<VelocityField> {
    theta.ensure_mean_zero()?;
    let grid = theta.grid;
    let symbols = VelocitySymbols::new(&grid);
    let i = Complex64::new(0.0, 1.0);
    Ok(VelocityField {
        u1: theta.map_symbol(|j| i * symbols.s1[j]),
        u2: theta.map_symbol(|j| i * symbols.s2[j]),
    })
}

/// Real parts of the velocity symbols: `û_j = i·s_j·θ̂`.
#[derive(Clone)]
pub(crate) struct VelocitySymbols {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl VelocitySymbols {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let (s1, s2) = (0..grid.len())
            .map(|idx| {
                let (j1, j2) = (idx / n, idx % n);
                if idx == 0 || grid.is_nyquist(j1) || grid.is_nyquist(j2) {
                    return (0.0, 0.0);
                }
                let (k1, k2) = grid.kappa(idx);
                let norm = k1.hypot(k2);
                (k2 / norm, -k1 / norm)
            })
            .unzip();
        Self { s1, s2 }
    }
}

/// Real parts of the gradient symbols: `∂̂_j f = i·g_j·f̂`.
#[derive(Clone)]
pub(crate) struct GradientSymbols {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
}

impl GradientSymbols {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let (g1, g2) = (0..grid.len())
            .map(|idx| {
                let (j1, j2) = (idx / n, idx % n);
                let (k1, k2) = grid.kappa(idx);
                (
                    if grid.is_nyquist(j1) { 0.0 } else { k1 },
                    if grid.is_nyquist(j2) { 0.0 } else { k2 },
                )
            })
            .unzip();
        Self { g1, g2 }
    }
}

/// `(iκ₁c, iκ₂c)`; the Nyquist line along each differentiated direction is zeroed.
pub fn gradient(field: &SpectralField) -> (SpectralField, SpectralField) {
    let symbols = GradientSymbols::new(&field.grid);
    let i = Complex64::new(0.0, 1.0);
    (
        field.map_symbol(|j| i * symbols.g1[j]),
        field.map_symbol(|j| i * symbols.g2[j]),
    )
}

/// 2/3-rule truncation.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let grid = field.grid;
    field.map_symbol(|i| {
        if grid.is_dealiased(i) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}
