//! Synthetic mean-zero initial data.
//!
//! Random phases come from ChaCha8 seeded with `seed_from_u64(seed)`. Modes
//! are visited in the upper half plane (`m₁ > 0`, or `m₁ = 0` and `m₂ > 0`)
//! with `m₁` ascending then `m₂` ascending over `[−cutoff, cutoff]`; one
//! uniform draw `U ∈ [0, 1)` per visited mode gives the phase `2πU`, and the
//! mirror mode receives the conjugate.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::diagnostics::chi_norm;
use crate::error::{QgError, Result};
use crate::spectral::{Grid, SpectralField};

/// Name of the phase generator, as written in run configurations.
pub const RNG_NAME: &str = "chacha8";

#[derive(Clone, Debug, PartialEq)]
pub enum InitKind {
    /// `a·cos(m·x)` with `x` scaled to the box.
    SingleMode { mode: (i64, i64) },
    /// `a·cos(m·x) + a·cos(m'·x)`.
    TwoMode {
        first: (i64, i64),
        second: (i64, i64),
    },
    /// `|c_κ| = a·exp(−(|κ| − κ₀)² / 2s²)` with random phases.
    GaussianSpectrum { peak: f64, width: f64 },
    /// `|c_κ| = a·|κ|^{−p}` for `max(|m₁|,|m₂|) ≤ cutoff`, random phases.
    RandomPhase { slope: f64, cutoff: Option<usize> },
}

impl InitKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitKind::SingleMode { .. } => "single_mode",
            InitKind::TwoMode { .. } => "two_mode",
            InitKind::GaussianSpectrum { .. } => "gaussian_spectrum",
            InitKind::RandomPhase { .. } => "random_phase",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub amplitude: f64,
    pub seed: u64,
    /// When set, the built field is rescaled to this `X^σ` norm.
    pub target_norm: Option<f64>,
    /// `σ` for `target_norm`; callers normally fill in `1 − 2α`.
    pub target_sigma: Option<f64>,
}

impl InitSpec {
    pub fn new(kind: InitKind, amplitude: f64) -> Self {
        Self {
            kind,
            amplitude,
            seed: 0,
            target_norm: None,
            target_sigma: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_target(mut self, norm: f64, sigma: f64) -> Self {
        self.target_norm = Some(norm);
        self.target_sigma = Some(sigma);
        self
    }
}

fn check_mode(grid: &Grid, m: (i64, i64)) -> Result<()> {
    let limit = grid.n() as i64 / 2;
    if m == (0, 0) {
        return Err(QgError::InvalidParameter("the zero mode is not allowed".into()));
    }
    if m.0.abs() >= limit || m.1.abs() >= limit {
        return Err(QgError::ModeOverflow(format!(
            "mode ({}, {}) needs |m| < {limit} on n = {}",
            m.0,
            m.1,
            grid.n()
        )));
    }
    Ok(())
}

fn add_cosine(field: &mut SpectralField, m: (i64, i64), a: f64) -> Result<()> {
    let prev = field.get(m.0, m.1).unwrap_or_default();
    field.set_mode_pair(m.0, m.1, prev + Complex64::new(a / 2.0, 0.0))
}

/// Fills the half-plane modes within `cutoff` with `amplitude(|κ|)·e^{iφ}`.
fn random_phase_field(
    grid: Grid,
    cutoff: usize,
    seed: u64,
    amplitude: impl Fn(f64) -> f64,
) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = SpectralField::zeros(grid);
    let c = cutoff as i64;
    let base = grid.base_wavenumber();
    for m1 in 0..=c {
        for m2 in -c..=c {
            if m1 == 0 && m2 <= 0 {
                continue;
            }
            let phase = 2.0 * PI * rng.random::<f64>();
            let kappa = base * (m1 as f64).hypot(m2 as f64);
            let coeff = Complex64::from_polar(amplitude(kappa), phase);
            field.set_mode_pair(m1, m2, coeff)?;
        }
    }
    Ok(field)
}

pub fn build(spec: &InitSpec, grid: Grid) -> Result<SpectralField> {
    if !spec.amplitude.is_finite() {
        return Err(QgError::InvalidParameter("amplitude must be finite".into()));
    }
    let a = spec.amplitude;
    let field = match &spec.kind {
        InitKind::SingleMode { mode } => {
            check_mode(&grid, *mode)?;
            let mut f = SpectralField::zeros(grid);
            add_cosine(&mut f, *mode, a)?;
            f
        }
        InitKind::TwoMode { first, second } => {
            check_mode(&grid, *first)?;
            check_mode(&grid, *second)?;
            let mut f = SpectralField::zeros(grid);
            add_cosine(&mut f, *first, a)?;
            add_cosine(&mut f, *second, a)?;
            f
        }
        InitKind::GaussianSpectrum { peak, width } => {
            if !(*width > 0.0) || !(*peak >= 0.0) {
                return Err(QgError::InvalidParameter(format!(
                    "gaussian spectrum needs peak >= 0 and width > 0 (got {peak}, {width})"
                )));
            }
            let (peak, width) = (*peak, *width);
            random_phase_field(grid, grid.dealias_cutoff(), spec.seed, |k| {
                a * (-(k - peak).powi(2) / (2.0 * width * width)).exp()
            })?
        }
        InitKind::RandomPhase { slope, cutoff } => {
            if !(*slope > 0.0) {
                return Err(QgError::InvalidParameter(format!(
                    "spectral slope must be > 0, got {slope}"
                )));
            }
            let cutoff = cutoff.unwrap_or(grid.dealias_cutoff());
            if cutoff == 0 || 2 * cutoff >= grid.n() {
                return Err(QgError::ModeOverflow(format!(
                    "cutoff {cutoff} must satisfy 1 <= cutoff < n/2 = {}",
                    grid.n() / 2
                )));
            }
            let slope = *slope;
            random_phase_field(grid, cutoff, spec.seed, |k| a * k.powf(-slope))?
        }
    };
    match spec.target_norm {
        None => Ok(field),
        Some(target) => {
            let sigma = spec.target_sigma.ok_or_else(|| {
                QgError::InvalidParameter("target_norm given without target_sigma".into())
            })?;
            rescale_to_norm(&field, sigma, target)
        }
    }
}

/// Multiplies `field` so that `chi_norm(result, sigma) == target`.
pub fn rescale_to_norm(field: &SpectralField, sigma: f64, target: f64) -> Result<SpectralField> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(QgError::InvalidParameter(format!(
            "target norm must be finite and >= 0, got {target}"
        )));
    }
    let current = chi_norm(field, sigma)?;
    if current == 0.0 {
        return if target == 0.0 {
            Ok(SpectralField::zeros(*field.grid()))
        } else {
            Err(QgError::ZeroField)
        };
    }
    let out = field.scaled(target / current);
    let check = chi_norm(&out, sigma)?;
    debug_assert!((check - target).abs() <= 1e-12 * target.max(f64::MIN_POSITIVE));
    Ok(out)
}
