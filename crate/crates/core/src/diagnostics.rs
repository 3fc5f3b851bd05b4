//! Critical-space norms, the a-priori inequality and decay verdicts.
//!
//! `‖f‖_{X^σ}` is the torus lattice sum `Σ_{κ≠0} |κ|^σ |c_κ|` with no `2π`
//! normalization; all inequality checks share this convention.

use rustfft::num_complex::Complex64;

use crate::error::{QgError, Result};
use crate::spectral::{Grid, SpectralField};

/// Default absolute tolerance for the a-priori inequality.
pub const DEFAULT_INEQUALITY_TOL: f64 = 1e-6;

/// Slack allowed when testing the tail of a decay series for monotonicity.
pub const TAIL_MONOTONE_TOL: f64 = 1e-10;

/// Smallness threshold on `‖θ⁰‖_{X^{1−2α}}` that guarantees global existence.
pub const SMALLNESS_THRESHOLD: f64 = 0.25;

/// Exponent of the critical space for dissipation order `alpha`.
pub fn critical_sigma(alpha: f64) -> f64 {
    1.0 - 2.0 * alpha
}

pub fn chi_norm(field: &SpectralField, sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        field.ensure_mean_zero()?;
    }
    let grid = field.grid();
    Ok(field
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| grid.kappa_norm(i).powf(sigma) * c.norm())
        .sum())
}

pub fn l2_norm(field: &SpectralField) -> f64 {
    field.grid().l() * sum_sq(field.coeffs()).sqrt()
}

fn sum_sq(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm_sqr()).sum()
}

/// Precomputed `|κ|^σ` and `|κ|` tables for repeated norm evaluation.
#[derive(Clone, Debug)]
pub struct NormWeights {
    grid: Grid,
    sigma: f64,
    low: Vec<f64>,
    one: Vec<f64>,
}

impl NormWeights {
    pub fn new(grid: Grid, sigma: f64) -> Self {
        let (low, one) = (0..grid.len())
            .map(|i| {
                if i == 0 {
                    (0.0, 0.0)
                } else {
                    let k = grid.kappa_norm(i);
                    (k.powf(sigma), k)
                }
            })
            .unzip();
        Self {
            grid,
            sigma,
            low,
            one,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `(‖f‖_{X^σ}, ‖f‖_{X¹}, ‖f‖_{L²})` in one pass.
    pub fn evaluate(&self, field: &SpectralField) -> Result<(f64, f64, f64)> {
        if field.grid() != &self.grid {
            return Err(QgError::GridMismatch);
        }
        if self.sigma < 0.0 {
            field.ensure_mean_zero()?;
        }
        let (mut low, mut one, mut sq) = (0.0, 0.0, 0.0);
        for ((c, wl), w1) in field.coeffs().iter().zip(&self.low).zip(&self.one) {
            let a = c.norm();
            low += wl * a;
            one += w1 * a;
            sq += c.norm_sqr();
        }
        Ok((low, one, self.grid.l() * sq.sqrt()))
    }

    pub fn chi_low(&self, field: &SpectralField) -> f64 {
        field
            .coeffs()
            .iter()
            .zip(&self.low)
            .map(|(c, w)| w * c.norm())
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRecord {
    pub t: f64,
    /// `‖θ‖_{X^{1−2α}}`
    pub chi_low: f64,
    /// `‖θ‖_{X¹}`
    pub chi_one: f64,
    pub l2: f64,
    /// Trapezoid estimate of `∫₀ᵗ ‖θ‖_{X¹} ds`.
    pub int_chi_one: f64,
}

/// Time-ordered norm records of one trajectory.
#[derive(Clone, Debug)]
pub struct NormSeries {
    sigma: f64,
    records: Vec<NormRecord>,
    integral_offset: f64,
    weights: Option<NormWeights>,
}

impl NormSeries {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            records: Vec::new(),
            integral_offset: 0.0,
            weights: None,
        }
    }

    /// Series whose running integral starts from `offset` (resumed runs).
    pub fn with_integral_offset(sigma: f64, offset: f64) -> Self {
        Self {
            integral_offset: offset,
            ..Self::new(sigma)
        }
    }

    pub fn from_records(sigma: f64, records: Vec<NormRecord>) -> Result<Self> {
        let mut series = Self::new(sigma);
        for r in records {
            series.push_record(r)?;
        }
        Ok(series)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn records(&self) -> &[NormRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&NormRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&NormRecord> {
        self.records.last()
    }

    /// Evaluates the norms of `field` at time `t` and appends a record.
    pub fn push_field(&mut self, t: f64, field: &SpectralField) -> Result<&NormRecord> {
        if self.weights.as_ref().map(|w| w.grid()) != Some(field.grid()) {
            self.weights = Some(NormWeights::new(*field.grid(), self.sigma));
        }
        let (chi_low, chi_one, l2) = self.weights.as_ref().unwrap().evaluate(field)?;
        let int_chi_one = match self.records.last() {
            None => self.integral_offset,
            Some(prev) => prev.int_chi_one + 0.5 * (t - prev.t) * (prev.chi_one + chi_one),
        };
        self.push_record(NormRecord {
            t,
            chi_low,
            chi_one,
            l2,
            int_chi_one,
        })?;
        Ok(self.records.last().unwrap())
    }

    fn push_record(&mut self, r: NormRecord) -> Result<()> {
        let values = [r.t, r.chi_low, r.chi_one, r.l2, r.int_chi_one];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QgError::InvalidSeries(format!("non-finite record at t = {}", r.t)));
        }
        if r.chi_low < 0.0 || r.chi_one < 0.0 || r.l2 < 0.0 {
            return Err(QgError::InvalidSeries(format!("negative norm at t = {}", r.t)));
        }
        if let Some(prev) = self.records.last() {
            if r.t <= prev.t {
                return Err(QgError::InvalidSeries(format!(
                    "time not strictly increasing ({} after {})",
                    r.t, prev.t
                )));
            }
            if r.int_chi_one < prev.int_chi_one {
                return Err(QgError::InvalidSeries(format!(
                    "running integral decreased at t = {}",
                    r.t
                )));
            }
        }
        self.records.push(r);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub theta0_norm: f64,
    pub smallness_ok: bool,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    pub rows: Vec<InequalityRow>,
}

/// Evaluates `‖θ(t)‖_{X^{1−2α}} + (1 − 4‖θ⁰‖)/2 · ∫₀ᵗ ‖θ‖_{X¹} ≤ ‖θ⁰‖` at every record.
pub fn theorem1_functional(
    series: &NormSeries,
    theta0_norm: f64,
    tolerance: f64,
) -> Result<InequalityReport> {
    let first = series.first().ok_or(QgError::EmptySeries)?;
    let scale = theta0_norm.abs().max(first.chi_low).max(1e-300);
    if (first.chi_low - theta0_norm).abs() > 1e-12 * scale {
        return Err(QgError::InvalidParameter(format!(
            "theta0_norm {theta0_norm} does not match the first recorded norm {}",
            first.chi_low
        )));
    }
    let coeff = (1.0 - 4.0 * theta0_norm) / 2.0;
    let rows: Vec<InequalityRow> = series
        .records()
        .iter()
        .map(|r| {
            let lhs = r.chi_low + coeff * (r.int_chi_one - first.int_chi_one);
            InequalityRow {
                t: r.t,
                lhs,
                rhs: theta0_norm,
                margin: theta0_norm - lhs,
            }
        })
        .collect();
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(InequalityReport {
        theta0_norm,
        smallness_ok: theta0_norm < SMALLNESS_THRESHOLD,
        worst_margin,
        tolerance,
        satisfied: worst_margin >= -tolerance,
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayVerdict {
    /// `chi_low(t_end) / chi_low(0)`, defined as 0 when the initial norm is 0.
    pub ratio_final: f64,
    /// First crossing of half the initial norm, log-linearly interpolated.
    pub t_half: Option<f64>,
    pub tail_monotone: bool,
    /// Whether `2/3 < α < 1`, the range where decay to zero is guaranteed.
    pub applicable: bool,
    /// Least-squares slope of `−ln chi_low` over the tail half. Descriptive only.
    pub fitted_rate: Option<f64>,
}

pub fn decay_applicable(alpha: f64) -> bool {
    alpha > 2.0 / 3.0 && alpha < 1.0
}

pub fn decay_summary(series: &NormSeries, alpha: f64) -> Result<DecayVerdict> {
    let records = series.records();
    let first = records.first().ok_or(QgError::EmptySeries)?;
    let last = records.last().unwrap();
    let initial = first.chi_low;
    let ratio_final = if initial > 0.0 {
        last.chi_low / initial
    } else {
        0.0
    };

    let half = 0.5 * initial;
    let t_half = if initial > 0.0 {
        records.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            if b.chi_low >= half {
                return None;
            }
            if b.chi_low > 0.0 && a.chi_low > 0.0 {
                let (la, lb, lh) = (a.chi_low.ln(), b.chi_low.ln(), half.ln());
                Some(a.t + (b.t - a.t) * (la - lh) / (la - lb))
            } else {
                Some(a.t + (b.t - a.t) * (a.chi_low - half) / (a.chi_low - b.chi_low))
            }
        })
    } else {
        None
    };

    let tail = &records[records.len() / 2..];
    let tail_monotone = tail
        .windows(2)
        .all(|w| w[1].chi_low <= w[0].chi_low + TAIL_MONOTONE_TOL);

    Ok(DecayVerdict {
        ratio_final,
        t_half,
        tail_monotone,
        applicable: decay_applicable(alpha),
        fitted_rate: fit_log_rate(tail),
    })
}

fn fit_log_rate(tail: &[NormRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|r| r.chi_low > 0.0)
        .map(|r| (r.t, r.chi_low.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Builds `θ_λ(x) = λ^{2α−1} θ(λx)` and returns `|‖θ_λ‖ − ‖θ‖|` in `X^{1−2α}`.
///
/// The grid is enlarged to `λn` when the stretched modes would not fit.
pub fn scaling_invariance_check(field: &SpectralField, lambda: u32, alpha: f64) -> Result<f64> {
    if lambda == 0 {
        return Err(QgError::ModeOverflow("scaling factor must be positive".into()));
    }
    let sigma = critical_sigma(alpha);
    let scaled = rescale_spatially(field, lambda, alpha)?;
    Ok((chi_norm(&scaled, sigma)? - chi_norm(field, sigma)?).abs())
}

/// Places `λ^{2α−1} c_κ` at mode `λκ`.
pub fn rescale_spatially(field: &SpectralField, lambda: u32, alpha: f64) -> Result<SpectralField> {
    let grid = field.grid();
    let lam = lambda as i64;
    let fits = (field.max_active_mode() as i64) * lam < grid.n() as i64 / 2;
    let target_grid = if fits {
        *grid
    } else {
        Grid::new(grid.n() * lambda as usize, grid.l())?
    };
    let amp = (lambda as f64).powf(2.0 * alpha - 1.0);
    let mut out = SpectralField::zeros(target_grid);
    for (i, c) in field.coeffs().iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let (m1, m2) = grid.mode(i);
        let j = target_grid
            .flat_index(m1 * lam, m2 * lam)
            .ok_or_else(|| QgError::ModeOverflow(format!("mode ({m1}, {m2}) times {lambda}")))?;
        out.coeffs_mut()[j] = c * amp;
    }
    Ok(out)
}
