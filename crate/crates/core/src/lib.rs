//! Pseudospectral solver for the 2D dissipative quasi-geostrophic equation
//!
//! ```text
//! ∂ₜθ + u·∇θ + kΛ^{2α}θ = 0,   u = ∇^⊥ψ,   Λψ = −θ,   1/2 < α ≤ 1
//! ```
//!
//! on a periodic box, together with the Fourier-weighted norms
//! `‖θ‖_{X^σ} = Σ_{κ≠0} |κ|^σ |θ̂(κ)|` used to check the small-data a-priori
//! inequality and the long-time decay of `‖θ‖_{X^{1−2α}}`.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod initdata;
pub mod spectral;

pub use diagnostics::{
    chi_norm, critical_sigma, decay_summary, l2_norm, scaling_invariance_check,
    theorem1_functional, DecayVerdict, InequalityReport, InequalityRow, NormRecord, NormSeries,
};
pub use dynamics::{
    cfl_dt, exact_decay_reference, nonlinear_term, run_from, simulate, step_ifrk4, Integrator,
    SimParams, SimState, SimulationAbort,
};
pub use error::{QgError, Result};
pub use initdata::{build, rescale_to_norm, InitKind, InitSpec};
pub use spectral::{
    apply_fractional_power, dealias, forward_transform, gradient, inverse_transform,
    velocity_from_theta, Grid, SpectralField, VelocityField,
};

pub use rustfft::num_complex::Complex64;
