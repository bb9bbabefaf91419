//! Error-rate formulas and checks of the conditions under which they hold.
//!
//! Every formula carries an absolute constant `c` that the analysis leaves
//! unidentified; it defaults to 1 and is echoed in each [`TheoryReport`].

mod complexity;
mod rates;
mod re;

pub use complexity::{
    fixed_point_radius, gaussian_mean_width_mc, intersection_support, intersection_width_bound, rademacher_mc,
    ComplexityMode, McEstimate, SetSpec, MIN_SAMPLES,
};
pub use rates::{
    rate_erm, rate_lasso, rate_lasso_re, rate_rkhs, ConditionVerdict, DominantTerm, RateInputs, RateKind,
    TheoryReport,
};
pub use re::{re_constant_estimate, re_ratio, ReEstimate, MAX_ENUMERATED_SUPPORTS};

use crate::data::NoiseModel;
use crate::error::{invalid, Result};

/// Default multiplier in the noise condition for Gaussian designs.
pub const BERNSTEIN_MULTIPLIER: f64 = 18.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinVerdict {
    pub holds: bool,
    /// `F(γ − m·r) − F(m·r − γ) − α`.
    pub margin: f64,
}

/// Checks the noise condition `F(γ − m·r) − F(m·r − γ) ≥ α` behind the local
/// Bernstein property of the Huber loss.
pub fn bernstein_check(noise: &NoiseModel, gamma: f64, r: f64, alpha: f64, multiplier: f64) -> Result<BernsteinVerdict> {
    noise.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be nonnegative, got {r}")));
    }
    if !alpha.is_finite() {
        return Err(invalid(format!("alpha must be finite, got {alpha}")));
    }
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(invalid(format!("multiplier must be positive, got {multiplier}")));
    }
    let margin = noise.central_mass(gamma - multiplier * r) - alpha;
    Ok(BernsteinVerdict {
        holds: margin >= 0.0,
        margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityCheck {
    pub holds: bool,
    /// Largest `s` with `100 s ≤ (κρ/r)²`.
    pub max_sparsity: f64,
}

/// The ℓ1 sparsity condition `100 s ≤ (κρ/r)²` (`κ = 1` without a
/// restricted-eigenvalue assumption).
pub fn sparsity_equation_check(s: usize, rho: f64, r: f64, kappa: f64) -> Result<SparsityCheck> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("r must be positive, got {r}")));
    }
    if !(rho >= 0.0 && rho.is_finite()) || !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(invalid("rho and kappa must be nonnegative and finite"));
    }
    let bound = (kappa * rho / r).powi(2);
    Ok(SparsityCheck {
        holds: 100.0 * s as f64 <= bound,
        max_sparsity: bound / 100.0,
    })
}
