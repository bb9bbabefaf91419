//! Convex Lipschitz losses.
//!
//! Only the Huber loss ships. Solvers are written against [`Loss`], so any
//! other convex loss with a cheap scalar proximal map plugs in unchanged.

use crate::error::{ensure_finite, invalid, Result};

/// A loss `ℓ(u, y)` that is convex and Lipschitz in the prediction `u`.
pub trait Loss: Send + Sync {
    fn value(&self, u: f64, y: f64) -> f64;

    /// Derivative with respect to the prediction `u`.
    fn derivative(&self, u: f64, y: f64) -> f64;

    /// `argmin_z ½(z − v)² + step·ℓ(z, y)`.
    fn prox(&self, v: f64, y: f64, step: f64) -> f64;

    fn lipschitz_constant(&self) -> f64;

    /// Upper bound on the second derivative in `u`, used to turn an operator
    /// norm into a gradient Lipschitz constant.
    fn curvature_bound(&self) -> f64;
}

/// Huber loss with threshold `gamma`: quadratic for residuals up to `gamma`,
/// linear beyond. Its Lipschitz constant is `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams {
    gamma: f64,
}

impl HuberParams {
    pub fn new(gamma: f64) -> Result<Self> {
        ensure_finite(gamma, "huber gamma")?;
        if gamma <= 0.0 {
            return Err(invalid(format!("huber gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Loss for HuberParams {
    #[inline]
    fn value(&self, u: f64, y: f64) -> f64 {
        let r = (u - y).abs();
        if r <= self.gamma {
            0.5 * r * r
        } else {
            self.gamma * r - 0.5 * self.gamma * self.gamma
        }
    }

    #[inline]
    fn derivative(&self, u: f64, y: f64) -> f64 {
        (u - y).clamp(-self.gamma, self.gamma)
    }

    #[inline]
    fn prox(&self, v: f64, y: f64, step: f64) -> f64 {
        let r = v - y;
        if r.abs() <= (1.0 + step) * self.gamma {
            y + r / (1.0 + step)
        } else {
            v - step * self.gamma * r.signum()
        }
    }

    fn lipschitz_constant(&self) -> f64 {
        self.gamma
    }

    fn curvature_bound(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Huber(HuberParams),
}

/// A loss together with its Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDescriptor {
    pub kind: LossKind,
}

impl LossDescriptor {
    pub fn huber(params: HuberParams) -> Self {
        Self {
            kind: LossKind::Huber(params),
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match &self.kind {
            LossKind::Huber(p) => p.lipschitz_constant(),
        }
    }
}

impl Loss for LossDescriptor {
    fn value(&self, u: f64, y: f64) -> f64 {
        match &self.kind {
            LossKind::Huber(p) => p.value(u, y),
        }
    }

    fn derivative(&self, u: f64, y: f64) -> f64 {
        match &self.kind {
            LossKind::Huber(p) => p.derivative(u, y),
        }
    }

    fn prox(&self, v: f64, y: f64, step: f64) -> f64 {
        match &self.kind {
            LossKind::Huber(p) => p.prox(v, y, step),
        }
    }

    fn lipschitz_constant(&self) -> f64 {
        LossDescriptor::lipschitz_constant(self)
    }

    fn curvature_bound(&self) -> f64 {
        match &self.kind {
            LossKind::Huber(p) => p.curvature_bound(),
        }
    }
}

/// Checked evaluation of the Huber loss.
pub fn huber_value(u: f64, y: f64, params: &HuberParams) -> Result<f64> {
    ensure_finite(u, "huber prediction")?;
    ensure_finite(y, "huber label")?;
    Ok(params.value(u, y))
}

/// Checked derivative of the Huber loss in the prediction.
pub fn huber_grad(u: f64, y: f64, params: &HuberParams) -> Result<f64> {
    ensure_finite(u, "huber prediction")?;
    ensure_finite(y, "huber label")?;
    Ok(params.derivative(u, y))
}

/// Checked proximal map of `step · ℓ^γ(·, y)` at `v`.
pub fn huber_prox(v: f64, y: f64, step: f64, params: &HuberParams) -> Result<f64> {
    ensure_finite(v, "prox point")?;
    ensure_finite(y, "huber label")?;
    ensure_finite(step, "prox step")?;
    if step <= 0.0 {
        return Err(invalid(format!("prox step must be positive, got {step}")));
    }
    Ok(params.prox(v, y, step))
}
