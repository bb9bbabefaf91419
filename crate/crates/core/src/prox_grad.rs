//! Proximal gradient on `(1/N) Σ ℓ((A x)_i, y_i) + h(x)` with an optional
//! accelerated (restarted FISTA) schedule and backtracking on the smooth
//! part.

use nalgebra::{DMatrix, DVector};

use crate::linear::{FitResult, SolverConfig, StepRule};
use crate::loss::Loss;

pub(crate) trait Regularizer {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn prox(&self, v: &DVector<f64>, step: f64) -> DVector<f64>;
}

pub(crate) struct NoPenalty;

impl Regularizer for NoPenalty {
    fn value(&self, _: &DVector<f64>) -> f64 {
        0.0
    }
    fn prox(&self, v: &DVector<f64>, _: f64) -> DVector<f64> {
        v.clone()
    }
}

/// `λ‖x‖₁`.
pub(crate) struct L1Penalty(pub f64);

impl Regularizer for L1Penalty {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.0 * x.lp_norm(1)
    }
    fn prox(&self, v: &DVector<f64>, step: f64) -> DVector<f64> {
        crate::linear::soft_threshold_vec(v, step * self.0)
    }
}

/// `λ‖x‖₂` (not squared); its prox is block shrinkage.
pub(crate) struct NormPenalty(pub f64);

impl Regularizer for NormPenalty {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.0 * x.norm()
    }
    fn prox(&self, v: &DVector<f64>, step: f64) -> DVector<f64> {
        let norm = v.norm();
        let t = step * self.0;
        if norm <= t {
            DVector::zeros(v.len())
        } else {
            v * (1.0 - t / norm)
        }
    }
}

pub(crate) struct Composite<'a, L: Loss, R: Regularizer> {
    pub op: &'a DMatrix<f64>,
    pub labels: &'a DVector<f64>,
    pub loss: &'a L,
    pub reg: &'a R,
}

impl<L: Loss, R: Regularizer> Composite<'_, L, R> {
    fn n(&self) -> f64 {
        self.op.nrows() as f64
    }

    pub fn smooth_value(&self, pred: &DVector<f64>) -> f64 {
        pred.iter()
            .zip(self.labels.iter())
            .map(|(u, y)| self.loss.value(*u, *y))
            .sum::<f64>()
            / self.n()
    }

    pub fn smooth_grad(&self, pred: &DVector<f64>) -> DVector<f64> {
        let psi = DVector::from_iterator(
            pred.len(),
            pred.iter().zip(self.labels.iter()).map(|(u, y)| self.loss.derivative(*u, *y)),
        );
        self.op.tr_mul(&psi) / self.n()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.smooth_value(&(self.op * x)) + self.reg.value(x)
    }

    /// `‖x − prox_{h/L}(x − ∇g(x)/L)‖ · L`, zero exactly at minimizers.
    pub fn stationarity(&self, x: &DVector<f64>, pred: &DVector<f64>, lip: f64) -> f64 {
        let grad = self.smooth_grad(pred);
        let p = self.reg.prox(&(x - grad / lip), 1.0 / lip);
        (x - p).norm() * lip
    }

    /// Runs the solver from `x0`. `lip0` is an estimate (ideally an upper
    /// bound) of the smooth part's gradient Lipschitz constant.
    pub fn minimize(&self, x0: DVector<f64>, lip0: f64, cfg: &SolverConfig) -> FitResult {
        let backtrack = match cfg.step_rule {
            StepRule::Backtracking { beta } => Some(beta),
            StepRule::FixedFromLipschitz => None,
        };
        let mut lip = if lip0 > 0.0 && lip0.is_finite() { lip0 } else { 1.0 };

        let mut x = x0;
        let mut ax = self.op * &x;
        let mut fx = self.smooth_value(&ax) + self.reg.value(&x);
        let mut y = x.clone();
        let mut ay = ax.clone();
        let mut t = 1.0f64;
        let mut y_is_x = true;
        let mut trace = Vec::with_capacity(cfg.max_iter.min(4096) + 1);
        trace.push(fx);

        let mut converged = false;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;

        for k in 1..=cfg.max_iter {
            iterations = k;
            let gy = self.smooth_value(&ay);
            let grad = self.smooth_grad(&ay);
            let (z, az, gz) = loop {
                let z = self.reg.prox(&(&y - &grad / lip), 1.0 / lip);
                let az = self.op * &z;
                let gz = self.smooth_value(&az);
                let Some(beta) = backtrack else { break (z, az, gz) };
                let d = &z - &y;
                let model = gy + grad.dot(&d) + 0.5 * lip * d.norm_squared();
                if gz <= model + 1e-12 * gy.abs().max(1.0) {
                    break (z, az, gz);
                }
                lip /= beta;
            };
            let fz = gz + self.reg.value(&z);
            let mapping = lip * (&z - &y).norm();

            if cfg.acceleration {
                // A step taken from x itself is a plain proximal gradient
                // step; it is accepted even when rounding hides its decrease.
                if fz <= fx || y_is_x {
                    let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                    let momentum = (t - 1.0) / t_next;
                    y = &z + (&z - &x) * momentum;
                    ay = &az + (&az - &ax) * momentum;
                    x = z;
                    ax = az;
                    fx = fz;
                    t = t_next;
                    y_is_x = momentum == 0.0;
                } else {
                    // function-value restart keeps the iterates monotone
                    y = x.clone();
                    ay = ax.clone();
                    t = 1.0;
                    y_is_x = true;
                }
            } else {
                x = z;
                ax = az;
                fx = fz;
                y = x.clone();
                ay = ax.clone();
            }
            trace.push(fx);

            if mapping <= cfg.tol {
                residual = self.stationarity(&x, &ax, lip);
                if residual <= cfg.tol {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            residual = self.stationarity(&x, &ax, lip);
            converged = residual <= cfg.tol;
        }
        FitResult {
            coefficients: x,
            objective_trace: trace,
            converged,
            stationarity_residual: residual,
            iterations,
            non_unique: false,
        }
    }
}
