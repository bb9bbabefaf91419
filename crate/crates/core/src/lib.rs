//! Huber-type robust regression for data whose labels are contaminated by
//! arbitrary outliers.
//!
//! The crate is organized by capability:
//!
//! * [`loss`]: the convex Lipschitz loss interface and the Huber loss.
//! * [`data`]: Gaussian designs, symmetric noise laws and label contamination.
//! * [`linear`]: ERM and ℓ1-penalized Huber estimators (proximal gradient).
//! * [`kernel`]: RKHS Huber regression with a Hilbert-norm penalty and
//!   Mercer-spectrum decay estimation.
//! * [`theory`]: error-rate formulas, the local Bernstein check, sparsity and
//!   restricted-eigenvalue checks, Monte Carlo complexity estimates.
//! * [`lecam`]: the label-only contamination coupling on discrete models.
//! * [`experiments`]: outlier-fraction sweeps with CSV and SVG output.

pub mod data;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod lecam;
pub mod linear;
pub mod loss;
pub mod rng;
pub mod theory;

mod linalg;
mod prox_grad;

pub use data::{
    ContaminatedDataset, ContaminationSpec, GaussianDesignSpec, GroundTruth, NoiseModel,
    OutlierGenerator,
};
pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use num_rational::BigRational;
pub use linear::{FitResult, SolverConfig, StepRule};
pub use loss::{HuberParams, Loss, LossDescriptor};
