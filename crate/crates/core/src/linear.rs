//! Linear Huber estimators: the unpenalized empirical risk minimizer, the
//! ℓ1-penalized variant, and an ordinary least-squares baseline.
//!
//! Both Huber estimators minimize `(1/N) Σ ℓ^γ(⟨X_i, t⟩, Y_i) + λ‖t‖₁`
//! (`λ = 0` for the ERM) by proximal gradient. The smooth part has a
//! gradient Lipschitz constant of at most `‖X‖²_op / N`; the initial step
//! comes from a power-iteration estimate of that quantity and backtracking
//! corrects it when needed.

use nalgebra::{DMatrix, DVector};

use crate::data::{ContaminatedDataset, GaussianDesignSpec, GroundTruth};
use crate::error::{invalid, Error, Result};
use crate::linalg::op_norm_sq;
use crate::loss::{HuberParams, Loss};
use crate::prox_grad::{Composite, L1Penalty, NoPenalty};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `1/L` with `L` from power iteration, inflated by 1%.
    FixedFromLipschitz,
    /// Start from the power-iteration `L` and divide it by `beta` until the
    /// quadratic upper model holds.
    Backtracking { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Stationarity tolerance on the prox-gradient mapping.
    pub tol: f64,
    pub step_rule: StepRule,
    pub acceleration: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-8,
            step_rule: StepRule::Backtracking { beta: 0.5 },
            acceleration: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if let StepRule::Backtracking { beta } = self.step_rule {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(invalid(format!("backtracking factor must lie in (0, 1), got {beta}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: DVector<f64>,
    /// Objective at the accepted iterate after each iteration (entry 0 is
    /// the starting point).
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Norm of the prox-gradient mapping at the returned coefficients; the
    /// gradient norm when there is no penalty.
    pub stationarity_residual: f64,
    pub iterations: usize,
    /// Set when the smooth part's curvature at the solution is
    /// rank-deficient, so other minimizers may exist.
    pub non_unique: bool,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the starting point")
    }
}

/// Errors of an estimate against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationError {
    pub l2: f64,
    pub l1: f64,
    /// `‖Σ^{1/2}(t̂ − t*)‖₂`.
    pub weighted: f64,
}

fn check_data(data: &ContaminatedDataset) -> Result<()> {
    if data.n() == 0 {
        return Err(invalid("at least one observation is required"));
    }
    if data.design.nrows() != data.labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} design rows but {} labels",
            data.design.nrows(),
            data.labels.len()
        )));
    }
    if data.design.iter().chain(data.labels.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dataset"));
    }
    Ok(())
}

fn initial_lipschitz(design: &DMatrix<f64>, loss: &impl Loss, step_rule: StepRule) -> f64 {
    let l = loss.curvature_bound() * op_norm_sq(design) / design.nrows() as f64;
    match step_rule {
        StepRule::FixedFromLipschitz => 1.01 * l,
        StepRule::Backtracking { .. } => l,
    }
}

/// Unpenalized Huber empirical risk minimizer.
pub fn fit_erm_huber(data: &ContaminatedDataset, params: &HuberParams, cfg: &SolverConfig) -> Result<FitResult> {
    check_data(data)?;
    cfg.validate()?;
    let problem = Composite {
        op: &data.design,
        labels: &data.labels,
        loss: params,
        reg: &NoPenalty,
    };
    let lip = initial_lipschitz(&data.design, params, cfg.step_rule);
    let mut fit = problem.minimize(DVector::zeros(data.dim()), lip, cfg);
    fit.non_unique = curvature_rank_deficient(data, params, &fit.coefficients);
    Ok(fit)
}

/// The Huber Hessian at `t` is `(1/N) Σ_{|r_i| < γ} X_i X_iᵀ`; it is singular
/// whenever fewer than `p` residuals sit in the quadratic zone, or when
/// those rows do not span `ℝ^p`.
fn curvature_rank_deficient(data: &ContaminatedDataset, params: &HuberParams, t: &DVector<f64>) -> bool {
    let p = data.dim();
    let pred = &data.design * t;
    let active: Vec<usize> = (0..data.n())
        .filter(|&i| (pred[i] - data.labels[i]).abs() < params.gamma())
        .collect();
    if active.len() < p {
        return true;
    }
    let rows = DMatrix::from_fn(active.len(), p, |i, j| data.design[(active[i], j)]);
    let gram = rows.tr_mul(&rows);
    let sv = gram.singular_values();
    let max = sv.max();
    sv.iter().any(|s| *s <= 1e-12 * max.max(f64::MIN_POSITIVE))
}

/// `sign(v)·max(|v| − threshold, 0)`.
pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

pub(crate) fn soft_threshold_vec(v: &DVector<f64>, threshold: f64) -> DVector<f64> {
    v.map(|x| soft_threshold(x, threshold))
}

/// Componentwise soft thresholding; rejects negative thresholds.
pub fn soft_threshold_all(v: &[f64], threshold: f64) -> Result<Vec<f64>> {
    if !(threshold >= 0.0) {
        return Err(invalid(format!("threshold must be nonnegative, got {threshold}")));
    }
    Ok(v.iter().map(|x| soft_threshold(*x, threshold)).collect())
}

/// ℓ1-penalized Huber estimator `argmin (1/N) Σ ℓ^γ(⟨X_i,t⟩, Y_i) + λ‖t‖₁`.
pub fn fit_l1_huber(
    data: &ContaminatedDataset,
    params: &HuberParams,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    check_data(data)?;
    cfg.validate()?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let penalty = L1Penalty(lambda);
    let problem = Composite {
        op: &data.design,
        labels: &data.labels,
        loss: params,
        reg: &penalty,
    };
    let lip = initial_lipschitz(&data.design, params, cfg.step_rule);
    Ok(problem.minimize(DVector::zeros(data.dim()), lip, cfg))
}

/// Gradient of the smooth Huber part at `t`.
pub fn huber_risk_gradient(data: &ContaminatedDataset, params: &HuberParams, t: &DVector<f64>) -> Result<DVector<f64>> {
    check_data(data)?;
    check_dim(data, t.len())?;
    let problem = Composite {
        op: &data.design,
        labels: &data.labels,
        loss: params,
        reg: &NoPenalty,
    };
    Ok(problem.smooth_grad(&(&data.design * t)))
}

fn check_dim(data: &ContaminatedDataset, len: usize) -> Result<()> {
    if len != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector of length {len} for a {}-column design",
            data.dim()
        )));
    }
    Ok(())
}

/// `(1/N) Σ ℓ^γ(⟨X_i, t⟩, Y_i) + λ‖t‖₁`, exactly as the solvers minimize it.
pub fn objective_eval(data: &ContaminatedDataset, params: &HuberParams, lambda: f64, t: &DVector<f64>) -> Result<f64> {
    check_data(data)?;
    check_dim(data, t.len())?;
    if !(lambda >= 0.0) {
        return Err(invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    let penalty = L1Penalty(lambda);
    let problem = Composite {
        op: &data.design,
        labels: &data.labels,
        loss: params,
        reg: &penalty,
    };
    Ok(problem.objective(t))
}

/// Ordinary least squares via SVD (minimum-norm solution when the design is
/// rank-deficient).
pub fn fit_ols(data: &ContaminatedDataset) -> Result<FitResult> {
    check_data(data)?;
    let svd = data.design.clone().svd(true, true);
    let t = svd
        .solve(&data.labels, 1e-12 * svd.singular_values.max())
        .map_err(|e| invalid(e.to_string()))?;
    let resid = &data.design * &t - &data.labels;
    let grad = data.design.tr_mul(&resid) / data.n() as f64;
    let objective = 0.5 * resid.norm_squared() / data.n() as f64;
    let rank = svd.rank(1e-12 * svd.singular_values.max());
    Ok(FitResult {
        coefficients: t,
        objective_trace: vec![objective],
        converged: true,
        stationarity_residual: grad.norm(),
        iterations: 1,
        non_unique: rank < data.dim(),
    })
}

/// `‖t̂ − t*‖₂`, `‖t̂ − t*‖₁` and `‖Σ^{1/2}(t̂ − t*)‖₂`.
pub fn estimate_error(
    coefficients: &DVector<f64>,
    truth: &GroundTruth,
    design_spec: &GaussianDesignSpec,
) -> Result<EstimationError> {
    if coefficients.len() != truth.dim() || truth.dim() != design_spec.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} coordinates, truth {}, design {}",
            coefficients.len(),
            truth.dim(),
            design_spec.dim()
        )));
    }
    let diff: Vec<f64> = coefficients.iter().zip(truth.coefficients()).map(|(a, b)| a - b).collect();
    let l2 = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    let l1 = diff.iter().map(|d| d.abs()).sum();
    let weighted = if design_spec.is_isotropic() {
        l2
    } else {
        design_spec.quadratic_form(&diff)?.max(0.0).sqrt()
    };
    Ok(EstimationError { l2, l1, weighted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_regression_dataset, ContaminationSpec, NoiseModel, OutlierGenerator};

    fn huber(g: f64) -> HuberParams {
        HuberParams::new(g).unwrap()
    }

    fn dataset(n: usize, p: usize, noise: NoiseModel, outliers: usize, seed: u64) -> ContaminatedDataset {
        let spec = GaussianDesignSpec::identity(p).unwrap();
        let truth = GroundTruth::dense_gaussian(p, seed ^ 0xabc);
        let c = ContaminationSpec {
            count: outliers,
            generator: OutlierGenerator::DEFAULT_UNIFORM,
            seed: seed + 1,
        };
        make_regression_dataset(&spec, &truth, &noise, &c, n, seed).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        let v = [1.5, -2.0, 0.0, 7.25];
        assert_eq!(soft_threshold_all(&v, 0.0).unwrap(), v.to_vec());
        assert!(soft_threshold_all(&v, -1.0).is_err());
    }

    #[test]
    fn erm_recovers_noiseless_truth() {
        let ds = dataset(200, 10, NoiseModel::Gaussian { sigma: 1e-300 }, 0, 3);
        let fit = fit_erm_huber(&ds, &huber(1.0), &SolverConfig::default()).unwrap();
        let spec = GaussianDesignSpec::identity(10).unwrap();
        let err = estimate_error(&fit.coefficients, ds.truth.as_ref().unwrap(), &spec).unwrap();
        assert!(err.l2 <= 1e-6, "l2 error {}", err.l2);
        assert!(fit.converged);
        assert!(!fit.non_unique);
    }

    #[test]
    fn converged_means_small_gradient() {
        let ds = dataset(300, 12, NoiseModel::Cauchy { scale: 1.0 }, 30, 5);
        let p = huber(1.0);
        let cfg = SolverConfig::default();
        let fit = fit_erm_huber(&ds, &p, &cfg).unwrap();
        assert!(fit.converged);
        let g = huber_risk_gradient(&ds, &p, &fit.coefficients).unwrap();
        assert!(g.norm() <= cfg.tol);
        assert!((g.norm() - fit.stationarity_residual).abs() <= 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let ds = dataset(300, 12, NoiseModel::Cauchy { scale: 1.0 }, 30, 5);
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::default()
        };
        let fit = fit_erm_huber(&ds, &huber(1.0), &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
        assert!(fit.stationarity_residual > cfg.tol);
    }

    #[test]
    fn monotone_trace_for_plain_gradient_descent() {
        let ds = dataset(150, 8, NoiseModel::StudentT { df: 2.0 }, 15, 9);
        for rule in [StepRule::FixedFromLipschitz, StepRule::Backtracking { beta: 0.5 }] {
            for acceleration in [false, true] {
                let cfg = SolverConfig {
                    step_rule: rule,
                    acceleration,
                    ..SolverConfig::default()
                };
                let fit = fit_l1_huber(&ds, &huber(1.0), 0.01, &cfg).unwrap();
                for w in fit.objective_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-10, "{rule:?}/{acceleration}: {} -> {}", w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn underdetermined_erm_is_flagged() {
        let ds = dataset(8, 20, NoiseModel::Gaussian { sigma: 1.0 }, 0, 2);
        let cfg = SolverConfig {
            max_iter: 500,
            ..SolverConfig::default()
        };
        let fit = fit_erm_huber(&ds, &huber(1.0), &cfg).unwrap();
        assert!(fit.non_unique);
    }

    #[test]
    fn zero_labels_give_zero_lasso() {
        let mut ds = dataset(50, 6, NoiseModel::Gaussian { sigma: 1.0 }, 0, 4);
        ds.labels.fill(0.0);
        for lambda in [1e-6, 0.1, 10.0] {
            let fit = fit_l1_huber(&ds, &huber(1.0), lambda, &SolverConfig::default()).unwrap();
            assert_eq!(fit.coefficients.amax(), 0.0);
        }
    }

    #[test]
    fn large_lambda_gives_zero() {
        let ds = dataset(80, 10, NoiseModel::Cauchy { scale: 1.0 }, 8, 6);
        let p = huber(1.0);
        let g0 = huber_risk_gradient(&ds, &p, &DVector::zeros(10)).unwrap();
        let lambda = g0.amax();
        let fit = fit_l1_huber(&ds, &p, lambda * 1.0001, &SolverConfig::default()).unwrap();
        assert_eq!(fit.coefficients.amax(), 0.0);
        let below = fit_l1_huber(&ds, &p, lambda * 0.9, &SolverConfig::default()).unwrap();
        assert!(below.coefficients.amax() > 0.0);
    }

    #[test]
    fn objective_examples() {
        let ds = dataset(40, 5, NoiseModel::Gaussian { sigma: 1e-300 }, 0, 8);
        let t = DVector::from_column_slice(ds.truth.as_ref().unwrap().coefficients());
        assert!(objective_eval(&ds, &huber(1.0), 0.0, &t).unwrap() < 1e-28);
        let mut zero = ds.clone();
        zero.labels.fill(0.0);
        assert_eq!(objective_eval(&zero, &huber(1.0), 0.3, &DVector::zeros(5)).unwrap(), 0.0);
        assert!(objective_eval(&ds, &huber(1.0), 0.0, &DVector::zeros(4)).is_err());
        assert!(objective_eval(&ds, &huber(1.0), -1.0, &t).is_err());
    }

    #[test]
    fn error_norms() {
        let truth = GroundTruth::new(vec![1.0, 2.0, 3.0]).unwrap();
        let same = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let iso = GaussianDesignSpec::identity(3).unwrap();
        assert_eq!(
            estimate_error(&same, &truth, &iso).unwrap(),
            EstimationError { l2: 0.0, l1: 0.0, weighted: 0.0 }
        );
        let off = DVector::from_vec(vec![2.0, 2.0, 3.0]);
        let diag = GaussianDesignSpec::diagonal(vec![4.0, 1.0, 1.0]).unwrap();
        let e = estimate_error(&off, &truth, &diag).unwrap();
        assert_eq!((e.l2, e.l1, e.weighted), (1.0, 1.0, 2.0));
        let v = DVector::from_vec(vec![0.3, -1.1, 2.0]);
        let e = estimate_error(&v, &truth, &iso).unwrap();
        assert!((e.weighted - e.l2).abs() <= 1e-12);
        assert!(estimate_error(&DVector::zeros(2), &truth, &iso).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let ds = dataset(20, 3, NoiseModel::Gaussian { sigma: 1.0 }, 0, 1);
        let bad = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(fit_erm_huber(&ds, &huber(1.0), &bad).is_err());
        let bad = SolverConfig {
            step_rule: StepRule::Backtracking { beta: 1.0 },
            ..SolverConfig::default()
        };
        assert!(fit_erm_huber(&ds, &huber(1.0), &bad).is_err());
        assert!(fit_l1_huber(&ds, &huber(1.0), 0.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn step_rules_agree() {
        for seed in 0..50 {
            let ds = dataset(80, 6, NoiseModel::StudentT { df: 2.0 }, 8, 100 + seed);
            let fixed = SolverConfig {
                step_rule: StepRule::FixedFromLipschitz,
                tol: 1e-10,
                ..SolverConfig::default()
            };
            let back = SolverConfig { tol: 1e-10, ..SolverConfig::default() };
            let a = fit_l1_huber(&ds, &huber(1.0), 0.02, &fixed).unwrap();
            let b = fit_l1_huber(&ds, &huber(1.0), 0.02, &back).unwrap();
            assert!(a.converged && b.converged, "seed {seed}");
            let gap = (&a.coefficients - &b.coefficients).amax();
            assert!(gap <= 1e-7, "seed {seed}: gap {gap:e}");
        }
    }

    #[test]
    fn lasso_path_support_shrinks() {
        let ds = dataset(200, 10, NoiseModel::Gaussian { sigma: 1.0 }, 0, 17);
        let cfg = SolverConfig { tol: 1e-10, ..SolverConfig::default() };
        let mut last = usize::MAX;
        for lambda in [1e-3, 1e-2, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6] {
            let fit = fit_l1_huber(&ds, &huber(1.0), lambda, &cfg).unwrap();
            let nnz = fit.coefficients.iter().filter(|c| **c != 0.0).count();
            assert!(nnz <= last, "lambda {lambda}: {nnz} nonzeros after {last}");
            last = nnz;
        }
        assert_eq!(last, 0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn acceleration_never_ends_higher(seed in 0u64..10_000, gamma in 0.2f64..3.0, lambda in 1e-3f64..0.2) {
            let ds = dataset(60, 8, NoiseModel::Cauchy { scale: 1.0 }, 6, seed);
            let fast = SolverConfig { tol: 1e-9, ..SolverConfig::default() };
            let slow = SolverConfig { acceleration: false, max_iter: 200_000, ..fast };
            let a = fit_l1_huber(&ds, &huber(gamma), lambda, &fast).unwrap();
            let b = fit_l1_huber(&ds, &huber(gamma), lambda, &slow).unwrap();
            proptest::prop_assert!(a.final_objective() <= b.final_objective() + 1e-8,
                "accelerated {} vs plain {}", a.final_objective(), b.final_objective());
        }
    }
}
