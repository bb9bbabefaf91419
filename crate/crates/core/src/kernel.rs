//! Huber regression in a reproducing kernel Hilbert space with the penalty
//! `λ‖f‖_H` (the norm itself, not its square).
//!
//! By the representer property the minimizer lies in the span of
//! `K(x_i, ·)`: projecting any `f` onto that span leaves its values at the
//! sample points unchanged and does not increase its norm. Writing
//! `f = Σ α_i K(x_i, ·)` and `β = K^{1/2} α` gives `‖f‖_H = ‖β‖₂` and
//! predictions `K^{1/2} β`, so the problem becomes a Huber regression with
//! design `K^{1/2}` and a group-lasso penalty whose prox is exact shrinkage.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::linalg::sym_eigen_desc;
use crate::linear::{FitResult, SolverConfig, StepRule};
use crate::loss::HuberParams;
use crate::prox_grad::{Composite, NormPenalty};

/// Eigenvalues of the Gram matrix below this are treated as zero.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Smallest eigenvalue tolerated before a Gram matrix counts as indefinite,
/// relative to `max(1, λ_max)`.
const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `exp(−‖x − y‖² / (2h²))`.
    GaussianRbf { bandwidth: f64 },
    /// `((⟨x, y⟩ + c) / (R² + c))^d`, bounded by 1 on the ball of radius `R`.
    Polynomial { degree: u32, offset: f64, radius: f64 },
}

impl Kernel {
    pub fn gaussian_rbf(bandwidth: f64) -> Result<Self> {
        let k = Kernel::GaussianRbf { bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn polynomial(degree: u32, offset: f64, radius: f64) -> Result<Self> {
        let k = Kernel::Polynomial { degree, offset, radius };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::GaussianRbf { bandwidth } => {
                if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                    return Err(invalid(format!("bandwidth must be positive, got {bandwidth}")));
                }
            }
            Kernel::Polynomial { degree, offset, radius } => {
                if degree == 0 {
                    return Err(invalid("polynomial degree must be at least 1"));
                }
                if !(offset >= 0.0 && offset.is_finite()) {
                    return Err(invalid(format!("polynomial offset must be nonnegative, got {offset}")));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(invalid(format!("domain radius must be positive, got {radius}")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::GaussianRbf { bandwidth } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            Kernel::Polynomial { degree, offset, radius } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                ((dot + offset) / (radius * radius + offset)).powi(degree as i32)
            }
        }
    }

    /// Whether `K(x, x) ≤ 1` is guaranteed at `x`.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        match *self {
            Kernel::GaussianRbf { .. } => true,
            Kernel::Polynomial { radius, .. } => x.iter().map(|v| v * v).sum::<f64>() <= radius * radius * (1.0 + 1e-12),
        }
    }
}

/// Gram matrix with its eigendecomposition and PSD square root.
#[derive(Debug, Clone)]
pub struct GramFactorization {
    pub gram: DMatrix<f64>,
    /// Nonincreasing, with values below [`EIGEN_CUTOFF`] set to zero.
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub sqrt_factor: DMatrix<f64>,
}

impl GramFactorization {
    pub fn n(&self) -> usize {
        self.gram.nrows()
    }

    /// Number of eigenvalues above the cutoff.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().take_while(|v| **v > 0.0).count()
    }

    /// Eigenvalues of `K/N`, the empirical stand-in for the integral
    /// operator's spectrum.
    pub fn normalized_spectrum(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.eigenvalues.iter().map(|v| v / n).collect()
    }
}

fn rows(points: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..points.nrows()).map(|i| points.row(i).iter().copied().collect()).collect()
}

/// Builds `K_ij = K(x_i, x_j)` for the rows of `points` and factorizes it.
pub fn gram_matrix(kernel: &Kernel, points: &DMatrix<f64>) -> Result<GramFactorization> {
    kernel.validate()?;
    if points.nrows() == 0 {
        return Err(invalid("at least one point is required"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel points"));
    }
    let pts = rows(points);
    let n = pts.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&pts[i], &pts[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gram matrix"));
    }
    factorize(gram)
}

fn factorize(gram: DMatrix<f64>) -> Result<GramFactorization> {
    let (mut eigenvalues, eigenvectors) = sym_eigen_desc(gram.clone());
    let n = gram.nrows();
    let top = eigenvalues[0].max(1.0);
    let min = eigenvalues[n - 1];
    if min < -PSD_TOLERANCE * top {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    eigenvalues.apply(|v| {
        if *v < EIGEN_CUTOFF {
            *v = 0.0
        }
    });
    let roots = eigenvalues.map(f64::sqrt);
    let sqrt_factor = &eigenvectors * DMatrix::from_diagonal(&roots) * eigenvectors.transpose();
    Ok(GramFactorization {
        gram,
        eigenvalues,
        eigenvectors,
        sqrt_factor,
    })
}

/// A kernel Huber fit: the solver output in the `β` parametrization, the
/// representer coefficients `α`, and `‖f̂‖_H = ‖β‖₂`.
#[derive(Debug, Clone)]
pub struct RkhsFit {
    pub fit: FitResult,
    pub alpha: DVector<f64>,
    pub hilbert_norm: f64,
}

/// `argmin_f (1/N) Σ ℓ^γ(f(x_i), y_i) + λ‖f‖_H` over the span of the kernel
/// sections at the sample points.
pub fn fit_rkhs_huber(
    fac: &GramFactorization,
    labels: &DVector<f64>,
    params: &HuberParams,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<RkhsFit> {
    cfg.validate()?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if labels.len() != fac.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for a {}-point Gram matrix",
            labels.len(),
            fac.n()
        )));
    }
    if labels.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("labels"));
    }
    let penalty = NormPenalty(lambda);
    let problem = Composite {
        op: &fac.sqrt_factor,
        labels,
        loss: params,
        reg: &penalty,
    };
    // ‖K^{1/2}‖²_op = λ_max(K)
    let mut lip = fac.eigenvalues[0] / fac.n() as f64;
    if cfg.step_rule == StepRule::FixedFromLipschitz {
        lip *= 1.01;
    }
    let fit = problem.minimize(DVector::zeros(fac.n()), lip, cfg);
    let alpha = recover_alpha(fac, &fit.coefficients);
    let hilbert_norm = fit.coefficients.norm();
    Ok(RkhsFit { fit, alpha, hilbert_norm })
}

/// `α = K^{+1/2} β` on the retained eigenspace.
pub fn recover_alpha(fac: &GramFactorization, beta: &DVector<f64>) -> DVector<f64> {
    let r = fac.rank();
    let v = fac.eigenvectors.columns(0, r);
    let mut coords = v.tr_mul(beta);
    for (c, lam) in coords.iter_mut().zip(fac.eigenvalues.iter()) {
        *c /= lam.sqrt();
    }
    v * coords
}

/// Gradient of the smooth part at `β = 0`; its norm is the smallest `λ` for
/// which the zero function is optimal.
pub fn zero_gradient_norm(fac: &GramFactorization, labels: &DVector<f64>, params: &HuberParams) -> Result<f64> {
    if labels.len() != fac.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for a {}-point Gram matrix",
            labels.len(),
            fac.n()
        )));
    }
    let problem = Composite {
        op: &fac.sqrt_factor,
        labels,
        loss: params,
        reg: &NormPenalty(0.0),
    };
    Ok(problem.smooth_grad(&DVector::zeros(fac.n())).norm())
}

/// `f̂(x) = Σ α_i K(x_i, x)` at each row of `query`.
pub fn predict(alpha: &DVector<f64>, kernel: &Kernel, train: &DMatrix<f64>, query: &DMatrix<f64>) -> Result<DVector<f64>> {
    if alpha.len() != train.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} training points",
            alpha.len(),
            train.nrows()
        )));
    }
    if train.ncols() != query.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "training points have {} features, query points {}",
            train.ncols(),
            query.ncols()
        )));
    }
    let tr = rows(train);
    let q = rows(query);
    Ok(DVector::from_iterator(
        q.len(),
        q.iter().map(|x| tr.iter().zip(alpha.iter()).map(|(xi, a)| a * kernel.eval(xi, x)).sum()),
    ))
}

/// Least-squares fit of `log λ_k = a + b log k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumDecay {
    /// `−1/b`.
    pub p_hat: f64,
    pub slope: f64,
    pub r2: f64,
    pub points_used: usize,
    /// `p̂ ∈ (0, 1)`, the range in which the complexity bound applies.
    pub in_assumed_range: bool,
}

/// Fits a power law to `values[k-1]` for `k` in `first..=last` (1-based),
/// skipping non-positive entries.
pub fn fit_power_law(values: &[f64], first: usize, last: usize) -> Result<SpectrumDecay> {
    if first == 0 || last < first {
        return Err(invalid(format!("invalid index range {first}..={last}")));
    }
    let last = last.min(values.len());
    let pts: Vec<(f64, f64)> = (first..=last)
        .filter(|&k| values[k - 1] > 0.0 && values[k - 1].is_finite())
        .map(|k| ((k as f64).ln(), values[k - 1].ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Degenerate(format!(
            "{} usable eigenvalues, at least 5 are needed",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Degenerate(format!("eigenvalues do not decay (slope {slope})")));
    }
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    let p_hat = -1.0 / slope;
    Ok(SpectrumDecay {
        p_hat,
        slope,
        r2,
        points_used: pts.len(),
        in_assumed_range: p_hat > 0.0 && p_hat < 1.0,
    })
}

/// Decay exponent of the spectrum of `K/N` over `k ∈ first..=last`.
/// Eigenvalues at the cutoff are dropped as numerically zero.
pub fn estimate_spectrum_decay(fac: &GramFactorization, first: usize, last: usize) -> Result<SpectrumDecay> {
    fit_power_law(&fac.normalized_spectrum(), first, last)
}

/// Checked `K(x, y)`.
pub fn kernel_value(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    kernel.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("points of length {} and {}", x.len(), y.len())));
    }
    let v = kernel.eval(x, y);
    ensure_finite(v, "kernel value")?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn uniform_points(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(0.0..1.0))
    }

    fn rbf(h: f64) -> Kernel {
        Kernel::gaussian_rbf(h).unwrap()
    }

    #[test]
    fn rbf_gram_has_unit_diagonal_and_is_psd() {
        let fac = gram_matrix(&rbf(0.3), &uniform_points(60, 2, 1)).unwrap();
        assert!(fac.gram.diagonal().iter().all(|v| *v == 1.0));
        assert!(fac.eigenvalues.iter().all(|v| *v >= 0.0));
        let rec = &fac.eigenvectors * DMatrix::from_diagonal(&fac.eigenvalues) * fac.eigenvectors.transpose();
        assert!((&rec - &fac.gram).amax() <= 1e-8);
        assert!((&fac.sqrt_factor * &fac.sqrt_factor - &fac.gram).amax() <= 1e-8);
    }

    #[test]
    fn single_point_gram() {
        let x = DMatrix::from_row_slice(1, 2, &[0.3, -0.2]);
        let fac = gram_matrix(&rbf(1.0), &x).unwrap();
        assert_eq!(fac.gram.shape(), (1, 1));
        assert_eq!(fac.gram[(0, 0)], 1.0);
    }

    #[test]
    fn polynomial_kernel_is_bounded_on_its_ball() {
        let k = Kernel::polynomial(3, 1.0, 2.0).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..500 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.15..1.15)).collect();
            if !k.in_domain(&x) {
                continue;
            }
            let v = k.eval(&x, &x);
            assert!(v.abs() <= 1.0 + 1e-12, "K(x,x) = {v}");
        }
        let pts = DMatrix::from_fn(40, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let fac = gram_matrix(&k, &pts).unwrap();
        assert!((&fac.gram - fac.gram.transpose()).amax() == 0.0);
    }

    #[test]
    fn rejects_bad_kernels_and_points() {
        assert!(Kernel::gaussian_rbf(0.0).is_err());
        assert!(Kernel::polynomial(0, 1.0, 1.0).is_err());
        assert!(Kernel::polynomial(2, -1.0, 1.0).is_err());
        let bad = DMatrix::from_row_slice(2, 1, &[0.0, f64::NAN]);
        assert!(gram_matrix(&rbf(1.0), &bad).is_err());
        assert!(gram_matrix(&rbf(1.0), &DMatrix::zeros(0, 1)).is_err());
        assert!(kernel_value(&rbf(1.0), &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn large_lambda_gives_zero_function() {
        let pts = uniform_points(40, 1, 2);
        let fac = gram_matrix(&rbf(0.2), &pts).unwrap();
        let labels = DVector::from_fn(40, |i, _| (6.0 * pts[(i, 0)]).sin() + 0.1);
        let p = HuberParams::new(1.0).unwrap();
        let g0 = zero_gradient_norm(&fac, &labels, &p).unwrap();
        let fit = fit_rkhs_huber(&fac, &labels, &p, g0 * 1.0001, &SolverConfig::default()).unwrap();
        assert_eq!(fit.hilbert_norm, 0.0);
        assert!(fit.alpha.iter().all(|a| *a == 0.0));
        let fit = fit_rkhs_huber(&fac, &labels, &p, g0 * 0.5, &SolverConfig::default()).unwrap();
        assert!(fit.hilbert_norm > 0.0);
    }

    #[test]
    fn tiny_lambda_nearly_interpolates_rkhs_labels() {
        let pts = uniform_points(50, 1, 3);
        let k = rbf(0.3);
        let fac = gram_matrix(&k, &pts).unwrap();
        let centers = DMatrix::from_row_slice(3, 1, &[0.2, 0.5, 0.8]);
        let weights = DVector::from_vec(vec![1.0, -0.7, 0.4]);
        let labels = predict(&weights, &k, &centers, &pts).unwrap();
        let cfg = SolverConfig {
            max_iter: 200_000,
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let fit = fit_rkhs_huber(&fac, &labels, &HuberParams::new(1.0).unwrap(), 1e-10, &cfg).unwrap();
        let pred = predict(&fit.alpha, &k, &pts, &pts).unwrap();
        let worst = (&pred - &labels).amax();
        assert!(worst <= 1e-3, "max training residual {worst}");
    }

    #[test]
    fn hilbert_norm_matches_alpha_quadratic_form() {
        let pts = uniform_points(45, 2, 5);
        let fac = gram_matrix(&rbf(0.5), &pts).unwrap();
        let labels = DVector::from_fn(45, |i, _| pts[(i, 0)] - 2.0 * pts[(i, 1)] + if i % 9 == 0 { 50.0 } else { 0.0 });
        let fit = fit_rkhs_huber(&fac, &labels, &HuberParams::new(0.5).unwrap(), 1e-3, &SolverConfig::default()).unwrap();
        let quad = fit.alpha.dot(&(&fac.gram * &fit.alpha)).sqrt();
        assert!((quad - fit.hilbert_norm).abs() <= 1e-8, "{quad} vs {}", fit.hilbert_norm);
        for w in fit.fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn norm_shrinks_as_lambda_grows() {
        let pts = uniform_points(40, 1, 6);
        let fac = gram_matrix(&rbf(0.2), &pts).unwrap();
        let labels = DVector::from_fn(40, |i, _| (5.0 * pts[(i, 0)]).cos());
        let p = HuberParams::new(1.0).unwrap();
        let cfg = SolverConfig {
            tol: 1e-11,
            max_iter: 100_000,
            ..SolverConfig::default()
        };
        let mut prev = f64::INFINITY;
        for lambda in [1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3, 1.0] {
            let fit = fit_rkhs_huber(&fac, &labels, &p, lambda, &cfg).unwrap();
            assert!(fit.hilbert_norm <= prev + 1e-8, "λ={lambda}: {} > {prev}", fit.hilbert_norm);
            prev = fit.hilbert_norm;
        }
    }

    #[test]
    fn predict_examples() {
        let k = rbf(0.7);
        let train = uniform_points(10, 2, 7);
        let zero = predict(&DVector::zeros(10), &k, &train, &uniform_points(5, 2, 8)).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        let alpha = DVector::from_fn(10, |i, _| i as f64 - 4.5);
        let fac = gram_matrix(&k, &train).unwrap();
        let self_pred = predict(&alpha, &k, &train, &train).unwrap();
        assert!((self_pred - &fac.gram * &alpha).amax() <= 1e-10);
        let one = DMatrix::from_row_slice(1, 2, &[0.4, 0.1]);
        let v = predict(&DVector::from_vec(vec![1.0]), &k, &one, &one).unwrap();
        assert_eq!(v[0], 1.0);
        assert!(predict(&alpha, &k, &train, &DMatrix::zeros(1, 3)).is_err());
        assert!(predict(&DVector::zeros(3), &k, &train, &train).is_err());
    }

    #[test]
    fn power_law_recovery() {
        let inv_sq: Vec<f64> = (1..=200).map(|k| (k as f64).powi(-2)).collect();
        let fit = fit_power_law(&inv_sq, 1, 200).unwrap();
        assert!((fit.p_hat - 0.5).abs() <= 0.01);
        assert!(fit.r2 >= 0.999);
        assert!(fit.in_assumed_range);
        let inv: Vec<f64> = (1..=200).map(|k| 1.0 / k as f64).collect();
        let fit = fit_power_law(&inv, 1, 200).unwrap();
        assert!((fit.p_hat - 1.0).abs() <= 0.01);
        assert!(!fit.in_assumed_range);
        assert!(fit_power_law(&inv_sq, 1, 4).is_err());
        assert!(fit_power_law(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1, 6).is_err());
    }

    #[test]
    fn normalized_spectrum_has_unit_trace() {
        let pts = uniform_points(500, 1, 9);
        let fac = gram_matrix(&rbf(0.1), &pts).unwrap();
        let total: f64 = sym_eigen_desc(fac.gram.clone()).0.iter().sum::<f64>() / 500.0;
        assert!((total - 1.0).abs() <= 1e-10);
        let kept: f64 = fac.normalized_spectrum().iter().sum();
        assert!((kept - 1.0).abs() <= 1e-8);
        let decay = estimate_spectrum_decay(&fac, 1, 20).unwrap();
        assert!(decay.p_hat > 0.0);
    }
}
