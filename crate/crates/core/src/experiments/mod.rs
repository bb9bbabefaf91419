//! Outlier-fraction sweeps: for every noise law, outlier fraction and trial,
//! generate a contaminated dataset, fit one estimator and record its error.
//!
//! Seeding uses common random numbers. The design and the clean noise of a
//! trial depend only on `(root_seed, noise, trial)` and are shared across
//! outlier fractions; only the outlier positions and values change with the
//! fraction. The ground truth depends on the root seed alone.

mod output;
mod svg;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::{
    generate_design, make_regression_dataset, ContaminationSpec, GaussianDesignSpec, GroundTruth, NoiseModel,
    OutlierGenerator,
};
use crate::error::{invalid, Result};
use crate::kernel::{fit_rkhs_huber, gram_matrix, predict, Kernel};
use crate::linear::{estimate_error, fit_erm_huber, fit_l1_huber, fit_ols, FitResult, SolverConfig, StepRule};
use crate::loss::HuberParams;
use crate::rng::{derive_seed, rng_from_seed};

pub use output::{emit_outputs, read_rows_csv, write_fits_csv, write_rows_csv, write_summary_csv, OutputPaths};
pub use svg::render_svg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    ErmHuber,
    L1Huber { lambda: f64 },
    RkhsHuber { kernel: Kernel, lambda: f64 },
    OlsBaseline,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::ErmHuber => "erm-huber",
            Estimator::L1Huber { .. } => "l1-huber",
            Estimator::RkhsHuber { .. } => "rkhs-huber",
            Estimator::OlsBaseline => "ols",
        }
    }
}

/// Which error column the summary and plot use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMetric {
    L2,
    Weighted,
}

impl ErrorMetric {
    pub fn label(self) -> &'static str {
        match self {
            ErrorMetric::L2 => "l2 error",
            ErrorMetric::Weighted => "sigma-weighted l2 error",
        }
    }
}

/// Iteration budget of the high-dimensional ℓ1 preset. With `N = p = 1000`
/// and `λ = 1e−3` the composite objective is very flat, and proximal
/// gradient needs far more than this to reach `tol`. Fits that stop at the
/// cap are recorded with `converged = false`.
pub const FIGURE2_SOLVER: SolverConfig = SolverConfig {
    max_iter: 2000,
    tol: 1e-6,
    step_rule: StepRule::Backtracking { beta: 0.5 },
    acceleration: true,
};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub estimator: Estimator,
    pub n: usize,
    /// Feature dimension (`p` for linear estimators, input dimension for
    /// the kernel estimator).
    pub dim: usize,
    /// Number of nonzero coefficients of `t*`; `None` for a dense `t*`.
    pub sparsity: Option<usize>,
    pub gamma: f64,
    pub noise_models: Vec<NoiseModel>,
    pub outlier_fractions: Vec<f64>,
    pub trials: usize,
    pub root_seed: u64,
    pub outlier_range: (f64, f64),
    pub design: GaussianDesignSpec,
    pub solver: SolverConfig,
    /// Kernel sweeps: number of centers of the target function and number
    /// of fresh points on which its error is measured.
    pub rkhs_centers: usize,
    pub rkhs_test_points: usize,
}

impl SweepConfig {
    /// Isotropic design, `γ = 1`, outliers uniform on `±1e5`, fractions
    /// `0, 0.05, …, 0.4`, 20 trials, the three reference noise laws.
    pub fn new(estimator: Estimator, n: usize, dim: usize) -> Result<Self> {
        Ok(Self {
            estimator,
            n,
            dim,
            sparsity: None,
            gamma: 1.0,
            noise_models: vec![
                NoiseModel::Gaussian { sigma: 1.0 },
                NoiseModel::StudentT { df: 2.0 },
                NoiseModel::Cauchy { scale: 1.0 },
            ],
            outlier_fractions: (0..=8).map(|i| i as f64 * 0.05).collect(),
            trials: 20,
            root_seed: 0,
            outlier_range: (-1e5, 1e5),
            design: GaussianDesignSpec::identity(dim)?,
            solver: SolverConfig::default(),
            rkhs_centers: 10,
            rkhs_test_points: 500,
        })
    }

    /// ERM Huber with `N = 1000`, `p = 50`, 20 trials.
    pub fn figure1() -> Self {
        Self::new(Estimator::ErmHuber, 1000, 50).expect("valid dimension")
    }

    /// ℓ1 Huber with `λ = 1e−3`, `N = p = 1000`, `s = 50`, 10 trials and
    /// the iteration budget of [`FIGURE2_SOLVER`].
    pub fn figure2() -> Self {
        let mut cfg = Self::new(Estimator::L1Huber { lambda: 1e-3 }, 1000, 1000).expect("valid dimension");
        cfg.sparsity = Some(50);
        cfg.trials = 10;
        cfg.solver = FIGURE2_SOLVER;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(invalid("n and dim must be at least 1"));
        }
        if self.trials == 0 {
            return Err(invalid("at least one trial is required"));
        }
        if self.noise_models.is_empty() || self.outlier_fractions.is_empty() {
            return Err(invalid("noise models and outlier fractions must be nonempty"));
        }
        for nm in &self.noise_models {
            nm.validate()?;
        }
        if self.outlier_fractions.iter().any(|f| !(0.0..=0.5).contains(f)) {
            return Err(invalid("outlier fractions must lie in [0, 0.5]"));
        }
        if self.outlier_fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("outlier fractions must be strictly increasing"));
        }
        if self.design.dim() != self.dim {
            return Err(invalid(format!(
                "design dimension {} differs from dim {}",
                self.design.dim(),
                self.dim
            )));
        }
        if let Some(s) = self.sparsity {
            if s > self.dim {
                return Err(invalid(format!("sparsity {s} exceeds dimension {}", self.dim)));
            }
        }
        let (lo, hi) = self.outlier_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("outlier range ({lo}, {hi}) is not a finite interval")));
        }
        HuberParams::new(self.gamma)?;
        self.solver.validate()?;
        match self.estimator {
            Estimator::L1Huber { lambda } | Estimator::RkhsHuber { lambda, .. } if !(lambda > 0.0) => {
                return Err(invalid(format!("lambda must be positive, got {lambda}")));
            }
            Estimator::RkhsHuber { kernel, .. } => {
                kernel.validate()?;
                if self.rkhs_centers == 0 || self.rkhs_test_points == 0 {
                    return Err(invalid("kernel sweeps need at least one center and one test point"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn metric(&self) -> ErrorMetric {
        match self.estimator {
            Estimator::RkhsHuber { .. } => ErrorMetric::L2,
            _ if self.design.is_isotropic() => ErrorMetric::L2,
            _ => ErrorMetric::Weighted,
        }
    }

    pub fn outlier_count(&self, fraction: f64) -> usize {
        ((fraction * self.n as f64).round() as usize).min(self.n / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub noise: String,
    pub fraction: f64,
    pub n_outliers: usize,
    pub trial: usize,
    pub l2_error: f64,
    pub l1_error: f64,
    pub weighted_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub estimator: String,
    pub metric: ErrorMetric,
    /// Ordered by noise (configuration order), fraction, then trial.
    pub rows: Vec<SweepRow>,
}

impl SweepRow {
    pub fn error(&self, metric: ErrorMetric) -> f64 {
        match metric {
            ErrorMetric::L2 => self.l2_error,
            ErrorMetric::Weighted => self.weighted_error,
        }
    }
}

const TRUTH_STREAM: u64 = 0;
const KERNEL_TEST_STREAM: u64 = 1;

fn noise_trial_seed(root: u64, noise_idx: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(root, 16 + noise_idx as u64), trial as u64)
}

fn contamination_seed(root: u64, noise_idx: usize, frac_idx: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(noise_trial_seed(root, noise_idx, trial), 1 << 32), frac_idx as u64)
}

/// Target function `f* = Σ a_j K(z_j, ·)` of kernel sweeps.
struct KernelTarget {
    centers: DMatrix<f64>,
    weights: DVector<f64>,
    test_points: DMatrix<f64>,
    test_values: DVector<f64>,
    /// `aᵀ K(Z, Z) a`.
    norm_sq: f64,
}

fn kernel_target(cfg: &SweepConfig, kernel: &Kernel) -> Result<KernelTarget> {
    use rand_distr::{Distribution, StandardNormal};
    let seed = derive_seed(cfg.root_seed, TRUTH_STREAM);
    let centers = generate_design(&cfg.design, cfg.rkhs_centers, derive_seed(seed, 0));
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    let weights = DVector::from_fn(cfg.rkhs_centers, |_, _| StandardNormal.sample(&mut rng));
    let test_points = generate_design(&cfg.design, cfg.rkhs_test_points, derive_seed(cfg.root_seed, KERNEL_TEST_STREAM));
    let test_values = predict(&weights, kernel, &centers, &test_points)?;
    let zz = gram_matrix(kernel, &centers)?.gram;
    let norm_sq = weights.dot(&(&zz * &weights));
    Ok(KernelTarget {
        centers,
        weights,
        test_points,
        test_values,
        norm_sq,
    })
}

fn make_row(cfg: &SweepConfig, noise: &NoiseModel, fraction: f64, trial: usize) -> SweepRow {
    SweepRow {
        noise: noise.label(),
        fraction,
        n_outliers: cfg.outlier_count(fraction),
        trial,
        l2_error: f64::NAN,
        l1_error: f64::NAN,
        weighted_error: f64::NAN,
        iterations: 0,
        converged: false,
    }
}

fn contamination(cfg: &SweepConfig, count: usize, seed: u64) -> ContaminationSpec {
    ContaminationSpec {
        count,
        generator: OutlierGenerator::UniformRange {
            lo: cfg.outlier_range.0,
            hi: cfg.outlier_range.1,
        },
        seed,
    }
}

fn run_linear_cell(cfg: &SweepConfig, truth: &GroundTruth, cell: (usize, usize, usize)) -> Result<SweepRow> {
    let (ni, fi, trial) = cell;
    let noise = &cfg.noise_models[ni];
    let fraction = cfg.outlier_fractions[fi];
    let mut row = make_row(cfg, noise, fraction, trial);
    let spec = contamination(cfg, row.n_outliers, contamination_seed(cfg.root_seed, ni, fi, trial));
    let data = make_regression_dataset(
        &cfg.design,
        truth,
        noise,
        &spec,
        cfg.n,
        noise_trial_seed(cfg.root_seed, ni, trial),
    )?;
    let params = HuberParams::new(cfg.gamma)?;
    let fit: FitResult = match cfg.estimator {
        Estimator::ErmHuber => fit_erm_huber(&data, &params, &cfg.solver)?,
        Estimator::L1Huber { lambda } => fit_l1_huber(&data, &params, lambda, &cfg.solver)?,
        Estimator::OlsBaseline => fit_ols(&data)?,
        Estimator::RkhsHuber { .. } => unreachable!("kernel cells are handled separately"),
    };
    let err = estimate_error(&fit.coefficients, truth, &cfg.design)?;
    row.l2_error = err.l2;
    row.l1_error = err.l1;
    row.weighted_error = err.weighted;
    row.iterations = fit.iterations;
    row.converged = fit.converged;
    Ok(row)
}

fn run_kernel_cell(cfg: &SweepConfig, target: &KernelTarget, cell: (usize, usize, usize)) -> Result<SweepRow> {
    let Estimator::RkhsHuber { kernel, lambda } = cfg.estimator else {
        unreachable!("linear cells are handled separately")
    };
    let (ni, fi, trial) = cell;
    let noise = &cfg.noise_models[ni];
    let fraction = cfg.outlier_fractions[fi];
    let mut row = make_row(cfg, noise, fraction, trial);
    let seed = noise_trial_seed(cfg.root_seed, ni, trial);
    let points = generate_design(&cfg.design, cfg.n, derive_seed(seed, 0));
    let clean = predict(&target.weights, &kernel, &target.centers, &points)?;
    let eps = noise.sample(cfg.n, derive_seed(seed, 1))?;
    let labels: Vec<f64> = clean.iter().zip(&eps).map(|(f, e)| f + e).collect();
    let spec = contamination(cfg, row.n_outliers, contamination_seed(cfg.root_seed, ni, fi, trial));
    let (labels, _) = crate::data::inject_outliers(&labels, &spec)?;
    let fac = gram_matrix(&kernel, &points)?;
    let fit = fit_rkhs_huber(&fac, &DVector::from_vec(labels), &HuberParams::new(cfg.gamma)?, lambda, &cfg.solver)?;
    let diff = predict(&fit.alpha, &kernel, &points, &target.test_points)? - &target.test_values;
    let m = diff.len() as f64;
    row.l2_error = (diff.norm_squared() / m).sqrt();
    row.l1_error = diff.lp_norm(1) / m;
    // ‖f̂ − f*‖²_H = αᵀKα − 2αᵀK(X, Z)a + aᵀK(Z, Z)a
    let cross = predict(&fit.alpha, &kernel, &points, &target.centers)?.dot(&target.weights);
    let h2 = fit.hilbert_norm * fit.hilbert_norm - 2.0 * cross + target.norm_sq;
    row.weighted_error = h2.max(0.0).sqrt();
    row.iterations = fit.fit.iterations;
    row.converged = fit.fit.converged;
    Ok(row)
}

/// Runs every (noise, fraction, trial) cell. Cells run in parallel; each has
/// its own derived seeds and rows are returned in a fixed order, so the
/// result does not depend on scheduling. A fit that hits `max_iter` is
/// recorded with `converged = false`.
pub fn sweep_outliers(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let cells: Vec<(usize, usize, usize)> = (0..cfg.noise_models.len())
        .flat_map(|ni| (0..cfg.outlier_fractions.len()).flat_map(move |fi| (0..cfg.trials).map(move |t| (ni, fi, t))))
        .collect();
    let rows: Vec<Result<SweepRow>> = match cfg.estimator {
        Estimator::RkhsHuber { kernel, .. } => {
            let target = kernel_target(cfg, &kernel)?;
            cells.par_iter().map(|c| run_kernel_cell(cfg, &target, *c)).collect()
        }
        _ => {
            let seed = derive_seed(cfg.root_seed, TRUTH_STREAM);
            let truth = match cfg.sparsity {
                Some(s) => GroundTruth::sparse_gaussian(cfg.dim, s, seed)?,
                None => GroundTruth::dense_gaussian(cfg.dim, seed),
            };
            cells.par_iter().map(|c| run_linear_cell(cfg, &truth, *c)).collect()
        }
    };
    Ok(SweepResult {
        estimator: cfg.estimator.name().to_string(),
        metric: cfg.metric(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryPoint {
    pub noise: String,
    pub fraction: f64,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub converged: usize,
}

/// Ordinary least-squares line through `(fraction, mean error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 by convention when the means do not
    /// vary.
    pub r2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSummary {
    pub noise: String,
    pub points: Vec<SummaryPoint>,
    /// Fit over points with fraction at least the summary's `fit_from`;
    /// omitted with fewer than two such points.
    pub fit: Option<LinearFit>,
    /// Rank correlation between fraction and mean error over all points;
    /// omitted with fewer than two points.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub estimator: String,
    pub metric: ErrorMetric,
    pub fit_from: f64,
    pub per_noise: Vec<NoiseSummary>,
}

/// Per-(noise, fraction) means and standard errors, with the linear fit
/// taken over all fractions.
pub fn summarize(result: &SweepResult) -> Result<SweepSummary> {
    summarize_from(result, f64::NEG_INFINITY)
}

/// As [`summarize`], fitting the line only over fractions `≥ fit_from`.
pub fn summarize_from(result: &SweepResult, fit_from: f64) -> Result<SweepSummary> {
    if result.rows.is_empty() {
        return Err(invalid("cannot summarize an empty sweep"));
    }
    let mut per_noise: Vec<NoiseSummary> = Vec::new();
    for row in &result.rows {
        if per_noise.last().is_none_or(|s| s.noise != row.noise) {
            per_noise.push(NoiseSummary {
                noise: row.noise.clone(),
                points: Vec::new(),
                fit: None,
                spearman: None,
            });
        }
    }
    for summary in &mut per_noise {
        let rows: Vec<&SweepRow> = result.rows.iter().filter(|r| r.noise == summary.noise).collect();
        let mut fractions: Vec<f64> = rows.iter().map(|r| r.fraction).collect();
        fractions.sort_by(f64::total_cmp);
        fractions.dedup();
        for f in fractions {
            let cell: Vec<&&SweepRow> = rows.iter().filter(|r| r.fraction == f).collect();
            let errs: Vec<f64> = cell.iter().map(|r| r.error(result.metric)).collect();
            let (mean, se) = mean_and_se(&errs);
            summary.points.push(SummaryPoint {
                noise: summary.noise.clone(),
                fraction: f,
                trials: errs.len(),
                mean,
                std_error: se,
                converged: cell.iter().filter(|r| r.converged).count(),
            });
        }
        let xs: Vec<f64> = summary.points.iter().map(|p| p.fraction).collect();
        let ys: Vec<f64> = summary.points.iter().map(|p| p.mean).collect();
        let (fx, fy): (Vec<f64>, Vec<f64>) = xs.iter().zip(&ys).filter(|(x, _)| **x >= fit_from).map(|(x, y)| (*x, *y)).unzip();
        summary.fit = linear_fit(&fx, &fy);
        summary.spearman = spearman(&xs, &ys);
    }
    Ok(SweepSummary {
        estimator: result.estimator.clone(),
        metric: result.metric,
        fit_from,
        per_noise,
    })
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: x.len(),
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[order[k]] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let m = (n + 1.0) / 2.0;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - m).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(estimator: Estimator) -> SweepConfig {
        let mut cfg = SweepConfig::new(estimator, 120, 5).unwrap();
        cfg.trials = 2;
        cfg.outlier_fractions = vec![0.0, 0.1, 0.2];
        cfg.root_seed = 9;
        cfg
    }

    #[test]
    fn single_cell_gives_one_row() {
        let mut cfg = small(Estimator::ErmHuber);
        cfg.trials = 1;
        cfg.outlier_fractions = vec![0.0];
        cfg.noise_models = vec![NoiseModel::Gaussian { sigma: 1.0 }];
        assert_eq!(sweep_outliers(&cfg).unwrap().rows.len(), 1);
    }

    #[test]
    fn row_count_and_order() {
        let cfg = small(Estimator::ErmHuber);
        let res = sweep_outliers(&cfg).unwrap();
        assert_eq!(res.rows.len(), 3 * 3 * 2);
        assert_eq!(res.rows[0].noise, "gaussian(1)");
        assert_eq!((res.rows[1].fraction, res.rows[1].trial), (0.0, 1));
        assert_eq!(res.rows[2].fraction, 0.1);
        assert_eq!(res.rows[2].n_outliers, 12);
        assert!(res.rows.iter().all(|r| r.converged && r.l2_error.is_finite()));
        assert_eq!(res, sweep_outliers(&cfg).unwrap());
    }

    #[test]
    fn clean_cells_share_design_across_fractions() {
        // with no outliers in either cell the dataset is identical, so the
        // error must be too
        let mut cfg = small(Estimator::ErmHuber);
        cfg.outlier_fractions = vec![0.0, 0.001];
        let res = sweep_outliers(&cfg).unwrap();
        assert_eq!(res.rows[0].l2_error, res.rows[2].l2_error);
    }

    #[test]
    fn other_estimators_run() {
        let mut l1 = small(Estimator::L1Huber { lambda: 1e-3 });
        l1.sparsity = Some(2);
        assert!(sweep_outliers(&l1).unwrap().rows.iter().all(|r| r.converged));
        let ols = sweep_outliers(&small(Estimator::OlsBaseline)).unwrap();
        assert!(ols.rows.iter().all(|r| r.l2_error.is_finite()));
        let mut k = small(Estimator::RkhsHuber {
            kernel: Kernel::gaussian_rbf(1.0).unwrap(),
            lambda: 1e-3,
        });
        k.dim = 1;
        k.design = GaussianDesignSpec::identity(1).unwrap();
        k.rkhs_test_points = 50;
        let res = sweep_outliers(&k).unwrap();
        assert!(res.rows.iter().all(|r| r.l2_error.is_finite() && r.weighted_error.is_finite()));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = small(Estimator::ErmHuber);
        cfg.outlier_fractions = vec![0.2, 0.1];
        assert!(sweep_outliers(&cfg).is_err());
        cfg.outlier_fractions = vec![0.6];
        assert!(sweep_outliers(&cfg).is_err());
        let mut cfg = small(Estimator::ErmHuber);
        cfg.trials = 0;
        assert!(sweep_outliers(&cfg).is_err());
    }

    fn synthetic(errors: impl Fn(f64) -> f64) -> SweepResult {
        let mut rows = Vec::new();
        for i in 0..5 {
            let f = i as f64 * 0.1;
            for t in 0..3 {
                rows.push(SweepRow {
                    noise: "n".into(),
                    fraction: f,
                    n_outliers: 0,
                    trial: t,
                    l2_error: errors(f),
                    l1_error: 0.0,
                    weighted_error: 0.0,
                    iterations: 1,
                    converged: true,
                });
            }
        }
        SweepResult {
            estimator: "test".into(),
            metric: ErrorMetric::L2,
            rows,
        }
    }

    #[test]
    fn summary_of_exact_line() {
        let s = summarize(&synthetic(|f| 2.0 * f)).unwrap();
        let fit = s.per_noise[0].fit.unwrap();
        assert!((fit.slope - 2.0).abs() <= 1e-12);
        assert!(fit.intercept.abs() <= 1e-12);
        assert!((fit.r2 - 1.0).abs() <= 1e-12);
        assert!((s.per_noise[0].spearman.unwrap() - 1.0).abs() <= 1e-12);
        assert!(s.per_noise[0].points[2].std_error <= 1e-15);
    }

    #[test]
    fn summary_of_constant_errors() {
        let s = summarize(&synthetic(|_| 0.7)).unwrap();
        let fit = s.per_noise[0].fit.unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn single_fraction_has_no_fit() {
        let mut r = synthetic(|f| f);
        r.rows.retain(|row| row.fraction == 0.0);
        let s = summarize(&r).unwrap();
        assert!(s.per_noise[0].fit.is_none());
        assert!(summarize(&SweepResult { rows: vec![], ..r }).is_err());
    }

    #[test]
    fn spearman_handles_ties() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(rho > 0.9 && rho < 1.0);
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
    }
}
