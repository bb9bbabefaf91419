//! Synthetic regression data: Gaussian designs, symmetric noise and
//! label-only contamination.

mod contamination;
mod design;
mod io;
mod noise;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub use contamination::{inject_outliers, ContaminationSpec, OutlierGenerator};
pub use design::{generate_design, toeplitz, Covariance, GaussianDesignSpec};
pub use io::{format_f64, read_dataset_csv, write_dataset_csv};
pub use noise::NoiseModel;

/// The regression vector `t*` of the clean model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    coefficients: Vec<f64>,
}

impl GroundTruth {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("ground truth"));
        }
        Ok(Self { coefficients })
    }

    /// All `p` coordinates drawn i.i.d. `N(0, 1)`.
    pub fn dense_gaussian(dim: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let coefficients = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self { coefficients }
    }

    /// `sparsity` coordinates chosen uniformly, each drawn `N(0, 1)`; all
    /// others zero.
    pub fn sparse_gaussian(dim: usize, sparsity: usize, seed: u64) -> Result<Self> {
        if sparsity > dim {
            return Err(invalid(format!("sparsity {sparsity} exceeds dimension {dim}")));
        }
        let mut rng = rng_from_seed(seed);
        let mut support = index::sample(&mut rng, dim, sparsity).into_vec();
        support.sort_unstable();
        let mut coefficients = vec![0.0; dim];
        for j in support {
            let mut v: f64 = StandardNormal.sample(&mut rng);
            while v == 0.0 {
                v = StandardNormal.sample(&mut rng);
            }
            coefficients[j] = v;
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of nonzero coordinates.
    pub fn sparsity(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }
}

/// Design, labels and the (normally hidden) split into informative and
/// outlier indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminatedDataset {
    pub design: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub informative_idx: Vec<usize>,
    pub outlier_idx: Vec<usize>,
    pub truth: Option<GroundTruth>,
    /// False for data loaded without an outlier column: every index is then
    /// listed as informative because nothing is known.
    pub partition_known: bool,
}

impl ContaminatedDataset {
    /// Wraps observed data with no known partition.
    pub fn from_observations(design: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        if design.nrows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} design rows but {} labels",
                design.nrows(),
                labels.len()
            )));
        }
        Ok(Self {
            informative_idx: (0..labels.len()).collect(),
            outlier_idx: Vec::new(),
            truth: None,
            partition_known: false,
            design,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    pub fn is_outlier_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        for &i in &self.outlier_idx {
            mask[i] = true;
        }
        mask
    }
}

/// Draws `Y = X t* + ε` on `n` rows and contaminates `contamination.count`
/// labels. The design uses stream 0 of `seed` and the noise stream 1; the
/// contamination draws from its own seed.
pub fn make_regression_dataset(
    design_spec: &GaussianDesignSpec,
    truth: &GroundTruth,
    noise: &NoiseModel,
    contamination: &ContaminationSpec,
    n: usize,
    seed: u64,
) -> Result<ContaminatedDataset> {
    if truth.dim() != design_spec.dim() {
        return Err(Error::DimensionMismatch(format!(
            "ground truth has {} coordinates, design has {}",
            truth.dim(),
            design_spec.dim()
        )));
    }
    if 2 * contamination.count > n {
        return Err(invalid(format!(
            "{} outliers among {n} samples: at most half the sample may be contaminated",
            contamination.count
        )));
    }
    let design = generate_design(design_spec, n, derive_seed(seed, 0));
    let eps = noise.sample(n, derive_seed(seed, 1))?;
    let t = DVector::from_column_slice(truth.coefficients());
    let clean: Vec<f64> = (&design * &t).iter().zip(&eps).map(|(m, e)| m + e).collect();
    let (labels, outlier_idx) = inject_outliers(&clean, contamination)?;
    let mut is_out = vec![false; n];
    outlier_idx.iter().for_each(|&i| is_out[i] = true);
    let informative_idx = (0..n).filter(|&i| !is_out[i]).collect();
    Ok(ContaminatedDataset {
        design,
        labels: DVector::from_vec(labels),
        informative_idx,
        outlier_idx,
        truth: Some(truth.clone()),
        partition_known: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: usize) -> GaussianDesignSpec {
        GaussianDesignSpec::identity(p).unwrap()
    }

    #[test]
    fn sparsity_counts_nonzeros() {
        let t = GroundTruth::sparse_gaussian(100, 7, 3).unwrap();
        assert_eq!(t.sparsity(), 7);
        assert_eq!(GroundTruth::new(vec![0.0, 1.0, 0.0, -2.0]).unwrap().sparsity(), 2);
        assert!(GroundTruth::sparse_gaussian(3, 4, 0).is_err());
    }

    #[test]
    fn noiseless_labels_equal_linear_predictions() {
        let truth = GroundTruth::dense_gaussian(8, 1);
        let ds = make_regression_dataset(
            &spec(8),
            &truth,
            &NoiseModel::Gaussian { sigma: 1e-15 },
            &ContaminationSpec::none(),
            50,
            2,
        )
        .unwrap();
        let pred = &ds.design * DVector::from_column_slice(truth.coefficients());
        assert!((pred - &ds.labels).amax() <= 1e-12);
        assert!(ds.outlier_idx.is_empty());
        assert_eq!(ds.informative_idx.len(), 50);
    }

    #[test]
    fn partition_sizes_at_reproduction_scale() {
        let truth = GroundTruth::dense_gaussian(50, 1);
        let c = ContaminationSpec {
            count: 100,
            generator: OutlierGenerator::DEFAULT_UNIFORM,
            seed: 5,
        };
        let ds = make_regression_dataset(&spec(50), &truth, &NoiseModel::Gaussian { sigma: 1.0 }, &c, 1000, 9).unwrap();
        assert_eq!(ds.informative_idx.len(), 900);
        assert_eq!(ds.outlier_idx.len(), 100);
        let mut all: Vec<usize> = ds.informative_idx.iter().chain(&ds.outlier_idx).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn informative_labels_follow_the_model_exactly() {
        let truth = GroundTruth::dense_gaussian(5, 4);
        let noise = NoiseModel::StudentT { df: 2.0 };
        let c = ContaminationSpec {
            count: 10,
            generator: OutlierGenerator::DEFAULT_UNIFORM,
            seed: 8,
        };
        let seed = 77;
        let ds = make_regression_dataset(&spec(5), &truth, &noise, &c, 40, seed).unwrap();
        let eps = noise.sample(40, derive_seed(seed, 1)).unwrap();
        let pred = &ds.design * DVector::from_column_slice(truth.coefficients());
        for &i in &ds.informative_idx {
            assert_eq!(ds.labels[i].to_bits(), (pred[i] + eps[i]).to_bits());
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let truth = GroundTruth::dense_gaussian(6, 1);
        let c = ContaminationSpec {
            count: 5,
            generator: OutlierGenerator::DEFAULT_UNIFORM,
            seed: 3,
        };
        let noise = NoiseModel::Cauchy { scale: 1.0 };
        let a = make_regression_dataset(&spec(6), &truth, &noise, &c, 30, 4).unwrap();
        let b = make_regression_dataset(&spec(6), &truth, &noise, &c, 30, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_mismatch_and_majority_contamination() {
        let truth = GroundTruth::dense_gaussian(3, 1);
        let noise = NoiseModel::Gaussian { sigma: 1.0 };
        assert!(make_regression_dataset(&spec(4), &truth, &noise, &ContaminationSpec::none(), 10, 0).is_err());
        let c = ContaminationSpec {
            count: 6,
            ..ContaminationSpec::none()
        };
        assert!(make_regression_dataset(&spec(3), &truth, &noise, &c, 10, 0).is_err());
    }
}
