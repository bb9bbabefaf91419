//! Fixed workloads shared by the benchmarks.

use huberbench_core::data::{
    generate_design, make_regression_dataset, ContaminationSpec, GaussianDesignSpec, GroundTruth, NoiseModel,
    OutlierGenerator,
};
use huberbench_core::{ContaminatedDataset, DMatrix};

/// Student-t(2) regression with a dense truth and 5% uniform outliers.
pub fn regression_problem(n: usize, dim: usize, seed: u64) -> ContaminatedDataset {
    let spec = GaussianDesignSpec::identity(dim).expect("positive dimension");
    let truth = GroundTruth::dense_gaussian(dim, seed);
    let contamination = ContaminationSpec {
        count: n / 20,
        generator: OutlierGenerator::DEFAULT_UNIFORM,
        seed: seed + 1,
    };
    make_regression_dataset(&spec, &truth, &NoiseModel::StudentT { df: 2.0 }, &contamination, n, seed + 2)
        .expect("valid problem")
}

/// Sparse-truth variant for the ℓ1 solver.
pub fn sparse_problem(n: usize, dim: usize, sparsity: usize, seed: u64) -> ContaminatedDataset {
    let spec = GaussianDesignSpec::identity(dim).expect("positive dimension");
    let truth = GroundTruth::sparse_gaussian(dim, sparsity, seed).expect("sparsity fits");
    let contamination = ContaminationSpec {
        count: n / 20,
        generator: OutlierGenerator::DEFAULT_UNIFORM,
        seed: seed + 1,
    };
    make_regression_dataset(&spec, &truth, &NoiseModel::Gaussian { sigma: 1.0 }, &contamination, n, seed + 2)
        .expect("valid problem")
}

/// Standard Gaussian points in `ℝ^dim`, one per row.
pub fn kernel_points(n: usize, dim: usize, seed: u64) -> DMatrix<f64> {
    generate_design(&GaussianDesignSpec::identity(dim).expect("positive dimension"), n, seed)
}
