use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

/// Tolerance on the smallest eigenvalue, relative to the largest, below which
/// a covariance is rejected as indefinite.
const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Identity(usize),
    Diagonal(Vec<f64>),
    /// `Σ_ij = ρ^|i−j|`.
    Toeplitz { dim: usize, rho: f64 },
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone)]
enum Factor {
    Identity,
    Diagonal(Vec<f64>),
    /// Left factor `F` with `F Fᵀ = Σ`.
    Dense(DMatrix<f64>),
}

/// Centered Gaussian design `N(0, Σ)` on `ℝ^p`.
#[derive(Debug, Clone)]
pub struct GaussianDesignSpec {
    covariance: Covariance,
    dim: usize,
    trace: f64,
    factor: Factor,
}

impl GaussianDesignSpec {
    pub fn new(covariance: Covariance) -> Result<Self> {
        let (dim, trace, factor) = match &covariance {
            Covariance::Identity(p) => (*p, *p as f64, Factor::Identity),
            Covariance::Diagonal(d) => {
                if let Some(bad) = d.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::NotPositiveSemidefinite { min_eigenvalue: *bad });
                }
                let sqrt = d.iter().map(|v| v.sqrt()).collect();
                (d.len(), d.iter().sum(), Factor::Diagonal(sqrt))
            }
            Covariance::Toeplitz { dim, rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(invalid(format!("toeplitz correlation must lie in (-1, 1), got {rho}")));
                }
                let sigma = toeplitz(*dim, *rho);
                (*dim, *dim as f64, Factor::Dense(left_factor(&sigma)?))
            }
            Covariance::Dense(sigma) => {
                if !sigma.is_square() {
                    return Err(Error::DimensionMismatch(format!(
                        "covariance is {}x{}",
                        sigma.nrows(),
                        sigma.ncols()
                    )));
                }
                if sigma.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("covariance"));
                }
                let asym = (sigma - sigma.transpose()).amax();
                if asym > 1e-12 * sigma.amax().max(1.0) {
                    return Err(invalid(format!("covariance is not symmetric (max asymmetry {asym:e})")));
                }
                (sigma.nrows(), sigma.trace(), Factor::Dense(left_factor(sigma)?))
            }
        };
        if dim == 0 {
            return Err(invalid("design dimension must be positive"));
        }
        Ok(Self {
            covariance,
            dim,
            trace,
            factor,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(Covariance::Identity(dim))
    }

    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        Self::new(Covariance::Diagonal(diag))
    }

    pub fn toeplitz(dim: usize, rho: f64) -> Result<Self> {
        Self::new(Covariance::Toeplitz { dim, rho })
    }

    pub fn dense(sigma: DMatrix<f64>) -> Result<Self> {
        Self::new(Covariance::Dense(sigma))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Tr(Σ)`.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.covariance, Covariance::Identity(_))
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        match &self.covariance {
            Covariance::Identity(p) => DMatrix::identity(*p, *p),
            Covariance::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Covariance::Toeplitz { dim, rho } => toeplitz(*dim, *rho),
            Covariance::Dense(s) => s.clone(),
        }
    }

    /// `vᵀ Σ v`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against a {}-dimensional design",
                v.len(),
                self.dim
            )));
        }
        Ok(match &self.covariance {
            Covariance::Identity(_) => v.iter().map(|x| x * x).sum(),
            Covariance::Diagonal(d) => v.iter().zip(d).map(|(x, s)| s * x * x).sum(),
            _ => {
                let sigma = self.covariance_matrix();
                let v = nalgebra::DVector::from_column_slice(v);
                v.dot(&(&sigma * &v))
            }
        })
    }

    /// Maps a standard normal vector `z` to `F z`, a draw from `N(0, Σ)`.
    pub(crate) fn color(&self, z: &mut [f64], scratch: &mut Vec<f64>) {
        match &self.factor {
            Factor::Identity => {}
            Factor::Diagonal(d) => z.iter_mut().zip(d).for_each(|(x, s)| *x *= s),
            Factor::Dense(f) => {
                scratch.clear();
                scratch.extend_from_slice(z);
                for (i, out) in z.iter_mut().enumerate() {
                    *out = (0..f.ncols()).map(|j| f[(i, j)] * scratch[j]).sum();
                }
            }
        }
    }
}

pub fn toeplitz(dim: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

/// Cholesky factor when `Σ` is positive definite, otherwise the symmetric
/// square root from an eigendecomposition with tiny negative eigenvalues
/// clamped to zero.
fn left_factor(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = sigma.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let max = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE * max {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose())
}

/// Draws `n` i.i.d. rows from `N(0, Σ)`. Rows are generated in order from a
/// single stream, so the matrix is a pure function of `(spec, n, seed)`.
pub fn generate_design(spec: &GaussianDesignSpec, n: usize, seed: u64) -> DMatrix<f64> {
    let p = spec.dim;
    let mut rng = rng_from_seed(seed);
    let mut data = vec![0.0; n * p];
    let mut scratch = Vec::with_capacity(p);
    for row in data.chunks_mut(p) {
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        spec.color(row, &mut scratch);
    }
    DMatrix::from_row_slice(n, p, &data)
}
