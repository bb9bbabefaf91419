use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, ensure_finite, Result};
use crate::rng::rng_from_seed;

/// How an outlier label is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlierGenerator {
    /// Fresh draw from `Uniform[lo, hi]`, independent of the clean label.
    UniformRange { lo: f64, hi: f64 },
    /// Clean label plus a fixed shift.
    ConstantShift(f64),
    /// `y ↦ −10 y`.
    AdversarialFlip,
}

impl OutlierGenerator {
    /// Symmetric `±1e5` uniform outliers used by the reproduction sweeps.
    pub const DEFAULT_UNIFORM: OutlierGenerator = OutlierGenerator::UniformRange { lo: -1e5, hi: 1e5 };

    fn validate(&self) -> Result<()> {
        match *self {
            OutlierGenerator::UniformRange { lo, hi } => {
                ensure_finite(lo, "outlier range")?;
                ensure_finite(hi, "outlier range")?;
                if lo > hi {
                    return Err(invalid(format!("empty outlier range [{lo}, {hi}]")));
                }
            }
            OutlierGenerator::ConstantShift(c) => ensure_finite(c, "outlier shift")?,
            OutlierGenerator::AdversarialFlip => {}
        }
        Ok(())
    }
}

/// `count` labels are replaced, at positions chosen uniformly without
/// replacement from a stream seeded by `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub count: usize,
    pub generator: OutlierGenerator,
    pub seed: u64,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        Self {
            count: 0,
            generator: OutlierGenerator::DEFAULT_UNIFORM,
            seed: 0,
        }
    }
}

/// Returns the contaminated labels and the sorted outlier indices. Labels
/// outside the returned index set are bit-identical to the input.
pub fn inject_outliers(labels: &[f64], spec: &ContaminationSpec) -> Result<(Vec<f64>, Vec<usize>)> {
    spec.generator.validate()?;
    let n = labels.len();
    if spec.count > n {
        return Err(invalid(format!("{} outliers requested for {n} labels", spec.count)));
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut idx = index::sample(&mut rng, n, spec.count).into_vec();
    idx.sort_unstable();
    let mut out = labels.to_vec();
    for &i in &idx {
        out[i] = match spec.generator {
            OutlierGenerator::UniformRange { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..=hi)
                }
            }
            OutlierGenerator::ConstantShift(c) => labels[i] + c,
            OutlierGenerator::AdversarialFlip => -10.0 * labels[i],
        };
    }
    Ok((out, idx))
}
