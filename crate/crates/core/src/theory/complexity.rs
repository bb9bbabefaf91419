use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::{generate_design, GaussianDesignSpec};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Draws are processed in fixed-size blocks, each with its own derived seed,
/// so estimates do not depend on the number of worker threads.
const BLOCK: usize = 1024;

pub const MIN_SAMPLES: usize = 100;

/// Centrally symmetric convex sets whose support function has a closed form
/// or an exact one-dimensional reduction.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    L2Ball { radius: f64 },
    L1Ball { radius: f64 },
    /// `ρB₁ ∩ rB₂`.
    Intersection { l2_radius: f64, l1_radius: f64 },
    /// `F(ρB₁)` for a linear map `F` (the convex hull of `±ρ` times the
    /// columns of `F`).
    EllipsoidL1 { factor: DMatrix<f64>, radius: f64 },
}

impl SetSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check = |name: &str, r: f64| {
            if r >= 0.0 && r.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be nonnegative and finite, got {r}")))
            }
        };
        match self {
            SetSpec::L2Ball { radius } | SetSpec::L1Ball { radius } => check("radius", *radius),
            SetSpec::Intersection { l2_radius, l1_radius } => {
                check("l2 radius", *l2_radius)?;
                check("l1 radius", *l1_radius)
            }
            SetSpec::EllipsoidL1 { factor, radius } => {
                check("radius", *radius)?;
                if factor.nrows() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "factor has {} rows for dimension {dim}",
                        factor.nrows()
                    )));
                }
                if factor.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("ellipsoid factor"));
                }
                Ok(())
            }
        }
    }

    /// `sup_{t ∈ T} ⟨t, g⟩`.
    pub fn support(&self, g: &[f64]) -> f64 {
        match self {
            SetSpec::L2Ball { radius } => radius * l2(g),
            SetSpec::L1Ball { radius } => radius * linf(g),
            SetSpec::Intersection { l2_radius, l1_radius } => intersection_support(g, *l2_radius, *l1_radius),
            SetSpec::EllipsoidL1 { factor, radius } => {
                // sup over F(ρB₁) of ⟨·, g⟩ is ρ‖Fᵀg‖∞
                let m = (0..factor.ncols())
                    .map(|j| factor.column(j).iter().zip(g).map(|(a, b)| a * b).sum::<f64>().abs())
                    .fold(0.0, f64::max);
                radius * m
            }
        }
    }
}

fn l2(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn linf(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `sup { ⟨t, g⟩ : ‖t‖₁ ≤ ρ, ‖t‖₂ ≤ r }`.
///
/// By duality this is `min_{θ ≥ 0} r‖S_θ(g)‖₂ + ρθ` with `S_θ` the soft
/// threshold. The objective is convex in `θ` with derivative
/// `ρ − r‖S_θ(g)‖₁/‖S_θ(g)‖₂`, and the ratio `‖S_θ‖₁/‖S_θ‖₂` is
/// nonincreasing, so the minimizer is where the ratio equals `ρ/r`. With
/// `|g|` sorted, the segment containing that point is found by scanning the
/// breakpoints and the threshold is then located by bisection inside it.
pub fn intersection_support(g: &[f64], r: f64, rho: f64) -> f64 {
    if r == 0.0 || rho == 0.0 {
        return 0.0;
    }
    let norm2 = l2(g);
    let norm1: f64 = g.iter().map(|v| v.abs()).sum();
    if norm2 == 0.0 {
        return 0.0;
    }
    let target = rho / r;
    if norm1 / norm2 <= target {
        return r * norm2;
    }
    if target <= 1.0 {
        return rho * linf(g);
    }
    let mut a: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    a.sort_unstable_by(|x, y| y.total_cmp(x));
    // with the top k entries active: ‖S_θ‖₁ = S − kθ, ‖S_θ‖₂² = Q − 2θS + kθ²
    let (mut s, mut q) = (0.0, 0.0);
    for k in 1..=a.len() {
        s += a[k - 1];
        q += a[k - 1] * a[k - 1];
        let lo = a.get(k).copied().unwrap_or(0.0);
        let hi = a[k - 1];
        let kf = k as f64;
        let ratio = |t: f64| {
            let l1 = s - kf * t;
            let l2sq = (q - 2.0 * t * s + kf * t * t).max(0.0);
            if l2sq == 0.0 {
                1.0
            } else {
                l1 / l2sq.sqrt()
            }
        };
        // ratio(lo) is the largest value on this segment
        if ratio(lo) < target {
            continue;
        }
        let (mut tlo, mut thi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (tlo + thi);
            if mid <= tlo || mid >= thi || thi - tlo <= 1e-10 * hi {
                break;
            }
            if ratio(mid) >= target {
                tlo = mid;
            } else {
                thi = mid;
            }
        }
        let theta = 0.5 * (tlo + thi);
        let norm = (q - 2.0 * theta * s + kf * theta * theta).max(0.0).sqrt();
        return r * norm + rho * theta;
    }
    // unreachable for finite input: ratio(0) > target on the last segment
    r * norm2
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn block_mc<F>(samples: usize, seed: u64, draw: F) -> McEstimate
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, b as u64));
            let count = BLOCK.min(samples - b * BLOCK);
            let mut acc = (0.0, 0.0);
            for _ in 0..count {
                let v = draw(&mut rng);
                acc.0 += v;
                acc.1 += v * v;
            }
            acc
        })
        .collect();
    let (sum, sumsq) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sumsq - m * mean * mean) / (m - 1.0)).max(0.0);
    McEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
        samples,
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(invalid(format!("at least {MIN_SAMPLES} samples are required, got {samples}")));
    }
    Ok(())
}

/// Monte Carlo estimate of the Gaussian mean width `E sup_{t∈T} ⟨t, G⟩`,
/// `G ~ N(0, I_dim)`.
pub fn gaussian_mean_width_mc(set: &SetSpec, dim: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    set.validate(dim)?;
    Ok(block_mc(samples, seed, |rng| {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        set.support(&g)
    }))
}

/// Monte Carlo estimate of `E sup_{t∈T} ⟨t, Σ_i σ_i X_i⟩` over `n` design
/// rows `X_i ~ design` and independent signs `σ_i`, both redrawn per sample.
pub fn rademacher_mc(
    design: &GaussianDesignSpec,
    set: &SetSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(samples)?;
    let p = design.dim();
    set.validate(p)?;
    if n == 0 {
        return Err(invalid("at least one design row is required"));
    }
    Ok(block_mc(samples, seed, |rng| {
        let x = generate_design(design, n, rng.random());
        let mut v = vec![0.0; p];
        for i in 0..n {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            for (vj, xij) in v.iter_mut().zip(x.row(i).iter()) {
                *vj += sign * xij;
            }
        }
        set.support(&v)
    }))
}

/// Which defining inequality [`fixed_point_radius`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityMode {
    /// `A·L·w(r) ≤ c·√|I|·r²` with a Gaussian mean width.
    SubGaussian,
    /// `A·L·Rad(r) ≤ c·|I|·r²` with a Rademacher complexity.
    Bounded,
}

/// The smallest `r > 0` satisfying the localized complexity inequality.
/// `complexity` maps a radius to the complexity of the class localized at
/// that radius and must be nondecreasing. The result satisfies the
/// inequality and lies within relative distance `1e−6` of the infimum.
pub fn fixed_point_radius(
    complexity: impl Fn(f64) -> f64,
    a: f64,
    lipschitz: f64,
    n: usize,
    mode: ComplexityMode,
    c_abs: f64,
) -> Result<f64> {
    for (name, v) in [("A", a), ("L", lipschitz), ("c", c_abs)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if n == 0 {
        return Err(invalid("|I| must be at least 1"));
    }
    let scale = match mode {
        ComplexityMode::SubGaussian => c_abs * (n as f64).sqrt(),
        ComplexityMode::Bounded => c_abs * n as f64,
    };
    let holds = |r: f64| -> Result<bool> {
        let c = complexity(r);
        if !c.is_finite() {
            return Err(Error::NonFinite("complexity function"));
        }
        Ok(a * lipschitz * c <= scale * r * r)
    };
    let (mut lo, mut hi);
    if holds(1.0)? {
        hi = 1.0;
        lo = 0.5;
        while holds(lo)? {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Ok(0.0);
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while !holds(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoFixedPoint(format!(
                    "A·L·complexity(r) = {} still exceeds {} at r = {hi:e}",
                    a * lipschitz * complexity(hi),
                    scale * hi * hi
                )));
            }
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Upper bound on the Gaussian mean width of `ρB₁ ∩ rB₂` in dimension `p`:
/// the smallest of `r√p`, `ρ√(2 log(2p))` and
/// `4ρ√(max(1, log(8e·p·min((r/ρ)², 1))))`.
pub fn intersection_width_bound(dim: usize, r: f64, rho: f64) -> f64 {
    if dim == 0 || r == 0.0 || rho == 0.0 {
        return 0.0;
    }
    let p = dim as f64;
    let ratio = ((r / rho).powi(2)).min(1.0);
    let sparse = 4.0 * rho * (8.0 * std::f64::consts::E * p * ratio).ln().max(1.0).sqrt();
    sparse.min(r * p.sqrt()).min(rho * (2.0 * (2.0 * p).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Ternary search on the convex dual `θ ↦ r‖S_θ(g)‖₂ + ρθ` over `[0, ‖g‖∞]`.
    fn ternary_support(g: &[f64], r: f64, rho: f64) -> f64 {
        let dual = |t: f64| {
            let s: f64 = g.iter().map(|v| (v.abs() - t).max(0.0).powi(2)).sum();
            r * s.sqrt() + rho * t
        };
        let (mut lo, mut hi) = (0.0, linf(g));
        for _ in 0..300 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if dual(m1) <= dual(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        dual(0.5 * (lo + hi))
    }

    /// A feasible point of the intersection gives a lower bound on the support.
    fn primal_lower_bound(g: &[f64], r: f64, rho: f64) -> f64 {
        let n2 = l2(g);
        let n1: f64 = g.iter().map(|v| v.abs()).sum();
        let scale = (r / n2).min(rho / n1);
        scale * n2 * n2
    }

    #[test]
    fn intersection_matches_dual_search() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let g: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r: f64 = rng.random_range(0.1..2.0);
            let rho: f64 = rng.random_range(0.1..4.0);
            let exact = intersection_support(&g, r, rho);
            let oracle = ternary_support(&g, r, rho);
            assert!((exact - oracle).abs() <= 1e-9 * exact.max(1.0), "{exact} vs {oracle}");
            assert!(exact >= primal_lower_bound(&g, r, rho) - 1e-12);
            assert!(exact <= r * l2(&g) + 1e-12 && exact <= rho * linf(&g) + 1e-12);
        }
    }

    #[test]
    fn l2_ball_width_in_dimension_two() {
        let est = gaussian_mean_width_mc(&SetSpec::L2Ball { radius: 1.0 }, 2, 1_000_000, 1).unwrap();
        assert!((est.estimate - (PI / 2.0).sqrt()).abs() <= 3.0 * est.std_error);
    }

    #[test]
    fn zero_radius_gives_zero() {
        for set in [
            SetSpec::L2Ball { radius: 0.0 },
            SetSpec::L1Ball { radius: 0.0 },
            SetSpec::Intersection { l2_radius: 0.0, l1_radius: 1.0 },
        ] {
            let est = gaussian_mean_width_mc(&set, 5, 200, 2).unwrap();
            assert_eq!(est.estimate, 0.0);
            let design = GaussianDesignSpec::identity(5).unwrap();
            assert_eq!(rademacher_mc(&design, &set, 10, 100, 2).unwrap().estimate, 0.0);
        }
    }

    #[test]
    fn l1_ball_width_sandwich() {
        let est = gaussian_mean_width_mc(&SetSpec::L1Ball { radius: 1.0 }, 2, 100_000, 4).unwrap();
        assert!(est.estimate >= (2.0 / PI).sqrt() && est.estimate <= (PI / 2.0).sqrt());
    }

    #[test]
    fn intersection_below_single_balls() {
        for (i, (r, rho)) in [(1.0, 1.0), (0.5, 3.0), (2.0, 0.7), (1.0, 10.0)].into_iter().enumerate() {
            let seed = 40 + i as u64;
            let w = |s: SetSpec| gaussian_mean_width_mc(&s, 30, 5000, seed).unwrap().estimate;
            let both = w(SetSpec::Intersection { l2_radius: r, l1_radius: rho });
            let ball2 = w(SetSpec::L2Ball { radius: r });
            let ball1 = w(SetSpec::L1Ball { radius: rho });
            assert!(both <= ball2.min(ball1) + 1e-12);
            assert!(both <= intersection_width_bound(30, r, rho) * 1.5 + 1.0);
        }
    }

    #[test]
    fn ellipsoid_identity_factor_matches_l1() {
        let f = DMatrix::identity(6, 6);
        let a = gaussian_mean_width_mc(&SetSpec::EllipsoidL1 { factor: f, radius: 2.0 }, 6, 3000, 5).unwrap();
        let b = gaussian_mean_width_mc(&SetSpec::L1Ball { radius: 2.0 }, 6, 3000, 5).unwrap();
        assert!((a.estimate - b.estimate).abs() <= 1e-12);
        assert!(gaussian_mean_width_mc(
            &SetSpec::EllipsoidL1 { factor: DMatrix::identity(3, 3), radius: 1.0 },
            6,
            3000,
            5
        )
        .is_err());
    }

    #[test]
    fn rademacher_l2_ball_close_to_sqrt_np() {
        let design = GaussianDesignSpec::identity(20).unwrap();
        let est = rademacher_mc(&design, &SetSpec::L2Ball { radius: 1.0 }, 100, 10_000, 6).unwrap();
        let target = (100.0f64 * 20.0).sqrt();
        assert!((est.estimate / target - 1.0).abs() <= 0.05, "{}", est.estimate);
        let doubled = rademacher_mc(&design, &SetSpec::L2Ball { radius: 2.0 }, 100, 10_000, 6).unwrap();
        assert_eq!(doubled.estimate, 2.0 * est.estimate);
    }

    #[test]
    fn rejects_few_samples() {
        assert!(gaussian_mean_width_mc(&SetSpec::L2Ball { radius: 1.0 }, 2, 99, 1).is_err());
    }

    #[test]
    fn fixed_point_linear_class() {
        let trace: f64 = 50.0;
        let r = fixed_point_radius(|r| r * trace.sqrt(), 1.0, 1.0, 1000, ComplexityMode::SubGaussian, 1.0).unwrap();
        let exact = (trace / 1000.0).sqrt();
        assert!((r / exact - 1.0).abs() <= 1e-5, "{r} vs {exact}");
        let r3 = fixed_point_radius(|r| r * trace.sqrt(), 3.0, 1.0, 1000, ComplexityMode::SubGaussian, 1.0).unwrap();
        assert!((r3 / (3.0 * exact) - 1.0).abs() <= 1e-5);
        let rb = fixed_point_radius(|r| r * trace.sqrt(), 1.0, 1.0, 1000, ComplexityMode::Bounded, 1.0).unwrap();
        assert!((rb / (trace.sqrt() / 1000.0) - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn fixed_point_degenerate_cases() {
        assert_eq!(
            fixed_point_radius(|_| 0.0, 1.0, 1.0, 10, ComplexityMode::SubGaussian, 1.0).unwrap(),
            0.0
        );
        let err = fixed_point_radius(|r| 4.0 * r * r, 1.0, 1.0, 10, ComplexityMode::SubGaussian, 1.0);
        assert!(matches!(err, Err(Error::NoFixedPoint(_))));
        assert!(fixed_point_radius(|r| r, 0.0, 1.0, 10, ComplexityMode::SubGaussian, 1.0).is_err());
    }

    #[test]
    fn fixed_point_brackets_the_inequality() {
        let mut rng = rng_from_seed(8);
        for _ in 0..200 {
            let a: f64 = rng.random_range(0.1..10.0);
            let l: f64 = rng.random_range(0.1..10.0);
            let w: f64 = rng.random_range(0.01..100.0);
            let off: f64 = rng.random_range(0.0..5.0);
            let n = rng.random_range(1..100_000usize);
            let f = |r: f64| w * r + off * r.sqrt();
            let r = fixed_point_radius(f, a, l, n, ComplexityMode::SubGaussian, 1.0).unwrap();
            let rhs = |r: f64| (n as f64).sqrt() * r * r;
            assert!(a * l * f(r) <= rhs(r));
            let below = r * (1.0 - 1e-2);
            assert!(a * l * f(below) > rhs(below));
        }
    }
}
