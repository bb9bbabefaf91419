//! The two-point coupling behind the lower bound for label-only
//! contamination, on finite joint distributions of `(x, y)`.
//!
//! Given `P1`, `P2` with total variation `TV`, set `ε' = TV/(1 + TV)`,
//! `Q1 = (P2 − P1)₊/TV` and `Q2 = (P1 − P2)₊/TV`. Then
//! `(1 − ε')P1 + ε'Q1 = (1 − ε')P2 + ε'Q2`: the two contaminated laws
//! coincide, so no procedure can tell the parameters apart.
//!
//! Arithmetic is generic over [`Probability`], implemented for `f64` and
//! for exact rationals ([`BigRational`]), where the identity is checked as
//! an equality.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// Scalar type for probabilities.
pub trait Probability: Clone + PartialOrd + Signed + Debug {
    /// Slack allowed in equality checks: zero for exact types.
    fn tolerance() -> Self;
    fn to_f64(&self) -> f64;
}

impl Probability for f64 {
    fn tolerance() -> Self {
        1e-12
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Probability for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn pos<T: Probability>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

fn sum<'a, T: Probability + 'a>(it: impl Iterator<Item = &'a T>) -> T {
    it.fold(T::zero(), |a, b| a + b.clone())
}

/// A probability mass function on a grid of design atoms × label atoms;
/// `probs[i][j]` is the mass of `(support_x[i], support_y[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint<T> {
    pub support_x: Vec<f64>,
    pub support_y: Vec<f64>,
    pub probs: Vec<Vec<T>>,
}

impl<T: Probability> DiscreteJoint<T> {
    pub fn new(support_x: Vec<f64>, support_y: Vec<f64>, probs: Vec<Vec<T>>) -> Result<Self> {
        if support_x.is_empty() || support_y.is_empty() {
            return Err(invalid("supports must be nonempty"));
        }
        if probs.len() != support_x.len() || probs.iter().any(|row| row.len() != support_y.len()) {
            return Err(Error::DimensionMismatch(format!(
                "probability table must be {}x{}",
                support_x.len(),
                support_y.len()
            )));
        }
        if probs.iter().flatten().any(|p| *p < T::zero()) {
            return Err(invalid("probabilities must be nonnegative"));
        }
        let total = sum(probs.iter().flatten());
        if (total.clone() - T::one()).abs() > T::tolerance() {
            return Err(invalid(format!("probabilities sum to {}, not 1", total.to_f64())));
        }
        Ok(Self {
            support_x,
            support_y,
            probs,
        })
    }

    pub fn x_marginal(&self) -> Vec<T> {
        self.probs.iter().map(|row| sum(row.iter())).collect()
    }

    fn same_support(&self, other: &Self) -> Result<()> {
        if self.support_x != other.support_x || self.support_y != other.support_y {
            return Err(Error::DimensionMismatch("distributions live on different supports".into()));
        }
        Ok(())
    }

    fn zip_map(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Vec<Vec<T>> {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(x, y)).collect())
            .collect()
    }
}

/// `½ Σ |p − q|` over atoms.
pub fn total_variation<T: Probability>(p: &DiscreteJoint<T>, q: &DiscreteJoint<T>) -> Result<T> {
    p.same_support(q)?;
    let diffs = p.zip_map(q, |a, b| (a.clone() - b.clone()).abs());
    let two = T::one() + T::one();
    Ok(sum(diffs.iter().flatten()) / two)
}

/// `Σ (p2 − p1)₊`, which equals the total variation (Scheffé).
pub fn positive_part_mass<T: Probability>(p1: &DiscreteJoint<T>, p2: &DiscreteJoint<T>) -> Result<T> {
    p1.same_support(p2)?;
    let parts = p1.zip_map(p2, |a, b| pos(b.clone() - a.clone()));
    Ok(sum(parts.iter().flatten()))
}

/// The contamination pair for `(P1, P2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationPair<T> {
    pub tv: T,
    pub eps_prime: T,
    pub q1: DiscreteJoint<T>,
    pub q2: DiscreteJoint<T>,
    /// Whether `Q1` and `Q2` have the same design marginal as `P1`, i.e.
    /// whether the contamination touches labels only. This holds exactly
    /// when the per-atom conditional differences are balanced within each
    /// design atom, e.g. with a single design atom; it is not implied by
    /// `P1` and `P2` sharing a design marginal.
    pub design_marginal_preserved: bool,
}

fn marginals_match<T: Probability>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x.clone() - y.clone()).abs() <= T::tolerance())
}

/// Builds `ε'` and the contamination laws `Q1`, `Q2`. The inputs must share
/// their design marginal and differ.
pub fn lecam_contamination_pair<T: Probability>(
    p1: &DiscreteJoint<T>,
    p2: &DiscreteJoint<T>,
) -> Result<ContaminationPair<T>> {
    p1.same_support(p2)?;
    let m1 = p1.x_marginal();
    if !marginals_match(&m1, &p2.x_marginal()) {
        return Err(invalid("the two distributions have different design marginals"));
    }
    let tv = total_variation(p1, p2)?;
    if tv.is_zero() || tv <= T::tolerance() {
        return Err(Error::Degenerate("identical distributions need no contamination".into()));
    }
    let eps_prime = tv.clone() / (T::one() + tv.clone());
    let q1 = DiscreteJoint {
        support_x: p1.support_x.clone(),
        support_y: p1.support_y.clone(),
        probs: p1.zip_map(p2, |a, b| pos(b.clone() - a.clone()) / tv.clone()),
    };
    let q2 = DiscreteJoint {
        support_x: p1.support_x.clone(),
        support_y: p1.support_y.clone(),
        probs: p1.zip_map(p2, |a, b| pos(a.clone() - b.clone()) / tv.clone()),
    };
    let design_marginal_preserved = marginals_match(&q1.x_marginal(), &m1) && marginals_match(&q2.x_marginal(), &m1);
    Ok(ContaminationPair {
        tv,
        eps_prime,
        q1,
        q2,
        design_marginal_preserved,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCheck<T> {
    pub holds: bool,
    pub max_discrepancy: T,
    /// The common law `(1 − ε')P1 + ε'Q1`.
    pub mixture: Vec<Vec<T>>,
}

/// Checks `(1 − ε')P1 + ε'Q1 = (1 − ε')P2 + ε'Q2` atom by atom.
pub fn verify_mixture_identity<T: Probability>(
    p1: &DiscreteJoint<T>,
    p2: &DiscreteJoint<T>,
    eps_prime: &T,
    q1: &DiscreteJoint<T>,
    q2: &DiscreteJoint<T>,
) -> Result<MixtureCheck<T>> {
    p1.same_support(p2)?;
    p1.same_support(q1)?;
    p1.same_support(q2)?;
    let keep = T::one() - eps_prime.clone();
    let mix = |p: &DiscreteJoint<T>, q: &DiscreteJoint<T>| {
        p.zip_map(q, |a, b| keep.clone() * a.clone() + eps_prime.clone() * b.clone())
    };
    let left = mix(p1, q1);
    let right = mix(p2, q2);
    let mut worst = T::zero();
    for (a, b) in left.iter().flatten().zip(right.iter().flatten()) {
        let d = (a.clone() - b.clone()).abs();
        if d > worst {
            worst = d;
        }
    }
    Ok(MixtureCheck {
        holds: worst <= T::tolerance(),
        max_discrepancy: worst,
        mixture: left,
    })
}

/// `sup { loss(θ1, θ2) : TV(P_θ1, P_θ2) ≤ ε/(1 − ε) }` over all ordered
/// pairs of the family, including `θ1 = θ2`.
pub fn modulus_of_continuity<Theta, T: Probability>(
    family: &[(Theta, DiscreteJoint<T>)],
    loss: impl Fn(&Theta, &Theta) -> f64,
    eps: f64,
) -> Result<f64> {
    if family.is_empty() {
        return Err(invalid("the family must contain at least one distribution"));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid(format!("epsilon must lie in [0, 1), got {eps}")));
    }
    let threshold = eps / (1.0 - eps);
    let mut best = f64::NEG_INFINITY;
    for (t1, p1) in family {
        for (t2, p2) in family {
            if total_variation(p1, p2)?.to_f64() <= threshold {
                best = best.max(loss(t1, t2));
            }
        }
    }
    Ok(best)
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// The worked example: one design atom, labels `{0, 1}`,
/// `P1 = (3/5, 2/5)` and `P2 = (2/5, 3/5)`.
pub fn demo_pair() -> (DiscreteJoint<BigRational>, DiscreteJoint<BigRational>) {
    let make = |a, b| {
        DiscreteJoint::new(vec![0.0], vec![0.0, 1.0], vec![vec![ratio(a, 5), ratio(b, 5)]]).expect("valid demo pmf")
    };
    (make(3, 2), make(2, 3))
}

/// Renders an exact rational as `n/d` (or `n` when integral).
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
