use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::sym_eigen_desc;
use crate::rng::{derive_seed, rng_from_seed};

/// Supports are enumerated exhaustively when there are at most this many.
pub const MAX_ENUMERATED_SUPPORTS: usize = 2000;

const REFINE_STEPS: usize = 200;

/// Result of a restricted-eigenvalue search.
///
/// `kappa_hat` is the smallest ratio `‖Σ^{1/2}v‖₂/‖v_J‖₂` found over the
/// cones `‖v_{J^c}‖₁ ≤ c₀‖v_J‖₁`. The search is over a nonconvex set, so
/// the value is an upper bound on the true constant, attained by `witness`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReEstimate {
    pub kappa_hat: f64,
    pub witness: DVector<f64>,
    pub support: Vec<usize>,
    pub supports_examined: usize,
    pub exhaustive: bool,
}

/// `‖Σ^{1/2}v‖₂ / ‖v_J‖₂`.
pub fn re_ratio(sigma: &DMatrix<f64>, v: &DVector<f64>, support: &[usize]) -> f64 {
    let num = v.dot(&(sigma * v)).max(0.0).sqrt();
    let den = support.iter().map(|&j| v[j] * v[j]).sum::<f64>().sqrt();
    num / den
}

fn binomial_at_most(p: usize, s: usize, cap: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = acc * (p - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

fn next_combination(c: &mut [usize], p: usize) -> bool {
    let s = c.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if c[i] < p - s + i {
            c[i] += 1;
            for j in i + 1..s {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Euclidean projection onto `{x : ‖x‖₁ ≤ radius}`.
fn project_l1(v: &mut [f64], radius: f64) {
    let norm1: f64 = v.iter().map(|x| x.abs()).sum();
    if norm1 <= radius {
        return;
    }
    if radius <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let (mut cum, mut theta) = (0.0, 0.0);
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - radius) / (i + 1) as f64;
        if t < *ui {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - theta).max(0.0);
    }
}

/// Puts `v` back into the normalized cone: unit `‖v_J‖₂` and
/// `‖v_{J^c}‖₁ ≤ c₀‖v_J‖₁`. Returns false if `v_J` vanished.
fn normalize_into_cone(v: &mut DVector<f64>, support: &[usize], complement: &[usize], c0: f64) -> bool {
    let nj = support.iter().map(|&j| v[j] * v[j]).sum::<f64>().sqrt();
    if !(nj > 0.0) {
        return false;
    }
    *v /= nj;
    let l1j: f64 = support.iter().map(|&j| v[j].abs()).sum();
    let mut rest: Vec<f64> = complement.iter().map(|&j| v[j]).collect();
    project_l1(&mut rest, c0 * l1j);
    for (&j, x) in complement.iter().zip(rest) {
        v[j] = x;
    }
    true
}

/// Projected gradient descent on `vᵀΣv` over the normalized cone, keeping
/// only improving steps.
fn refine(sigma: &DMatrix<f64>, mut v: DVector<f64>, support: &[usize], complement: &[usize], c0: f64, lip: f64) -> (f64, DVector<f64>) {
    let mut best = re_ratio(sigma, &v, support);
    let mut step = 1.0 / lip.max(f64::MIN_POSITIVE);
    for _ in 0..REFINE_STEPS {
        let grad = sigma * &v * 2.0;
        let mut cand = &v - &grad * step;
        if !normalize_into_cone(&mut cand, support, complement, c0) {
            step *= 0.5;
            continue;
        }
        let r = re_ratio(sigma, &cand, support);
        if r < best {
            let gain = best - r;
            best = r;
            v = cand;
            if gain <= 1e-14 * best {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-12 / lip.max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    (best, v)
}

/// Searches for the restricted-eigenvalue constant of `sigma` over supports
/// of size `s` and cone parameter `c0`.
///
/// Supports are enumerated when `C(p, s)` is at most
/// [`MAX_ENUMERATED_SUPPORTS`] and sampled uniformly otherwise. For each
/// support the candidates are the bottom eigenvector of `Σ_JJ` (extended by
/// zeros) and `n_samples` random cone directions; the best candidate is
/// then refined by projected gradient.
pub fn re_constant_estimate(sigma: &DMatrix<f64>, s: usize, c0: f64, n_samples: usize, seed: u64) -> Result<ReEstimate> {
    let p = sigma.nrows();
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch(format!("covariance is {}x{}", p, sigma.ncols())));
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance"));
    }
    if s == 0 || s > p {
        return Err(invalid(format!("support size must lie in 1..={p}, got {s}")));
    }
    if !(c0 >= 0.0 && c0.is_finite()) {
        return Err(invalid(format!("cone parameter must be nonnegative, got {c0}")));
    }
    let (values, _) = sym_eigen_desc(sigma.clone());
    let lip = 2.0 * values[0].abs().max(1e-300);

    let exhaustive_count = binomial_at_most(p, s, MAX_ENUMERATED_SUPPORTS);
    let supports: Vec<Vec<usize>> = match exhaustive_count {
        Some(_) => {
            let mut out = Vec::new();
            let mut c: Vec<usize> = (0..s).collect();
            loop {
                out.push(c.clone());
                if !next_combination(&mut c, p) {
                    break;
                }
            }
            out
        }
        None => {
            let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
            (0..MAX_ENUMERATED_SUPPORTS)
                .map(|_| {
                    let mut j = index::sample(&mut rng, p, s).into_vec();
                    j.sort_unstable();
                    j
                })
                .collect()
        }
    };

    let mut best: Option<(f64, DVector<f64>, Vec<usize>)> = None;
    for (idx, support) in supports.iter().enumerate() {
        let mut in_support = vec![false; p];
        support.iter().for_each(|&j| in_support[j] = true);
        let complement: Vec<usize> = (0..p).filter(|&j| !in_support[j]).collect();

        let sub = DMatrix::from_fn(s, s, |a, b| sigma[(support[a], support[b])]);
        let (_, vecs) = sym_eigen_desc(sub);
        let mut eig = DVector::zeros(p);
        for (a, &j) in support.iter().enumerate() {
            eig[j] = vecs[(a, s - 1)];
        }
        let mut cand_best = (re_ratio(sigma, &eig, support), eig);

        let mut rng = rng_from_seed(derive_seed(seed, idx as u64));
        for _ in 0..n_samples {
            let mut v: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let scale: f64 = rand::Rng::random_range(&mut rng, 0.0..=1.0);
            let l1j: f64 = support.iter().map(|&j| v[j].abs()).sum();
            let l1c: f64 = complement.iter().map(|&j| v[j].abs()).sum();
            if l1c > 0.0 {
                let f = scale * c0 * l1j / l1c;
                complement.iter().for_each(|&j| v[j] *= f);
            }
            if !normalize_into_cone(&mut v, support, &complement, c0) {
                continue;
            }
            let r = re_ratio(sigma, &v, support);
            if r < cand_best.0 {
                cand_best = (r, v);
            }
        }
        let (r, v) = refine(sigma, cand_best.1, support, &complement, c0, lip);
        if best.as_ref().is_none_or(|b| r < b.0) {
            best = Some((r, v, support.clone()));
        }
    }
    let (_, witness, support) = best.expect("at least one support");
    Ok(ReEstimate {
        kappa_hat: re_ratio(sigma, &witness, &support),
        witness,
        support,
        supports_examined: supports.len(),
        exhaustive: exhaustive_count.is_some(),
    })
}
