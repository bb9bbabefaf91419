use std::f64::consts::{FRAC_1_PI, SQRT_2};
use std::fmt;

use rand_distr::{Cauchy, Distribution, Normal, StudentT};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::{erf, erfc};

use crate::error::{invalid, Result};
use crate::rng::rng_from_seed;

/// Symmetric noise laws for the informative labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    StudentT { df: f64 },
    Cauchy { scale: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            NoiseModel::Gaussian { sigma } => ("gaussian sigma", sigma),
            NoiseModel::StudentT { df } => ("student-t degrees of freedom", df),
            NoiseModel::Cauchy { scale } => ("cauchy scale", scale),
        };
        if !v.is_finite() || v <= 0.0 {
            return Err(invalid(format!("{name} must be positive and finite, got {v}")));
        }
        Ok(())
    }

    /// Cumulative distribution function `F_ε(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => 0.5 * erfc(-t / (sigma * SQRT_2)),
            NoiseModel::StudentT { df } if df == 2.0 => 0.5 + t / (2.0 * (2.0 + t * t).sqrt()),
            NoiseModel::StudentT { df } => student(df).cdf(t),
            NoiseModel::Cauchy { scale } => 0.5 + (t / scale).atan() * FRAC_1_PI,
        }
    }

    /// `F_ε(a) − F_ε(−a)`, the mass of `[−a, a]` (negative for `a < 0`).
    ///
    /// Evaluated from closed forms of the centered mass rather than as a
    /// difference of two cdf values.
    pub fn central_mass(&self, a: f64) -> f64 {
        let m = a.abs();
        let mass = match *self {
            NoiseModel::Gaussian { sigma } => erf(m / (sigma * SQRT_2)),
            NoiseModel::StudentT { df } if df == 2.0 => m / (2.0 + m * m).sqrt(),
            NoiseModel::StudentT { df } => 2.0 * student(df).cdf(m) - 1.0,
            NoiseModel::Cauchy { scale } => 2.0 * (m / scale).atan() * FRAC_1_PI,
        };
        if a < 0.0 {
            -mass
        } else {
            mass
        }
    }

    /// Draws `n` i.i.d. samples; deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = rng_from_seed(seed);
        let out = match *self {
            NoiseModel::Gaussian { sigma } => {
                let d = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
                d.sample_iter(&mut rng).take(n).collect()
            }
            // normal over sqrt(chi-square / df)
            NoiseModel::StudentT { df } => {
                let d = StudentT::new(df).map_err(|e| invalid(e.to_string()))?;
                d.sample_iter(&mut rng).take(n).collect()
            }
            NoiseModel::Cauchy { scale } => {
                let d = Cauchy::new(0.0, scale).map_err(|e| invalid(e.to_string()))?;
                d.sample_iter(&mut rng).take(n).collect()
            }
        };
        Ok(out)
    }

    /// Short stable identifier used in CSV output, e.g. `cauchy(1)`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

fn student(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("validated degrees of freedom")
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Gaussian { sigma } => write!(f, "gaussian({sigma})"),
            NoiseModel::StudentT { df } => write!(f, "student_t({df})"),
            NoiseModel::Cauchy { scale } => write!(f, "cauchy({scale})"),
        }
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = crate::Error;

    /// Accepts `gaussian:σ`, `student:df` (or `student_t`), `cauchy:scale`,
    /// and the `name(value)` form produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, value) = if let Some(open) = s.find('(') {
            let close = s.rfind(')').ok_or_else(|| invalid(format!("unbalanced noise spec '{s}'")))?;
            (&s[..open], &s[open + 1..close])
        } else if let Some((n, v)) = s.split_once(':') {
            (n, v)
        } else {
            (s, "1")
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad noise parameter in '{s}'")))?;
        let model = match name.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => NoiseModel::Gaussian { sigma: value },
            "student" | "student_t" | "studentt" | "t" => NoiseModel::StudentT { df: value },
            "cauchy" => NoiseModel::Cauchy { scale: value },
            other => return Err(invalid(format!("unknown noise model '{other}'"))),
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODELS: [NoiseModel; 5] = [
        NoiseModel::Gaussian { sigma: 1.0 },
        NoiseModel::Gaussian { sigma: 2.5 },
        NoiseModel::StudentT { df: 2.0 },
        NoiseModel::StudentT { df: 3.5 },
        NoiseModel::Cauchy { scale: 1.0 },
    ];

    #[test]
    fn cdfs_are_symmetric() {
        for m in MODELS {
            for i in -200..=200 {
                let t = i as f64 * 0.173;
                let s = m.cdf(t) + m.cdf(-t);
                assert!((s - 1.0).abs() <= 1e-12, "{m}: t={t} sum={s}");
            }
        }
    }

    #[test]
    fn central_mass_agrees_with_cdf_difference() {
        for m in MODELS {
            for i in -50..=50 {
                let a = i as f64 * 0.37;
                let diff = m.cdf(a) - m.cdf(-a);
                assert!((m.central_mass(a) - diff).abs() < 1e-12, "{m} a={a}");
            }
        }
    }

    #[test]
    fn closed_forms() {
        let c = NoiseModel::Cauchy { scale: 1.0 };
        assert!((c.cdf(1.0) - 0.75).abs() < 1e-15);
        let g = NoiseModel::Gaussian { sigma: 1.0 };
        assert!((g.central_mass(3.0) - 0.997_300_203_936_739_8).abs() < 1e-12);
        let t2 = NoiseModel::StudentT { df: 2.0 };
        // df=2 closed form against the general incomplete-beta route
        for i in -20..=20 {
            let x = i as f64 * 0.5;
            assert!((t2.cdf(x) - student(2.0).cdf(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn cauchy_median_near_zero() {
        let mut s = NoiseModel::Cauchy { scale: 1.0 }.sample(100_001, 17).unwrap();
        s.sort_by(f64::total_cmp);
        assert!(s[50_000].abs() < 0.05, "median {}", s[50_000]);
    }

    #[test]
    fn gaussian_variance() {
        let s = NoiseModel::Gaussian { sigma: 2.0 }.sample(100_000, 4).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64;
        assert!((var - 4.0).abs() < 0.1, "variance {var}");
    }

    /// Two-sample Kolmogorov–Smirnov statistic between a sample and its
    /// mirror image, compared with the 0.1% critical value.
    #[test]
    fn samples_are_symmetric() {
        let n = 20_000usize;
        for (k, m) in MODELS.iter().enumerate() {
            let mut a = m.sample(n, 100 + k as u64).unwrap();
            let mut b: Vec<f64> = m.sample(n, 900 + k as u64).unwrap().iter().map(|x| -x).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
            while i < n && j < n {
                if a[i] <= b[j] {
                    i += 1;
                } else {
                    j += 1;
                }
                d = d.max((i as f64 - j as f64).abs() / n as f64);
            }
            let critical = 1.95 * (2.0 / n as f64).sqrt();
            assert!(d < critical, "{m}: KS {d} >= {critical}");
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let m = NoiseModel::StudentT { df: 2.0 };
        assert_eq!(m.sample(50, 3).unwrap(), m.sample(50, 3).unwrap());
        assert!(NoiseModel::Gaussian { sigma: 0.0 }.sample(1, 0).is_err());
        assert!(NoiseModel::Cauchy { scale: f64::NAN }.validate().is_err());
    }

    #[test]
    fn parses_specs() {
        assert_eq!("cauchy:1".parse::<NoiseModel>().unwrap(), NoiseModel::Cauchy { scale: 1.0 });
        assert_eq!("student_t(2)".parse::<NoiseModel>().unwrap(), NoiseModel::StudentT { df: 2.0 });
        assert_eq!("gaussian".parse::<NoiseModel>().unwrap(), NoiseModel::Gaussian { sigma: 1.0 });
        for m in MODELS {
            assert_eq!(m.to_string().parse::<NoiseModel>().unwrap(), m);
        }
        assert!("laplace:1".parse::<NoiseModel>().is_err());
        assert!("gaussian:-1".parse::<NoiseModel>().is_err());
    }
}
