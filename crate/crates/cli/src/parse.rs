use huberbench_core::data::{GaussianDesignSpec, NoiseModel};
use huberbench_core::kernel::Kernel;
use huberbench_core::{BigRational, SolverConfig, StepRule};

use crate::settings::Settings;
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `gaussian:1`, `gaussian(1)`, `student-t:2`, `student_t(2)`, `cauchy:1`;
/// the parameter defaults to 1 for gaussian and cauchy.
pub fn noise(text: &str) -> Result<NoiseModel, CliError> {
    let t = text.trim();
    let (name, param) = match t.find([':', '(']) {
        Some(i) => (&t[..i], Some(t[i + 1..].trim_end_matches(')').trim())),
        None => (t, None),
    };
    let value = match param {
        Some(p) => Some(p.parse::<f64>().map_err(|_| usage(format!("bad noise parameter in {text:?}")))?),
        None => None,
    };
    let model = match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "gaussian" | "normal" => NoiseModel::Gaussian { sigma: value.unwrap_or(1.0) },
        "cauchy" => NoiseModel::Cauchy { scale: value.unwrap_or(1.0) },
        "student_t" | "t" => NoiseModel::StudentT {
            df: value.ok_or_else(|| usage("student-t needs degrees of freedom, e.g. student-t:2"))?,
        },
        other => return Err(usage(format!("unknown noise law {other:?} (gaussian, student-t, cauchy)"))),
    };
    Ok(model)
}

/// Comma-separated noise laws; commas inside parentheses do not occur.
pub fn noise_list(text: &str) -> Result<Vec<NoiseModel>, CliError> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(noise).collect()
}

pub fn float_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("{s:?} is not a number"))))
        .collect()
}

/// `identity` or `toeplitz:RHO`.
pub fn design(text: &str, dim: usize) -> Result<GaussianDesignSpec, CliError> {
    let t = text.trim();
    let spec = if t == "identity" {
        GaussianDesignSpec::identity(dim)
    } else if let Some(rho) = t.strip_prefix("toeplitz:") {
        let rho: f64 = rho.parse().map_err(|_| usage(format!("bad toeplitz correlation in {text:?}")))?;
        GaussianDesignSpec::toeplitz(dim, rho)
    } else {
        return Err(usage(format!("unknown design {text:?} (identity or toeplitz:RHO)")));
    };
    spec.map_err(CliError::from)
}

pub fn design_setting(s: &Settings, dim: usize) -> Result<GaussianDesignSpec, CliError> {
    design(s.raw("design").unwrap_or("identity"), dim)
}

pub fn solver(s: &Settings, base: SolverConfig) -> Result<SolverConfig, CliError> {
    let step_rule = match s.raw("step") {
        None => match base.step_rule {
            StepRule::Backtracking { beta } => StepRule::Backtracking {
                beta: s.get_or("beta", beta)?,
            },
            fixed => fixed,
        },
        Some("backtracking") => StepRule::Backtracking {
            beta: s.get_or("beta", 0.5)?,
        },
        Some("fixed") => StepRule::FixedFromLipschitz,
        Some(other) => return Err(usage(format!("unknown step rule {other:?} (backtracking or fixed)"))),
    };
    Ok(SolverConfig {
        max_iter: s.get_or("max_iter", base.max_iter)?,
        tol: s.get_or("tol", base.tol)?,
        step_rule,
        acceleration: base.acceleration && !s.flag("no_accel")?,
    })
}

pub fn kernel(s: &Settings) -> Result<Kernel, CliError> {
    let k = match s.raw("kernel").unwrap_or("rbf") {
        "rbf" | "gaussian" => Kernel::gaussian_rbf(s.get_or("bandwidth", 1.0)?),
        "poly" | "polynomial" => Kernel::polynomial(
            s.get_or("degree", 3u32)?,
            s.get_or("offset", 1.0)?,
            s.get_or("radius", 1.0)?,
        ),
        other => return Err(usage(format!("unknown kernel {other:?} (rbf or poly)"))),
    };
    k.map_err(CliError::from)
}

/// Rows separated by `;`, entries by `,`; each entry an integer or `a/b`.
pub fn rational_table(text: &str) -> Result<Vec<Vec<BigRational>>, CliError> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<BigRational>()
                        .map_err(|_| usage(format!("{:?} is not a rational number", v.trim())))
                })
                .collect()
        })
        .collect()
}
