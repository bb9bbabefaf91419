//! Flag definitions. Every value is kept as a string here; the settings
//! layer merges flags with the config file and parses them per key.

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "huberbench",
    version,
    about = "Robust Huber regression under label contamination: fits, sweeps, rates and checks",
    after_help = "Every subcommand accepts --config FILE (lines of `key = value`) and --seed N.\n\
                  Flags override the config file; HUBERBENCH_SEED is used when no seed is given."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Config file of `key = value` lines; flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<String>,
    /// Root seed (falls back to HUBERBENCH_SEED, then 0)
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    /// Iteration cap of the proximal gradient solver
    #[arg(long)]
    pub max_iter: Option<String>,
    /// Stationarity tolerance
    #[arg(long)]
    pub tol: Option<String>,
    /// Step rule: backtracking or fixed
    #[arg(long)]
    pub step: Option<String>,
    /// Backtracking factor in (0, 1)
    #[arg(long)]
    pub beta: Option<String>,
    /// Disable the accelerated schedule
    #[arg(long)]
    pub no_accel: bool,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    /// Kernel family: rbf or poly
    #[arg(long)]
    pub kernel: Option<String>,
    /// RBF bandwidth
    #[arg(long)]
    pub bandwidth: Option<String>,
    /// Polynomial degree
    #[arg(long)]
    pub degree: Option<String>,
    /// Polynomial offset c
    #[arg(long)]
    pub offset: Option<String>,
    /// Radius R of the polynomial kernel's input ball
    #[arg(long)]
    pub radius: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one estimator on a dataset CSV
    Fit {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV with header x_1,...,x_p,y[,is_outlier]
        #[arg(long)]
        data: Option<String>,
        /// erm, l1, ols or rkhs
        #[arg(long)]
        estimator: Option<String>,
        /// Huber threshold
        #[arg(long)]
        gamma: Option<String>,
        /// Penalty weight (l1 and rkhs)
        #[arg(long)]
        lambda: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Coefficient CSV destination (stdout when absent)
        #[arg(long)]
        output: Option<String>,
    },
    /// Generate a contaminated linear-regression dataset CSV
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of rows
        #[arg(long)]
        n: Option<String>,
        /// Number of features
        #[arg(long)]
        dim: Option<String>,
        /// Nonzero coefficients of the truth (dense when absent)
        #[arg(long)]
        sparsity: Option<String>,
        /// Noise law, e.g. gaussian:1, student-t:2, cauchy:1
        #[arg(long)]
        noise: Option<String>,
        /// Design covariance: identity or toeplitz:RHO
        #[arg(long)]
        design: Option<String>,
        /// Number of contaminated labels
        #[arg(long)]
        outliers: Option<String>,
        /// Contaminated fraction (alternative to --outliers)
        #[arg(long)]
        fraction: Option<String>,
        /// Outlier labels: uniform, shift or flip
        #[arg(long)]
        generator: Option<String>,
        /// Lower end of the uniform outlier range
        #[arg(long, allow_hyphen_values = true)]
        outlier_lo: Option<String>,
        /// Upper end of the uniform outlier range
        #[arg(long, allow_hyphen_values = true)]
        outlier_hi: Option<String>,
        /// Shift added by the shift generator
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<String>,
        /// Dataset CSV destination (stdout when absent)
        #[arg(long)]
        output: Option<String>,
        /// Where to write the true coefficients
        #[arg(long)]
        truth_output: Option<String>,
    },
    /// Run an outlier-fraction sweep and write CSV and SVG results
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Start from a reproduction setup: fig1 or fig2
        #[arg(long)]
        preset: Option<String>,
        /// erm, l1, ols or rkhs
        #[arg(long)]
        estimator: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        dim: Option<String>,
        #[arg(long)]
        sparsity: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        /// Comma-separated noise laws
        #[arg(long)]
        noises: Option<String>,
        /// Comma-separated outlier fractions, ascending
        #[arg(long)]
        fractions: Option<String>,
        #[arg(long)]
        trials: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        outlier_lo: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        outlier_hi: Option<String>,
        /// identity or toeplitz:RHO
        #[arg(long)]
        design: Option<String>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Kernel sweeps: centers of the target function
        #[arg(long)]
        centers: Option<String>,
        /// Kernel sweeps: fresh points for the error
        #[arg(long)]
        test_points: Option<String>,
        /// Smallest fraction used by the linear fit
        #[arg(long)]
        fit_from: Option<String>,
        /// Directory for rows.csv, summary.csv, fits.csv and plot.svg
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// Evaluate an error-rate formula
    Rates {
        #[command(subcommand)]
        kind: RateCommand,
    },
    /// Check the local Bernstein condition for a noise law
    Bernstein {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        noise: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        /// Localization radius
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        /// Multiplier m in gamma - m r
        #[arg(long)]
        multiplier: Option<String>,
    },
    /// Monte Carlo complexity of a localized class and its fixed point
    Complexity {
        #[command(flatten)]
        common: Common,
        /// Class: l2 (all linear functionals) or l1 (an l1 ball of radius --l1-radius)
        #[arg(long)]
        set: Option<String>,
        /// Localization radius r at which the complexity is reported
        #[arg(long)]
        radius: Option<String>,
        #[arg(long)]
        l1_radius: Option<String>,
        #[arg(long)]
        dim: Option<String>,
        #[arg(long)]
        samples: Option<String>,
        /// gaussian (mean width) or rademacher
        #[arg(long)]
        mode: Option<String>,
        /// Sample size |I| of the fixed-point inequality and of the Rademacher design
        #[arg(long)]
        n: Option<String>,
        /// identity or toeplitz:RHO (Rademacher design)
        #[arg(long)]
        design: Option<String>,
        /// Bernstein constant A
        #[arg(long)]
        a: Option<String>,
        /// Lipschitz constant L of the loss
        #[arg(long)]
        lipschitz: Option<String>,
        /// Absolute constant c
        #[arg(long)]
        c: Option<String>,
    },
    /// Estimate a restricted-eigenvalue constant
    ReCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<String>,
        /// identity or toeplitz:RHO
        #[arg(long)]
        design: Option<String>,
        /// Support size s
        #[arg(long)]
        s: Option<String>,
        /// Cone parameter c0
        #[arg(long)]
        c0: Option<String>,
        /// Random cone directions per support
        #[arg(long)]
        samples: Option<String>,
        /// Also run the sparsity check at this l1 radius
        #[arg(long)]
        rho: Option<String>,
        /// Radius r for the sparsity check
        #[arg(long)]
        r: Option<String>,
    },
    /// Fit the eigenvalue decay of a kernel Gram matrix
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Number of sample points
        #[arg(long)]
        n: Option<String>,
        /// Input dimension
        #[arg(long)]
        dim: Option<String>,
        /// First eigenvalue index of the fit (1-based)
        #[arg(long)]
        first: Option<String>,
        /// Last eigenvalue index of the fit
        #[arg(long)]
        last: Option<String>,
        /// Normalized spectrum CSV destination
        #[arg(long)]
        output: Option<String>,
    },
    /// Label-only contamination coupling of two discrete models
    Lecam {
        #[command(flatten)]
        common: Common,
        /// Use the built-in two-atom pair
        #[arg(long)]
        demo: bool,
        /// Comma-separated design atoms
        #[arg(long, allow_hyphen_values = true)]
        x_atoms: Option<String>,
        /// Comma-separated label atoms
        #[arg(long, allow_hyphen_values = true)]
        y_atoms: Option<String>,
        /// First table: rows (one per x atom) separated by ';', entries by ','; rationals like 3/5
        #[arg(long)]
        p1: Option<String>,
        /// Second table in the same format
        #[arg(long)]
        p2: Option<String>,
    },
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    /// Number of outliers |O|
    #[arg(long)]
    pub outliers: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Absolute constant c
    #[arg(long)]
    pub c: Option<String>,
    /// Trace of the design covariance (erm)
    #[arg(long)]
    pub trace: Option<String>,
    #[arg(long)]
    pub sparsity: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    /// Restricted-eigenvalue constant (lasso-re)
    #[arg(long)]
    pub kappa: Option<String>,
    /// Spectral decay exponent p (rkhs)
    #[arg(long)]
    pub decay: Option<String>,
    /// text or csv
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum RateCommand {
    /// Unpenalized Huber ERM
    Erm(RateArgs),
    /// l1-penalized Huber with isotropic design
    Lasso(RateArgs),
    /// l1-penalized Huber under a restricted-eigenvalue design
    LassoRe(RateArgs),
    /// Huber regression in an RKHS
    Rkhs(RateArgs),
}
