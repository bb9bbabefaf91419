use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use huberbench_core::data::{format_f64, generate_design, make_regression_dataset, write_dataset_csv};
use huberbench_core::experiments::{
    emit_outputs, summarize_from, sweep_outliers, write_rows_csv, Estimator, OutputPaths, SweepConfig, SweepSummary,
};
use huberbench_core::kernel::{estimate_spectrum_decay, fit_rkhs_huber, gram_matrix, Kernel};
use huberbench_core::lecam::{
    demo_pair, format_rational, lecam_contamination_pair, positive_part_mass, verify_mixture_identity, DiscreteJoint,
    Probability,
};
use huberbench_core::linear::{fit_erm_huber, fit_l1_huber, fit_ols};
use huberbench_core::rng::derive_seed;
use huberbench_core::theory::{
    bernstein_check, fixed_point_radius, gaussian_mean_width_mc, intersection_width_bound, rademacher_mc, rate_erm,
    rate_lasso, rate_lasso_re, rate_rkhs, re_constant_estimate, sparsity_equation_check, ComplexityMode, RateInputs,
    SetSpec, TheoryReport, BERNSTEIN_MULTIPLIER,
};
use huberbench_core::{
    BigRational, ContaminationSpec, DVector, GaussianDesignSpec, GroundTruth, HuberParams, OutlierGenerator,
    SolverConfig,
};

use crate::args::{Cli, Command, RateCommand};
use crate::parse;
use crate::settings::Settings;
use crate::CliError;

type Out<'a> = &'a mut dyn Write;

/// Names of the matched subcommands, outermost first.
pub fn subcommand_path(matches: &ArgMatches) -> Vec<String> {
    let mut path = Vec::new();
    let mut m = matches;
    while let Some((name, sub)) = m.subcommand() {
        path.push(name.to_string());
        m = sub;
    }
    path
}

fn leaf(matches: &ArgMatches) -> &ArgMatches {
    let mut m = matches;
    while let Some((_, sub)) = m.subcommand() {
        m = sub;
    }
    m
}

/// Runs the parsed command. `command` is the leaf subcommand definition.
pub fn dispatch(cli: &Cli, command: &clap::Command, matches: &ArgMatches, out: Out, err: Out) -> Result<(), CliError> {
    let s = Settings::from_matches(command, leaf(matches))?;
    match &cli.command {
        Command::Fit { .. } => fit(&s, out, err),
        Command::Generate { .. } => generate(&s, out),
        Command::Sweep { .. } => sweep(&s, out, err),
        Command::Rates { kind } => rates(kind, &s, out),
        Command::Bernstein { .. } => bernstein(&s, out),
        Command::Complexity { .. } => complexity(&s, out),
        Command::ReCheck { .. } => re_check(&s, out),
        Command::Spectrum { .. } => spectrum(&s, out),
        Command::Lecam { .. } => lecam(&s, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn finish(mut w: impl Write, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_coefficients(w: &mut dyn Write, values: &DVector<f64>) -> Result<(), CliError> {
    writeln!(w, "index,coefficient")?;
    for (j, v) in values.iter().enumerate() {
        writeln!(w, "{},{}", j + 1, format_f64(*v))?;
    }
    Ok(())
}

fn fit(s: &Settings, out: Out, err: Out) -> Result<(), CliError> {
    let path: String = s.require("data")?;
    let data = crate::load_dataset_csv(&path)?;
    let gamma = s.get_or("gamma", 1.0)?;
    let params = HuberParams::new(gamma)?;
    let cfg = parse::solver(s, SolverConfig::default())?;
    let estimator = s.raw("estimator").unwrap_or("erm");
    let mut report = Vec::new();
    let (coefficients, result) = match estimator {
        "erm" => {
            let f = fit_erm_huber(&data, &params, &cfg)?;
            (f.coefficients.clone(), f)
        }
        "l1" => {
            let f = fit_l1_huber(&data, &params, s.require("lambda")?, &cfg)?;
            (f.coefficients.clone(), f)
        }
        "ols" => {
            let f = fit_ols(&data)?;
            (f.coefficients.clone(), f)
        }
        "rkhs" => {
            let kernel = parse::kernel(s)?;
            let fac = gram_matrix(&kernel, &data.design)?;
            let f = fit_rkhs_huber(&fac, &data.labels, &params, s.require("lambda")?, &cfg)?;
            report.push(format!("hilbert norm: {}", f.hilbert_norm));
            (f.alpha, f.fit)
        }
        other => return Err(CliError::Usage(format!("unknown estimator {other:?} (erm, l1, ols, rkhs)"))),
    };
    let mut lines = vec![
        format!("estimator: {estimator}"),
        format!("n: {}", data.n()),
        format!("dim: {}", data.dim()),
        format!("converged: {}", result.converged),
        format!("iterations: {}", result.iterations),
        format!("stationarity residual: {}", result.stationarity_residual),
        format!("objective: {}", result.final_objective()),
        format!("non-unique: {}", result.non_unique),
    ];
    lines.extend(report);
    match s.raw("output") {
        Some(p) => {
            let p = PathBuf::from(p);
            let mut w = create(&p)?;
            write_coefficients(&mut w, &coefficients)?;
            finish(w, &p)?;
            for l in lines {
                writeln!(out, "{l}")?;
            }
        }
        None => {
            write_coefficients(out, &coefficients)?;
            for l in lines {
                writeln!(err, "{l}")?;
            }
        }
    }
    Ok(())
}

fn generate(s: &Settings, out: Out) -> Result<(), CliError> {
    let seed = s.seed()?;
    let n: usize = s.require("n")?;
    let dim: usize = s.require("dim")?;
    let design = parse::design_setting(s, dim)?;
    let noise = parse::noise(s.raw("noise").unwrap_or("gaussian:1"))?;
    let truth_seed = derive_seed(seed, 0);
    let truth = match s.get::<usize>("sparsity")? {
        Some(k) => GroundTruth::sparse_gaussian(dim, k, truth_seed)?,
        None => GroundTruth::dense_gaussian(dim, truth_seed),
    };
    let count = match (s.get::<usize>("outliers")?, s.get::<f64>("fraction")?) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either outliers or fraction, not both".into())),
        (Some(c), None) => c,
        (None, Some(f)) => {
            if !(0.0..=0.5).contains(&f) {
                return Err(CliError::Usage(format!("fraction must lie in [0, 0.5], got {f}")));
            }
            (f * n as f64).round() as usize
        }
        (None, None) => 0,
    };
    let generator = match s.raw("generator").unwrap_or("uniform") {
        "uniform" => OutlierGenerator::UniformRange {
            lo: s.get_or("outlier_lo", -1e5)?,
            hi: s.get_or("outlier_hi", 1e5)?,
        },
        "shift" => OutlierGenerator::ConstantShift(s.require("shift")?),
        "flip" => OutlierGenerator::AdversarialFlip,
        other => return Err(CliError::Usage(format!("unknown generator {other:?} (uniform, shift, flip)"))),
    };
    let spec = ContaminationSpec {
        count,
        generator,
        seed: derive_seed(seed, 2),
    };
    let data = make_regression_dataset(&design, &truth, &noise, &spec, n, derive_seed(seed, 1))?;
    match s.raw("output") {
        Some(p) => {
            let p = PathBuf::from(p);
            let mut w = create(&p)?;
            write_dataset_csv(&data, &mut w).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
            finish(w, &p)?;
        }
        None => write_dataset_csv(&data, &mut *out)?,
    }
    if let Some(p) = s.raw("truth_output") {
        let p = PathBuf::from(p);
        let mut w = create(&p)?;
        write_coefficients(&mut w, &DVector::from_column_slice(truth.coefficients()))?;
        finish(w, &p)?;
    }
    Ok(())
}

fn sweep_config(s: &Settings) -> Result<(SweepConfig, f64), CliError> {
    let (mut cfg, mut fit_from) = match s.raw("preset") {
        None => (SweepConfig::new(Estimator::ErmHuber, 1000, 50)?, 0.0),
        Some("fig1") => (SweepConfig::figure1(), 0.05),
        Some("fig2") => (SweepConfig::figure2(), 0.05),
        Some(other) => return Err(CliError::Usage(format!("unknown preset {other:?} (fig1 or fig2)"))),
    };
    let preset_lambda = match cfg.estimator {
        Estimator::L1Huber { lambda } | Estimator::RkhsHuber { lambda, .. } => Some(lambda),
        _ => None,
    };
    let lambda = |s: &Settings| -> Result<f64, CliError> {
        match (s.get::<f64>("lambda")?, preset_lambda) {
            (Some(l), _) | (None, Some(l)) => Ok(l),
            (None, None) => Err(CliError::Usage("missing required setting `lambda`".into())),
        }
    };
    if let Some(e) = s.raw("estimator") {
        cfg.estimator = match e {
            "erm" => Estimator::ErmHuber,
            "ols" => Estimator::OlsBaseline,
            "l1" => Estimator::L1Huber { lambda: lambda(s)? },
            "rkhs" => Estimator::RkhsHuber {
                kernel: parse::kernel(s)?,
                lambda: lambda(s)?,
            },
            other => return Err(CliError::Usage(format!("unknown estimator {other:?} (erm, l1, ols, rkhs)"))),
        };
    } else if let Some(l) = s.get::<f64>("lambda")? {
        match &mut cfg.estimator {
            Estimator::L1Huber { lambda } | Estimator::RkhsHuber { lambda, .. } => *lambda = l,
            _ => return Err(CliError::Usage("lambda applies to the l1 and rkhs estimators only".into())),
        }
    }
    cfg.n = s.get_or("n", cfg.n)?;
    cfg.dim = s.get_or("dim", cfg.dim)?;
    cfg.design = parse::design_setting(s, cfg.dim)?;
    if let Some(k) = s.get::<usize>("sparsity")? {
        cfg.sparsity = Some(k);
    }
    cfg.gamma = s.get_or("gamma", cfg.gamma)?;
    if let Some(v) = s.raw("noises") {
        cfg.noise_models = parse::noise_list(v)?;
    }
    if let Some(v) = s.raw("fractions") {
        cfg.outlier_fractions = parse::float_list(v)?;
    }
    cfg.trials = s.get_or("trials", cfg.trials)?;
    cfg.outlier_range = (s.get_or("outlier_lo", cfg.outlier_range.0)?, s.get_or("outlier_hi", cfg.outlier_range.1)?);
    cfg.solver = parse::solver(s, cfg.solver)?;
    cfg.rkhs_centers = s.get_or("centers", cfg.rkhs_centers)?;
    cfg.rkhs_test_points = s.get_or("test_points", cfg.rkhs_test_points)?;
    cfg.root_seed = s.seed()?;
    fit_from = s.get_or("fit_from", fit_from)?;
    cfg.validate()?;
    Ok((cfg, fit_from))
}

fn print_summary(w: Out, summary: &SweepSummary, nonconverged: usize, rows: usize) -> Result<(), CliError> {
    writeln!(w, "estimator: {}", summary.estimator)?;
    writeln!(w, "metric: {}", summary.metric.label())?;
    writeln!(w, "non-converged fits: {nonconverged} of {rows}")?;
    for ns in &summary.per_noise {
        let means: Vec<String> = ns.points.iter().map(|p| format!("{:.4}", p.mean)).collect();
        writeln!(w, "{}: mean error by fraction [{}]", ns.noise, means.join(", "))?;
        if let Some(rho) = ns.spearman {
            writeln!(w, "  spearman: {rho:.4}")?;
        }
        if let Some(f) = ns.fit {
            writeln!(
                w,
                "  fit over {} points: slope {:.6} intercept {:.6} r2 {:.4}",
                f.points, f.slope, f.intercept, f.r2
            )?;
        }
    }
    Ok(())
}

fn sweep(s: &Settings, out: Out, err: Out) -> Result<(), CliError> {
    let (cfg, fit_from) = sweep_config(s)?;
    let result = sweep_outliers(&cfg)?;
    let summary = summarize_from(&result, fit_from)?;
    let nonconverged = result.rows.iter().filter(|r| !r.converged).count();
    match s.raw("out_dir") {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
            let paths = OutputPaths {
                rows_csv: Some(dir.join("rows.csv")),
                summary_csv: Some(dir.join("summary.csv")),
                fits_csv: Some(dir.join("fits.csv")),
                svg: Some(dir.join("plot.svg")),
            };
            emit_outputs(&result, Some(&summary), &paths)?;
            print_summary(out, &summary, nonconverged, result.rows.len())?;
            writeln!(out, "wrote rows.csv, summary.csv, fits.csv and plot.svg to {}", dir.display())?;
        }
        None => {
            write_rows_csv(&result, &mut *out)?;
            print_summary(err, &summary, nonconverged, result.rows.len())?;
        }
    }
    Ok(())
}

fn rates(kind: &RateCommand, s: &Settings, out: Out) -> Result<(), CliError> {
    let mut inputs = RateInputs::new(
        s.get_or("gamma", 1.0)?,
        s.get_or("alpha", 1.0)?,
        s.require("n")?,
        s.get_or("outliers", 0usize)?,
        s.get_or("delta", 0.05)?,
    )
    .with_c_abs(s.get_or("c", 1.0)?);
    if let Some(t) = s.get("trace")? {
        inputs = inputs.with_trace_sigma(t);
    }
    match (s.get::<usize>("sparsity")?, s.get::<usize>("dim")?) {
        (Some(k), Some(p)) => inputs = inputs.with_sparsity(k, p),
        (None, None) => {}
        _ => return Err(CliError::Usage("sparsity and dim must be given together".into())),
    }
    if let Some(k) = s.get("kappa")? {
        inputs = inputs.with_kappa(k);
    }
    if let Some(p) = s.get("decay")? {
        inputs = inputs.with_decay(p);
    }
    let report = match kind {
        RateCommand::Erm(_) => rate_erm(&inputs)?,
        RateCommand::Lasso(_) => rate_lasso(&inputs)?,
        RateCommand::LassoRe(_) => rate_lasso_re(&inputs)?,
        RateCommand::Rkhs(_) => rate_rkhs(&inputs)?,
    };
    match s.raw("format").unwrap_or("text") {
        "text" => write!(out, "{}", report.to_text())?,
        "csv" => writeln!(out, "{}\n{}", TheoryReport::CSV_HEADER, report.to_csv_row())?,
        other => return Err(CliError::Usage(format!("unknown format {other:?} (text or csv)"))),
    }
    Ok(())
}

fn bernstein(s: &Settings, out: Out) -> Result<(), CliError> {
    let noise = parse::noise(&s.require::<String>("noise")?)?;
    let gamma = s.get_or("gamma", 1.0)?;
    let r = s.get_or("r", 0.0)?;
    let alpha = s.require("alpha")?;
    let multiplier = s.get_or("multiplier", BERNSTEIN_MULTIPLIER)?;
    let v = bernstein_check(&noise, gamma, r, alpha, multiplier)?;
    writeln!(out, "noise: {}", noise.label())?;
    writeln!(out, "condition: P(|eps| <= gamma - {multiplier} r) >= alpha")?;
    writeln!(out, "holds: {}", v.holds)?;
    writeln!(out, "margin: {}", v.margin)?;
    Ok(())
}

fn complexity(s: &Settings, out: Out) -> Result<(), CliError> {
    let seed = s.seed()?;
    let dim: usize = s.require("dim")?;
    let radius = s.get_or("radius", 1.0)?;
    let samples = s.get_or("samples", 2000usize)?;
    let n = s.get_or("n", 100usize)?;
    let localized: Box<dyn Fn(f64) -> SetSpec> = match s.raw("set").unwrap_or("l2") {
        "l2" => Box::new(|r| SetSpec::L2Ball { radius: r }),
        "l1" => {
            let rho: f64 = s.require("l1_radius")?;
            Box::new(move |r| SetSpec::Intersection {
                l2_radius: r,
                l1_radius: rho,
            })
        }
        other => return Err(CliError::Usage(format!("unknown set {other:?} (l2 or l1)"))),
    };
    let (mode, estimate): (ComplexityMode, Box<dyn Fn(&SetSpec) -> huberbench_core::Result<_>>) =
        match s.raw("mode").unwrap_or("gaussian") {
            "gaussian" => (
                ComplexityMode::SubGaussian,
                Box::new(move |set| gaussian_mean_width_mc(set, dim, samples, seed)),
            ),
            "rademacher" => {
                let design: GaussianDesignSpec = parse::design_setting(s, dim)?;
                (
                    ComplexityMode::Bounded,
                    Box::new(move |set| rademacher_mc(&design, set, n, samples, seed)),
                )
            }
            other => return Err(CliError::Usage(format!("unknown mode {other:?} (gaussian or rademacher)"))),
        };
    let at_radius = estimate(&localized(radius))?;
    writeln!(out, "estimate: {}", at_radius.estimate)?;
    writeln!(out, "std error: {}", at_radius.std_error)?;
    writeln!(out, "samples: {}", at_radius.samples)?;
    if let (ComplexityMode::SubGaussian, SetSpec::Intersection { l2_radius, l1_radius }) = (mode, localized(radius)) {
        writeln!(out, "analytic bound: {}", intersection_width_bound(dim, l2_radius, l1_radius))?;
    }
    // The same seed at every radius keeps the complexity curve smooth.
    let curve = |r: f64| estimate(&localized(r)).map(|e| e.estimate).unwrap_or(f64::NAN);
    let r_star = fixed_point_radius(
        curve,
        s.get_or("a", 1.0)?,
        s.get_or("lipschitz", 1.0)?,
        n,
        mode,
        s.get_or("c", 1.0)?,
    )?;
    writeln!(out, "fixed point radius: {r_star}")?;
    Ok(())
}

fn re_check(s: &Settings, out: Out) -> Result<(), CliError> {
    let dim: usize = s.require("dim")?;
    let design = parse::design_setting(s, dim)?;
    let k: usize = s.require("s")?;
    let c0 = s.get_or("c0", 3.0)?;
    let est = re_constant_estimate(&design.covariance_matrix(), k, c0, s.get_or("samples", 20usize)?, s.seed()?)?;
    writeln!(out, "kappa: {}", est.kappa_hat)?;
    let support: Vec<String> = est.support.iter().map(|j| (j + 1).to_string()).collect();
    writeln!(out, "support: {}", support.join(" "))?;
    writeln!(out, "supports examined: {}", est.supports_examined)?;
    writeln!(out, "exhaustive: {}", est.exhaustive)?;
    match (s.get::<f64>("rho")?, s.get::<f64>("r")?) {
        (Some(rho), Some(r)) => {
            let check = sparsity_equation_check(k, rho, r, est.kappa_hat)?;
            writeln!(out, "sparsity condition: {}", if check.holds { "holds" } else { "fails" })?;
            writeln!(out, "largest admissible sparsity: {}", check.max_sparsity)?;
        }
        (None, None) => {}
        _ => return Err(CliError::Usage("rho and r must be given together".into())),
    }
    Ok(())
}

fn spectrum(s: &Settings, out: Out) -> Result<(), CliError> {
    let kernel = parse::kernel(s)?;
    let n = s.get_or("n", 200usize)?;
    let dim = s.get_or("dim", 1usize)?;
    if n == 0 || dim == 0 {
        return Err(CliError::Usage("n and dim must be at least 1".into()));
    }
    let mut points = generate_design(&GaussianDesignSpec::identity(dim)?, n, derive_seed(s.seed()?, 0));
    if let Kernel::Polynomial { radius, .. } = kernel {
        let max = points.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        if max > radius {
            points *= radius / max;
        }
    }
    let fac = gram_matrix(&kernel, &points)?;
    let first = s.get_or("first", 1usize)?;
    let last = s.get_or("last", n.min(50))?;
    let decay = estimate_spectrum_decay(&fac, first, last)?;
    writeln!(out, "p: {}", decay.p_hat)?;
    writeln!(out, "slope: {}", decay.slope)?;
    writeln!(out, "r2: {}", decay.r2)?;
    writeln!(out, "eigenvalues used: {}", decay.points_used)?;
    writeln!(out, "within (0, 1): {}", decay.in_assumed_range)?;
    if let Some(p) = s.raw("output") {
        let p = PathBuf::from(p);
        let mut w = create(&p)?;
        writeln!(w, "k,eigenvalue")?;
        for (k, v) in fac.normalized_spectrum().iter().enumerate() {
            writeln!(w, "{},{}", k + 1, format_f64(*v))?;
        }
        finish(w, &p)?;
    }
    Ok(())
}

fn table(p: &DiscreteJoint<BigRational>) -> String {
    p.probs
        .iter()
        .map(|row| row.iter().map(format_rational).collect::<Vec<_>>().join(", "))
        .collect::<Vec<_>>()
        .join("; ")
}

fn decimal_table(rows: &[Vec<BigRational>]) -> String {
    rows.iter()
        .map(|row| row.iter().map(|v| v.to_f64().to_string()).collect::<Vec<_>>().join(", "))
        .collect::<Vec<_>>()
        .join("; ")
}

fn lecam(s: &Settings, out: Out) -> Result<(), CliError> {
    let custom = ["x_atoms", "y_atoms", "p1", "p2"].iter().any(|k| s.raw(k).is_some());
    let (p1, p2) = if s.flag("demo")? || !custom {
        if custom {
            return Err(CliError::Usage("--demo cannot be combined with explicit tables".into()));
        }
        demo_pair()
    } else {
        let xs = parse::float_list(&s.require::<String>("x_atoms")?)?;
        let ys = parse::float_list(&s.require::<String>("y_atoms")?)?;
        let p1 = DiscreteJoint::new(xs.clone(), ys.clone(), parse::rational_table(&s.require::<String>("p1")?)?)?;
        let p2 = DiscreteJoint::new(xs, ys, parse::rational_table(&s.require::<String>("p2")?)?)?;
        (p1, p2)
    };
    let pair = lecam_contamination_pair(&p1, &p2)?;
    let check = verify_mixture_identity(&p1, &p2, &pair.eps_prime, &pair.q1, &pair.q2)?;
    let scheffe = positive_part_mass(&p1, &p2)?;
    writeln!(out, "P1: {}", table(&p1))?;
    writeln!(out, "P2: {}", table(&p2))?;
    writeln!(out, "total variation: {}", format_rational(&pair.tv))?;
    writeln!(out, "positive-part mass: {}", format_rational(&scheffe))?;
    writeln!(out, "eps': {}", format_rational(&pair.eps_prime))?;
    writeln!(out, "Q1: {}", table(&pair.q1))?;
    writeln!(out, "Q2: {}", table(&pair.q2))?;
    let mixture: Vec<String> = check
        .mixture
        .iter()
        .map(|row| row.iter().map(format_rational).collect::<Vec<_>>().join(", "))
        .collect();
    writeln!(out, "common mixture: {} ({})", mixture.join("; "), decimal_table(&check.mixture))?;
    writeln!(
        out,
        "mixture identity: {} (max discrepancy {})",
        if check.holds { "holds" } else { "fails" },
        format_rational(&check.max_discrepancy)
    )?;
    writeln!(out, "design marginal preserved: {}", pair.design_marginal_preserved)?;
    Ok(())
}
