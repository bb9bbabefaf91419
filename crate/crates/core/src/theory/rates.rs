use std::fmt::{self, Write as _};

use crate::data::format_f64;
use crate::error::{invalid, Result};

/// Inputs shared by the rate formulas. Formula-specific quantities are
/// optional and requested only by the formulas that use them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    /// Huber threshold, which is also the loss's Lipschitz constant.
    pub gamma: f64,
    /// Local Bernstein constant; the curvature constant is `A = 4/α`.
    pub alpha: f64,
    pub n: usize,
    pub n_outliers: usize,
    pub delta: f64,
    /// Absolute constant multiplying every formula. It is not identified by
    /// the analysis, so it defaults to 1 and is echoed in every report.
    pub c_abs: f64,
    pub trace_sigma: Option<f64>,
    pub sparsity: Option<usize>,
    pub dim: Option<usize>,
    pub kappa: Option<f64>,
    pub decay_p: Option<f64>,
}

impl RateInputs {
    pub fn new(gamma: f64, alpha: f64, n: usize, n_outliers: usize, delta: f64) -> Self {
        Self {
            gamma,
            alpha,
            n,
            n_outliers,
            delta,
            c_abs: 1.0,
            trace_sigma: None,
            sparsity: None,
            dim: None,
            kappa: None,
            decay_p: None,
        }
    }

    pub fn with_c_abs(mut self, c: f64) -> Self {
        self.c_abs = c;
        self
    }

    pub fn with_trace_sigma(mut self, trace: f64) -> Self {
        self.trace_sigma = Some(trace);
        self
    }

    pub fn with_sparsity(mut self, s: usize, dim: usize) -> Self {
        self.sparsity = Some(s);
        self.dim = Some(dim);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_decay(mut self, p: f64) -> Self {
        self.decay_p = Some(p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if 2 * self.n_outliers > self.n {
            return Err(invalid(format!(
                "{} outliers exceed half of the {} observations",
                self.n_outliers, self.n
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.c_abs > 0.0 && self.c_abs.is_finite()) {
            return Err(invalid(format!("the absolute constant must be positive, got {}", self.c_abs)));
        }
        Ok(())
    }

    fn trace(&self) -> Result<f64> {
        let t = self.trace_sigma.ok_or_else(|| invalid("missing input: trace_sigma"))?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("trace_sigma must be positive, got {t}")));
        }
        Ok(t)
    }

    fn sparse(&self) -> Result<(f64, f64)> {
        let s = self.sparsity.ok_or_else(|| invalid("missing input: sparsity"))?;
        let p = self.dim.ok_or_else(|| invalid("missing input: dim"))?;
        if s == 0 {
            return Err(invalid("sparsity must be at least 1"));
        }
        if s > p {
            return Err(invalid(format!("sparsity {s} exceeds dimension {p}")));
        }
        if p < 2 {
            return Err(invalid("dimension must be at least 2 for log p to be positive"));
        }
        Ok((s as f64, p as f64))
    }

    fn kappa_value(&self) -> Result<f64> {
        let k = self.kappa.ok_or_else(|| invalid("missing input: kappa"))?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!("kappa must be positive, got {k}")));
        }
        Ok(k)
    }

    fn decay(&self) -> Result<f64> {
        let p = self.decay_p.ok_or_else(|| invalid("missing input: decay_p"))?;
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("decay exponent must lie in (0, 1), got {p}")));
        }
        Ok(p)
    }

    fn log_inv_delta(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    fn outlier_fraction(&self) -> f64 {
        self.n_outliers as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Erm,
    Lasso,
    LassoRe,
    Rkhs,
}

impl RateKind {
    pub fn name(self) -> &'static str {
        match self {
            RateKind::Erm => "erm",
            RateKind::Lasso => "lasso",
            RateKind::LassoRe => "lasso-re",
            RateKind::Rkhs => "rkhs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominantTerm {
    Complexity,
    Confidence,
    Outliers,
}

impl fmt::Display for DominantTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DominantTerm::Complexity => "complexity",
            DominantTerm::Confidence => "confidence",
            DominantTerm::Outliers => "outliers",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub name: String,
    pub holds: bool,
    pub margin: f64,
}

/// Output of a rate formula. `rate` is the largest of `terms`
/// (complexity, confidence, outliers); ties go to the earlier term.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub kind: RateKind,
    pub rate: f64,
    pub dominant_term: DominantTerm,
    pub terms: [f64; 3],
    /// ℓ1 estimation rate (sparse formulas only).
    pub l1_rate: Option<f64>,
    /// The regularization level the corresponding theorem prescribes.
    pub lambda: Option<f64>,
    /// Outlier count above which the outlier term dominates the complexity term.
    pub outlier_crossover: Option<f64>,
    pub inputs: RateInputs,
    pub condition_verdicts: Vec<ConditionVerdict>,
}

fn max_term(terms: [f64; 3]) -> (f64, DominantTerm) {
    let labels = [DominantTerm::Complexity, DominantTerm::Confidence, DominantTerm::Outliers];
    let mut best = 0;
    for i in 1..3 {
        if terms[i] > terms[best] {
            best = i;
        }
    }
    (terms[best], labels[best])
}

fn report(kind: RateKind, terms: [f64; 3], inputs: &RateInputs) -> TheoryReport {
    let (rate, dominant_term) = max_term(terms);
    let half = inputs.n as f64 / 2.0;
    TheoryReport {
        kind,
        rate,
        dominant_term,
        terms,
        l1_rate: None,
        lambda: None,
        outlier_crossover: None,
        inputs: *inputs,
        condition_verdicts: vec![ConditionVerdict {
            name: "outliers_at_most_half".into(),
            holds: inputs.n_outliers as f64 <= half,
            margin: half - inputs.n_outliers as f64,
        }],
    }
}

/// `c(γ/α)·max(√(Tr Σ/N), √(log(1/δ)/N), |O|/N)`, the ℓ2 rate of the Huber ERM.
pub fn rate_erm(inputs: &RateInputs) -> Result<TheoryReport> {
    inputs.validate()?;
    let trace = inputs.trace()?;
    let n = inputs.n as f64;
    let scale = inputs.c_abs * inputs.gamma / inputs.alpha;
    let terms = [
        scale * (trace / n).sqrt(),
        scale * (inputs.log_inv_delta() / n).sqrt(),
        scale * inputs.outlier_fraction(),
    ];
    let mut r = report(RateKind::Erm, terms, inputs);
    r.outlier_crossover = Some((trace * n).sqrt());
    Ok(r)
}

/// ℓ2 and ℓ1 rates and the prescribed `λ` for the ℓ1-penalized estimator
/// under an isotropic design.
pub fn rate_lasso(inputs: &RateInputs) -> Result<TheoryReport> {
    inputs.validate()?;
    let (s, p) = inputs.sparse()?;
    let n = inputs.n as f64;
    let c = inputs.c_abs;
    let scale = c * inputs.gamma / inputs.alpha;
    let log_p = p.ln();
    let l = inputs.log_inv_delta();
    let o = inputs.n_outliers as f64;
    let terms = [
        scale * (s * log_p / n).sqrt(),
        scale * (l / n).sqrt(),
        scale * o / n,
    ];
    let mut r = report(RateKind::Lasso, terms, inputs);
    r.l1_rate = Some(s.sqrt() * r.rate);
    r.lambda = Some(
        c * inputs.gamma * (log_p / n).sqrt().max((l / (s * n)).sqrt()).max(o / (s.sqrt() * n)),
    );
    r.outlier_crossover = Some((s * log_p * n).sqrt());
    r.condition_verdicts.push(sparsity_verdict(s, p));
    Ok(r)
}

fn sparsity_verdict(s: f64, p: f64) -> ConditionVerdict {
    ConditionVerdict {
        name: "sparsity_at_most_dim".into(),
        holds: s <= p,
        margin: p - s,
    }
}

/// Rates under a restricted-eigenvalue condition with constant `κ`.
pub fn rate_lasso_re(inputs: &RateInputs) -> Result<TheoryReport> {
    inputs.validate()?;
    let (s, p) = inputs.sparse()?;
    let kappa = inputs.kappa_value()?;
    let n = inputs.n as f64;
    let c = inputs.c_abs;
    let (gamma, alpha) = (inputs.gamma, inputs.alpha);
    let scale = c * gamma / alpha;
    let log_p = p.ln();
    let l = inputs.log_inv_delta();
    let o = inputs.n_outliers as f64;
    let terms = [
        scale * (s * log_p / (kappa * kappa * n)).sqrt(),
        scale * (l / n).sqrt(),
        scale * o / n,
    ];
    let mut r = report(RateKind::LassoRe, terms, inputs);
    let l1_terms = [
        (s / kappa) * (log_p / n).sqrt(),
        (s * l / n).sqrt(),
        s.sqrt() * o / n,
    ];
    r.l1_rate = Some(c * gamma / (kappa * alpha) * max_term(l1_terms).0);
    r.lambda = Some(
        c * gamma
            * (log_p / n)
                .sqrt()
                .max(kappa * (l / (s * n)).sqrt())
                .max(kappa * o / (s.sqrt() * n)),
    );
    r.outlier_crossover = Some((s * log_p * n).sqrt() / kappa);
    r.condition_verdicts.push(sparsity_verdict(s, p));
    Ok(r)
}

/// Rate of the RKHS estimator when the kernel's eigenvalues decay like
/// `k^{−1/p}`. The complexity term scales like `(γ/α)^{1/(p+1)}`, the
/// other two linearly in `γ/α`.
pub fn rate_rkhs(inputs: &RateInputs) -> Result<TheoryReport> {
    inputs.validate()?;
    let p = inputs.decay()?;
    let n = inputs.n as f64;
    let c = inputs.c_abs;
    let ratio = inputs.gamma / inputs.alpha;
    let terms = [
        c * ratio.powf(1.0 / (p + 1.0)) / n.powf(1.0 / (2.0 * (p + 1.0))),
        c * ratio * (inputs.log_inv_delta() / n).sqrt(),
        c * ratio * inputs.outlier_fraction(),
    ];
    let mut r = report(RateKind::Rkhs, terms, inputs);
    r.lambda = Some(c * inputs.alpha * r.rate);
    r.outlier_crossover = Some((1.0 / ratio).powf(p / (p + 1.0)) * n.powf((2.0 * p + 1.0) / (2.0 * p + 2.0)));
    Ok(r)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TheoryReport {
    pub const CSV_HEADER: &'static str = "kind,rate,dominant_term,complexity_term,confidence_term,outlier_term,l1_rate,lambda,outlier_crossover,gamma,alpha,n,n_outliers,delta,c_abs,trace_sigma,sparsity,dim,kappa,decay_p";

    /// One CSV row matching [`Self::CSV_HEADER`]; absent values are empty.
    pub fn to_csv_row(&self) -> String {
        let i = &self.inputs;
        [
            self.kind.name().to_string(),
            format_f64(self.rate),
            self.dominant_term.to_string(),
            format_f64(self.terms[0]),
            format_f64(self.terms[1]),
            format_f64(self.terms[2]),
            opt(self.l1_rate),
            opt(self.lambda),
            opt(self.outlier_crossover),
            format_f64(i.gamma),
            format_f64(i.alpha),
            i.n.to_string(),
            i.n_outliers.to_string(),
            format_f64(i.delta),
            format_f64(i.c_abs),
            opt(i.trace_sigma),
            opt_usize(i.sparsity),
            opt_usize(i.dim),
            opt(i.kappa),
            opt(i.decay_p),
        ]
        .join(",")
    }

    /// Human-readable block, one `key: value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "formula: {}", self.kind.name());
        let _ = writeln!(s, "rate: {}", self.rate);
        let _ = writeln!(s, "dominant term: {}", self.dominant_term);
        let _ = writeln!(s, "complexity term: {}", self.terms[0]);
        let _ = writeln!(s, "confidence term: {}", self.terms[1]);
        let _ = writeln!(s, "outlier term: {}", self.terms[2]);
        if let Some(v) = self.l1_rate {
            let _ = writeln!(s, "l1 rate: {v}");
        }
        if let Some(v) = self.lambda {
            let _ = writeln!(s, "lambda: {v}");
        }
        if let Some(v) = self.outlier_crossover {
            let _ = writeln!(s, "outlier crossover: {v}");
        }
        let _ = writeln!(s, "absolute constant c: {}", self.inputs.c_abs);
        for v in &self.condition_verdicts {
            let _ = writeln!(s, "check {}: {} (margin {})", v.name, if v.holds { "holds" } else { "fails" }, v.margin);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn base() -> RateInputs {
        RateInputs::new(1.0, 1.0, 1000, 0, (-1.0f64).exp())
    }

    #[test]
    fn erm_example() {
        let r = rate_erm(&base().with_trace_sigma(50.0)).unwrap();
        assert!((r.rate - 0.05f64.sqrt()).abs() <= 1e-12);
        assert_eq!(r.dominant_term, DominantTerm::Complexity);
        assert!(r.to_text().contains("0.2236"));
    }

    #[test]
    fn erm_outlier_branch() {
        let mut i = base().with_trace_sigma(1e-6);
        i.n_outliers = 500;
        i.delta = 0.9;
        let r = rate_erm(&i).unwrap();
        assert_eq!(r.dominant_term, DominantTerm::Outliers);
        assert!((r.rate - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn missing_and_invalid_inputs() {
        assert!(rate_erm(&base()).is_err());
        assert!(rate_lasso(&base()).is_err());
        assert!(rate_lasso(&base().with_sparsity(0, 10)).is_err());
        assert!(rate_lasso_re(&base().with_sparsity(5, 10)).is_err());
        assert!(rate_rkhs(&base().with_decay(1.0)).is_err());
        let mut i = base().with_trace_sigma(1.0);
        i.n_outliers = 501;
        assert!(rate_erm(&i).is_err());
        i.n_outliers = 0;
        i.alpha = 1.5;
        assert!(rate_erm(&i).is_err());
    }

    #[test]
    fn lasso_example_and_l1_ratio() {
        let mut i = base().with_sparsity(50, 1000);
        i.delta = 0.5;
        let r = rate_lasso(&i).unwrap();
        let expected = (50.0 * 1000f64.ln() / 1000.0).sqrt();
        assert!((r.rate - expected).abs() <= 1e-12);
        assert!((r.rate - 0.5877).abs() < 1e-4);
        assert_eq!(r.dominant_term, DominantTerm::Complexity);
        assert!((r.l1_rate.unwrap() - 50f64.sqrt() * r.rate).abs() <= 1e-12);
    }

    #[test]
    fn lasso_crossover() {
        let (s, p, n) = (4.0f64, 100.0f64, 10_000.0f64);
        let o = (s * p.ln() * n).sqrt();
        // use a noninteger outlier count through the unscaled terms directly
        let mut i = RateInputs::new(1.0, 1.0, 10_000, o.round() as usize, 0.9).with_sparsity(4, 100);
        let r = rate_lasso(&i).unwrap();
        assert!((r.terms[0] - r.terms[2]).abs() <= 1.0 / n);
        i.n_outliers = o.ceil() as usize + 1;
        assert_eq!(rate_lasso(&i).unwrap().dominant_term, DominantTerm::Outliers);
    }

    #[test]
    fn re_reduces_and_scales() {
        let i = base().with_sparsity(10, 500);
        let plain = rate_lasso(&i).unwrap();
        let re1 = rate_lasso_re(&i.with_kappa(1.0)).unwrap();
        assert!((plain.terms[0] - re1.terms[0]).abs() <= 1e-15);
        let re_half = rate_lasso_re(&i.with_kappa(0.5)).unwrap();
        assert!((re_half.terms[0] - 2.0 * re1.terms[0]).abs() <= 1e-14);
        let k = 0.5;
        let crossover = (10.0 * 500f64.ln() * 1000.0).sqrt() / k;
        let mut j = i.with_kappa(k);
        j.delta = 0.9;
        j.n_outliers = crossover.ceil() as usize;
        assert_eq!(rate_lasso_re(&j).unwrap().dominant_term, DominantTerm::Outliers);
        j.n_outliers = crossover.floor() as usize - 1;
        assert_eq!(rate_lasso_re(&j).unwrap().dominant_term, DominantTerm::Complexity);
    }

    #[test]
    fn rkhs_examples() {
        let p = 0.05;
        let mut i = RateInputs::new(1.0, 1.0, 10_000, 0, 0.5).with_decay(p);
        let r = rate_rkhs(&i).unwrap();
        assert_eq!(r.dominant_term, DominantTerm::Complexity);
        assert!((r.rate - 10_000f64.powf(-1.0 / (2.0 * (1.0 + p)))).abs() <= 1e-12);
        let cross = r.outlier_crossover.unwrap();
        i.n_outliers = cross.ceil() as usize + 1;
        assert_eq!(rate_rkhs(&i).unwrap().dominant_term, DominantTerm::Outliers);
        assert_eq!(r.lambda.unwrap(), r.rate);
    }

    #[test]
    fn csv_row_matches_header() {
        let r = rate_lasso_re(&base().with_sparsity(3, 30).with_kappa(0.7)).unwrap();
        let row = r.to_csv_row();
        assert_eq!(row.split(',').count(), TheoryReport::CSV_HEADER.split(',').count());
        assert!(row.starts_with("lasso-re,"));
    }

    fn random_inputs(rng: &mut impl Rng) -> RateInputs {
        let n = rng.random_range(2..5000usize);
        RateInputs::new(
            rng.random_range(0.01..10.0),
            rng.random_range(0.01..=1.0),
            n,
            rng.random_range(0..=n / 2),
            rng.random_range(0.001..0.999),
        )
        .with_c_abs(rng.random_range(0.1..5.0))
        .with_trace_sigma(rng.random_range(0.1..500.0))
        .with_sparsity(rng.random_range(1..20), rng.random_range(20..2000))
        .with_kappa(rng.random_range(0.05..2.0))
        .with_decay(rng.random_range(0.01..0.99))
    }

    fn all_rates(i: &RateInputs) -> Vec<TheoryReport> {
        vec![
            rate_erm(i).unwrap(),
            rate_lasso(i).unwrap(),
            rate_lasso_re(i).unwrap(),
            rate_rkhs(i).unwrap(),
        ]
    }

    #[test]
    fn rates_monotone_in_outliers_and_n() {
        let mut rng = rng_from_seed(21);
        for _ in 0..2000 {
            let i = random_inputs(&mut rng);
            let mut more = i;
            more.n_outliers = rng.random_range(i.n_outliers..=i.n / 2);
            let mut bigger = i;
            bigger.n = i.n + rng.random_range(1..1000);
            for ((a, b), c) in all_rates(&i).iter().zip(all_rates(&more)).zip(all_rates(&bigger)) {
                assert!(b.rate >= a.rate, "{:?}", a.kind);
                assert!(c.rate <= a.rate * (1.0 + 1e-12), "{:?}", a.kind);
            }
        }
    }

    #[test]
    fn rates_scale_with_gamma_over_alpha() {
        let mut rng = rng_from_seed(22);
        for _ in 0..2000 {
            let i = random_inputs(&mut rng);
            let k: f64 = rng.random_range(0.1..10.0);
            let mut scaled = i;
            scaled.gamma *= k;
            let a = all_rates(&i);
            let b = all_rates(&scaled);
            for (x, y) in a.iter().zip(&b).take(3) {
                assert!((y.rate - k * x.rate).abs() <= 1e-12 * y.rate.max(1.0), "{:?}", x.kind);
            }
            let p = i.decay_p.unwrap();
            let (x, y) = (&a[3], &b[3]);
            assert!((y.terms[0] - k.powf(1.0 / (p + 1.0)) * x.terms[0]).abs() <= 1e-12 * y.terms[0].max(1.0));
            assert!((y.terms[1] - k * x.terms[1]).abs() <= 1e-12 * y.terms[1].max(1.0));
            assert!((y.terms[2] - k * x.terms[2]).abs() <= 1e-12 * y.terms[2].max(1.0));
        }
    }
}
