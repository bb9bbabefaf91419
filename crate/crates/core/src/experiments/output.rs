use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{render_svg, ErrorMetric, SweepResult, SweepRow, SweepSummary};
use crate::data::format_f64;
use crate::error::{Error, Result};

const ROW_HEADER: [&str; 9] = [
    "noise",
    "fraction",
    "n_outliers",
    "trial",
    "l2_error",
    "l1_error",
    "weighted_error",
    "iterations",
    "converged",
];

/// Where [`emit_outputs`] writes. `None` skips that artifact.
#[derive(Debug, Clone, Default)]
pub struct OutputPaths {
    pub rows_csv: Option<PathBuf>,
    pub summary_csv: Option<PathBuf>,
    pub fits_csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: PathBuf::new(),
            source,
        },
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// One row per trial, floats written with 17 significant digits.
pub fn write_rows_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROW_HEADER).map_err(csv_err)?;
    for r in &result.rows {
        w.write_record([
            r.noise.clone(),
            format_f64(r.fraction),
            r.n_outliers.to_string(),
            r.trial.to_string(),
            format_f64(r.l2_error),
            format_f64(r.l1_error),
            format_f64(r.weighted_error),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::new(),
        source,
    })
}

/// Parses the output of [`write_rows_csv`].
pub fn read_rows_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(ROW_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let bad = |k: usize| Error::Parse {
            line,
            message: format!("invalid {} value {:?}", ROW_HEADER[k], field(k)),
        };
        let float = |k: usize| field(k).parse::<f64>().map_err(|_| bad(k));
        let int = |k: usize| field(k).parse::<usize>().map_err(|_| bad(k));
        rows.push(SweepRow {
            noise: field(0).to_string(),
            fraction: float(1)?,
            n_outliers: int(2)?,
            trial: int(3)?,
            l2_error: float(4)?,
            l1_error: float(5)?,
            weighted_error: float(6)?,
            iterations: int(7)?,
            converged: field(8).parse::<bool>().map_err(|_| bad(8))?,
        });
    }
    Ok(rows)
}

fn metric_name(m: ErrorMetric) -> &'static str {
    match m {
        ErrorMetric::L2 => "l2",
        ErrorMetric::Weighted => "weighted",
    }
}

/// One row per (noise, fraction) point.
pub fn write_summary_csv<W: Write>(summary: &SweepSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["noise", "fraction", "trials", "metric", "mean_error", "std_error", "converged"])
        .map_err(csv_err)?;
    for ns in &summary.per_noise {
        for p in &ns.points {
            w.write_record([
                p.noise.clone(),
                format_f64(p.fraction),
                p.trials.to_string(),
                metric_name(summary.metric).to_string(),
                format_f64(p.mean),
                format_f64(p.std_error),
                p.converged.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::new(),
        source,
    })
}

/// One row per noise law: the line fit and the rank correlation. Missing
/// statistics are left empty.
pub fn write_fits_csv<W: Write>(summary: &SweepSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["noise", "fit_from", "points", "slope", "intercept", "r2", "spearman"])
        .map_err(csv_err)?;
    for ns in &summary.per_noise {
        let (points, slope, intercept, r2) = match ns.fit {
            Some(f) => (f.points.to_string(), format_f64(f.slope), format_f64(f.intercept), format_f64(f.r2)),
            None => ("0".into(), String::new(), String::new(), String::new()),
        };
        let fit_from = if summary.fit_from.is_finite() {
            format_f64(summary.fit_from)
        } else {
            String::new()
        };
        w.write_record([
            ns.noise.clone(),
            fit_from,
            points,
            slope,
            intercept,
            r2,
            ns.spearman.map(format_f64).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::new(),
        source,
    })
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| with_path(path, e))?;
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes every requested artifact.
pub fn emit_outputs(result: &SweepResult, summary: Option<&SweepSummary>, paths: &OutputPaths) -> Result<()> {
    if let Some(p) = &paths.rows_csv {
        write_file(p, |w| write_rows_csv(result, w))?;
    }
    if let Some(s) = summary {
        if let Some(p) = &paths.summary_csv {
            write_file(p, |w| write_summary_csv(s, w))?;
        }
        if let Some(p) = &paths.fits_csv {
            write_file(p, |w| write_fits_csv(s, w))?;
        }
    }
    if let Some(p) = &paths.svg {
        let svg = render_svg(summary, result.metric);
        write_file(p, |w| {
            w.write_all(svg.as_bytes()).map_err(|source| Error::Io {
                path: PathBuf::new(),
                source,
            })
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{summarize, sweep_outliers, Estimator, SweepConfig};

    fn sample() -> SweepResult {
        let mut cfg = SweepConfig::new(Estimator::ErmHuber, 80, 4).unwrap();
        cfg.trials = 2;
        cfg.outlier_fractions = vec![0.0, 0.1, 0.25];
        sweep_outliers(&cfg).unwrap()
    }

    #[test]
    fn rows_round_trip_bit_exactly() {
        let res = sample();
        let mut buf = Vec::new();
        write_rows_csv(&res, &mut buf).unwrap();
        let back = read_rows_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), res.rows.len());
        for (a, b) in back.iter().zip(&res.rows) {
            assert_eq!(a.l2_error.to_bits(), b.l2_error.to_bits());
            assert_eq!(a.weighted_error.to_bits(), b.weighted_error.to_bits());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_result_gives_header_only() {
        let res = SweepResult {
            estimator: "x".into(),
            metric: ErrorMetric::L2,
            rows: vec![],
        };
        let mut buf = Vec::new();
        write_rows_csv(&res, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), ROW_HEADER.join(","));
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = format!("{}\ngaussian(1),0.1,1,0,abc,0,0,1,true\n", ROW_HEADER.join(","));
        match read_rows_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn emits_files_and_reports_paths() {
        let res = sample();
        let summary = summarize(&res).unwrap();
        let dir = std::env::temp_dir().join(format!("huberbench-emit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let paths = OutputPaths {
            rows_csv: Some(dir.join("rows.csv")),
            summary_csv: Some(dir.join("summary.csv")),
            fits_csv: Some(dir.join("fits.csv")),
            svg: Some(dir.join("plot.svg")),
        };
        emit_outputs(&res, Some(&summary), &paths).unwrap();
        let summary_text = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert_eq!(summary_text.lines().count(), 1 + 3 * 3);
        let fits = std::fs::read_to_string(dir.join("fits.csv")).unwrap();
        assert_eq!(fits.lines().count(), 4);
        std::fs::remove_dir_all(&dir).unwrap();

        let bad = OutputPaths {
            rows_csv: Some(PathBuf::from("/nonexistent-dir/rows.csv")),
            ..OutputPaths::default()
        };
        let err = emit_outputs(&res, None, &bad).unwrap_err().to_string();
        assert!(err.contains("/nonexistent-dir/rows.csv"), "{err}");
    }
}
