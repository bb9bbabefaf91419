use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::ContaminatedDataset;
use crate::error::{Error, Result};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line: 0,
        message: e.to_string(),
    }
}

/// Writes the dataset with header `x_1,…,x_p,y,is_outlier`.
pub fn write_dataset_csv<W: Write>(data: &ContaminatedDataset, out: W) -> Result<()> {
    let p = data.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=p).map(|j| format!("x_{j}")).collect();
    header.push("y".into());
    header.push("is_outlier".into());
    w.write_record(&header).map_err(io_err)?;
    let mask = data.is_outlier_mask();
    let mut record = Vec::with_capacity(p + 2);
    for i in 0..data.n() {
        record.clear();
        record.extend((0..p).map(|j| format_f64(data.design[(i, j)])));
        record.push(format_f64(data.labels[i]));
        record.push(if mask[i] { "1" } else { "0" }.to_string());
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Parses the dataset schema written by [`write_dataset_csv`]. The
/// `is_outlier` column is optional; without it the partition is unknown.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<ContaminatedDataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = r.records();
    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file: expected header x_1,...,x_p,y[,is_outlier]".into(),
            })
        }
        Some(h) => h.map_err(|e| csv_err(e, 1))?,
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let has_flag = names.last() == Some(&"is_outlier");
    let value_cols = names.len() - usize::from(has_flag);
    if value_cols == 0 || names[value_cols - 1] != "y" {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must end with y or y,is_outlier; got '{}'", names.join(",")),
        });
    }
    let p = value_cols - 1;
    for (j, name) in names[..p].iter().enumerate() {
        if *name != format!("x_{}", j + 1) {
            return Err(Error::Parse {
                line: 1,
                message: format!("column {} should be x_{}, found '{name}'", j + 1, j + 1),
            });
        }
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut outliers = Vec::new();
    for (row, rec) in records.enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| csv_err(e, line))?;
        if rec.len() != names.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        for (j, field) in rec.iter().enumerate().take(value_cols) {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("field {} ('{field}') is not a number", j + 1),
            })?;
            if j < p {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
        if has_flag {
            match rec[value_cols].trim() {
                "1" | "true" => outliers.push(row),
                "0" | "false" => {}
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("is_outlier must be 0 or 1, found '{other}'"),
                    })
                }
            }
        }
    }
    let n = ys.len();
    let design = DMatrix::from_row_slice(n, p, &xs);
    let labels = DVector::from_vec(ys);
    let mut ds = ContaminatedDataset::from_observations(design, labels)?;
    if has_flag {
        let mut is_out = vec![false; n];
        outliers.iter().for_each(|&i| is_out[i] = true);
        ds.informative_idx = (0..n).filter(|&i| !is_out[i]).collect();
        ds.outlier_idx = outliers;
        ds.partition_known = true;
    }
    Ok(ds)
}

fn csv_err(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
