//! CSV input and output.
//!
//! Output is comma-separated UTF-8 with a header row; floats use Rust's
//! shortest round-trip formatting, so identical runs write identical bytes.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::data::{Dataset, Target};
use crate::error::{invalid, Error, Result};
use crate::linalg::Mat;

/// How to read the target column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaskHint {
    /// Numeric targets are regression, anything else classification.
    #[default]
    Auto,
    Regression,
    Classification,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    /// Original class names in label order (`1..=c`) for classification.
    pub class_names: Vec<String>,
}

const MISSING: [&str; 5] = ["", "na", "nan", "null", "?"];

fn is_missing(s: &str) -> bool {
    MISSING.contains(&s.trim().to_ascii_lowercase().as_str())
}

/// Reads a headed CSV. `target` names the response column (or gives its
/// zero-based index); `None` reads covariates only. Missing or non-numeric
/// covariates are reported with their 1-based data row and column name.
pub fn read_dataset(path: &Path, target: Option<&str>, hint: TaskHint) -> Result<LoadedDataset> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let target_idx = match target {
        None => None,
        Some(t) => Some(
            headers
                .iter()
                .position(|h| h == t)
                .or_else(|| t.parse::<usize>().ok().filter(|&i| i < headers.len()))
                .ok_or_else(|| invalid(format!("target column {t:?} not found in {headers:?}")))?,
        ),
    };
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| Some(i) != target_idx)
        .collect();
    if feature_idx.is_empty() {
        return Err(invalid("the file has no covariate columns"));
    }
    let mut values = Vec::new();
    let mut raw_target = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for &j in &feature_idx {
            let cell = &record[j];
            let parse_err = |msg: String| Error::Parse {
                row,
                column: headers[j].clone(),
                msg,
            };
            if is_missing(cell) {
                return Err(parse_err("missing value".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("not finite: {cell:?}")));
            }
            values.push(v);
        }
        if let Some(t) = target_idx {
            let cell = record[t].to_string();
            if is_missing(&cell) {
                return Err(Error::Parse {
                    row,
                    column: headers[t].clone(),
                    msg: "missing target".into(),
                });
            }
            raw_target.push(cell);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(invalid("the file has no data rows"));
    }
    let x = Mat::from_row_slice(rows, feature_idx.len(), &values);
    let numeric: Option<Vec<f64>> = raw_target
        .iter()
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    let mut class_names = Vec::new();
    let target = match (target_idx, hint, numeric) {
        (None, _, _) => Target::Absent,
        (Some(t), TaskHint::Regression, None) => {
            let bad = raw_target
                .iter()
                .position(|s| s.parse::<f64>().map_or(true, |v| !v.is_finite()))
                .unwrap_or(0);
            return Err(Error::Parse {
                row: bad + 1,
                column: headers[t].clone(),
                msg: format!("target is not numeric: {:?}", raw_target[bad]),
            });
        }
        (Some(_), TaskHint::Regression | TaskHint::Auto, Some(y)) => Target::Response(y.into()),
        (Some(_), _, _) => {
            // numeric labels sort numerically, others lexically
            let distinct: BTreeSet<&str> = raw_target.iter().map(String::as_str).collect();
            let mut names: Vec<String> = distinct.into_iter().map(str::to_string).collect();
            if names.iter().all(|s| s.parse::<f64>().is_ok()) {
                names.sort_by(|a, b| {
                    a.parse::<f64>()
                        .unwrap()
                        .total_cmp(&b.parse::<f64>().unwrap())
                });
            }
            if names.len() < 2 {
                return Err(invalid("classification needs at least two classes"));
            }
            let labels = raw_target
                .iter()
                .map(|s| names.iter().position(|n| n == s).expect("collected above") + 1)
                .collect();
            let classes = names.len();
            class_names = names;
            Target::Labels { labels, classes }
        }
    };
    Ok(LoadedDataset {
        data: Dataset::new(x, target)?,
        feature_names: feature_idx.iter().map(|&j| headers[j].clone()).collect(),
        class_names,
    })
}

/// Writes a header and rows of preformatted cells.
pub fn write_table<P: AsRef<Path>>(path: P, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(invalid(format!(
                "row has {} cells, header {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Named matrix blocks stacked in one file: columns `block,row,c0,c1,...`.
pub fn write_matrix_blocks<P: AsRef<Path>>(path: P, blocks: &[(&str, &Mat)]) -> Result<()> {
    let cols = blocks.first().map_or(0, |(_, m)| m.ncols());
    if blocks.iter().any(|(_, m)| m.ncols() != cols) {
        return Err(invalid("blocks differ in column count"));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["block".to_string(), "row".to_string()];
    header.extend((0..cols).map(|j| format!("c{j}")));
    w.write_record(&header)?;
    for (name, m) in blocks {
        for i in 0..m.nrows() {
            let mut rec = vec![name.to_string(), i.to_string()];
            rec.extend((0..cols).map(|j| m[(i, j)].to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Plain `key=value` lines.
pub fn write_key_values<P: AsRef<Path>>(path: P, pairs: &[(String, String)]) -> Result<()> {
    let mut f = File::create(path)?;
    for (k, v) in pairs {
        writeln!(f, "{k}={v}")?;
    }
    Ok(())
}
