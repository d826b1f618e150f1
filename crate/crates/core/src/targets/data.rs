//! File formats for observed data.
//!
//! - Count grid: CSV without header, `d` rows of `d` non-negative integers.
//! - Logistic data: CSV, optional header, covariates then a 0/1 label.
//! - Cox parameters: JSON `{"sigma2": .., "beta": .., "mu": ..}`, `mu` optional.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{Error, Result};

use super::cox::CoxParams;
use super::logistic::LogisticModel;

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_records(path: &Path, has_header: bool) -> Result<Vec<(usize, StringRecord)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

/// Reads a square grid of counts; returns the side `d` and the counts in
/// row-major order.
pub fn load_count_grid(path: impl AsRef<Path>) -> Result<(usize, Vec<u64>)> {
    let path = path.as_ref();
    let records = read_records(path, false)?;
    let d = records.len();
    if d == 0 {
        return Err(parse_error(path, 1, "count grid is empty"));
    }
    let mut counts = Vec::with_capacity(d * d);
    for (line, rec) in &records {
        if rec.len() != d {
            return Err(parse_error(
                path,
                *line,
                format!(
                    "expected {d} columns for a {d}x{d} grid, found {}",
                    rec.len()
                ),
            ));
        }
        for field in rec.iter() {
            let value: i64 = field.parse().map_err(|_| {
                parse_error(path, *line, format!("count {field:?} is not an integer"))
            })?;
            if value < 0 {
                return Err(parse_error(path, *line, format!("negative count {value}")));
            }
            counts.push(value as u64);
        }
    }
    Ok((d, counts))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticCsvOptions {
    pub has_header: bool,
    /// Centre and scale covariates to unit sample standard deviation.
    pub normalize: bool,
    pub prior_sigma2: f64,
}

impl Default for LogisticCsvOptions {
    fn default() -> Self {
        Self {
            has_header: false,
            normalize: true,
            prior_sigma2: 1.0,
        }
    }
}

/// Reads covariates and a trailing binary label per row.
pub fn load_logistic_csv(
    path: impl AsRef<Path>,
    opts: &LogisticCsvOptions,
) -> Result<LogisticModel> {
    let path = path.as_ref();
    let records = read_records(path, opts.has_header)?;
    if records.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    let width = records[0].1.len();
    if width < 1 {
        return Err(parse_error(path, records[0].0, "row has no label column"));
    }
    let mut rows = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(parse_error(
                path,
                *line,
                format!("expected {width} columns, found {}", rec.len()),
            ));
        }
        let mut values = Vec::with_capacity(width);
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, *line, format!("{field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(path, *line, format!("{field:?} is not finite")));
            }
            values.push(v);
        }
        let label = values.pop().expect("width >= 1");
        let label = match label {
            0.0 => 0,
            1.0 => 1,
            l => return Err(parse_error(path, *line, format!("label {l} is not 0 or 1"))),
        };
        rows.push(values);
        labels.push(label);
    }
    LogisticModel::new(&rows, &labels, opts.prior_sigma2, opts.normalize)
}

/// Writes covariate rows with a trailing label column, in the format read
/// by [`load_logistic_csv`].
pub fn write_logistic_csv(
    path: impl AsRef<Path>,
    rows: &[Vec<f64>],
    labels: &[u8],
    header: bool,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    if header {
        let d = rows.first().map_or(0, Vec::len);
        let mut names: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        names.push("y".into());
        out.push_str(&names.join(","));
        out.push('\n');
    }
    for (row, y) in rows.iter().zip(labels) {
        for v in row {
            out.push_str(&format!("{v:.16e},"));
        }
        out.push_str(&format!("{y}\n"));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

pub fn load_cox_params(path: impl AsRef<Path>) -> Result<CoxParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: format!("{}#{}", path.display(), e.path()),
        message: e.inner().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::synthesize_logistic;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn count_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "g.csv", "1,2\n3,0\n");
        assert_eq!(load_count_grid(&p).unwrap(), (2, vec![1, 2, 3, 0]));
        let p = write(&dir, "bad.csv", "1,2\n3,-1\n");
        match load_count_grid(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let p = write(&dir, "ragged.csv", "1,2\n3\n");
        assert!(matches!(
            load_count_grid(&p),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn pima_shaped_csv() {
        let dir = tempfile::tempdir().unwrap();
        let (rows, labels) = synthesize_logistic(3, 30, 8);
        let p = dir.path().join("pima.csv");
        write_logistic_csv(&p, &rows, &labels, true).unwrap();
        let opts = LogisticCsvOptions {
            has_header: true,
            ..Default::default()
        };
        let m = load_logistic_csv(&p, &opts).unwrap();
        assert_eq!(m.n_instances(), 30);
        assert_eq!(m.design_row(0).len(), 9);
    }

    #[test]
    fn non_binary_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "l.csv", "0.5,1\n0.1,0\n0.2,2\n");
        assert!(matches!(
            load_logistic_csv(&p, &LogisticCsvOptions::default()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn cox_params_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.json", r#"{"sigma2": 3.5881, "beta": 0.127}"#);
        let c = load_cox_params(&p).unwrap();
        assert_eq!(c.mu, None);
        let p = write(
            &dir,
            "c2.json",
            r#"{"sigma2": 3.5881, "beta": 0.127, "nu": 1}"#,
        );
        assert!(matches!(load_cox_params(&p), Err(Error::Config { .. })));
    }
}
