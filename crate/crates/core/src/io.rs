//! CSV ingestion and output.
//!
//! A time series is a single column of numbers with an optional header line.
//! A lattice is `rows` lines of `cols` comma-separated numbers. Values are
//! written with 17 significant digits so they read back exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::{LatticeField, Observations, TimeSeries};
use crate::error::{Error, Result};

/// Text form of one value: 17 significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses rows of numbers; a first row that is not numeric is taken as a header.
fn parse_rows(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(i, field)| field.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or(i))
            .collect();
        match parsed {
            Ok(values) => rows.push((line, values)),
            Err(_) if rows.is_empty() && k == 0 => continue,
            Err(i) => {
                return Err(parse_error(line, format!("field {} (`{}`) is not a finite number", i + 1, &record[i])))
            }
        }
    }
    if rows.is_empty() {
        return Err(parse_error(1, "no data rows"));
    }
    Ok(rows)
}

pub fn parse_series(text: &str) -> Result<TimeSeries> {
    let rows = parse_rows(text)?;
    let mut values = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.len() != 1 {
            return Err(parse_error(line, format!("expected one value, found {}", row.len())));
        }
        values.push(row[0]);
    }
    TimeSeries::new(values)
}

pub fn parse_lattice(text: &str) -> Result<LatticeField> {
    let rows = parse_rows(text)?;
    let cols = rows[0].1.len();
    let mut values = Vec::with_capacity(rows.len() * cols);
    for (line, row) in &rows {
        if row.len() != cols {
            return Err(parse_error(*line, format!("expected {cols} values, found {}", row.len())));
        }
        values.extend_from_slice(row);
    }
    LatticeField::new(rows.len(), cols, values)
}

/// A single column is read as a time series, anything wider as a lattice.
pub fn parse_observations(text: &str) -> Result<Observations> {
    let rows = parse_rows(text)?;
    if rows.iter().all(|(_, r)| r.len() == 1) {
        parse_series(text).map(Observations::from)
    } else {
        parse_lattice(text).map(Observations::from)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_series(path: impl AsRef<Path>) -> Result<TimeSeries> {
    parse_series(&read_text(path.as_ref())?)
}

pub fn read_lattice(path: impl AsRef<Path>) -> Result<LatticeField> {
    parse_lattice(&read_text(path.as_ref())?)
}

pub fn read_observations(path: impl AsRef<Path>) -> Result<Observations> {
    parse_observations(&read_text(path.as_ref())?)
}

pub fn observations_to_csv(data: &Observations) -> String {
    let mut out = String::new();
    match data {
        Observations::Series(s) => {
            for &x in s.values() {
                out.push_str(&format_value(x));
                out.push('\n');
            }
        }
        Observations::Field(f) => {
            for row in f.values().chunks(f.cols()) {
                let line: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
    }
    out
}

/// One index per line under an `index` header.
pub fn indices_to_csv(indices: &[usize]) -> String {
    let mut out = String::from("index\n");
    for i in indices {
        let _ = writeln!(out, "{i}");
    }
    out
}

pub fn parse_indices(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || (k == 0 && t.parse::<usize>().is_err() && t.chars().all(|c| c.is_alphabetic() || c == '_')) {
            continue;
        }
        out.push(t.parse().map_err(|_| parse_error(k + 1, format!("`{t}` is not an index")))?);
    }
    Ok(out)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_observations(path: impl AsRef<Path>, data: &Observations) -> Result<()> {
    write_text(path, &observations_to_csv(data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_with_and_without_header() {
        let a = parse_series("x\n1.5\n-2\n3e-1\n").unwrap();
        assert_eq!(a.values(), &[1.5, -2.0, 0.3]);
        let b = parse_series("1.5\n-2\n\n3e-1").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_errors_carry_lines() {
        match parse_series("x\n1\n2\nfoo\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match parse_lattice("1,2\n3,4\n5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_series("1\nNaN\n").is_err());
        assert!(parse_series("").is_err());
        assert!(parse_series("1,2\n").is_err());
    }

    #[test]
    fn lattice_and_detection() {
        let f = parse_lattice("1,2,3\n4,5,6\n").unwrap();
        assert_eq!((f.rows(), f.cols()), (2, 3));
        assert_eq!(f.get(1, 0), 4.0);
        assert!(matches!(parse_observations("1,2\n3,4\n").unwrap(), Observations::Field(_)));
        assert!(matches!(parse_observations("1\n2\n").unwrap(), Observations::Series(_)));
    }

    #[test]
    fn round_trip_is_exact() {
        let vals: Vec<f64> = (1..200).map(|i| (i as f64).sqrt() * 1e-3 - 0.1 / i as f64).collect();
        let s: Observations = TimeSeries::new(vals.clone()).unwrap().into();
        let back = parse_observations(&observations_to_csv(&s)).unwrap();
        assert_eq!(back.values(), &vals[..]);
        let f: Observations = LatticeField::new(3, 2, vals[..6].to_vec()).unwrap().into();
        assert_eq!(parse_observations(&observations_to_csv(&f)).unwrap(), f);
    }

    #[test]
    fn indices() {
        assert_eq!(parse_indices(&indices_to_csv(&[3, 1, 4])).unwrap(), vec![3, 1, 4]);
        assert_eq!(parse_indices(&indices_to_csv(&[])).unwrap(), Vec::<usize>::new());
    }
}
