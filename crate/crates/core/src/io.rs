//! CSV and JSON artifact helpers: RFC-4180 quoting, lossless float
//! formatting, and the file schemas for measures, maps, and couplings.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::measures::{EmpiricalMeasure1D, MeasureError};
use crate::scalar_rep::PR1Map;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse failure in {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// 17 significant digits: lossless round-trip, byte-stable.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180 quoting; numeric fields pass through untouched.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv<R, F>(path: &Path, header: &[&str], rows: R) -> Result<(), IoError>
where
    R: IntoIterator<Item = F>,
    F: IntoIterator<Item = String>,
{
    let mut out = String::new();
    out.push_str(&header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(|f| csv_field(&f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

/// Minimal RFC-4180 reader: returns (header, rows).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut records: Vec<Vec<String>> = Vec::new();
    let mut field = String::new();
    let mut record: Vec<String> = Vec::new();
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if in_quotes {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push(c);
            }
        } else {
            match c {
                '"' => in_quotes = true,
                ',' => record.push(std::mem::take(&mut field)),
                '\r' => {}
                '\n' => {
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                }
                _ => field.push(c),
            }
        }
    }
    if !field.is_empty() || !record.is_empty() {
        record.push(field);
        records.push(record);
    }
    if records.is_empty() {
        return Err(parse_err(path, "empty csv"));
    }
    let header = records.remove(0);
    Ok((header, records))
}

fn parse_f64(path: &Path, s: &str) -> Result<f64, IoError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, format!("not a number: {s:?}")))
}

/// Measure as CSV with header "atom,weight".
pub fn write_measure_csv(path: &Path, mu: &EmpiricalMeasure1D) -> Result<(), IoError> {
    write_csv(
        path,
        &["atom", "weight"],
        mu.atoms()
            .iter()
            .zip(mu.weights())
            .map(|(a, w)| vec![fmt_float(*a), fmt_float(*w)]),
    )
}

pub fn read_measure_csv(path: &Path) -> Result<EmpiricalMeasure1D, IoError> {
    let (header, rows) = read_csv(path)?;
    if header.len() < 2 || header[0].trim() != "atom" || header[1].trim() != "weight" {
        return Err(parse_err(path, "expected header atom,weight"));
    }
    let mut atoms = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() < 2 {
            return Err(parse_err(path, "row with fewer than 2 fields"));
        }
        atoms.push(parse_f64(path, &row[0])?);
        weights.push(parse_f64(path, &row[1])?);
    }
    Ok(EmpiricalMeasure1D::new(atoms, weights)?)
}

/// Load a measure from JSON ({"atoms": [...], "weights": [...]}) or CSV by
/// extension.
pub fn load_measure(path: &Path) -> Result<EmpiricalMeasure1D, IoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
        }
        _ => read_measure_csv(path),
    }
}

/// Theory-curve artifact: CSV of (y, x) nodes plus a JSON sidecar with the
/// extension slopes and the extension convention.
pub fn write_pr1_csv(path: &Path, map: &PR1Map) -> Result<(), IoError> {
    write_csv(
        path,
        &["y", "x"],
        map.breakpoints()
            .iter()
            .zip(map.values())
            .map(|(y, x)| vec![fmt_float(*y), fmt_float(*x)]),
    )?;
    let sidecar = path.with_extension("slopes.json");
    let (sl, sr) = map.slopes();
    let meta = serde_json::json!({
        "slope_left": sl,
        "slope_right": sr,
        "extension": "boundary-segment-slope",
    });
    fs::write(&sidecar, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| io_err(&sidecar, e))
}

/// Coupling CSV with header "x,g", equal weights implied.
pub fn write_coupling_csv(path: &Path, pairs: &[(f64, f64)]) -> Result<(), IoError> {
    write_csv(
        path,
        &["x", "g"],
        pairs.iter().map(|(x, g)| vec![fmt_float(*x), fmt_float(*g)]),
    )
}

pub fn read_coupling_csv(path: &Path) -> Result<Vec<(f64, f64)>, IoError> {
    let (header, rows) = read_csv(path)?;
    if header.len() < 2 || header[0].trim() != "x" || header[1].trim() != "g" {
        return Err(parse_err(path, "expected header x,g"));
    }
    let mut pairs = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() < 2 {
            return Err(parse_err(path, "row with fewer than 2 fields"));
        }
        pairs.push((parse_f64(path, &row[0])?, parse_f64(path, &row[1])?));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, -1.0 / 3.0, 1e-300, 2.2250738585072014e-308, 12345.6789] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("1.5"), "1.5");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn measure_csv_round_trip() {
        let dir = std::env::temp_dir().join("symprox-io-test");
        let path = dir.join("mu.csv");
        let mu = EmpiricalMeasure1D::new(vec![-1.0, 0.0, 1.0], vec![0.05, 0.9, 0.05]).unwrap();
        write_measure_csv(&path, &mu).unwrap();
        let back = read_measure_csv(&path).unwrap();
        assert_eq!(mu, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_reader_handles_quotes() {
        let dir = std::env::temp_dir().join("symprox-io-test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("q.csv");
        std::fs::write(&path, "a,b\n\"x,1\",\"he said \"\"hi\"\"\"\n2,3\n").unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["a", "b"]);
        assert_eq!(rows[0], vec!["x,1", "he said \"hi\""]);
        assert_eq!(rows[1], vec!["2", "3"]);
        std::fs::remove_dir_all(&dir).ok();
    }
}
