//! Dataset CSV files and their metadata sidecars.
//!
//! Layout: header `x0,x1,...,time,event`, one record per line, `event` is `0`
//! (censored) or `1` (event observed). Floats are written in shortest
//! round-trip form, with exponent notation for extreme magnitudes, so a write
//! followed by a read reproduces every value exactly.
//!
//! The sidecar `<name>.csv.meta` holds `key=value` lines describing how the file
//! was generated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pwsurv_core::data::{Dataset, DatasetMeta, GENERATOR_VERSION};
use pwsurv_core::loss::SurvivalRecord;

use crate::error::{Error, Result};

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn check_header(path: &Path, header: &csv::StringRecord) -> Result<usize> {
    let cols: Vec<&str> = header.iter().collect();
    let n = cols.len();
    if n < 3 || cols[n - 2] != "time" || cols[n - 1] != "event" {
        return Err(parse_err(
            path,
            1,
            format!("header must be x0,...,time,event; got '{}'", cols.join(",")),
        ));
    }
    for (i, c) in cols[..n - 2].iter().enumerate() {
        if *c != format!("x{i}") {
            return Err(parse_err(
                path,
                1,
                format!("column {} must be named x{i}, got '{c}'", i + 1),
            ));
        }
    }
    Ok(n - 2)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(path, &text)
}

fn parse_csv(path: &Path, text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if header.is_empty() {
        return Err(parse_err(path, 1, "missing header"));
    }
    let dim = check_header(path, &header)?;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != dim + 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", dim + 2, row.len()),
            ));
        }
        let num = |i: usize, what: &str| -> Result<f64> {
            let s = &row[i];
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line, format!("{what}: '{s}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    line,
                    format!("{what}: '{s}' is not finite"),
                ));
            }
            Ok(v)
        };
        let covariates = (0..dim)
            .map(|i| num(i, &format!("x{i}")))
            .collect::<Result<Vec<_>>>()?;
        let time = num(dim, "time")?;
        if time < 0.0 {
            return Err(parse_err(
                path,
                line,
                format!("time must be non-negative, got {time}"),
            ));
        }
        let event = match row[dim + 1].trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(parse_err(
                    path,
                    line,
                    format!("event must be 0 or 1, got '{other}'"),
                ))
            }
        };
        records.push(SurvivalRecord::new(covariates, time, event));
    }
    Ok(Dataset::new(records)?)
}

/// Writes the records; the covariate count is taken from the first record, or
/// `empty_dim` when there are none.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>, empty_dim: usize) -> Result<()> {
    let path = path.as_ref();
    let dim = dataset.covariate_dim().unwrap_or(empty_dim);
    let mut out = String::new();
    for i in 0..dim {
        let _ = write!(out, "x{i},");
    }
    out.push_str("time,event\n");
    for r in &dataset.records {
        for x in &r.covariates {
            let _ = write!(out, "{x:?},");
        }
        let _ = writeln!(out, "{:?},{}", r.time, u8::from(r.event));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

pub fn format_meta(dataset: &Dataset) -> String {
    let DatasetMeta {
        seed,
        simulation,
        split,
        generator_version,
    } = &dataset.meta;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "generator_version={}",
        generator_version.unwrap_or(GENERATOR_VERSION)
    );
    let _ = writeln!(out, "seed={}", opt(*seed));
    let _ = writeln!(out, "split={}", opt(split.as_deref()));
    let _ = writeln!(out, "records={}", dataset.len());
    let _ = writeln!(out, "events={}", dataset.event_count());
    if let Some(sim) = simulation {
        let _ = writeln!(
            out,
            "scale_range={},{}",
            sim.scale_range.0, sim.scale_range.1
        );
        let _ = writeln!(
            out,
            "shape_range={},{}",
            sim.shape_range.0, sim.shape_range.1
        );
        let _ = writeln!(out, "censor_probability={}", sim.censoring.probability);
        let _ = writeln!(out, "censor_max_time={}", sim.censoring.max_time);
        let _ = writeln!(
            out,
            "administrative_censoring={}",
            opt(sim.censoring.administrative)
        );
    }
    out
}

pub fn write_meta(dataset: &Dataset, csv_path: &Path) -> Result<()> {
    let path = meta_path(csv_path);
    fs::write(&path, format_meta(dataset)).map_err(|e| Error::io(path, e))
}

pub fn read_meta(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| parse_err(path, i as u64 + 1, "expected key=value"))
        })
        .collect()
}
