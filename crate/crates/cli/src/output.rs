//! Writers for sampled curves and JSON reports.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use nilmag::SampledCurve;
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `{:.16e}` keeps 17 significant digits, enough to round-trip an f64.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn coordinate_names(dim: usize) -> Vec<String> {
    if dim == 3 {
        ["x", "y", "z"].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=dim).map(|i| format!("xi{i}")).collect()
    }
}

/// Rows `t, xi.., speed, branch, period`; the period column is empty when
/// there is none.
pub fn write_csv<W: Write>(out: W, curve: &SampledCurve<f64>, branch: &str, period: Option<f64>) -> CliResult<()> {
    let dim = curve.xi.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(coordinate_names(dim));
    header.extend(["speed", "branch", "period"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    let period = period.map(float).unwrap_or_default();
    for ((t, xi), v) in curve.times.iter().zip(&curve.xi).zip(&curve.velocity) {
        let mut row = vec![float(*t)];
        row.extend(xi.iter().map(|x| float(*x)));
        row.push(float(nilmag::linalg::norm(v)));
        row.push(branch.to_string());
        row.push(period.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct Sample<'a> {
    pub t: f64,
    pub xi: &'a [f64],
    pub velocity: &'a [f64],
    pub speed: f64,
}

pub fn samples(curve: &SampledCurve<f64>) -> Vec<Sample<'_>> {
    curve
        .times
        .iter()
        .zip(&curve.xi)
        .zip(&curve.velocity)
        .map(|((&t, xi), v)| Sample { t, xi, velocity: v, speed: nilmag::linalg::norm(v) })
        .collect()
}

pub fn json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Where results go: files in a directory, or stdout.
#[derive(Debug, Clone)]
pub enum Sink {
    Dir(PathBuf),
    Stdout,
}

impl Sink {
    pub fn new(out: Option<&Path>) -> CliResult<Self> {
        match out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Sink::Dir(dir.to_path_buf()))
            }
            None => Ok(Sink::Stdout),
        }
    }

    /// Writes `name` into the directory; on stdout only when `primary`.
    pub fn emit(&self, name: &str, contents: &str, primary: bool) -> CliResult<()> {
        match self {
            Sink::Dir(dir) => {
                let path = dir.join(name);
                fs::write(&path, contents)?;
                log::info!("wrote {}", path.display());
            }
            Sink::Stdout if primary => {
                let mut out = io::stdout().lock();
                out.write_all(contents.as_bytes())?;
                if !contents.ends_with('\n') {
                    out.write_all(b"\n")?;
                }
            }
            Sink::Stdout => {}
        }
        Ok(())
    }
}
