//! CSV persistence of result rows.

use std::io::{self, Read, Write};
use std::path::Path;

use crate::cli::experiment::{Method, ResultRow};
use crate::cli::scenario::Experiment;

pub const HEADER: [&str; 9] = [
    "seed",
    "experiment",
    "method",
    "min_rate",
    "sum_rate",
    "sum_power",
    "feasible",
    "iterations",
    "wall_time_ms",
];

/// Shortest decimal form with at most 12 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn record(row: &ResultRow) -> [String; 9] {
    [
        row.seed.to_string(),
        row.experiment.to_string(),
        row.method.to_string(),
        format_float(row.min_rate),
        format_float(row.sum_rate),
        format_float(row.sum_power),
        row.feasible.to_string(),
        row.iterations.to_string(),
        format_float(row.wall_time_ms),
    ]
}

/// Writes the header and one line per row.
pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()
}

pub fn write_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> io::Result<()> {
    write_rows(rows, std::fs::File::create(path)?)
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Parses rows written by [`write_rows`].
pub fn read_rows<R: Read>(input: R) -> io::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(invalid(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let float = |k: usize| field(k).parse::<f64>().map_err(|e| invalid(format!("{}: {e}", HEADER[k])));
        rows.push(ResultRow {
            seed: field(0).parse().map_err(|e| invalid(format!("seed: {e}")))?,
            experiment: field(1).parse::<Experiment>().map_err(invalid)?,
            method: Method::from_tag(field(2)).ok_or_else(|| invalid(format!("unknown method `{}`", field(2))))?,
            min_rate: float(3)?,
            sum_rate: float(4)?,
            sum_power: float(5)?,
            feasible: field(6).parse().map_err(|e| invalid(format!("feasible: {e}")))?,
            iterations: field(7).parse().map_err(|e| invalid(format!("iterations: {e}")))?,
            wall_time_ms: float(8)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: impl AsRef<Path>) -> io::Result<Vec<ResultRow>> {
    read_rows(std::fs::File::open(path)?)
}
