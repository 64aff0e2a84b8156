//! Columnar trace and aggregate files.
//!
//! Numbers are written with at most 9 significant digits in their shortest
//! form, so reading a file and writing it back reproduces it byte for byte.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::AggregateCurve;
use crate::orchestrator::SimTrace;

pub const TRACE_COLUMNS: [&str; 6] = [
    "t",
    "sim_seconds",
    "f_value",
    "coverage_fraction",
    "comm_messages",
    "max_evals",
];

pub const AGGREGATE_COLUMNS: [&str; 3] = ["time_s", "mean_coverage", "std_coverage"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub sim_seconds: f64,
    pub f_value: f64,
    pub coverage_fraction: f64,
    pub comm_messages: usize,
    pub max_evals: u64,
}

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of `x` rounded to 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    let r = round_sig9(x);
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

/// One row per snapshot; `total_area` converts values to coverage fractions.
pub fn rows_from_trace(trace: &SimTrace, total_area: f64) -> Vec<TraceRow> {
    trace
        .snapshots
        .iter()
        .map(|s| TraceRow {
            t: s.t,
            sim_seconds: s.sim_seconds,
            f_value: s.f_value,
            coverage_fraction: s.f_value / total_area,
            comm_messages: s.comm_messages,
            max_evals: s.max_evals(),
        })
        .collect()
}

fn writer<W: Write>(w: W, delimiter: u8) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(delimiter).from_writer(w)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {expected:?}, got {:?}",
                header.iter().collect::<Vec<_>>()
            ),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    let raw = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {name}"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} value {raw:?}"),
    })
}

pub fn write_trace<W: Write>(w: W, rows: &[TraceRow], delimiter: u8) -> Result<()> {
    let mut out = writer(w, delimiter);
    out.write_record(TRACE_COLUMNS).map_err(csv_error)?;
    for r in rows {
        out.write_record([
            r.t.to_string(),
            format_sig9(r.sim_seconds),
            format_sig9(r.f_value),
            format_sig9(r.coverage_fraction),
            r.comm_messages.to_string(),
            r.max_evals.to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(r: R, delimiter: u8) -> Result<Vec<TraceRow>> {
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(r);
    check_header(&mut reader, &TRACE_COLUMNS)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        rows.push(TraceRow {
            t: field(&record, 0, TRACE_COLUMNS[0])?,
            sim_seconds: field(&record, 1, TRACE_COLUMNS[1])?,
            f_value: field(&record, 2, TRACE_COLUMNS[2])?,
            coverage_fraction: field(&record, 3, TRACE_COLUMNS[3])?,
            comm_messages: field(&record, 4, TRACE_COLUMNS[4])?,
            max_evals: field(&record, 5, TRACE_COLUMNS[5])?,
        });
    }
    Ok(rows)
}

pub fn write_aggregate<W: Write>(w: W, curve: &AggregateCurve, delimiter: u8) -> Result<()> {
    let mut out = writer(w, delimiter);
    out.write_record(AGGREGATE_COLUMNS).map_err(csv_error)?;
    for ((t, m), s) in curve
        .time_grid
        .iter()
        .zip(&curve.mean_coverage)
        .zip(&curve.std_coverage)
    {
        out.write_record([format_sig9(*t), format_sig9(*m), format_sig9(*s)])
            .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_aggregate<R: Read>(r: R, delimiter: u8) -> Result<AggregateCurve> {
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(r);
    check_header(&mut reader, &AGGREGATE_COLUMNS)?;
    let mut curve = AggregateCurve::default();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        curve.time_grid.push(field(&record, 0, AGGREGATE_COLUMNS[0])?);
        curve.mean_coverage.push(field(&record, 1, AGGREGATE_COLUMNS[1])?);
        curve.std_coverage.push(field(&record, 2, AGGREGATE_COLUMNS[2])?);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.1 + 0.2), "0.3");
        assert_eq!(format_sig9(1234.567891234), "1234.56789");
        assert_eq!(format_sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(format_sig9(-1e-12), "-0.000000000001");
    }

    fn sample_rows() -> Vec<TraceRow> {
        (1..=5)
            .map(|t| TraceRow {
                t,
                sim_seconds: 0.2 * t as f64,
                f_value: 1000.0 / 3.0 * t as f64,
                coverage_fraction: 0.0333333333333 * t as f64,
                comm_messages: 3 * t,
                max_evals: 15,
            })
            .collect()
    }

    #[test]
    fn trace_round_trip_is_byte_identical() {
        let mut first = Vec::new();
        write_trace(&mut first, &sample_rows(), b',').unwrap();
        let rows = read_trace(first.as_slice(), b',').unwrap();
        let mut second = Vec::new();
        write_trace(&mut second, &rows, b',').unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("t,sim_seconds,f_value,coverage_fraction,comm_messages,max_evals\n"));
        assert!(text.contains("\n1,0.2,333.333333,0.0333333333,3,15\n"));
    }

    #[test]
    fn tab_delimited_round_trip() {
        let mut first = Vec::new();
        write_trace(&mut first, &sample_rows(), b'\t').unwrap();
        let rows = read_trace(first.as_slice(), b'\t').unwrap();
        let mut second = Vec::new();
        write_trace(&mut second, &rows, b'\t').unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn bad_header_and_values_are_rejected() {
        assert!(matches!(
            read_trace("a,b\n1,2\n".as_bytes(), b','),
            Err(Error::Parse { line: 1, .. })
        ));
        let text = "t,sim_seconds,f_value,coverage_fraction,comm_messages,max_evals\n1,x,1,1,1,1\n";
        assert!(matches!(
            read_trace(text.as_bytes(), b','),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn aggregate_round_trip() {
        let curve = AggregateCurve {
            time_grid: vec![0.0, 0.1, 0.2],
            mean_coverage: vec![0.0, 0.31234567891, 0.5],
            std_coverage: vec![0.0, 0.012, 0.02],
        };
        let mut first = Vec::new();
        write_aggregate(&mut first, &curve, b',').unwrap();
        let back = read_aggregate(first.as_slice(), b',').unwrap();
        let mut second = Vec::new();
        write_aggregate(&mut second, &back, b',').unwrap();
        assert_eq!(first, second);
        assert_eq!(back.mean_coverage[1], 0.312345679);
    }

    proptest! {
        #[test]
        fn sig9_is_idempotent(x in prop::num::f64::NORMAL) {
            let once = format_sig9(x);
            let twice = format_sig9(once.parse().unwrap());
            prop_assert_eq!(once, twice);
        }
    }
}
