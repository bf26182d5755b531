//! CSV serialization of record streams.
//!
//! Values are written with Rust's shortest round-trip float formatting,
//! so a write -> read -> write cycle reproduces the file byte for byte.
//! Disabled-estimator columns are empty cells.

use std::io::{self, BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::sim::SampleRecord;

/// Column layout every stream uses, in this exact order.
pub const CSV_HEADER: &str =
    "t,ij,theta_cmd,v_true,v_meas,alpha_hat_deg,vth_rwls,zth_rwls,vth_kf,zth_kf,alpha_true_deg,zth_true,vth_true";

const FIELD_COUNT: usize = 13;

/// CSV read/write failures.
#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv i/o: {0}")]
    Io(#[from] io::Error),
    /// A structural problem at a specific 1-based line.
    #[error("csv line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

fn malformed(line: usize, reason: impl Into<String>) -> CsvError {
    CsvError::Malformed {
        line,
        reason: reason.into(),
    }
}

/// Write the header plus one line per record.
pub fn write_records<W: Write>(writer: W, records: &[SampleRecord]) -> Result<(), CsvError> {
    let mut w = io::BufWriter::new(writer);
    w.write_all(CSV_HEADER.as_bytes())?;
    w.write_all(b"\n")?;
    let mut line = String::with_capacity(256);
    for r in records {
        line.clear();
        push_f64(&mut line, r.t);
        line.push(',');
        push_f64(&mut line, r.ij);
        line.push(',');
        push_f64(&mut line, r.theta_cmd);
        line.push(',');
        push_f64(&mut line, r.v_true);
        line.push(',');
        push_f64(&mut line, r.v_meas);
        line.push(',');
        push_opt(&mut line, r.alpha_hat_deg);
        line.push(',');
        push_opt(&mut line, r.vth_rwls);
        line.push(',');
        push_opt(&mut line, r.zth_rwls);
        line.push(',');
        push_opt(&mut line, r.vth_kf);
        line.push(',');
        push_opt(&mut line, r.zth_kf);
        line.push(',');
        push_f64(&mut line, r.alpha_true_deg);
        line.push(',');
        push_f64(&mut line, r.zth_true);
        line.push(',');
        push_f64(&mut line, r.vth_true);
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn push_f64(buf: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(buf, "{v}");
}

fn push_opt(buf: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        push_f64(buf, v);
    }
}

/// Parse a full stream, enforcing the exact header and field count.
/// Tolerates CRLF line endings and a missing final newline.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<SampleRecord>, CsvError> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(malformed(1, "empty input, expected a header line")),
    };
    if header.trim_end_matches('\r') != CSV_HEADER {
        return Err(malformed(
            1,
            format!("unexpected header; expected `{CSV_HEADER}`"),
        ));
    }

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FIELD_COUNT {
            return Err(malformed(
                line_no,
                format!("expected {FIELD_COUNT} fields, found {}", fields.len()),
            ));
        }
        records.push(SampleRecord {
            t: req(fields[0], "t", line_no)?,
            ij: req(fields[1], "ij", line_no)?,
            theta_cmd: req(fields[2], "theta_cmd", line_no)?,
            v_true: req(fields[3], "v_true", line_no)?,
            v_meas: req(fields[4], "v_meas", line_no)?,
            alpha_hat_deg: opt(fields[5], "alpha_hat_deg", line_no)?,
            vth_rwls: opt(fields[6], "vth_rwls", line_no)?,
            zth_rwls: opt(fields[7], "zth_rwls", line_no)?,
            vth_kf: opt(fields[8], "vth_kf", line_no)?,
            zth_kf: opt(fields[9], "zth_kf", line_no)?,
            alpha_true_deg: req(fields[10], "alpha_true_deg", line_no)?,
            zth_true: req(fields[11], "zth_true", line_no)?,
            vth_true: req(fields[12], "vth_true", line_no)?,
        });
    }
    Ok(records)
}

fn req(field: &str, name: &str, line: usize) -> Result<f64, CsvError> {
    if field.is_empty() {
        return Err(malformed(
            line,
            format!("column `{name}` must not be empty"),
        ));
    }
    field
        .parse()
        .map_err(|_| malformed(line, format!("column `{name}`: `{field}` is not a number")))
}

fn opt(field: &str, name: &str, line: usize) -> Result<Option<f64>, CsvError> {
    if field.is_empty() {
        return Ok(None);
    }
    req(field, name, line).map(Some)
}
