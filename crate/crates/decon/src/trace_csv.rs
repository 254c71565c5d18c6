//! Trace CSV: `k,algo,alpha,residual[,lyapunov,ratio,slack]`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use decon_core::algorithms::Variant;
use decon_core::runner::Trace;

use crate::error::{Error, Result};
use crate::formats::fmt_f64;

pub const BASE_HEADER: [&str; 4] = ["k", "algo", "alpha", "residual"];
pub const AUDIT_HEADER: [&str; 3] = ["lyapunov", "ratio", "slack"];

/// One CSV line. Audit fields are `None` when absent or blank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub k: usize,
    pub algo: Variant,
    pub alpha: f64,
    pub residual: f64,
    pub lyapunov: Option<f64>,
    pub ratio: Option<f64>,
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrace {
    pub audit_columns: bool,
    pub rows: Vec<CsvRow>,
}

impl From<&Trace> for CsvTrace {
    fn from(t: &Trace) -> Self {
        Self {
            audit_columns: has_audit(t),
            rows: t
                .rows
                .iter()
                .map(|r| CsvRow {
                    k: r.k,
                    algo: t.algo,
                    alpha: t.alpha,
                    residual: r.residual,
                    lyapunov: r.lyapunov,
                    ratio: r.ratio,
                    slack: r.slack,
                })
                .collect(),
        }
    }
}

/// Audit columns are emitted when any row carries a Lyapunov value.
pub fn has_audit(t: &Trace) -> bool {
    t.rows.iter().any(|r| r.lyapunov.is_some())
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_trace<W: Write>(t: &Trace, out: W) -> Result<()> {
    write_rows(&CsvTrace::from(t), out)
}

pub fn write_rows<W: Write>(t: &CsvTrace, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    if t.audit_columns {
        w.write_record(BASE_HEADER.iter().chain(AUDIT_HEADER.iter()))?;
    } else {
        w.write_record(BASE_HEADER)?;
    }
    for r in &t.rows {
        let mut rec = vec![r.k.to_string(), r.algo.name().to_string(), fmt_f64(r.alpha), fmt_f64(r.residual)];
        if t.audit_columns {
            rec.extend([opt(r.lyapunov), opt(r.ratio), opt(r.slack)]);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_trace_file(t: &Trace, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(t, BufWriter::new(f))
}

fn num(field: &str, line: usize, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|e| Error::parse("trace csv", line, format!("{name} '{field}': {e}")))
}

fn opt_num(field: &str, line: usize, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        num(field, line, name).map(Some)
    }
}

pub fn read_trace<R: Read>(input: R) -> Result<CsvTrace> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let audit_columns = if header == BASE_HEADER {
        false
    } else if header.iter().map(String::as_str).eq(BASE_HEADER.iter().chain(AUDIT_HEADER.iter()).copied()) {
        true
    } else {
        return Err(Error::parse("trace csv", 1, format!("unexpected header {header:?}")));
    };
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let k = rec[0]
            .parse::<usize>()
            .map_err(|e| Error::parse("trace csv", line, format!("k '{}': {e}", &rec[0])))?;
        let algo: Variant = rec[1].parse().map_err(|e| Error::parse("trace csv", line, format!("{e}")))?;
        let mut row = CsvRow {
            k,
            algo,
            alpha: num(&rec[2], line, "alpha")?,
            residual: num(&rec[3], line, "residual")?,
            lyapunov: None,
            ratio: None,
            slack: None,
        };
        if audit_columns {
            row.lyapunov = opt_num(&rec[4], line, "lyapunov")?;
            row.ratio = opt_num(&rec[5], line, "ratio")?;
            row.slack = opt_num(&rec[6], line, "slack")?;
        }
        rows.push(row);
    }
    Ok(CsvTrace { audit_columns, rows })
}

pub fn read_trace_file(path: &Path) -> Result<CsvTrace> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(f)
}
