use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::run::{BenchmarkRecord, SimulationRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = ["method", "alpha", "h", "t", "x_num", "x_exact", "err", "H_num"];

pub const SIMULATION_HEADER: [&str; 8] = ["method", "alpha", "h", "t", "x", "p", "z", "H"];

/// 17 significant digits in scientific notation.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn rows<W, I>(out: W, header: [&str; 8], rows: I) -> std::result::Result<(), csv::Error>
where
    W: Write,
    I: IntoIterator<Item = [String; 8]>,
{
    let mut w = writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn benchmark_row(r: &BenchmarkRecord) -> [String; 8] {
    [
        r.method.to_string(),
        num(r.alpha),
        num(r.h),
        num(r.t),
        num(r.x_num),
        num(r.x_exact),
        num(r.err),
        num(r.h_num),
    ]
}

fn simulation_row(r: &SimulationRecord) -> [String; 8] {
    [
        r.method.to_string(),
        num(r.alpha),
        num(r.h),
        num(r.t),
        num(r.x),
        num(r.p),
        num(r.z),
        num(r.hamiltonian),
    ]
}

pub fn write_csv<W: Write>(records: &[BenchmarkRecord], out: W) -> std::result::Result<(), csv::Error> {
    rows(out, CSV_HEADER, records.iter().map(benchmark_row))
}

pub fn write_simulation_csv<W: Write>(records: &[SimulationRecord], out: W) -> std::result::Result<(), csv::Error> {
    rows(out, SIMULATION_HEADER, records.iter().map(simulation_row))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the benchmark CSV (`method,alpha,h,t,x_num,x_exact,err,H_num`).
pub fn emit_csv(records: &[BenchmarkRecord], path: &Path) -> Result<()> {
    write_csv(records, create(path)?).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_simulation_csv(records: &[SimulationRecord], path: &Path) -> Result<()> {
    write_simulation_csv(records, create(path)?).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize, W: Write>(report: &T, mut out: W) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::Json(serde_json::Error::io(e)))
}

pub fn emit_json<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
