//! On-disk formats. CSV files open with `#` comment lines carrying the
//! producing config; readers skip them.
//!
//! Histogram CSV: `bin_left,bin_right,count`, one row per bin, preceded by an
//! underflow row `-inf,lo,n` and followed by an overflow row `hi,inf,n`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use bcl_core::dynamics::TracePoint;
use bcl_core::estimators::Histogram;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_left", "bin_right", "count"];

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn write_comments<W: Write>(w: &mut W, config: &ExperimentConfig) -> std::io::Result<()> {
    writeln!(w, "# config: {}", config.to_line())
}

/// Writes `hist` with its config comment.
pub fn write_histogram<W: Write>(mut w: W, hist: &Histogram, config: &ExperimentConfig) -> std::io::Result<()> {
    write_comments(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HISTOGRAM_HEADER).map_err(csv_err)?;
    let row = |a: f64, b: f64, n: u64| [a.to_string(), b.to_string(), n.to_string()];
    out.write_record(row(f64::NEG_INFINITY, hist.lo(), hist.underflow())).map_err(csv_err)?;
    for (i, &n) in hist.bins().iter().enumerate() {
        let (a, b) = hist.edges(i);
        out.write_record(row(a, b, n)).map_err(csv_err)?;
    }
    out.write_record(row(hist.hi(), f64::INFINITY, hist.overflow())).map_err(csv_err)?;
    out.flush()
}

fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "-inf" => Some(f64::NEG_INFINITY),
        "inf" => Some(f64::INFINITY),
        other => other.parse().ok(),
    }
}

/// Inverse of [`write_histogram`]. Sentinel rows are optional on input.
pub fn read_histogram<R: Read>(r: R) -> Result<Histogram, String> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>() != HISTOGRAM_HEADER {
        return Err(format!("expected header {}", HISTOGRAM_HEADER.join(",")));
    }
    let (mut under, mut over) = (0u64, 0u64);
    let mut bins = Vec::new();
    let (mut lo, mut hi) = (None, None);
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = || format!("row {}: malformed histogram row", line + 1);
        let a = rec.get(0).and_then(parse_float).ok_or_else(bad)?;
        let b = rec.get(1).and_then(parse_float).ok_or_else(bad)?;
        let n: u64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if a == f64::NEG_INFINITY {
            under += n;
        } else if b == f64::INFINITY {
            over += n;
        } else {
            lo.get_or_insert(a);
            hi = Some(b);
            bins.push(n);
        }
    }
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err("histogram has no finite bins".to_owned());
    };
    Histogram::from_parts(lo, hi, bins, under, over).map_err(|e| e.to_string())
}

/// Samples, one column per coordinate (`xi` or `xi0, xi1, …`).
pub fn write_samples<W: Write>(mut w: W, dim: usize, values: &[f64], config: &ExperimentConfig) -> std::io::Result<()> {
    write_comments(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = if dim == 1 { vec!["xi".into()] } else { (0..dim).map(|c| format!("xi{c}")).collect() };
    out.write_record(&header).map_err(csv_err)?;
    for row in values.chunks_exact(dim) {
        out.write_record(row.iter().map(|x| x.to_string())).map_err(csv_err)?;
    }
    out.flush()
}

/// First column of a samples CSV (or a headerless one-number-per-line file).
pub fn read_samples<R: Read>(r: R) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            Ok(_) => return Err(format!("line {}: non-finite sample", i + 1)),
            Err(_) if out.is_empty() && field.chars().any(|c| c.is_ascii_alphabetic()) => {}
            Err(_) => return Err(format!("line {}: not a number: `{field}`", i + 1)),
        }
    }
    Ok(out)
}

/// Trajectory trace, columns `t,F,D,mu_prime_0,…`.
pub fn write_trace<W: Write>(mut w: W, dim: usize, trace: &[TracePoint], config: &ExperimentConfig) -> std::io::Result<()> {
    write_comments(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_owned(), "F".to_owned(), "D".to_owned()];
    header.extend((0..dim).map(|c| format!("mu_prime_{c}")));
    out.write_record(&header).map_err(csv_err)?;
    for p in trace {
        let mut row = vec![p.t.to_string(), p.lyapunov.to_string(), p.diameter.to_string()];
        row.extend(p.core_mean.iter().map(|x| x.to_string()));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()
}

/// One row of a `π_N` trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiRow {
    pub t: u64,
    pub pi_n: f64,
    pub core_mean: f64,
}

pub fn write_pi_trace<W: Write>(mut w: W, rows: &[PiRow], config: &ExperimentConfig) -> std::io::Result<()> {
    write_comments(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "pi_N", "core_mean"]).map_err(csv_err)?;
    for r in rows {
        out.write_record([r.t.to_string(), r.pi_n.to_string(), r.core_mean.to_string()]).map_err(csv_err)?;
    }
    out.flush()
}

pub fn read_pi_trace<R: Read>(r: R) -> Result<Vec<PiRow>, String> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            let get = |i: usize| rec.get(i).ok_or("short row".to_owned());
            Ok(PiRow {
                t: get(0)?.parse().map_err(|_| "bad t".to_owned())?,
                pi_n: get(1)?.parse().map_err(|_| "bad pi_N".to_owned())?,
                core_mean: get(2)?.parse().map_err(|_| "bad core_mean".to_owned())?,
            })
        })
        .collect()
}

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

pub fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::new("test")
    }

    #[test]
    fn histogram_round_trip() {
        let mut h = Histogram::new(-0.3, 1.7, 7).unwrap();
        h.extend([-1.0, -0.3, 0.0, 0.1, 0.11, 1.0, 1.7, 2.0, 2.5, f64::NAN]);
        let mut buf = Vec::new();
        write_histogram(&mut buf, &h, &cfg()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config: {\"command\":\"test\"}\nbin_left,bin_right,count\n-inf,-0.3,1\n"));
        assert!(text.ends_with("1.7,inf,3\n"));
        assert_eq!(read_histogram(&buf[..]).unwrap(), h);
    }

    #[test]
    fn histogram_rejects_garbage() {
        assert!(read_histogram("a,b,c\n1,2,3\n".as_bytes()).is_err());
        assert!(read_histogram("bin_left,bin_right,count\n".as_bytes()).is_err());
        assert!(read_histogram("bin_left,bin_right,count\n0,1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn samples_round_trip() {
        let xs = [0.1, 0.25, 1.0 / 3.0];
        let mut buf = Vec::new();
        write_samples(&mut buf, 1, &xs, &cfg()).unwrap();
        assert_eq!(read_samples(&buf[..]).unwrap(), xs);
        assert_eq!(read_samples("0.5\n0.25\n".as_bytes()).unwrap(), [0.5, 0.25]);
        assert!(read_samples("xi\n0.5\nfoo\n".as_bytes()).is_err());
        assert!(read_samples("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn pi_trace_header_only() {
        let mut buf = Vec::new();
        write_pi_trace(&mut buf, &[], &cfg()).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().last(), Some("t,pi_N,core_mean"));
        assert!(read_pi_trace(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn trace_columns() {
        let p = TracePoint { t: 3, lyapunov: 0.5, diameter: 0.25, core_mean: vec![0.1, 0.2] };
        let mut buf = Vec::new();
        write_trace(&mut buf, 2, &[p], &cfg()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("t,F,D,mu_prime_0,mu_prime_1\n3,0.5,0.25,0.1,0.2\n"));
    }
}
