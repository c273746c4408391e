//! Condensed CSV: one header line, then one comma-separated line per row.
//!
//! Rates carry one decimal place and CPU percentages two; an absent CPU
//! sample or error is an empty field. Fields never need quoting because
//! free text is sanitized when rows are built.

use thiserror::Error;

use super::ResultRow;

pub const CONDENSED_HEADER: &str =
    "config,n_disks,mode,block_bytes,depth,duration_s,bytes,io_count,rate_mbps,cpu_total_pct,cpu_one_proc_pct,backend,error";

const N_COLUMNS: usize = 13;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn fields(row: &ResultRow) -> [String; N_COLUMNS] {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
    [
        row.config.clone(),
        row.n_disks.to_string(),
        row.mode.to_string(),
        row.block_bytes.to_string(),
        row.depth.to_string(),
        row.duration_s.to_string(),
        row.bytes.to_string(),
        row.io_count.to_string(),
        format!("{:.1}", row.rate_mbps),
        opt(row.cpu_total_pct),
        opt(row.cpu_one_proc_pct),
        row.backend.to_string(),
        row.error.clone().unwrap_or_default(),
    ]
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("flushing to memory");
    String::from_utf8(bytes).expect("fields are UTF-8")
}

/// One row without the header or trailing newline.
pub fn emit_row(row: &ResultRow) -> String {
    let mut w = writer();
    w.write_record(fields(row)).expect("writing to memory");
    let mut s = finish(w);
    s.pop();
    s
}

pub fn emit_condensed(rows: &[ResultRow]) -> String {
    let mut w = writer();
    w.write_record(CONDENSED_HEADER.split(',')).expect("writing to memory");
    for row in rows {
        w.write_record(fields(row)).expect("writing to memory");
    }
    finish(w)
}

pub fn parse_condensed(text: &str) -> Result<Vec<ResultRow>, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header_ok = match records.next() {
        Some(Ok(h)) => h.iter().eq(CONDENSED_HEADER.split(',')),
        _ => false,
    };
    if !header_ok {
        return Err(ParseError { line: 1, msg: "missing or unexpected header".into() });
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| ParseError {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push(parse_record(&record).map_err(|msg| ParseError { line, msg })?);
    }
    Ok(rows)
}

fn parse_record(f: &csv::StringRecord) -> Result<ResultRow, String> {
    if f.len() != N_COLUMNS {
        return Err(format!("expected {N_COLUMNS} columns, found {}", f.len()));
    }
    fn num<T: std::str::FromStr>(name: &str, v: &str) -> Result<T, String> {
        v.parse().map_err(|_| format!("bad {name} {v:?}"))
    }
    fn opt(name: &str, v: &str) -> Result<Option<f64>, String> {
        if v.is_empty() {
            Ok(None)
        } else {
            num(name, v).map(Some)
        }
    }
    if f[0].is_empty() {
        return Err("empty config".into());
    }
    Ok(ResultRow {
        config: f[0].to_string(),
        n_disks: num("n_disks", &f[1])?,
        mode: num("mode", &f[2])?,
        block_bytes: num("block_bytes", &f[3])?,
        depth: num("depth", &f[4])?,
        duration_s: num("duration_s", &f[5])?,
        bytes: num("bytes", &f[6])?,
        io_count: num("io_count", &f[7])?,
        rate_mbps: num("rate_mbps", &f[8])?,
        cpu_total_pct: opt("cpu_total_pct", &f[9])?,
        cpu_one_proc_pct: opt("cpu_one_proc_pct", &f[10])?,
        backend: num("backend", &f[11])?,
        error: (!f[12].is_empty()).then(|| f[12].to_string()),
    })
}
