//! Dataset CSV files.
//!
//! ```text
//! # io_split=2,1
//! bit_0,bit_1,bit_2,weight
//! 0,0,0,0.25
//! ```
//!
//! The `# io_split` line is optional; without a `weight` column rows are
//! weighted uniformly.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::Dataset;

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut io_split = None;
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.trim().strip_prefix('#') else { break };
        let line_no = i as u64 + 1;
        if let Some(value) = meta.trim().strip_prefix("io_split=") {
            let parts: Vec<_> = value.split(',').map(|p| p.trim().parse::<usize>()).collect();
            match parts.as_slice() {
                [Ok(a), Ok(b)] => io_split = Some((*a, *b)),
                _ => return Err(parse_err(line_no, format!("bad io_split `{value}`"))),
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let has_weight = headers.iter().next_back() == Some("weight");
    let width = headers.len() - usize::from(has_weight);
    for (i, h) in headers.iter().take(width).enumerate() {
        if h != format!("bit_{i}") {
            return Err(parse_err(1, format!("expected column bit_{i}, found `{h}`")));
        }
    }

    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(width);
        for field in record.iter().take(width) {
            match field {
                "0" => row.push(0),
                "1" => row.push(1),
                other => return Err(parse_err(line, format!("bit value `{other}` is not 0 or 1"))),
            }
        }
        let weight = if has_weight {
            let w: f64 = record[width]
                .parse()
                .map_err(|_| parse_err(line, format!("bad weight `{}`", &record[width])))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(parse_err(line, format!("weight {w} must be positive")));
            }
            w
        } else {
            1.0
        };
        rows.push(row);
        weights.push(weight);
    }
    Dataset::new(rows, weights, io_split).map_err(|e| match e {
        Error::InvalidArgument(m) => parse_err(0, m),
        other => other,
    })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    if let Some((a, b)) = dataset.io_split() {
        writeln!(out, "# io_split={a},{b}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..dataset.width()).map(|i| format!("bit_{i}")).collect();
    header.push("weight".into());
    writer.write_record(&header).map_err(csv_io)?;
    for (row, w) in dataset.iter() {
        let mut record: Vec<String> = row.iter().map(|b| b.to_string()).collect();
        record.push(w.to_string());
        writer.write_record(&record).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
