//! Line-oriented writers for stdout.

use std::io::{self, Write};

use anyhow::Result;
use serde_json::Value;

pub fn jsonl<I: IntoIterator<Item = Value>>(rows: I) -> Result<()> {
    let mut out = io::BufWriter::new(io::stdout().lock());
    for row in rows {
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv<I: IntoIterator<Item = Vec<f64>>>(header: &[&str], rows: I) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(io::stdout().lock());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_records<I: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: I) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(io::stdout().lock());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
