//! Line-oriented table export.
//!
//! ```text
//! m=<m> total_windows=<w>
//! <zero-padded hex pattern> <count> <count / w, 10 significant digits>
//! ...
//! ```
//!
//! A file may hold several tables back to back; each starts at its header.

use std::io::Write;

use crate::error::{Result, SbcError};
use crate::pattern::table::FrequencyTable;

pub fn write_table<W: Write>(w: &mut W, table: &FrequencyTable) -> Result<()> {
    writeln!(w, "m={} total_windows={}", table.m(), table.total_windows())?;
    let total = table.total_windows() as f64;
    for (p, c) in table.iter() {
        writeln!(w, "{} {} {:.9e}", p.to_hex(), c, c as f64 / total)?;
    }
    Ok(())
}

pub fn write_tables<W: Write>(w: &mut W, tables: &[FrequencyTable]) -> Result<()> {
    for t in tables {
        write_table(w, t)?;
    }
    Ok(())
}

pub fn tables_to_string(tables: &[FrequencyTable]) -> String {
    let mut buf = Vec::new();
    write_tables(&mut buf, tables).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("table export is ASCII")
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, u64)> {
    let err = |msg: &str| SbcError::Parse {
        line: line_no,
        message: msg.to_owned(),
    };
    let mut parts = line.split_whitespace();
    let m = parts
        .next()
        .and_then(|s| s.strip_prefix("m="))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("expected `m=<m>`"))?;
    let w = parts
        .next()
        .and_then(|s| s.strip_prefix("total_windows="))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("expected `total_windows=<w>`"))?;
    if parts.next().is_some() {
        return Err(err("unexpected trailing field in header"));
    }
    Ok((m, w))
}

/// Parses every table in `text`. Counts are authoritative; the normalized
/// column is checked for syntax only.
pub fn parse_tables(text: &str) -> Result<Vec<FrequencyTable>> {
    // m, header total, rows so far, header line
    type Pending = (usize, u64, Vec<(u64, u64)>, usize);
    let mut tables = Vec::new();
    let mut current: Option<Pending> = None;

    let finish = |cur: Pending| -> Result<FrequencyTable> {
        let (m, total, pairs, line) = cur;
        let table = FrequencyTable::from_counts(m, pairs).map_err(|e| SbcError::Parse {
            line,
            message: e.to_string(),
        })?;
        if table.total_windows() != total {
            return Err(SbcError::Parse {
                line,
                message: format!("counts sum to {} but header says {total}", table.total_windows()),
            });
        }
        Ok(table)
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("m=") {
            if let Some(cur) = current.take() {
                tables.push(finish(cur)?);
            }
            let (m, w) = parse_header(line, line_no)?;
            current = Some((m, w, Vec::new(), line_no));
            continue;
        }
        let Some((_, _, pairs, _)) = current.as_mut() else {
            return Err(SbcError::Parse {
                line: line_no,
                message: "pattern row before any table header".into(),
            });
        };
        let err = |msg: &str| SbcError::Parse {
            line: line_no,
            message: msg.to_owned(),
        };
        let mut parts = line.split_whitespace();
        let value = parts
            .next()
            .and_then(|s| u64::from_str_radix(s, 16).ok())
            .ok_or_else(|| err("bad pattern hex"))?;
        let count = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad count"))?;
        parts
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| err("bad normalized frequency"))?;
        if parts.next().is_some() {
            return Err(err("unexpected trailing field"));
        }
        pairs.push((value, count));
    }
    if let Some(cur) = current.take() {
        tables.push(finish(cur)?);
    }
    Ok(tables)
}
