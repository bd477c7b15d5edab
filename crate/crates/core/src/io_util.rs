//! Text I/O helpers shared by the instance directory format and the
//! experiment CSV: 17-significant-digit float formatting (lossless for f64)
//! and minimal RFC 4180 quoting/parsing.

use crate::error::{Error, Result};
use std::path::Path;

/// Format with 17 significant digits in scientific notation; round-trips
/// every finite f64 exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Quote a CSV field when it contains a comma, quote, CR or LF.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Split one CSV record (RFC 4180 quoting, LF or CRLF already stripped).
pub fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if quoted {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            } else {
                cur.push(c);
            }
        } else {
            match c {
                '"' => quoted = true,
                ',' => fields.push(std::mem::take(&mut cur)),
                _ => cur.push(c),
            }
        }
    }
    fields.push(cur);
    fields
}

pub fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::parse(path, format!("bad float {field:?}")))
}

pub fn parse_usize(path: &Path, field: &str) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| Error::parse(path, format!("bad integer {field:?}")))
}
