//! Plain-text readers and number formatting shared by the dumps and the CLI.

use crate::error::{FlsaError, Result};

/// 17 significant digits; parsing the output recovers the value exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_value(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| FlsaError::Parse {
        line,
        message: format!("'{}' is not a number", tok.trim()),
    })?;
    if !v.is_finite() {
        return Err(FlsaError::Parse { line, message: format!("value '{}' is not finite", tok.trim()) });
    }
    Ok(v)
}

/// Reads a signal given either one value per line or as comma-separated
/// rows (all rows are concatenated). Blank lines and `#` comments are skipped.
pub fn parse_signal(text: &str) -> Result<Vec<f64>> {
    Ok(parse_matrix(text)?.into_iter().flatten().collect())
}

/// Reads a CSV matrix row by row. Rows must all have the same width.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| parse_value(i + 1, tok))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(FlsaError::Parse {
                    line: i + 1,
                    message: format!("row has {} values, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
