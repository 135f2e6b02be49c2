use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::evolution::LedgerRow;

/// Frozen ledger schema. `budget` is the slack tolerance in force when the
/// row was written, so a reader can re-check the inequality offline.
pub const LEDGER_COLUMNS: &str = "t,energy,dissipation,work,slack,budget";

#[derive(Debug, Error)]
pub enum LedgerCsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("ledger header mismatch: expected '{LEDGER_COLUMNS}', found '{0}'")]
    BadHeader(String),
    #[error("ledger line {line}: expected 6 numeric fields, got '{text}'")]
    BadRow { line: usize, text: String },
}

pub fn write_ledger_csv(
    path: &Path,
    rows: &[LedgerRow],
    budget: impl Fn(usize) -> f64,
) -> Result<(), LedgerCsvError> {
    let mut out = String::from(LEDGER_COLUMNS);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            super::fmt17(r.t),
            super::fmt17(r.energy),
            super::fmt17(r.dissipation),
            super::fmt17(r.work),
            super::fmt17(r.slack),
            super::fmt17(budget(i)),
        ));
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Rows plus the recorded budget column.
pub fn read_ledger_csv(path: &Path) -> Result<Vec<(LedgerRow, f64)>, LedgerCsvError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == LEDGER_COLUMNS => {}
        other => return Err(LedgerCsvError::BadHeader(other.unwrap_or("").to_string())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| LedgerCsvError::BadRow {
                line: i + 2,
                text: line.to_string(),
            })?;
        if fields.len() != 6 {
            return Err(LedgerCsvError::BadRow {
                line: i + 2,
                text: line.to_string(),
            });
        }
        rows.push((
            LedgerRow {
                t: fields[0],
                energy: fields[1],
                dissipation: fields[2],
                work: fields[3],
                slack: fields[4],
            },
            fields[5],
        ));
    }
    Ok(rows)
}
