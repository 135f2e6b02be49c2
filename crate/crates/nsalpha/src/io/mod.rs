//! Run configuration, binary field snapshots, and CSV diagnostics.
//!
//! * Config: structured `key = value` text with `[sections]` (TOML syntax),
//!   parsed strictly — unknown keys are fatal and reported with suggestions,
//!   and all validation errors are collected, not just the first.
//! * Snapshots: versioned little-endian binary of the lexicographic
//!   half-spectrum coefficients; round trips are bit-exact.
//! * CSV: frozen column schemas, floats printed with 17 significant digits.

mod config;
mod ledger_csv;
mod snapshot;

pub use config::{
    canonical_text, parse_config, parse_config_file, ConfigError, ForcingConfig, InitialConfig,
    KappaMode, OutputConfig, RunConfig, StudyConfig, TimeConfig,
};
pub use ledger_csv::{read_ledger_csv, write_ledger_csv, LedgerCsvError, LEDGER_COLUMNS};
pub use snapshot::{read_snapshot, read_snapshot_on_grid, write_snapshot, SnapshotError};

/// 17-significant-digit float formatting used by every text output.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
