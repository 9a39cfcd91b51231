//! CSV tables, summary records and the resolved config on disk.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

pub const CSV_VERSION: u32 = 1;
pub const SUMMARY_VERSION: u32 = 1;

/// Formats one CSV cell.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_cell!(u32, u64, usize, bool, String, &str);

impl<T: Cell> Cell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map(Cell::cell).unwrap_or_default()
    }
}

#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// What a subcommand hands back: its table, a structured result and any
/// failed checks.
pub struct Outcome {
    pub table: Table,
    pub result: Value,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn new(table: Table, result: impl Serialize) -> Result<Self, CliError> {
        Ok(Self { table, result: serde_json::to_value(result)?, failures: Vec::new() })
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    format: &'static str,
    version: u32,
    command: &'static str,
    config: serde_json::Map<String, Value>,
    csv: String,
    rows: usize,
    ok: bool,
    failures: &'a [String],
    result: &'a Value,
}

pub struct Written {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
}

fn sibling(csv: &Path, ext: &str) -> PathBuf {
    csv.with_extension(ext)
}

pub fn write_csv(path: &Path, command: &str, table: &Table) -> Result<(), CliError> {
    let mut buf = format!("# pointgas-csv v{CSV_VERSION} {command}: {}\n", table.columns.join(" ")).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&table.columns)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Writes `<out>`, `<out>.json` (summary) and `<out>.conf` (resolved config).
pub fn write_all(cfg: &RunConfig, outcome: &Outcome) -> Result<Written, CliError> {
    let csv_path = cfg.out().to_path_buf();
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let summary_path = sibling(&csv_path, "json");
    let config_path = sibling(&csv_path, "conf");
    if summary_path == csv_path || config_path == csv_path {
        return Err(CliError::Config("output path must not end in .json or .conf".into()));
    }
    write_csv(&csv_path, cfg.command.name(), &outcome.table)?;
    let config = cfg.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect();
    let summary = Summary {
        format: "pointgas-summary",
        version: SUMMARY_VERSION,
        command: cfg.command.name(),
        config,
        csv: csv_path.display().to_string(),
        rows: outcome.table.rows.len(),
        ok: outcome.failures.is_empty(),
        failures: &outcome.failures,
        result: &outcome.result,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&summary_path, text)?;
    fs::write(&config_path, cfg.render())?;
    Ok(Written { csv: csv_path, summary: summary_path, config: config_path })
}
