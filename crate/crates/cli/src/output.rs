//! Report envelope and serialization. Every JSON report carries a
//! provenance block (version, exact command line, seed, thread count, hash
//! of the effective config, optional wall-clock stamp) so a result file can
//! be traced back to the run that made it. CSV output is data-only: fixed
//! columns, floats printed with 17 significant digits so they round-trip.

use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl Provenance {
    pub fn collect(cfg: &RunConfig) -> Provenance {
        let command = std::env::args().collect::<Vec<_>>().join(" ");
        let timestamp_unix = if cfg.no_timestamp {
            None
        } else {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs())
        };
        Provenance {
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: cfg.seed,
            threads: cfg.threads,
            config_sha256: cfg.sha256_hex(),
            timestamp_unix,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub body: T,
}

/// One CSV row: a tag plus positional fields. Numeric cells go through
/// [`float_cell`] so parsing them back reproduces the exact f64.
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub fn float_cell(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn int_cell(v: impl std::fmt::Display) -> String {
    v.to_string()
}

fn write_to(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Config(format!("out {}: {e}", path.display()))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)
                .and_then(|()| lock.flush())
                .map_err(|e| CliError::Config(format!("stdout: {e}")))
        }
    }
}

/// Emit a report in the configured format. `csv` is the tabular projection
/// of `body`; commands whose output has no natural table pass `None` and
/// CSV requests for them are rejected up front.
pub fn emit<T: Serialize>(
    cfg: &RunConfig,
    body: T,
    csv: Option<CsvTable>,
) -> Result<(), CliError> {
    match cfg.format {
        OutputFormat::Json => {
            let report = Report {
                provenance: Provenance::collect(cfg),
                body,
            };
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Config(format!("serialize: {e}")))?;
            text.push('\n');
            write_to(&cfg.out, text.as_bytes())
        }
        OutputFormat::Csv => {
            let table = csv.ok_or_else(|| {
                CliError::Config("this command has no CSV form; use --format json".into())
            })?;
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(&table.header)
                .map_err(|e| CliError::Config(format!("csv: {e}")))?;
            for row in &table.rows {
                writer
                    .write_record(row)
                    .map_err(|e| CliError::Config(format!("csv: {e}")))?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| CliError::Config(format!("csv: {e}")))?;
            write_to(&cfg.out, &bytes)
        }
    }
}
