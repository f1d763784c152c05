//! Output plumbing: one JSONL file (full records), one CSV file (summary
//! table), and one meta sidecar per run. JSONL and CSV contents are pure
//! functions of the config; wall time and thread count live only in the
//! sidecar so reruns stay byte-identical.

use crate::config::{io_err, ExperimentConfig, HarnessError};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};

/// Resolved output locations for a run: `<dir>/<slug>-<confighash>.*`.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub jsonl: PathBuf,
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub config_hash: String,
}

impl OutputPaths {
    pub fn for_config(cfg: &ExperimentConfig) -> OutputPaths {
        let hash = cfg.config_hash();
        let stem = format!("{}-{}", cfg.experiment.slug(), hash);
        let dir = &cfg.output_dir;
        OutputPaths {
            jsonl: dir.join(format!("{stem}.jsonl")),
            csv: dir.join(format!("{stem}.csv")),
            meta: dir.join(format!("{stem}.meta.json")),
            config_hash: hash,
        }
    }
}

/// `git describe --always --dirty` of the working tree, or "unknown"
/// outside a repository. Recorded in output headers.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// First record of every JSONL file: identifies the run. The embedded
/// config is normalized (no output_dir/thread_count), so reruns of the
/// same semantic config produce identical headers wherever they write and
/// however many threads they use.
#[derive(Debug, Serialize)]
struct HeaderRecord<'a> {
    record: &'static str,
    schema_version: u32,
    config_hash: &'a str,
    git_describe: String,
    scalar_fields: Vec<String>,
    config: ExperimentConfig,
}

/// Line-oriented JSON writer. Every record is one compact JSON object; f64
/// values serialize via the shortest round-trip representation, so files
/// are bitwise reproducible for identical inputs.
pub struct JsonlWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl JsonlWriter {
    /// Create the file (truncating) and write the header record. The
    /// `scalar_fields` list names the arithmetic domains used by the run,
    /// e.g. `["exact-rational", "emulated-binary-p24"]`.
    pub fn create(
        path: &Path,
        cfg: &ExperimentConfig,
        config_hash: &str,
        scalar_fields: Vec<String>,
    ) -> Result<JsonlWriter, HarnessError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| io_err(&format!("create dir {}", parent.display()), e))?;
        }
        let file = File::create(path)
            .map_err(|e| io_err(&format!("create {}", path.display()), e))?;
        let mut w = JsonlWriter { out: BufWriter::new(file), path: path.to_path_buf() };
        w.write(&HeaderRecord {
            record: "header",
            schema_version: 1,
            config_hash,
            git_describe: git_describe(),
            scalar_fields,
            config: cfg.normalized(),
        })?;
        Ok(w)
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<(), HarnessError> {
        let line = serde_json::to_string(record)
            .map_err(|e| io_err("serialize record", e))?;
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| io_err(&format!("write {}", self.path.display()), e))
    }

    pub fn finish(mut self) -> Result<(), HarnessError> {
        self.out
            .flush()
            .map_err(|e| io_err(&format!("flush {}", self.path.display()), e))
    }
}

/// Summary CSV writer: fixed header row, then one row per summary cell.
/// Every row carries the config hash so a stray file is traceable.
pub struct CsvWriter {
    out: csv::Writer<File>,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<CsvWriter, HarnessError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| io_err(&format!("create dir {}", parent.display()), e))?;
        }
        let file = File::create(path)
            .map_err(|e| io_err(&format!("create {}", path.display()), e))?;
        let mut out = csv::Writer::from_writer(file);
        out.write_record(header)
            .map_err(|e| io_err("write csv header", e))?;
        Ok(CsvWriter { out, path: path.to_path_buf() })
    }

    pub fn write_row(&mut self, row: &[String]) -> Result<(), HarnessError> {
        self.out
            .write_record(row)
            .map_err(|e| io_err(&format!("write {}", self.path.display()), e))
    }

    pub fn finish(mut self) -> Result<(), HarnessError> {
        self.out
            .flush()
            .map_err(|e| io_err(&format!("flush {}", self.path.display()), e))
    }
}

/// Run metadata that must NOT affect the data files: wall time and the
/// thread count actually used.
#[derive(Debug, Serialize)]
pub struct RunMeta<'a> {
    pub config_hash: &'a str,
    pub experiment: &'a str,
    pub wall_seconds: f64,
    pub threads: usize,
}

pub fn write_meta(path: &Path, meta: &RunMeta<'_>) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| io_err("serialize meta", e))?;
    std::fs::write(path, text)
        .map_err(|e| io_err(&format!("write {}", path.display()), e))
}

/// Shortest-roundtrip decimal form of an f64 (what `{}` prints). Used for
/// CSV cells so the text is reproducible and parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Median and quartiles of a sample by sorting; quantile q is the element
/// at index ceil(q·len) − 1 (the smallest value with at least a q-fraction
/// of the sample at or below it).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let len = sorted.len();
    let idx = ((q * len as f64).ceil() as usize).clamp(1, len) - 1;
    sorted[idx]
}
