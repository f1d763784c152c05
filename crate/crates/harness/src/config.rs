//! Experiment configuration: TOML file + CLI overrides, validation, and a
//! stable content hash that is embedded in every output file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, thiserror::Error)]
pub enum HarnessError {
    /// Bad configuration (file, field, or flag). CLI exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem or output failure. CLI exit code 3.
    #[error("io error: {0}")]
    Io(String),
    /// Unexpected computation failure (per-trial failures are recorded in
    /// the output instead and never raise this).
    #[error("compute error: {0}")]
    Compute(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::Compute(_) => 1,
        }
    }
}

pub fn io_err(context: &str, e: impl fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{context}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GrowthSweep,
    Tail,
    Polytope,
    Events,
    CompareGenp,
    #[serde(rename = "probe_2x2")]
    Probe2x2,
}

impl ExperimentKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ExperimentKind::GrowthSweep => "growth_sweep",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Polytope => "polytope",
            ExperimentKind::Events => "events",
            ExperimentKind::CompareGenp => "compare_genp",
            ExperimentKind::Probe2x2 => "probe_2x2",
        }
    }
}

fn default_n_values() -> Vec<usize> {
    vec![8]
}
fn default_trials() -> u64 {
    100
}
fn default_precision() -> Vec<u32> {
    vec![53]
}
fn default_c_prime() -> f64 {
    0.01
}
fn default_beta() -> f64 {
    2.0
}
fn default_samples() -> u64 {
    10_000
}
fn default_eps() -> f64 {
    0.05
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

/// One experiment run, fully specified. Identical configs (after overrides)
/// hash identically and reproduce identical outputs bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Matrix dimensions to sweep.
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    /// Monte Carlo trials per (n, ...) cell.
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Master seed; stream ids are derived per trial.
    #[serde(default)]
    pub master_seed: u64,
    /// Emulated significand widths to sweep (floating experiments).
    #[serde(default = "default_precision")]
    pub precision_bits: Vec<u32>,
    /// Constant in the small-singular-value threshold `c'·i·s/√u`.
    #[serde(default = "default_c_prime")]
    pub c_prime: f64,
    /// Tail exponents t for `P{g ≥ n^t}` (tail experiment).
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Pivot steps r (polytope and events experiments).
    #[serde(default)]
    pub r_values: Vec<usize>,
    /// Event-threshold exponent β (events experiment; the analysis covers
    /// β ≥ 2).
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Monte Carlo samples per polytope measure estimate.
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// Small-pivot threshold for the 2×2 probe.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Output directory for JSONL/CSV/meta files.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 = runtime default. Results never depend on it.
    #[serde(default)]
    pub thread_count: usize,
    /// Compute the condition number and forward error in sweeps (the
    /// costliest metrics at large n).
    #[serde(default = "default_true")]
    pub full_reports: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            n_values: default_n_values(),
            trials: default_trials(),
            master_seed: 0,
            precision_bits: default_precision(),
            c_prime: default_c_prime(),
            t_grid: Vec::new(),
            r_values: Vec::new(),
            beta: default_beta(),
            samples: default_samples(),
            eps: default_eps(),
            output_dir: default_output_dir(),
            thread_count: 0,
            full_reports: true,
        }
    }

    /// Load from a TOML file. The `experiment` field in the file is
    /// optional when the caller fixes the kind (subcommand wins).
    pub fn from_toml_file(path: &Path, kind: ExperimentKind) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        // Allow files without an `experiment` key by injecting the
        // subcommand's kind.
        let mut value: toml::Value = text
            .parse()
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if let Some(table) = value.as_table_mut() {
            table
                .entry("experiment")
                .or_insert(toml::Value::String(kind.slug().to_string()));
        }
        let cfg: ExperimentConfig = value
            .try_into()
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if cfg.experiment != kind {
            return Err(HarnessError::Config(format!(
                "config file says experiment = {}, but the subcommand is {}",
                cfg.experiment.slug(),
                kind.slug()
            )));
        }
        Ok(cfg)
    }

    /// Check invariants; returns the offending field in the message.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |field: &str, msg: String| {
            Err(HarnessError::Config(format!("field '{field}': {msg}")))
        };
        if self.trials < 1 {
            return err("trials", "must be at least 1".into());
        }
        if self.n_values.is_empty() {
            return err("n_values", "must be nonempty".into());
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return err("n_values", format!("dimension {n} below the minimum of 2"));
        }
        if self.precision_bits.is_empty() {
            return err("precision_bits", "must be nonempty".into());
        }
        if let Some(&p) = self.precision_bits.iter().find(|&&p| p < 2) {
            return err("precision_bits", format!("precision {p} below the minimum of 2"));
        }
        match self.experiment {
            ExperimentKind::Tail => {
                if self.t_grid.is_empty() {
                    return err("t_grid", "tail experiment needs at least one exponent".into());
                }
                if let Some(&t) = self.t_grid.iter().find(|t| !t.is_finite()) {
                    return err("t_grid", format!("exponent {t} is not finite"));
                }
            }
            ExperimentKind::Polytope | ExperimentKind::Events => {
                if self.r_values.is_empty() {
                    return err("r_values", "needs at least one pivot count r".into());
                }
                for &n in &self.n_values {
                    let cap = if self.experiment == ExperimentKind::Events { n - 1 } else { n };
                    if let Some(&r) = self.r_values.iter().find(|&&r| r < 1 || r > cap) {
                        return err("r_values", format!("r = {r} outside 1..={cap} for n = {n}"));
                    }
                }
                if self.samples < 1 {
                    return err("samples", "must be at least 1".into());
                }
            }
            ExperimentKind::Probe2x2 => {
                if !(self.eps > 0.0 && self.eps < 1.0) {
                    return err("eps", format!("{} outside (0, 1)", self.eps));
                }
            }
            _ => {}
        }
        if self.experiment == ExperimentKind::Events && self.beta < 2.0 {
            return err("beta", format!("{} below 2 (the analysis covers beta >= 2)", self.beta));
        }
        if !(self.c_prime > 0.0) {
            return err("c_prime", format!("{} must be positive", self.c_prime));
        }
        Ok(())
    }

    /// The semantic content of the config: every field that influences the
    /// computed numbers. `output_dir` and `thread_count` are plumbing —
    /// they are blanked here so hashes and output headers are invariant
    /// under where the files go and how many workers ran.
    pub fn normalized(&self) -> ExperimentConfig {
        let mut clone = self.clone();
        clone.output_dir = PathBuf::new();
        clone.thread_count = 0;
        clone
    }

    /// 12-hex-digit content hash of the normalized config.
    pub fn config_hash(&self) -> String {
        let canonical =
            serde_json::to_string(&self.normalized()).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..12].to_string()
    }

    /// Effective thread count: env `PIVOTLAB_THREADS` beats the config
    /// field; 0 means "let the pool pick".
    pub fn effective_threads(&self) -> usize {
        std::env::var("PIVOTLAB_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .unwrap_or(self.thread_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_per_experiment() {
        assert!(ExperimentConfig::new(ExperimentKind::GrowthSweep).validate().is_ok());
        // Tail needs a grid.
        let mut c = ExperimentConfig::new(ExperimentKind::Tail);
        assert!(c.validate().is_err());
        c.t_grid = vec![0.5, 1.0];
        assert!(c.validate().is_ok());
        // Events need r values below n.
        let mut c = ExperimentConfig::new(ExperimentKind::Events);
        c.r_values = vec![8];
        assert!(c.validate().is_err(), "r = n is out of range for events");
        c.r_values = vec![4];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation_reports_the_field() {
        let mut c = ExperimentConfig::new(ExperimentKind::GrowthSweep);
        c.trials = 0;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("'trials'"), "{msg}");
        let mut c = ExperimentConfig::new(ExperimentKind::GrowthSweep);
        c.n_values = vec![1];
        assert!(c.validate().unwrap_err().to_string().contains("'n_values'"));
    }

    #[test]
    fn hash_is_stable_and_ignores_plumbing_fields() {
        let a = ExperimentConfig::new(ExperimentKind::Tail);
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 12);
        b.output_dir = PathBuf::from("elsewhere");
        b.thread_count = 7;
        assert_eq!(a.config_hash(), b.config_hash(), "plumbing must not change the hash");
        b.master_seed = 1;
        assert_ne!(a.config_hash(), b.config_hash(), "seed must change the hash");
    }

    #[test]
    fn toml_roundtrip_with_defaults_and_unknown_field_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "n_values = [4, 6]\ntrials = 7\nmaster_seed = 42\n").unwrap();
        let cfg = ExperimentConfig::from_toml_file(&path, ExperimentKind::GrowthSweep).unwrap();
        assert_eq!(cfg.n_values, vec![4, 6]);
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.precision_bits, vec![53], "default fills in");
        std::fs::write(&path, "trails = 7\n").unwrap();
        let err = ExperimentConfig::from_toml_file(&path, ExperimentKind::GrowthSweep)
            .unwrap_err()
            .to_string();
        assert!(err.contains("trails"), "typo should be named: {err}");
    }

    #[test]
    fn exit_codes_match_error_classes() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::Io("x".into()).exit_code(), 3);
    }
}
