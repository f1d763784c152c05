//! Experiment harness around the elimination library: seeded, thread-count
//! independent Monte Carlo runs with JSONL/CSV persistence and a CLI.
//!
//! * [`config`] — experiment configuration, TOML loading, validation,
//!   content hashing.
//! * [`io`] — output paths, JSONL/CSV writers, run metadata.
//! * [`experiments`] — the six experiment drivers.
//! * [`cli`] — argument parsing and the `pivotlab` entry point.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod io;
