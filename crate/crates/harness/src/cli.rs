//! Command-line interface: one subcommand per experiment plus `factor` for
//! single matrices. Config precedence: built-in defaults < TOML file
//! (`--config`) < individual flags. Exit codes: 0 success, 2 configuration
//! error, 3 I/O error.

use crate::config::{ExperimentConfig, ExperimentKind, HarnessError};
use crate::experiments::run_experiment;
use clap::{Args, Parser, Subcommand};
use pivotlab_core::elim::{
    genp_factor, gepp_factor, growth_factor_of_trace, EliminationTrace, FactorOptions,
};
use pivotlab_core::field::{ExactField, F64Field, Field, FpField};
use pivotlab_core::matrix::DenseMatrix;
use pivotlab_core::scalar::{decimal_string, parse_decimal, FpConfig, Rational};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pivotlab",
    version,
    about = "Elimination experiments: growth factors, backward error, pivot polytopes",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor one matrix from a CSV file and print a trace summary.
    Factor(FactorArgs),
    /// Growth-factor sweep: per-trial stability reports over n × precision.
    Sweep(RunArgs),
    /// Tail of the exact growth factor: empirical P{g >= n^t} with exact
    /// binomial confidence intervals.
    Tail(RunArgs),
    /// Pivot-polytope Gaussian measures by Monte Carlo, with the pivot-row
    /// distance recorded per trial.
    Polytope(RunArgs),
    /// Frequencies of the small-distance and large-norm pivot-row events.
    Events(RunArgs),
    /// Backward-error quantiles with vs without pivoting on shared draws.
    Compare(RunArgs),
    /// 2x2 no-pivoting probe: small-pivot frequency scaling in eps.
    Probe2x2(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix dimensions, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Significand widths in bits, comma-separated.
    #[arg(long, value_delimiter = ',')]
    precision: Option<Vec<u32>>,
    /// Tail exponents, comma-separated (tail).
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Pivot step counts, comma-separated (polytope, events).
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    /// Event-threshold exponent (events).
    #[arg(long)]
    beta: Option<f64>,
    /// Monte Carlo samples per measure estimate (polytope).
    #[arg(long)]
    samples: Option<u64>,
    /// Small-pivot threshold (probe2x2).
    #[arg(long)]
    eps: Option<f64>,
    /// Small-singular-value constant recorded in configs.
    #[arg(long = "c-prime")]
    c_prime: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = auto); PIVOTLAB_THREADS overrides.
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the condition number and forward error in sweeps.
    #[arg(long)]
    light: bool,
}

impl RunArgs {
    fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path, kind)?,
            None => ExperimentConfig::new(kind),
        };
        if let Some(v) = &self.n {
            cfg.n_values = v.clone();
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = &self.precision {
            cfg.precision_bits = v.clone();
        }
        if let Some(v) = &self.t {
            cfg.t_grid = v.clone();
        }
        if let Some(v) = &self.r {
            cfg.r_values = v.clone();
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.c_prime {
            cfg.c_prime = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.threads {
            cfg.thread_count = v;
        }
        if self.light {
            cfg.full_reports = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct FactorArgs {
    /// CSV file holding one square matrix (no header; cells are decimals
    /// like `-1.5e-3` or exact fractions like `22/7`).
    #[arg(long)]
    input: PathBuf,
    /// Arithmetic to factor in.
    #[arg(long, default_value = "exact", value_parser = ["exact", "fp", "f64"])]
    mode: String,
    /// Significand bits for --mode fp.
    #[arg(long, default_value_t = 53)]
    precision: u32,
    /// Eliminate without pivoting instead of partial pivoting.
    #[arg(long)]
    no_pivoting: bool,
}

/// Parse one matrix cell: `a/b` as an exact fraction, otherwise a decimal
/// literal.
fn parse_cell(s: &str) -> Result<Rational, HarnessError> {
    let bad = |detail: String| HarnessError::Config(format!("cell '{s}': {detail}"));
    let t = s.trim();
    if let Some((a, b)) = t.split_once('/') {
        let num = parse_decimal(a).map_err(|e| bad(e.to_string()))?;
        let den = parse_decimal(b).map_err(|e| bad(e.to_string()))?;
        if den == Rational::from_integer(0.into()) {
            return Err(bad("zero denominator".into()));
        }
        Ok(num / den)
    } else {
        parse_decimal(t).map_err(|e| bad(e.to_string()))
    }
}

fn read_matrix_csv(path: &PathBuf) -> Result<DenseMatrix<ExactField>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<Rational>, HarnessError> = line
            .split(',')
            .map(|cell| {
                parse_cell(cell).map_err(|e| {
                    HarnessError::Config(format!("{} line {}: {e}", path.display(), lineno + 1))
                })
            })
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(HarnessError::Config(format!("{}: no rows", path.display())));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(HarnessError::Config(format!(
            "{}: ragged rows (expected {cols} columns everywhere)",
            path.display()
        )));
    }
    DenseMatrix::from_rows(ExactField, rows)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn run_factor(args: &FactorArgs) -> Result<(), HarnessError> {
    let a = read_matrix_csv(&args.input)?;
    let n = a.rows();
    if a.cols() != n {
        return Err(HarnessError::Config(format!(
            "matrix must be square, got {}x{}",
            n,
            a.cols()
        )));
    }
    println!("matrix: {}x{} from {}", n, n, args.input.display());
    println!("mode: {}", args.mode);

    match args.mode.as_str() {
        "exact" => {
            let f = ExactField;
            let (trace, g) = factor_with_growth(&f, &a, args.no_pivoting)?;
            print_trace_summary(&trace, &g);
            println!("u_diagonal:");
            for k in 0..n {
                println!("  u[{k},{k}] = {}", trace.u.get(k, k));
            }
        }
        "fp" => {
            let cfg = FpConfig::new(args.precision)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let f = FpField::new(cfg);
            let afl = a.convert(&f);
            let (trace, g) = factor_with_growth(&f, &afl, args.no_pivoting)?;
            println!("precision_bits: {}", args.precision);
            print_trace_summary(&trace, &g);
            println!("u_diagonal (sign, significand, exponent — value = sign*sig*2^exp):");
            for k in 0..n {
                let v = trace.u.get(k, k);
                println!(
                    "  u[{k},{k}] = ({}, {}, {})",
                    v.signum(),
                    v.significand(),
                    v.exponent()
                );
            }
        }
        "f64" => {
            let f = F64Field;
            let afl = a.convert(&f);
            let (trace, g) = factor_with_growth(&f, &afl, args.no_pivoting)?;
            print_trace_summary(&trace, &g);
            println!("u_diagonal:");
            for k in 0..n {
                println!("  u[{k},{k}] = {}", trace.u.get(k, k));
            }
        }
        other => {
            return Err(HarnessError::Config(format!("unknown mode '{other}'")));
        }
    }
    Ok(())
}

fn factor_with_growth<F: Field>(
    f: &F,
    a: &DenseMatrix<F>,
    no_pivoting: bool,
) -> Result<(EliminationTrace<F>, Rational), HarnessError> {
    let opts = FactorOptions::default();
    let trace = if no_pivoting { genp_factor(a, opts) } else { gepp_factor(a, opts) }
        .map_err(|e| HarnessError::Config(format!("elimination failed: {e}")))?;
    let g = growth_factor_of_trace(f, &trace);
    Ok((trace, g))
}

fn print_trace_summary<F: Field>(trace: &EliminationTrace<F>, growth: &Rational) {
    println!("pivot_rows: {:?}", trace.pivot_rows);
    println!("row_permutation: {:?}", trace.perm);
    println!("growth_factor_exact: {growth}");
    println!("growth_factor_decimal: {}", decimal_string(growth, 20));
    println!("growth_factor_f64: {}", F64Field.from_rational(growth));
    println!("pivot_ties: {}", trace.tie_count);
    println!("u_last_diag_zero: {}", trace.u_last_diag_zero);
}

fn run_cmd(cli: Cli) -> Result<(), HarnessError> {
    let (kind, args) = match &cli.cmd {
        Command::Factor(args) => return run_factor(args),
        Command::Sweep(a) => (ExperimentKind::GrowthSweep, a),
        Command::Tail(a) => (ExperimentKind::Tail, a),
        Command::Polytope(a) => (ExperimentKind::Polytope, a),
        Command::Events(a) => (ExperimentKind::Events, a),
        Command::Compare(a) => (ExperimentKind::CompareGenp, a),
        Command::Probe2x2(a) => (ExperimentKind::Probe2x2, a),
    };
    let cfg = args.resolve(kind)?;
    let outcome = run_experiment(&cfg)?;
    println!("experiment: {}", cfg.experiment.slug());
    println!("config_hash: {}", outcome.paths.config_hash);
    println!("jsonl: {}", outcome.paths.jsonl.display());
    println!("csv: {}", outcome.paths.csv.display());
    println!("trials: {}", outcome.trials_run);
    println!("failures: {}", outcome.failures);
    println!("wall_seconds: {:.3}", outcome.wall_seconds);
    Ok(())
}

/// Entry point for `main`: parse, run, map errors to exit codes.
pub fn run() -> i32 {
    // clap exits with code 2 itself on usage errors, matching the
    // config-error convention.
    let cli = Cli::parse();
    match run_cmd(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
