//! The six experiments. Each one maps trials onto independent RNG streams
//! (stream id = trial index within the sweep), computes records in
//! parallel, and writes them in canonical stream order — so the JSONL and
//! CSV bytes depend only on the config, never on the thread count.

use crate::config::{ExperimentConfig, ExperimentKind, HarnessError};
use crate::io::{
    fmt_f64, quantile, write_meta, CsvWriter, JsonlWriter, OutputPaths, RunMeta,
};
use pivotlab_core::elim::EliminationVariant;
use pivotlab_core::field::{ExactField, F64Field, Field};
use pivotlab_core::growth::exact_growth_stats;
use pivotlab_core::matrix::{DenseMatrix, RationalMatrix};
use pivotlab_core::polytope::{gaussian_measure_mc, pivot_recursion};
use pivotlab_core::rng::{sample_gaussian_matrix, sample_gaussian_vector, RngStream};
use pivotlab_core::scalar::{
    decimal_string, pow2, rat_i64, round_to_precision, FpConfig, Rational,
};
use pivotlab_core::spectral::dist_to_rowspan_f64;
use pivotlab_core::stability::{
    backward_error_variant, exact_quantities, genp_2x2_instability_probe,
    stability_report_prepared, StabilityReport,
};
use pivotlab_core::stats::clopper_pearson;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Significant decimal digits for exact values in JSONL records: enough to
/// reconstruct the correctly rounded f64 (17) with margin for downstream
/// exact comparisons at coarser grids.
const DECIMAL_DIGITS: u32 = 25;

/// Confidence level of every binomial interval in the output files.
const CONFIDENCE: f64 = 0.95;

/// The small-leading-pivot conditioning threshold for the comparison
/// experiment: redraw the (0,0) entry until `|fl(g₁₁)| ≤ 2^(−10)`.
const CONDITIONED_PIVOT_EXP: i64 = -10;

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub paths: OutputPaths,
    pub trials_run: u64,
    pub failures: u64,
    pub wall_seconds: f64,
}

/// Validate, dispatch, and persist one experiment run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let paths = OutputPaths::for_config(cfg);
    let threads = cfg.effective_threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let (trials_run, failures) = pool.install(|| match cfg.experiment {
        ExperimentKind::GrowthSweep => run_growth_sweep(cfg, &paths),
        ExperimentKind::Tail => run_tail_estimate(cfg, &paths),
        ExperimentKind::Polytope => run_polytope(cfg, &paths),
        ExperimentKind::Events => run_event_frequencies(cfg, &paths),
        ExperimentKind::CompareGenp => compare_gepp_genp(cfg, &paths),
        ExperimentKind::Probe2x2 => run_probe_2x2(cfg, &paths),
    })?;
    let wall_seconds = start.elapsed().as_secs_f64();
    write_meta(
        &paths.meta,
        &RunMeta {
            config_hash: &paths.config_hash,
            experiment: cfg.experiment.slug(),
            wall_seconds,
            threads,
        },
    )?;
    Ok(ExperimentOutcome { paths: paths.clone(), trials_run, failures, wall_seconds })
}

/// Scalar-domain identifiers recorded in output headers.
fn scalar_field_names(cfg: &ExperimentConfig) -> Vec<String> {
    let mut names = vec!["exact-rational".to_string()];
    match cfg.experiment {
        ExperimentKind::Tail => {}
        ExperimentKind::Polytope | ExperimentKind::Events => {
            names.push("native-f64".to_string());
        }
        _ => {
            for &p in &cfg.precision_bits {
                names.push(format!("emulated-binary-p{p}"));
            }
        }
    }
    names
}

/// The Gaussian test matrix of a trial: exact rationals holding the
/// rounded double-precision draws from substream 0 of the trial stream.
fn trial_matrix(stream: &RngStream, n: usize) -> RationalMatrix {
    let mut ms = stream.substream(0);
    sample_gaussian_matrix(&ExactField, n, n, &mut ms)
}

#[derive(Serialize, Clone)]
struct FailureRecord {
    record: &'static str,
    n: usize,
    trial: u64,
    stream_id: u64,
    error: String,
}

fn failure_record(n: usize, trial: u64, stream_id: u64, error: String) -> FailureRecord {
    FailureRecord { record: "failure", n, trial, stream_id, error }
}

// ---------------------------------------------------------------------------
// growth_sweep
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepTrialRecord {
    record: &'static str,
    trial: u64,
    stream_id: u64,
    report: StabilityReport,
    /// Exact growth factor as a decimal string (see `decimal_digits`).
    g_exact_decimal: String,
    decimal_digits: u32,
}

enum SweepRow {
    Ok(Box<SweepTrialRecord>),
    Failed(FailureRecord),
}

fn run_growth_sweep(
    cfg: &ExperimentConfig,
    paths: &OutputPaths,
) -> Result<(u64, u64), HarnessError> {
    let mut jsonl = JsonlWriter::create(
        &paths.jsonl,
        cfg,
        &paths.config_hash,
        scalar_field_names(cfg),
    )?;
    let mut csv = CsvWriter::create(
        &paths.csv,
        &[
            "config_hash",
            "n",
            "precision_bits",
            "trials",
            "successes",
            "failures",
            "g_exact_q25",
            "g_exact_median",
            "g_exact_q75",
            "g_fp_q25",
            "g_fp_median",
            "g_fp_q75",
            "pivot_match_rate",
        ],
    )?;

    let mut total = 0u64;
    let mut total_failures = 0u64;
    for (i_n, &n) in cfg.n_values.iter().enumerate() {
        // One matrix (and right-hand side) per trial, shared by every
        // precision, so precision effects are measured on identical inputs.
        let rows: Vec<Vec<SweepRow>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let stream_id = (i_n as u64) * cfg.trials + trial;
                let stream = RngStream::new(cfg.master_seed, stream_id);
                let a = trial_matrix(&stream, n);
                let b: Option<Vec<Rational>> = cfg.full_reports.then(|| {
                    let mut rs = stream.substream(1);
                    sample_gaussian_vector(&ExactField, n, &mut rs)
                });
                // The exact metrics are precision-independent: one
                // computation serves every precision in the sweep.
                let exact = match exact_quantities(&a, cfg.full_reports) {
                    Ok(e) => e,
                    Err(e) => {
                        let rec = failure_record(n, trial, stream_id, e.to_string());
                        return cfg
                            .precision_bits
                            .iter()
                            .map(|_| SweepRow::Failed(rec.clone()))
                            .collect();
                    }
                };
                let g_exact_decimal = decimal_string(&exact.g_exact, DECIMAL_DIGITS);
                cfg.precision_bits
                    .iter()
                    .map(|&p| {
                        let fpc = FpConfig::new(p).expect("validated precision");
                        match stability_report_prepared(&a, b.as_deref(), &fpc, &exact) {
                            Ok(report) => SweepRow::Ok(Box::new(SweepTrialRecord {
                                record: "trial",
                                trial,
                                stream_id,
                                report,
                                g_exact_decimal: g_exact_decimal.clone(),
                                decimal_digits: DECIMAL_DIGITS,
                            })),
                            Err(e) => SweepRow::Failed(failure_record(
                                n,
                                trial,
                                stream_id,
                                e.to_string(),
                            )),
                        }
                    })
                    .collect()
            })
            .collect();

        // Summaries per precision over the trials of this n.
        for (i_p, &p) in cfg.precision_bits.iter().enumerate() {
            let mut g_exact: Vec<f64> = Vec::new();
            let mut g_fp: Vec<f64> = Vec::new();
            let mut matches = 0u64;
            let mut failures = 0u64;
            for per_trial in &rows {
                match &per_trial[i_p] {
                    SweepRow::Ok(rec) => {
                        g_exact.push(rec.report.g_exact);
                        if let Some(g) = rec.report.g_fp {
                            g_fp.push(g);
                        }
                        if rec.report.pivot_match {
                            matches += 1;
                        }
                    }
                    SweepRow::Failed(_) => failures += 1,
                }
            }
            let successes = cfg.trials - failures;
            total += cfg.trials;
            total_failures += failures;
            g_exact.sort_by(f64::total_cmp);
            g_fp.sort_by(f64::total_cmp);
            let q = |v: &[f64], level: f64| {
                if v.is_empty() { String::new() } else { fmt_f64(quantile(v, level)) }
            };
            csv.write_row(&[
                paths.config_hash.clone(),
                n.to_string(),
                p.to_string(),
                cfg.trials.to_string(),
                successes.to_string(),
                failures.to_string(),
                q(&g_exact, 0.25),
                q(&g_exact, 0.5),
                q(&g_exact, 0.75),
                q(&g_fp, 0.25),
                q(&g_fp, 0.5),
                q(&g_fp, 0.75),
                if successes > 0 {
                    fmt_f64(matches as f64 / successes as f64)
                } else {
                    String::new()
                },
            ])?;
        }

        for per_trial in &rows {
            for row in per_trial {
                match row {
                    SweepRow::Ok(rec) => jsonl.write(rec)?,
                    SweepRow::Failed(rec) => jsonl.write(rec)?,
                }
            }
        }
    }
    jsonl.finish()?;
    csv.finish()?;
    Ok((total, total_failures))
}

// ---------------------------------------------------------------------------
// tail
// ---------------------------------------------------------------------------

/// `n^t` comparison against an exact growth factor. Integer and
/// half-integer exponents compare exactly (the latter through squaring);
/// other exponents fall back to comparing correctly rounded doubles.
fn tail_hit(g: &Rational, n: usize, t: f64) -> bool {
    let n_q = rat_i64(n as i64);
    let int_pow = |k: u64| -> Rational {
        let mut acc = rat_i64(1);
        for _ in 0..k {
            acc *= &n_q;
        }
        acc
    };
    let two_t = 2.0 * t;
    if t >= 0.0 && t == t.trunc() && t <= 1024.0 {
        *g >= int_pow(t as u64)
    } else if two_t >= 0.0 && two_t == two_t.trunc() && two_t <= 2048.0 {
        // g ≥ n^t  ⟺  g² ≥ n^(2t), valid because g ≥ 1 > 0.
        g * g >= int_pow(two_t as u64)
    } else {
        let f = F64Field;
        f.from_rational(g) >= (n as f64).powf(t)
    }
}

#[derive(Serialize)]
struct TailTrialRecord {
    record: &'static str,
    n: usize,
    trial: u64,
    stream_id: u64,
    g_exact: f64,
    g_exact_decimal: String,
    decimal_digits: u32,
    tie_count: usize,
}

#[derive(Serialize)]
struct TailPointRecord {
    record: &'static str,
    n: usize,
    t: f64,
    trials: u64,
    successes: u64,
    hits: u64,
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
}

fn run_tail_estimate(
    cfg: &ExperimentConfig,
    paths: &OutputPaths,
) -> Result<(u64, u64), HarnessError> {
    let mut jsonl = JsonlWriter::create(
        &paths.jsonl,
        cfg,
        &paths.config_hash,
        scalar_field_names(cfg),
    )?;
    let mut csv = CsvWriter::create(
        &paths.csv,
        &[
            "config_hash",
            "n",
            "t",
            "trials",
            "successes",
            "hits",
            "estimate",
            "ci_lo",
            "ci_hi",
        ],
    )?;

    let mut total = 0u64;
    let mut total_failures = 0u64;
    for (i_n, &n) in cfg.n_values.iter().enumerate() {
        let results: Vec<Result<(TailTrialRecord, Rational), FailureRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let stream_id = (i_n as u64) * cfg.trials + trial;
                let stream = RngStream::new(cfg.master_seed, stream_id);
                let a = trial_matrix(&stream, n);
                match exact_growth_stats(&a) {
                    Ok(stats) => {
                        let f = F64Field;
                        let rec = TailTrialRecord {
                            record: "trial",
                            n,
                            trial,
                            stream_id,
                            g_exact: f.from_rational(&stats.growth_factor),
                            g_exact_decimal: decimal_string(
                                &stats.growth_factor,
                                DECIMAL_DIGITS,
                            ),
                            decimal_digits: DECIMAL_DIGITS,
                            tie_count: stats.tie_count,
                        };
                        Ok((rec, stats.growth_factor))
                    }
                    Err(e) => Err(failure_record(n, trial, stream_id, e.to_string())),
                }
            })
            .collect();

        let growths: Vec<&Rational> =
            results.iter().filter_map(|r| r.as_ref().ok().map(|(_, g)| g)).collect();
        let successes = growths.len() as u64;
        let failures = cfg.trials - successes;
        total += cfg.trials;
        total_failures += failures;

        for r in &results {
            match r {
                Ok((rec, _)) => jsonl.write(rec)?,
                Err(rec) => jsonl.write(rec)?,
            }
        }

        // Point estimates per exponent; nested events make the estimates
        // nonincreasing in t, which we assert on the actual counts.
        let mut points: Vec<(f64, u64)> = Vec::new();
        for &t in &cfg.t_grid {
            let hits = growths.iter().filter(|g| tail_hit(g, n, t)).count() as u64;
            points.push((t, hits));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0));
        for w in order.windows(2) {
            assert!(
                points[w[0]].1 >= points[w[1]].1,
                "threshold events are nested: larger t can only lose hits"
            );
        }

        for &(t, hits) in &points {
            let (estimate, ci_lo, ci_hi) = if successes > 0 {
                let (lo, hi) = clopper_pearson(hits, successes, CONFIDENCE);
                (hits as f64 / successes as f64, lo, hi)
            } else {
                (f64::NAN, 0.0, 1.0)
            };
            let rec = TailPointRecord {
                record: "tail_point",
                n,
                t,
                trials: cfg.trials,
                successes,
                hits,
                estimate,
                ci_lo,
                ci_hi,
            };
            jsonl.write(&rec)?;
            csv.write_row(&[
                paths.config_hash.clone(),
                n.to_string(),
                fmt_f64(t),
                cfg.trials.to_string(),
                successes.to_string(),
                hits.to_string(),
                fmt_f64(estimate),
                fmt_f64(ci_lo),
                fmt_f64(ci_hi),
            ])?;
        }
    }
    jsonl.finish()?;
    csv.finish()?;
    Ok((total, total_failures))
}

// ---------------------------------------------------------------------------
// polytope
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PolytopeTrialRecord {
    record: &'static str,
    n: usize,
    r: usize,
    trial: u64,
    stream_id: u64,
    hits: u64,
    samples: u64,
    estimate: f64,
    std_error: f64,
    /// Distance from the step-r pivot row (first r coordinates) to the
    /// span of the earlier pivot rows: the last normalized slab width.
    dist_pivot: f64,
    /// Smallest normalized slab width over all r steps.
    min_slab_width: f64,
    tie_count: usize,
    pivot_rows: Vec<usize>,
}

fn run_polytope(
    cfg: &ExperimentConfig,
    paths: &OutputPaths,
) -> Result<(u64, u64), HarnessError> {
    let mut jsonl = JsonlWriter::create(
        &paths.jsonl,
        cfg,
        &paths.config_hash,
        scalar_field_names(cfg),
    )?;
    let mut csv = CsvWriter::create(
        &paths.csv,
        &[
            "config_hash",
            "n",
            "r",
            "trials",
            "successes",
            "failures",
            "samples_per_trial",
            "measure_median",
            "sigma_upper_small_count",
            "sigma_upper_small_freq",
            "small_measure_bound",
            "dist_violation_count",
        ],
    )?;

    let mut total = 0u64;
    let mut total_failures = 0u64;
    let cells: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| cfg.r_values.iter().map(move |&r| (n, r)))
        .collect();
    for (i_cell, &(n, r)) in cells.iter().enumerate() {
        let results: Vec<Result<PolytopeTrialRecord, FailureRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let stream_id = (i_cell as u64) * cfg.trials + trial;
                let stream = RngStream::new(cfg.master_seed, stream_id);
                let a = trial_matrix(&stream, n);
                let poly = match pivot_recursion(&a, r) {
                    Ok(p) => p,
                    Err(e) => {
                        return Err(failure_record(n, trial, stream_id, e.to_string()))
                    }
                };
                let mc_stream = stream.substream(3);
                let est = gaussian_measure_mc(&poly, cfg.samples, &mc_stream);
                let widths = poly.normalized_thresholds();
                let dist_pivot = *widths.last().expect("r >= 1 slabs");
                let min_slab_width =
                    widths.iter().copied().fold(f64::INFINITY, f64::min);
                Ok(PolytopeTrialRecord {
                    record: "trial",
                    n,
                    r,
                    trial,
                    stream_id,
                    hits: est.hits,
                    samples: est.samples,
                    estimate: est.estimate,
                    std_error: est.std_error,
                    dist_pivot,
                    min_slab_width,
                    tie_count: poly.tie_count,
                    pivot_rows: poly.pivot_rows.clone(),
                })
            })
            .collect();

        let mut measures: Vec<f64> = Vec::new();
        let mut sigma_upper_small = 0u64;
        let mut dist_violations = 0u64;
        let mut failures = 0u64;
        let n2 = (n as f64).powi(-2);
        for res in &results {
            match res {
                Ok(rec) => {
                    measures.push(rec.estimate);
                    let sigma_upper = rec.estimate + 3.0 * rec.std_error;
                    if sigma_upper <= n2 {
                        sigma_upper_small += 1;
                    }
                    let sigma_lower = rec.estimate - 3.0 * rec.std_error;
                    if rec.dist_pivot
                        < (std::f64::consts::PI / 2.0).sqrt() * sigma_lower
                    {
                        dist_violations += 1;
                    }
                    jsonl.write(rec)?;
                }
                Err(rec) => {
                    failures += 1;
                    jsonl.write(rec)?;
                }
            }
        }
        let successes = cfg.trials - failures;
        total += cfg.trials;
        total_failures += failures;
        measures.sort_by(f64::total_cmp);
        csv.write_row(&[
            paths.config_hash.clone(),
            n.to_string(),
            r.to_string(),
            cfg.trials.to_string(),
            successes.to_string(),
            failures.to_string(),
            cfg.samples.to_string(),
            if measures.is_empty() {
                String::new()
            } else {
                fmt_f64(quantile(&measures, 0.5))
            },
            sigma_upper_small.to_string(),
            if successes > 0 {
                fmt_f64(sigma_upper_small as f64 / successes as f64)
            } else {
                String::new()
            },
            fmt_f64((n as f64).powi(-((n as i32) - (r as i32)))),
            dist_violations.to_string(),
        ])?;
    }
    jsonl.finish()?;
    csv.finish()?;
    Ok((total, total_failures))
}

// ---------------------------------------------------------------------------
// events
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EventCell {
    r: usize,
    /// Distance of the step-r pivot row, truncated to its first r
    /// coordinates, from the span of the earlier pivot rows (same
    /// truncation).
    dist: f64,
    dist_threshold: f64,
    dist_event: bool,
    /// Euclidean norm of the full step-r pivot row.
    row_norm: f64,
    norm_threshold: f64,
    norm_event: bool,
}

#[derive(Serialize)]
struct EventsTrialRecord {
    record: &'static str,
    n: usize,
    trial: u64,
    stream_id: u64,
    cells: Vec<EventCell>,
}

/// Distance threshold `sqrt(2/π)·n^(−4(1+β/(n−r)))`.
fn event_dist_threshold(n: usize, r: usize, beta: f64) -> f64 {
    let nf = n as f64;
    (2.0 / std::f64::consts::PI).sqrt() * nf.powf(-4.0 * (1.0 + beta / (nf - r as f64)))
}

/// Norm threshold `√n + 3√(β·ln n)`.
fn event_norm_threshold(n: usize, beta: f64) -> f64 {
    let nf = n as f64;
    nf.sqrt() + 3.0 * (beta * nf.ln()).sqrt()
}

fn run_event_frequencies(
    cfg: &ExperimentConfig,
    paths: &OutputPaths,
) -> Result<(u64, u64), HarnessError> {
    let mut jsonl = JsonlWriter::create(
        &paths.jsonl,
        cfg,
        &paths.config_hash,
        scalar_field_names(cfg),
    )?;
    let mut csv = CsvWriter::create(
        &paths.csv,
        &[
            "config_hash",
            "n",
            "r",
            "beta",
            "trials",
            "successes",
            "failures",
            "dist_hits",
            "dist_freq",
            "dist_ci_hi",
            "dist_threshold",
            "norm_hits",
            "norm_freq",
            "norm_ci_hi",
            "norm_threshold",
            "freq_bound",
            "norm_freq_bound",
        ],
    )?;

    let mut total = 0u64;
    let mut total_failures = 0u64;
    for (i_n, &n) in cfg.n_values.iter().enumerate() {
        let results: Vec<Result<EventsTrialRecord, FailureRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let stream_id = (i_n as u64) * cfg.trials + trial;
                let stream = RngStream::new(cfg.master_seed, stream_id);
                let a = trial_matrix(&stream, n);
                let stats = match exact_growth_stats(&a) {
                    Ok(s) => s,
                    Err(e) => {
                        return Err(failure_record(n, trial, stream_id, e.to_string()))
                    }
                };
                let f = F64Field;
                let cells = cfg
                    .r_values
                    .iter()
                    .map(|&r| {
                        let pivot = stats.pivot_rows[r - 1];
                        // Truncated coordinates: the first r columns.
                        let v: Vec<Rational> =
                            (0..r).map(|j| a.get(pivot, j).clone()).collect();
                        let dist = if r == 1 {
                            f.from_rational(&v[0]).abs()
                        } else {
                            let prev = DenseMatrix::from_fn(ExactField, r - 1, r, |i, j| {
                                a.get(stats.pivot_rows[i], j).clone()
                            });
                            dist_to_rowspan_f64(&v, &prev)
                        };
                        let norm_sq: Rational = (0..n)
                            .map(|j| {
                                let x = a.get(pivot, j);
                                x * x
                            })
                            .sum();
                        let row_norm = f.from_rational(&norm_sq).sqrt();
                        let dist_threshold = event_dist_threshold(n, r, cfg.beta);
                        let norm_threshold = event_norm_threshold(n, cfg.beta);
                        EventCell {
                            r,
                            dist,
                            dist_threshold,
                            dist_event: dist < dist_threshold,
                            row_norm,
                            norm_threshold,
                            norm_event: row_norm > norm_threshold,
                        }
                    })
                    .collect();
                Ok(EventsTrialRecord { record: "trial", n, trial, stream_id, cells })
            })
            .collect();

        let mut failures = 0u64;
        for res in &results {
            match res {
                Ok(rec) => jsonl.write(rec)?,
                Err(rec) => {
                    failures += 1;
                    jsonl.write(rec)?;
                }
            }
        }
        let successes = cfg.trials - failures;
        total += cfg.trials;
        total_failures += failures;

        for (i_r, &r) in cfg.r_values.iter().enumerate() {
            let mut dist_hits = 0u64;
            let mut norm_hits = 0u64;
            for res in results.iter().flatten() {
                if res.cells[i_r].dist_event {
                    dist_hits += 1;
                }
                if res.cells[i_r].norm_event {
                    norm_hits += 1;
                }
            }
            let freq_and_ci = |hits: u64| -> (f64, f64) {
                if successes == 0 {
                    return (f64::NAN, 1.0);
                }
                let (_, hi) = clopper_pearson(hits, successes, CONFIDENCE);
                (hits as f64 / successes as f64, hi)
            };
            let (dist_freq, dist_hi) = freq_and_ci(dist_hits);
            let (norm_freq, norm_hi) = freq_and_ci(norm_hits);
            csv.write_row(&[
                paths.config_hash.clone(),
                n.to_string(),
                r.to_string(),
                fmt_f64(cfg.beta),
                cfg.trials.to_string(),
                successes.to_string(),
                failures.to_string(),
                dist_hits.to_string(),
                fmt_f64(dist_freq),
                fmt_f64(dist_hi),
                fmt_f64(event_dist_threshold(n, r, cfg.beta)),
                norm_hits.to_string(),
                fmt_f64(norm_freq),
                fmt_f64(norm_hi),
                fmt_f64(event_norm_threshold(n, cfg.beta)),
                fmt_f64((n as f64).powf(-2.0 * cfg.beta)),
                fmt_f64(2.0 * (n as f64).powf(-4.5 * cfg.beta)),
            ])?;
        }
    }
    jsonl.finish()?;
    csv.finish()?;
    Ok((total, total_failures))
}

// ---------------------------------------------------------------------------
// compare_genp
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CompareOutcomeField {
    /// Relative backward error `‖H‖/‖fl(A)‖` when the factorization
    /// completed; the error text otherwise.
    backward_rel: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct CompareTrialRecord {
    record: &'static str,
    n: usize,
    precision_bits: u32,
    trial: u64,
    stream_id: u64,
    with_pivoting: CompareOutcomeField,
    without_pivoting: CompareOutcomeField,
    /// Same matrix with its (0,0) entry redrawn until the rounded value
    /// is at most 2^(−10) in magnitude, eliminated without pivoting.
    without_pivoting_conditioned: CompareOutcomeField,
    /// Gaussian draws consumed to satisfy the conditioning event.
    conditioning_redraws: u64,
}

fn compare_backward(
    a: &RationalMatrix,
    fpc: &FpConfig,
    variant: EliminationVariant,
) -> CompareOutcomeField {
    match backward_error_variant(a, fpc, variant) {
        Ok(rep) => CompareOutcomeField { backward_rel: Some(rep.h_norm_rel), error: None },
        Err(e) => CompareOutcomeField { backward_rel: None, error: Some(e.to_string()) },
    }
}

fn compare_gepp_genp(
    cfg: &ExperimentConfig,
    paths: &OutputPaths,
) -> Result<(u64, u64), HarnessError> {
    let mut jsonl = JsonlWriter::create(
        &paths.jsonl,
        cfg,
        &paths.config_hash,
        scalar_field_names(cfg),
    )?;
    let mut csv = CsvWriter::create(
        &paths.csv,
        &[
            "config_hash",
            "n",
            "precision_bits",
            "trials",
            "gepp_failures",
            "genp_failures",
            "genp_cond_failures",
            "gepp_q50",
            "gepp_q90",
            "gepp_q99",
            "genp_q50",
            "genp_q90",
            "genp_q99",
            "genp_cond_q50",
            "genp_cond_q90",
            "genp_cond_q99",
            "cond_inflation_q99",
        ],
    )?;

    let mut total = 0u64;
    let mut total_failures = 0u64;
    for (i_n, &n) in cfg.n_values.iter().enumerate() {
        let rows: Vec<Vec<CompareTrialRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let stream_id = (i_n as u64) * cfg.trials + trial;
                let stream = RngStream::new(cfg.master_seed, stream_id);
                let a = trial_matrix(&stream, n);
                cfg.precision_bits
                    .iter()
                    .map(|&p| {
                        let fpc = FpConfig::new(p).expect("validated precision");
                        let threshold =
                            round_to_precision(&pow2(CONDITIONED_PIVOT_EXP), &fpc);
                        // Redraw the leading entry until it rounds small.
                        let mut redraw = stream.substream(2);
                        let mut redraws = 0u64;
                        let conditioned = loop {
                            let g = redraw.next_gaussian();
                            redraws += 1;
                            let rounded = round_to_precision(
                                &F64Field.to_rational(&g),
                                &fpc,
                            );
                            if rounded.cmp_abs(&threshold) != std::cmp::Ordering::Greater
                            {
                                break g;
                            }
                        };
                        let mut a_cond = a.clone();
                        a_cond.set(0, 0, F64Field.to_rational(&conditioned));
                        CompareTrialRecord {
                            record: "trial",
                            n,
                            precision_bits: p,
                            trial,
                            stream_id,
                            with_pivoting: compare_backward(
                                &a,
                                &fpc,
                                EliminationVariant::PartialPivoting,
                            ),
                            without_pivoting: compare_backward(
                                &a,
                                &fpc,
                                EliminationVariant::NoPivoting,
                            ),
                            without_pivoting_conditioned: compare_backward(
                                &a_cond,
                                &fpc,
                                EliminationVariant::NoPivoting,
                            ),
                            conditioning_redraws: redraws,
                        }
                    })
                    .collect()
            })
            .collect();

        for (i_p, &p) in cfg.precision_bits.iter().enumerate() {
            let mut gepp: Vec<f64> = Vec::new();
            let mut genp: Vec<f64> = Vec::new();
            let mut genp_cond: Vec<f64> = Vec::new();
            let (mut f_gepp, mut f_genp, mut f_cond) = (0u64, 0u64, 0u64);
            for per_trial in &rows {
                let rec = &per_trial[i_p];
                match rec.with_pivoting.backward_rel {
                    Some(v) => gepp.push(v),
                    None => f_gepp += 1,
                }
                match rec.without_pivoting.backward_rel {
                    Some(v) => genp.push(v),
                    None => f_genp += 1,
                }
                match rec.without_pivoting_conditioned.backward_rel {
                    Some(v) => genp_cond.push(v),
                    None => f_cond += 1,
                }
            }
            total += cfg.trials;
            total_failures += f_gepp + f_genp + f_cond;
            gepp.sort_by(f64::total_cmp);
            genp.sort_by(f64::total_cmp);
            genp_cond.sort_by(f64::total_cmp);
            let q = |v: &[f64], level: f64| {
                if v.is_empty() { String::new() } else { fmt_f64(quantile(v, level)) }
            };
            let inflation = if genp.is_empty() || genp_cond.is_empty() {
                String::new()
            } else {
                fmt_f64(quantile(&genp_cond, 0.99) / quantile(&genp, 0.99))
            };
            csv.write_row(&[
                paths.config_hash.clone(),
                n.to_string(),
                p.to_string(),
                cfg.trials.to_string(),
                f_gepp.to_string(),
                f_genp.to_string(),
                f_cond.to_string(),
                q(&gepp, 0.5),
                q(&gepp, 0.9),
                q(&gepp, 0.99),
                q(&genp, 0.5),
                q(&genp, 0.9),
                q(&genp, 0.99),
                q(&genp_cond, 0.5),
                q(&genp_cond, 0.9),
                q(&genp_cond, 0.99),
                inflation,
            ])?;
        }

        for per_trial in &rows {
            for rec in per_trial {
                jsonl.write(rec)?;
            }
        }
    }
    jsonl.finish()?;
    csv.finish()?;
    Ok((total, total_failures))
}

// ---------------------------------------------------------------------------
// probe_2x2
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ProbeRecord {
    record: &'static str,
    precision_bits: u32,
    probe: pivotlab_core::stability::Genp2x2Probe,
}

#[derive(Serialize)]
struct ProbeRatioRecord {
    record: &'static str,
    precision_bits: u32,
    eps: f64,
    half_eps: f64,
    /// `freq_small_pivot(eps) / freq_small_pivot(eps/2)`; the leading-entry
    /// density at 0 makes this ≈ 2 for small eps.
    small_pivot_ratio: f64,
}

fn run_probe_2x2(
    cfg: &ExperimentConfig,
    paths: &OutputPaths,
) -> Result<(u64, u64), HarnessError> {
    let mut jsonl = JsonlWriter::create(
        &paths.jsonl,
        cfg,
        &paths.config_hash,
        scalar_field_names(cfg),
    )?;
    let mut csv = CsvWriter::create(
        &paths.csv,
        &[
            "config_hash",
            "precision_bits",
            "eps",
            "trials",
            "small_pivot_events",
            "freq_small_pivot",
            "large_backward_events",
            "freq_large_backward_error",
            "ratio_vs_half_eps",
        ],
    )?;

    let mut total = 0u64;
    for &p in &cfg.precision_bits {
        let fpc = FpConfig::new(p).expect("validated precision");
        // Both levels consume the same stream: trial k sees the same 2×2
        // matrix at eps and eps/2, so the frequency ratio is a coupled
        // comparison.
        let stream = RngStream::new(cfg.master_seed, 0);
        let run = |eps: f64| {
            genp_2x2_instability_probe(eps, cfg.trials, &fpc, &stream).map_err(|e| {
                HarnessError::Config(format!("probe at eps={eps}, p={p}: {e}"))
            })
        };
        let full = run(cfg.eps)?;
        let half = run(cfg.eps / 2.0)?;
        total += 2 * cfg.trials;
        let ratio = full.freq_small_pivot / half.freq_small_pivot;
        for (probe, ratio_cell) in [(&full, fmt_f64(ratio)), (&half, String::new())] {
            jsonl.write(&ProbeRecord {
                record: "probe",
                precision_bits: p,
                probe: probe.clone(),
            })?;
            csv.write_row(&[
                paths.config_hash.clone(),
                p.to_string(),
                fmt_f64(probe.eps),
                cfg.trials.to_string(),
                probe.small_pivot_events.to_string(),
                fmt_f64(probe.freq_small_pivot),
                probe.large_backward_events.to_string(),
                fmt_f64(probe.freq_large_backward_error),
                ratio_cell,
            ])?;
        }
        jsonl.write(&ProbeRatioRecord {
            record: "probe_ratio",
            precision_bits: p,
            eps: cfg.eps,
            half_eps: cfg.eps / 2.0,
            small_pivot_ratio: ratio,
        })?;
    }
    jsonl.finish()?;
    csv.finish()?;
    Ok((total, 0))
}
