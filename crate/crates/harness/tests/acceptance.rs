//! Acceptance suite: one test per release criterion. Each test prints a
//! single `[PASS]`/`[FAIL]` line (visible under `--nocapture`) and fails
//! hard when its gate is not met. Tolerances and seeds are pinned in the
//! constants below; the long-running statistical gates (16, 17) rerun the
//! full pinned experiments and take tens of minutes on one core.

use std::path::{Path, PathBuf};
use std::time::Instant;

use pivotlab_core::elim::{
    gepp_factor, growth_factor_of_trace, schur_complement_rows, unpermuted_intermediate,
    verify_recursion_identity, worst_case_growth_matrix, EliminationTrace, FactorOptions,
};
use pivotlab_core::field::{ExactField, F64Field, Field, FpField};
use pivotlab_core::matrix::{DenseMatrix, IndexSet, RationalMatrix};
use pivotlab_core::polytope::{consistency_check_pivots, gaussian_measure_mc, pivot_recursion};
use pivotlab_core::rng::{sample_gaussian_matrix, sample_gaussian_vector, RngStream};
use pivotlab_core::scalar::{pow2, rat_i64, round_to_precision, FpConfig, Rational};
use pivotlab_core::spectral::{
    restricted_invertibility_witness, singular_values, smin_dist_sandwich_check,
};
use pivotlab_core::stability::{genp_2x2_instability_probe, pivot_agreement};
use pivotlab_core::stats::gaussian_slab_probability;
use pivotlab_harness::config::{ExperimentConfig, ExperimentKind};
use pivotlab_harness::experiments::run_experiment;
use pivotlab_harness::io::quantile;

/// Median exact growth factor at n = 100 over the pinned 2000-trial run
/// (tail experiment, master seed 2026, t_grid = [1.0]); frozen from the
/// pilot of that exact configuration. Criterion 16 requires the rerun
/// median to stay within ±20% of this value.
const PILOT_MEDIAN_G_N100: f64 = 5.344963202638548;

fn verdict(n: u32, ok: bool, detail: &str) {
    let tag = if ok { "[PASS]" } else { "[FAIL]" };
    println!("{tag} criterion {n:02}: {detail}");
    assert!(ok, "criterion {n:02} failed: {detail}");
}

/// Gaussian matrix for trial `id` of an acceptance stream family.
fn gaussian_exact(seed: u64, id: u64, rows: usize, cols: usize) -> RationalMatrix {
    let mut s = RngStream::new(seed, id).substream(0);
    sample_gaussian_matrix(&ExactField, rows, cols, &mut s)
}

fn read_jsonl(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .lines()
        .map(|l| serde_json::from_str(l).expect("valid JSON line"))
        .collect()
}

/// Column of a comma-separated aggregate file, by header name.
fn csv_col(path: &Path, name: &str) -> Vec<String> {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header row").split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == name)
        .unwrap_or_else(|| panic!("column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

fn only_jsonl(dir: &Path) -> PathBuf {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).expect("read dir") {
        let p = entry.expect("dir entry").path();
        if p.extension().is_some_and(|e| e == "jsonl") {
            found.push(p);
        }
    }
    assert_eq!(found.len(), 1, "expected exactly one .jsonl in {}", dir.display());
    found.pop().unwrap()
}

/// Every multiplier and strict-lower L entry of a partial-pivoting trace
/// has magnitude at most one (checked in the trace's own field).
fn multipliers_bounded<F: Field>(f: &F, trace: &EliminationTrace<F>) -> (bool, u64) {
    let one = f.one();
    let mut checked = 0u64;
    for col in &trace.multipliers {
        for m in col {
            checked += 1;
            if f.cmp(&f.abs(m), &one) == std::cmp::Ordering::Greater {
                return (false, checked);
            }
        }
    }
    for i in 0..trace.n {
        for j in 0..i {
            checked += 1;
            if f.cmp(&f.abs(trace.l.get(i, j)), &one) == std::cmp::Ordering::Greater {
                return (false, checked);
            }
        }
    }
    (true, checked)
}

#[test]
fn criterion_01_exact_plu_zero_residual() {
    let start = Instant::now();
    let zero = rat_i64(0);
    let mut done = 0u32;
    let mut skipped = 0u32;
    let mut id = 0u64;
    while done < 200 {
        let mut s = RngStream::new(101, id).substream(0);
        id += 1;
        let a = DenseMatrix::from_fn(ExactField, 8, 8, |_, _| {
            rat_i64((s.next_u64() % 19) as i64 - 9)
        });
        let trace = match gepp_factor(&a, FactorOptions::default()) {
            Ok(t) => t,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let pa = a.permute_rows(&trace.perm);
        let lu = trace.l.matmul(&trace.u).expect("square factors");
        for i in 0..8 {
            for j in 0..8 {
                let diff = pa.get(i, j) - lu.get(i, j);
                assert_eq!(diff, zero, "nonzero residual at ({i},{j}) on draw {id}");
            }
        }
        done += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        secs < 10.0,
        &format!("PA = LU exactly on 200 integer 8x8 draws ({skipped} singular skipped) in {secs:.2} s < 10 s"),
    );
}

#[test]
fn criterion_02_worst_case_growth_is_two_to_n_minus_1() {
    let f = ExactField;
    let mut detail = Vec::new();
    for n in [4usize, 8, 10] {
        let w = worst_case_growth_matrix(&f, n);
        let trace = gepp_factor(&w, FactorOptions::default()).expect("nonsingular");
        let g = growth_factor_of_trace(&f, &trace);
        let expected = pow2(n as i64 - 1);
        assert_eq!(g, expected, "growth at n={n}");
        detail.push(format!("n={n}: g=2^{}", n - 1));
    }
    verdict(2, true, &format!("extreme-growth matrices hit the bound exactly ({})", detail.join(", ")));
}

#[test]
fn criterion_03_schur_rows_match_unpermuted_intermediates() {
    let f = ExactField;
    let zero = rat_i64(0);
    let mut entries = 0u64;
    for id in 0..100u64 {
        let a = gaussian_exact(103, id, 6, 6);
        let trace = gepp_factor(&a, FactorOptions::recording()).expect("nonsingular a.s.");
        for k in 1..6usize {
            let mk = unpermuted_intermediate(&f, &trace, k).expect("recorded");
            let pivots = trace.pivot_index_set(k);
            let others = IndexSet::from_iter((0..6).filter(|i| !pivots.contains(*i)))
                .expect("distinct");
            let schur = schur_complement_rows(&a, &pivots, &others).expect("invertible block");
            for (pos, orig) in others.iter().enumerate() {
                for j in 0..6usize {
                    entries += 1;
                    if j < k {
                        assert_eq!(mk.get(orig, j), &zero, "eliminated entry ({orig},{j}) at k={k}");
                    } else {
                        assert_eq!(
                            mk.get(orig, j),
                            schur.get(pos, j - k),
                            "row {orig}, col {j}, step {k}, draw {id}"
                        );
                    }
                }
            }
        }
    }
    verdict(3, true, &format!("Schur-form rows equal intermediate rows exactly ({entries} entries over 100 6x6 draws)"));
}

#[test]
fn criterion_04_block_recursion_identity_is_exactly_zero() {
    let zero = rat_i64(0);
    let mut splits_checked = 0u64;
    for id in 0..100u64 {
        let m = 4 + (id % 5) as usize; // sizes 4..=8
        let b = gaussian_exact(104, id, m, m);
        let mut s = RngStream::new(104, id).substream(1);
        let x = sample_gaussian_vector(&ExactField, m, &mut s);
        for split in 1..m {
            let residual = verify_recursion_identity(&b, &x, split).expect("generic blocks invertible");
            assert_eq!(residual, zero, "size {m}, split {split}, draw {id}");
            splits_checked += 1;
        }
    }
    verdict(4, true, &format!("augmented-row recursion identity exact on {splits_checked} (instance, split) pairs"));
}

#[test]
fn criterion_05_partial_pivoting_multipliers_never_exceed_one() {
    let f = ExactField;
    let mut checked = 0u64;
    // Gaussian ensemble, sizes 3..=12.
    for id in 0..60u64 {
        let n = 3 + (id % 10) as usize;
        let a = gaussian_exact(105, id, n, n);
        let trace = gepp_factor(&a, FactorOptions::default()).expect("nonsingular a.s.");
        let (ok, c) = multipliers_bounded(&f, &trace);
        assert!(ok, "exact multiplier above one on Gaussian draw {id}");
        checked += c;
    }
    // Small-integer ensemble (ties and exact cancellations).
    let mut done = 0u32;
    let mut id = 1000u64;
    while done < 50 {
        let mut s = RngStream::new(105, id).substream(0);
        id += 1;
        let a = DenseMatrix::from_fn(ExactField, 8, 8, |_, _| {
            rat_i64((s.next_u64() % 19) as i64 - 9)
        });
        let Ok(trace) = gepp_factor(&a, FactorOptions::default()) else { continue };
        let (ok, c) = multipliers_bounded(&f, &trace);
        assert!(ok, "exact multiplier above one on integer draw {id}");
        checked += c;
        done += 1;
    }
    // Extreme-growth matrices (multipliers exactly ±1).
    for n in [4usize, 8, 10] {
        let trace = gepp_factor(&worst_case_growth_matrix(&f, n), FactorOptions::default()).unwrap();
        let (ok, c) = multipliers_bounded(&f, &trace);
        assert!(ok, "worst-case multiplier above one at n={n}");
        checked += c;
    }
    // Rounded arithmetic: quotients of magnitude <= 1 round to magnitude <= 1.
    let fp = FpField::with_precision(24).expect("valid precision");
    for id in 0..20u64 {
        let a = gaussian_exact(105, 2000 + id, 7, 7).convert(&fp);
        let trace = gepp_factor(&a, FactorOptions::default()).expect("nonsingular a.s.");
        let (ok, c) = multipliers_bounded(&fp, &trace);
        assert!(ok, "rounded multiplier above one on draw {id}");
        checked += c;
    }
    verdict(5, true, &format!("|L| <= 1 on every partial-pivoting factorization sampled ({checked} entries)"));
}

#[test]
fn criterion_06_per_step_maxima_at_most_double() {
    let f = ExactField;
    let two = rat_i64(2);
    let mut steps = 0u64;
    for id in 0..100u64 {
        let n = 5 + (id % 6) as usize; // sizes 5..=10
        let a = gaussian_exact(106, id, n, n);
        let trace = gepp_factor(&a, FactorOptions::default()).expect("nonsingular a.s.");
        for w in trace.step_max.windows(2) {
            assert!(
                w[1] <= &two * &w[0],
                "per-step maximum more than doubled on draw {id}"
            );
            steps += 1;
        }
        let g = growth_factor_of_trace(&f, &trace);
        assert!(g <= pow2(n as i64 - 1), "growth above 2^(n-1) on draw {id}");
    }
    verdict(6, true, &format!("max|M^(r)| <= 2 max|M^(r-1)| on all {steps} recorded steps; growth <= 2^(n-1)"));
}

#[test]
fn criterion_07_rounding_relative_error_within_unit_roundoff() {
    let precisions = [2u32, 8, 24, 53];
    let cfgs: Vec<FpConfig> =
        precisions.iter().map(|&p| FpConfig::new(p).expect("valid precision")).collect();
    let units: Vec<Rational> = precisions.iter().map(|&p| pow2(-(p as i64))).collect();
    let mut s = RngStream::new(107, 0).substream(0);
    let total = 1_000_000u64;
    for _ in 0..total {
        let num = s.next_u64() as i64;
        let den = (s.next_u64() | 1) as i64;
        let x = Rational::new(num.into(), den.into());
        let x_abs = if x < rat_i64(0) { -x.clone() } else { x.clone() };
        for (cfg, u) in cfgs.iter().zip(&units) {
            let fl = round_to_precision(&x, cfg).to_rational();
            let err = {
                let d = &x - &fl;
                if d < rat_i64(0) { -d } else { d }
            };
            assert!(
                err <= u * &x_abs,
                "rounding error above 2^-{} for {num}/{den}",
                cfg.precision_bits
            );
        }
    }
    verdict(7, true, &format!("|x - fl(x)| <= 2^-p |x| on {total} rationals x precisions {precisions:?}"));
}

#[test]
fn criterion_08_recursion_and_elimination_pick_the_same_pivots() {
    let mut agree = 0u32;
    let mut ties = 0usize;
    for id in 0..500u64 {
        let a = gaussian_exact(108, id, 10, 10);
        let c = consistency_check_pivots(&a, 10).expect("generic position");
        assert!(
            c.agree,
            "pivot sequences diverge on draw {id}: {:?} vs {:?}",
            c.recursion_pivots, c.elimination_pivots
        );
        agree += 1;
        ties += c.tie_count;
    }
    verdict(8, agree == 500, &format!("normal-vector recursion matches elimination pivots on {agree}/500 10x10 draws ({ties} ties)"));
}

#[test]
fn criterion_09_single_slab_measure_matches_closed_form() {
    let mut worst_z = 0.0f64;
    for id in 0..100u64 {
        let stream = RngStream::new(109, id);
        let mut s = stream.substream(0);
        let a = sample_gaussian_matrix(&ExactField, 8, 8, &mut s);
        let poly = pivot_recursion(&a, 1).expect("nonzero first column a.s.");
        let width = poly.normalized_thresholds()[0];
        let exact = gaussian_slab_probability(width);
        let est = gaussian_measure_mc(&poly, 10_000, &stream.substream(3));
        assert!(est.std_error > 0.0, "degenerate standard error on draw {id}");
        let z = (est.estimate - exact).abs() / est.std_error;
        if z > worst_z {
            worst_z = z;
        }
        assert!(
            z <= 3.0,
            "draw {id}: estimate {} vs exact {exact} is {z:.2} standard errors off",
            est.estimate
        );
    }
    verdict(9, true, &format!("width-w slab measure within 3 SE of 2*Phi(w)-1 on 100/100 draws (worst {worst_z:.2} SE)"));
}

#[test]
fn criterion_10_small_measure_events_are_rare() {
    let n = 12usize;
    let small = (n as f64).powi(-2);
    let mut details = Vec::new();
    let mut all_ok = true;
    for (cell, r) in [4usize, 8].into_iter().enumerate() {
        let trials = 1000u64;
        let mut hits = 0u64;
        for trial in 0..trials {
            let stream = RngStream::new(110, cell as u64 * trials + trial);
            let mut s = stream.substream(0);
            let a = sample_gaussian_matrix(&ExactField, n, n, &mut s);
            let poly = pivot_recursion(&a, r).expect("general position");
            let est = gaussian_measure_mc(&poly, 10_000, &stream.substream(3));
            if est.estimate + 3.0 * est.std_error <= small {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        let bound = (n as f64).powi(-((n - r) as i32));
        all_ok &= freq <= bound;
        details.push(format!("r={r}: freq {freq:.1e} <= {bound:.1e}"));
    }
    verdict(10, all_ok, &format!("freq of upper-estimate <= n^-2 stays below n^-(n-r) ({})", details.join("; ")));
}

#[test]
fn criterion_11_pivot_row_distance_dominates_measure() {
    let n = 12usize;
    let factor = (std::f64::consts::PI / 2.0).sqrt();
    let mut checked = 0u32;
    let mut worst_margin = f64::INFINITY;
    for (cell, r) in [2usize, 5, 8].into_iter().enumerate() {
        for trial in 0..100u64 {
            let stream = RngStream::new(111, cell as u64 * 100 + trial);
            let mut s = stream.substream(0);
            let a = sample_gaussian_matrix(&ExactField, n, n, &mut s);
            let poly = pivot_recursion(&a, r).expect("general position");
            let dist = *poly.normalized_thresholds().last().expect("r >= 1 slabs");
            let est = gaussian_measure_mc(&poly, 10_000, &stream.substream(3));
            let lower = factor * (est.estimate - 3.0 * est.std_error);
            let margin = dist - lower;
            if margin < worst_margin {
                worst_margin = margin;
            }
            assert!(
                dist >= lower,
                "r={r}, trial {trial}: distance {dist} below sqrt(pi/2)*(estimate - 3 SE) = {lower}"
            );
            checked += 1;
        }
    }
    verdict(11, checked == 300, &format!("pivot-row distance >= sqrt(pi/2) * MC lower bound on 300/300 draws (worst margin {worst_margin:.4})"));
}

#[test]
fn criterion_12_smin_distance_sandwich() {
    let mut checked = 0u32;
    for id in 0..500u64 {
        let q = gaussian_exact(112, id, 8, 12);
        let rep = smin_dist_sandwich_check(&q, 1e-9).expect("Jacobi converges");
        assert!(
            rep.ok(),
            "draw {id}: smin {} vs min row distance {} violates the sandwich",
            rep.smin, rep.min_row_distance
        );
        checked += 1;
    }
    verdict(12, checked == 500, "s_min <= min row-to-rowspan distance <= sqrt(m) * s_min on 500/500 8x12 draws");
}

#[test]
fn criterion_13_intermediate_singular_value_tail() {
    let (u, i) = (30usize, 5usize);
    let c_prime = 0.01f64;
    let trials = 2000u64;
    // Collect s_{u-i} once; test both thresholds on the same draws.
    let mut s_ui = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut s = RngStream::new(113, trial).substream(0);
        let m = sample_gaussian_matrix(&F64Field, u, u, &mut s);
        let sigma = singular_values(&m).expect("Jacobi converges");
        s_ui.push(sigma[u - i - 1]); // s_{u-i}, descending 1-indexed
    }
    let mut details = Vec::new();
    let mut all_ok = true;
    for s_param in [0.5f64, 0.25] {
        let threshold = c_prime * i as f64 * s_param / (u as f64).sqrt();
        let hits = s_ui.iter().filter(|&&v| v <= threshold).count();
        let freq = hits as f64 / trials as f64;
        let bound = (u as f64).powf(i as f64 / 2.0) * s_param.powf((i * i) as f64 / 32.0);
        all_ok &= freq <= bound;
        details.push(format!("s={s_param}: freq {freq:.1e} <= bound {bound:.1e}"));
    }
    verdict(13, all_ok, &format!("s_25 tail of 30x30 draws under its stated bound ({}; bound is >= 1 at these parameters)", details.join("; ")));
}

#[test]
fn criterion_14_column_subset_witness_always_found() {
    let eps = 0.6f64;
    let mut found = 0u32;
    let mut attempts = 0u64;
    let mut id = 0u64;
    while found < 200 {
        assert!(attempts < 10_000_000, "domain sampling stalled");
        attempts += 1;
        let mut s = RngStream::new(114, id).substream(0);
        id += 1;
        let mf = sample_gaussian_matrix(&F64Field, 4, 6, &mut s);
        // Same target computation as the witness search; only matrices in
        // the op's stated domain (target >= 1) exercise the guarantee.
        let sigma = singular_values(&mf).expect("Jacobi converges");
        let hs = mf.hs_norm();
        let target = (eps * eps * (hs / sigma[0]).powi(2) + 1e-12).floor() as usize;
        if target == 0 {
            continue;
        }
        let w = restricted_invertibility_witness(&mf.to_exact(), eps)
            .unwrap_or_else(|e| panic!("witness missing on in-domain draw {id}: {e}"));
        assert!(w.columns.len() >= target && w.smin >= w.bound, "witness bound violated on draw {id}");
        found += 1;
    }
    verdict(14, found == 200, &format!("column-subset witness found on 200/200 in-domain 4x6 draws ({attempts} draws screened)"));
}

#[test]
fn criterion_15_rounded_and_exact_pivot_sequences_agree() {
    let start = Instant::now();
    let cfg = FpConfig::new(53).expect("valid precision");
    let trials = 500u64;
    let agree: u64 = (0..trials)
        .map(|t| {
            let a = gaussian_exact(115, t, 50, 50);
            u64::from(pivot_agreement(&a, &cfg).agree)
        })
        .sum();
    let secs = start.elapsed().as_secs_f64();
    let rate = agree as f64 / trials as f64;
    verdict(
        15,
        rate >= 0.99 && secs < 300.0,
        &format!("53-bit vs exact pivot agreement {agree}/{trials} ({rate:.3} >= 0.99) in {secs:.0} s < 300 s"),
    );
}

#[test]
fn criterion_16_growth_tail_at_n_100() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut cfg = ExperimentConfig::new(ExperimentKind::Tail);
    cfg.n_values = vec![100];
    cfg.trials = 2000;
    cfg.master_seed = 2026;
    cfg.t_grid = vec![1.0];
    cfg.output_dir = tmp.path().to_path_buf();
    let outcome = run_experiment(&cfg).expect("tail run");
    assert_eq!(outcome.failures, 0, "no elimination failures expected");

    let ci_hi: f64 = csv_col(&outcome.paths.csv, "ci_hi")[0].parse().unwrap();
    let mut g: Vec<f64> = read_jsonl(&outcome.paths.jsonl)
        .iter()
        .filter(|v| v["record"] == "trial")
        .map(|v| v["g_exact"].as_f64().unwrap())
        .collect();
    assert_eq!(g.len(), 2000);
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = quantile(&g, 0.5);
    let (lo, hi) = (0.8 * PILOT_MEDIAN_G_N100, 1.2 * PILOT_MEDIAN_G_N100);
    verdict(
        16,
        ci_hi < 0.01 && median >= lo && median <= hi,
        &format!("P{{g >= 100}} upper CI {ci_hi:.4} < 0.01; median growth {median:.5} within pinned {PILOT_MEDIAN_G_N100} +/- 20%"),
    );
}

#[test]
fn criterion_17_pivoting_beats_no_pivoting_and_conditioning_inflates() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut cfg = ExperimentConfig::new(ExperimentKind::CompareGenp);
    cfg.n_values = vec![50];
    cfg.precision_bits = vec![24];
    cfg.trials = 1000;
    cfg.master_seed = 117;
    cfg.output_dir = tmp.path().to_path_buf();
    let outcome = run_experiment(&cfg).expect("compare run");

    let gepp_q99: f64 = csv_col(&outcome.paths.csv, "gepp_q99")[0].parse().unwrap();
    let genp_q99: f64 = csv_col(&outcome.paths.csv, "genp_q99")[0].parse().unwrap();
    let cond_q99: f64 = csv_col(&outcome.paths.csv, "genp_cond_q99")[0].parse().unwrap();
    let inflation = cond_q99 / genp_q99;
    verdict(
        17,
        gepp_q99 <= genp_q99 && inflation >= 10.0,
        &format!("99% backward-error quantiles at n=50, p=24: pivoting {gepp_q99:.3e} <= none {genp_q99:.3e}; small-first-pivot ensemble inflates {inflation:.1}x >= 10x"),
    );
}

#[test]
fn criterion_18_small_pivot_frequency_scales_linearly() {
    let cfg = FpConfig::new(53).expect("valid precision");
    let stream = RngStream::new(118, 0);
    let eps = 0.25f64;
    let full = genp_2x2_instability_probe(eps, 100_000, &cfg, &stream).expect("probe");
    let half = genp_2x2_instability_probe(eps / 2.0, 100_000, &cfg, &stream).expect("probe");
    let ratio = full.freq_small_pivot / half.freq_small_pivot;
    verdict(
        18,
        (1.6..=2.4).contains(&ratio),
        &format!("freq_small_pivot({eps}) / freq_small_pivot({}) = {ratio:.3} in [1.6, 2.4] over 100000 coupled trials", eps / 2.0),
    );
}

#[test]
fn criterion_19_reruns_byte_identical_across_thread_counts() {
    let bin = env!("CARGO_BIN_EXE_pivotlab");
    let root = tempfile::tempdir().expect("tempdir");
    let run = |threads: &str, sub: &str, args: &[&str], dir: &str| -> Vec<u8> {
        let out_dir = root.path().join(dir);
        let status = std::process::Command::new(bin)
            .arg(sub)
            .args(args)
            .args(["--out", out_dir.to_str().unwrap()])
            .env("PIVOTLAB_THREADS", threads)
            .output()
            .expect("spawn harness binary");
        assert!(status.status.success(), "run failed: {}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(only_jsonl(&out_dir)).expect("read jsonl")
    };
    let polytope_args = ["--n", "8", "--r", "3", "--trials", "6", "--samples", "8192", "--seed", "0"];
    let sweep_args = ["--n", "6", "--trials", "8", "--precision", "24", "--seed", "1"];

    let p1 = run("1", "polytope", &polytope_args, "p1");
    let p8 = run("8", "polytope", &polytope_args, "p8");
    let p8_again = run("8", "polytope", &polytope_args, "p8b");
    let s1 = run("1", "sweep", &sweep_args, "s1");
    let s8 = run("8", "sweep", &sweep_args, "s8");
    let ok = p1 == p8 && p8 == p8_again && s1 == s8;
    verdict(
        19,
        ok,
        &format!("JSONL byte-identical at 1 vs 8 threads and across reruns (polytope {} bytes, sweep {} bytes)", p1.len(), s1.len()),
    );
}
