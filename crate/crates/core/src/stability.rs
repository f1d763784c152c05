//! Floating-point stability metrics: growth factors in emulated precision
//! and in exact arithmetic, exact-residual backward error, forward error
//! against the exact solution, condition numbers, pivot agreement between
//! the floating and exact runs, and the 2×2 no-pivoting instability probe.
//!
//! Conventions:
//! * the floating run always works on `fl(A)` — the input rounded once to
//!   the configured precision — and all comparisons against exact
//!   arithmetic use that same rounded matrix where the contract says so;
//! * residuals are computed exactly: emulated values lift to rationals
//!   losslessly, so `P̂·fl(A) − L̂·Û` carries no arithmetic noise at all;
//! * reported scalars are `f64` images of exact values (single rounding).

use crate::elim::{
    genp_factor, gepp_factor, growth_factor_of_trace, solve_with_trace, ElimError,
    EliminationTrace, EliminationVariant, FactorOptions,
};
use crate::field::{ExactField, F64Field, Field, FpField, SqrtField};
use crate::growth::exact_growth_stats;
use crate::matrix::{DenseMatrix, RationalMatrix};
use crate::rng::RngStream;
use crate::scalar::{fp_div, fp_mul, fp_sub, pow2, EmulatedFloat, FpConfig, Rational};
use crate::spectral::{singular_values_2x2_f64, singular_values_of_rational, SpectralError};
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

/// Probe trials per parallel block (each block owns a substream).
const PROBE_BLOCK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("floating elimination failed at step {step}: pivot column all zeros")]
    FpEliminationFailed { step: usize },
    #[error("input matrix is singular")]
    SingularInput,
    #[error("epsilon {eps} outside (unit roundoff, 1)")]
    EpsOutOfRange { eps: f64 },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Elim(#[from] ElimError),
}

fn fp_fail(e: ElimError) -> StabilityError {
    match e {
        ElimError::ZeroColumn { step } | ElimError::ZeroPivot { step } => {
            StabilityError::FpEliminationFailed { step }
        }
        other => StabilityError::Elim(other),
    }
}

/// Round every entry of an exact matrix once to the given precision.
pub fn round_matrix(a: &RationalMatrix, cfg: &FpConfig) -> DenseMatrix<FpField> {
    let f = FpField::new(cfg.clone());
    a.convert(&f)
}

/// Growth factor of partial-pivoting elimination run entirely in emulated
/// precision on `fl(A)`: the max over all computed intermediates (input
/// included) of the largest magnitude, divided by `max|fl(A)|`. The ratio
/// of the computed values is exact.
pub fn growth_factor_fp(a: &RationalMatrix, cfg: &FpConfig) -> Result<Rational, StabilityError> {
    let f = FpField::new(cfg.clone());
    let a_fl = a.convert(&f);
    let trace = gepp_factor(&a_fl, FactorOptions::default()).map_err(fp_fail)?;
    let g = growth_factor_of_trace(&f, &trace);
    debug_assert!(g >= Rational::one(), "input is included in the max, so g >= 1");
    Ok(g)
}

/// Growth factor of exact-rational partial pivoting (delegates to the
/// fraction-free engine). Errors with `SingularInput` when elimination
/// cannot complete or the final diagonal entry is zero.
pub fn growth_factor_exact(a: &RationalMatrix) -> Result<Rational, StabilityError> {
    let stats = exact_growth_stats(a).map_err(|e| match e {
        ElimError::ZeroColumn { .. } => StabilityError::SingularInput,
        other => StabilityError::Elim(other),
    })?;
    if stats.u_last_diag_zero {
        return Err(StabilityError::SingularInput);
    }
    Ok(stats.growth_factor)
}

/// Exact-residual backward error of the floating factorization.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BackwardErrorReport {
    pub n: usize,
    pub precision_bits: u32,
    /// `‖P̂·fl(A) − L̂Û‖_HS` (an upper bound on the spectral norm), as the
    /// correctly rounded f64 of the exact value.
    pub h_norm: f64,
    /// Same, divided by `‖fl(A)‖_HS`.
    pub h_norm_rel: f64,
    /// The solve-residual identity applies: the factorization completed
    /// and `Û` has no zero diagonal entry.
    pub e_is_applicable: bool,
}

fn f64_of_sqrt(x: &Rational) -> f64 {
    let carrier = FpField::with_precision(106).expect("valid precision");
    carrier.sqrt(&carrier.from_rational(x)).to_f64()
}

fn hs_norm_sq_exact(m: &RationalMatrix) -> Rational {
    m.hs_norm_sq()
}

/// Factor `fl(A)` with partial pivoting in precision `p`, lift the computed
/// `L̂`, `Û` back to exact rationals, and measure `P̂·fl(A) − L̂Û` exactly.
pub fn backward_error(
    a: &RationalMatrix,
    cfg: &FpConfig,
) -> Result<BackwardErrorReport, StabilityError> {
    backward_error_variant(a, cfg, EliminationVariant::PartialPivoting)
}

/// Same exact-residual backward error, with the pivoting strategy chosen by
/// the caller (no-pivoting runs use `P̂ = I`).
pub fn backward_error_variant(
    a: &RationalMatrix,
    cfg: &FpConfig,
    variant: EliminationVariant,
) -> Result<BackwardErrorReport, StabilityError> {
    let f = FpField::new(cfg.clone());
    let a_fl = a.convert(&f);
    let trace = match variant {
        EliminationVariant::PartialPivoting => {
            gepp_factor(&a_fl, FactorOptions::default()).map_err(fp_fail)?
        }
        EliminationVariant::NoPivoting => {
            genp_factor(&a_fl, FactorOptions::default()).map_err(fp_fail)?
        }
    };
    backward_error_of_trace(&a_fl, &trace, cfg)
}

fn backward_error_of_trace(
    a_fl: &DenseMatrix<FpField>,
    trace: &EliminationTrace<FpField>,
    cfg: &FpConfig,
) -> Result<BackwardErrorReport, StabilityError> {
    let pa = a_fl.permute_rows(&trace.perm).to_exact();
    let lu = trace.l.to_exact().matmul(&trace.u.to_exact()).expect("conformable");
    let h = pa.sub_matrix(&lu).expect("same shape");
    let h_sq = hs_norm_sq_exact(&h);
    let a_sq = hs_norm_sq_exact(&a_fl.to_exact());
    let h_norm = f64_of_sqrt(&h_sq);
    let h_norm_rel = if a_sq.is_zero() { 0.0 } else { f64_of_sqrt(&(h_sq / a_sq)) };
    Ok(BackwardErrorReport {
        n: trace.n,
        precision_bits: cfg.precision_bits,
        h_norm,
        h_norm_rel,
        e_is_applicable: !trace.u_last_diag_zero,
    })
}

/// Solve `Ax = b` once in emulated precision (on `fl(A)`, `fl(b)`) and once
/// exactly, and return `‖x̂ − x‖₂ / ‖x̂‖₂` (denominator: the computed
/// solution). The ratio is formed exactly and rounded once.
pub fn forward_error(
    a: &RationalMatrix,
    b: &[Rational],
    cfg: &FpConfig,
) -> Result<f64, StabilityError> {
    if b.len() != a.rows() {
        return Err(StabilityError::Dimension(format!(
            "rhs of length {} for a {}x{} system",
            b.len(),
            a.rows(),
            a.cols()
        )));
    }
    // Exact solution.
    let exact_trace = gepp_factor(a, FactorOptions::default()).map_err(|e| match e {
        ElimError::ZeroColumn { .. } => StabilityError::SingularInput,
        other => StabilityError::Elim(other),
    })?;
    let x_exact = solve_with_trace(&ExactField, &exact_trace, b).map_err(|e| match e {
        ElimError::SingularU { .. } => StabilityError::SingularInput,
        other => StabilityError::Elim(other),
    })?;
    // Floating solution.
    let f = FpField::new(cfg.clone());
    let a_fl = a.convert(&f);
    let b_fl: Vec<EmulatedFloat> = b.iter().map(|q| f.from_rational(q)).collect();
    let fp_trace = gepp_factor(&a_fl, FactorOptions::default()).map_err(fp_fail)?;
    let x_hat = solve_with_trace(&f, &fp_trace, &b_fl).map_err(fp_fail)?;

    let mut num = Rational::zero();
    let mut den = Rational::zero();
    for (xh, xe) in x_hat.iter().zip(&x_exact) {
        let xh_q = xh.to_rational();
        let d = &xh_q - xe;
        num += &d * &d;
        den += &xh_q * &xh_q;
    }
    if den.is_zero() {
        return Ok(if num.is_zero() { 0.0 } else { f64::INFINITY });
    }
    Ok(f64_of_sqrt(&(num / den)))
}

/// `κ(A) = σ_max/σ_min`, from the high-precision singular-value routine.
/// Exact singularity is detected exactly (by rational elimination), not by
/// thresholding a tiny computed singular value.
pub fn condition_number(a: &RationalMatrix) -> Result<f64, StabilityError> {
    match gepp_factor(a, FactorOptions::default()) {
        Ok(t) if !t.u_last_diag_zero => {}
        Ok(_) => return Err(StabilityError::SingularInput),
        Err(ElimError::ZeroColumn { .. }) => return Err(StabilityError::SingularInput),
        Err(e) => return Err(StabilityError::Elim(e)),
    }
    let sigma = singular_values_of_rational(a, 106)?;
    let s_max = sigma.first().expect("nonempty").to_f64();
    let s_min = sigma.last().expect("nonempty").to_f64();
    Ok(s_max / s_min)
}

/// Why a pivot-agreement check returned false (or that it matched).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum AgreementOutcome {
    Match,
    /// The floating elimination hit an all-zero pivot column.
    FpFailed { step: usize },
    /// Exact elimination of `fl(A)` hit an all-zero pivot column.
    ExactFailed { step: usize },
    /// Both runs completed but chose different rows.
    Diverged { step: usize, fp_row: usize, exact_row: usize },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PivotAgreement {
    pub agree: bool,
    pub outcome: AgreementOutcome,
    /// Tie steps seen by the floating run (resolved to the smallest index).
    pub fp_tie_count: usize,
    /// Tie steps seen by the exact run on the same `fl(A)`.
    pub exact_tie_count: usize,
}

/// Compare the pivot sequence of emulated-precision partial pivoting on
/// `fl(A)` against exact-rational partial pivoting on the same `fl(A)`.
/// Both resolve ties by smallest row index, so any divergence is caused by
/// rounding in the floating Schur updates.
pub fn pivot_agreement(a: &RationalMatrix, cfg: &FpConfig) -> PivotAgreement {
    let f = FpField::new(cfg.clone());
    let a_fl = a.convert(&f);
    let fp_trace = match gepp_factor(&a_fl, FactorOptions::default()) {
        Ok(t) => t,
        Err(ElimError::ZeroColumn { step }) => {
            return PivotAgreement {
                agree: false,
                outcome: AgreementOutcome::FpFailed { step },
                fp_tie_count: 0,
                exact_tie_count: 0,
            }
        }
        Err(e) => panic!("unexpected elimination failure: {e}"),
    };
    let exact_stats = match exact_growth_stats(&a_fl.to_exact()) {
        Ok(s) => s,
        Err(ElimError::ZeroColumn { step }) => {
            return PivotAgreement {
                agree: false,
                outcome: AgreementOutcome::ExactFailed { step },
                fp_tie_count: fp_trace.tie_count,
                exact_tie_count: 0,
            }
        }
        Err(e) => panic!("unexpected exact-engine failure: {e}"),
    };
    for (step, (&fp_row, &exact_row)) in
        fp_trace.pivot_rows.iter().zip(&exact_stats.pivot_rows).enumerate()
    {
        if fp_row != exact_row {
            return PivotAgreement {
                agree: false,
                outcome: AgreementOutcome::Diverged { step, fp_row, exact_row },
                fp_tie_count: fp_trace.tie_count,
                exact_tie_count: exact_stats.tie_count,
            };
        }
    }
    PivotAgreement {
        agree: true,
        outcome: AgreementOutcome::Match,
        fp_tie_count: fp_trace.tie_count,
        exact_tie_count: exact_stats.tie_count,
    }
}

/// Result of the 2×2 no-pivoting instability probe.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Genp2x2Probe {
    pub eps: f64,
    pub precision_bits: u32,
    pub trials: u64,
    /// Trials landing in the conditioning event
    /// `{|fl(g₁₁)| ≤ ε, |fl(g₁₂)|,|fl(g₂₁)|,|fl(g₂₂)| ∈ [1/2, 2], κ ≤ 100}`.
    pub small_pivot_events: u64,
    /// Events whose exact backward error `‖M − L̂Û‖_HS` exceeds
    /// `u·‖M‖_HS/(100·ε)`.
    pub large_backward_events: u64,
    pub freq_small_pivot: f64,
    pub freq_large_backward_error: f64,
}

/// Sample `trials` 2×2 matrices of rounded Gaussians and measure how often
/// the leading entry is ε-small (with the other entries moderate and the
/// matrix well-conditioned), and how often, within that event, eliminating
/// WITHOUT pivoting leaves an exact backward error above
/// `u·‖M‖_HS/(100·ε)`. Event membership and the error comparison are both
/// exact; sampling is blocked into substreams so the counts are independent
/// of the thread count.
pub fn genp_2x2_instability_probe(
    eps: f64,
    trials: u64,
    cfg: &FpConfig,
    stream: &RngStream,
) -> Result<Genp2x2Probe, StabilityError> {
    let u = cfg.unit_roundoff();
    let eps_em =
        EmulatedFloat::from_f64_exact(eps).ok_or(StabilityError::EpsOutOfRange { eps })?;
    let eps_q = eps_em.to_rational();
    if eps_q <= u || eps_q >= Rational::one() {
        return Err(StabilityError::EpsOutOfRange { eps });
    }
    assert!(trials > 0, "need at least one trial");
    let half = EmulatedFloat::from_f64_exact(0.5).unwrap();
    let two = EmulatedFloat::from_f64_exact(2.0).unwrap();
    // Exact comparison threshold, squared: ‖H‖²·(100ε)² > u²·‖M‖².
    let hundred_eps_sq = {
        let he = Rational::from_integer(100.into()) * &eps_q;
        &he * &he
    };
    let u_sq = &u * &u;

    let n_blocks = trials.div_ceil(PROBE_BLOCK);
    let f = FpField::new(cfg.clone());
    let (events, larges) = (0..n_blocks)
        .into_par_iter()
        .map(|t| {
            let mut s = stream.substream(t);
            let count = PROBE_BLOCK.min(trials - t * PROBE_BLOCK);
            let mut ev = 0u64;
            let mut lg = 0u64;
            for _ in 0..count {
                let g11 = f.from_f64(s.next_gaussian());
                let g12 = f.from_f64(s.next_gaussian());
                let g21 = f.from_f64(s.next_gaussian());
                let g22 = f.from_f64(s.next_gaussian());
                // Event membership, checked exactly on the rounded values.
                if g11.cmp_abs(&eps_em) == std::cmp::Ordering::Greater {
                    continue;
                }
                let in_band = |x: &EmulatedFloat| {
                    x.cmp_abs(&half) != std::cmp::Ordering::Less
                        && x.cmp_abs(&two) != std::cmp::Ordering::Greater
                };
                if !(in_band(&g12) && in_band(&g21) && in_band(&g22)) {
                    continue;
                }
                let (s1, s2) = singular_values_2x2_f64(
                    g11.to_f64(),
                    g12.to_f64(),
                    g21.to_f64(),
                    g22.to_f64(),
                );
                if s1 > 100.0 * s2 {
                    continue;
                }
                ev += 1;
                if g11.is_zero() {
                    // No-pivoting elimination cannot even start: count as a
                    // catastrophically large backward error.
                    lg += 1;
                    continue;
                }
                // Eliminate without pivoting: three rounded operations.
                let m = fp_div(&g21, &g11, cfg).expect("nonzero divisor");
                let t1 = fp_mul(&m, &g12, cfg);
                let u22 = fp_sub(&g22, &t1, cfg);
                // Exact residual H = M − L̂Û: only rows 2 can differ.
                let h21 = g21.to_rational() - m.to_rational() * g11.to_rational();
                let h22 =
                    g22.to_rational() - (m.to_rational() * g12.to_rational() + u22.to_rational());
                let h_sq = &h21 * &h21 + &h22 * &h22;
                let m_sq: Rational = [&g11, &g12, &g21, &g22]
                    .iter()
                    .map(|x| {
                        let q = x.to_rational();
                        &q * &q
                    })
                    .sum();
                if &h_sq * &hundred_eps_sq > &u_sq * &m_sq {
                    lg += 1;
                }
            }
            (ev, lg)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(Genp2x2Probe {
        eps,
        precision_bits: cfg.precision_bits,
        trials,
        small_pivot_events: events,
        large_backward_events: larges,
        freq_small_pivot: events as f64 / trials as f64,
        freq_large_backward_error: if events == 0 { 0.0 } else { larges as f64 / events as f64 },
    })
}

/// The headline per-matrix metrics in one record.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StabilityReport {
    pub n: usize,
    pub precision_bits: u32,
    /// Floating growth factor on `fl(A)` (absent if the floating
    /// elimination failed).
    pub g_fp: Option<f64>,
    /// Exact growth factor of A itself.
    pub g_exact: f64,
    /// `‖P̂·fl(A) − L̂Û‖_HS`, exact residual of the floating factors.
    pub backward_norm: Option<f64>,
    /// `‖x̂ − x‖₂/‖x̂‖₂` for the supplied right-hand side.
    pub forward_rel: Option<f64>,
    /// `σ_max/σ_min` of A (absent when spectral metrics are switched off
    /// for large sweeps).
    pub kappa: Option<f64>,
    /// Floating pivot sequence equals the exact sequence on `fl(A)`.
    pub pivot_match: bool,
    /// Floating elimination completed with an invertible `Û`.
    pub fp_succeeded: bool,
}

/// Compute every stability metric for one exact matrix and right-hand
/// side. Exact quantities (`g_exact`, `kappa`, the reference solution) are
/// taken on A itself; floating quantities run on `fl(A)`.
pub fn stability_report(
    a: &RationalMatrix,
    b: &[Rational],
    cfg: &FpConfig,
) -> Result<StabilityReport, StabilityError> {
    stability_report_opts(a, Some(b), cfg, true)
}

/// Configurable variant of [`stability_report`]: the forward error is
/// computed only when a right-hand side is supplied, and the condition
/// number (the costliest metric at larger n) only when requested.
pub fn stability_report_opts(
    a: &RationalMatrix,
    b: Option<&[Rational]>,
    cfg: &FpConfig,
    with_kappa: bool,
) -> Result<StabilityReport, StabilityError> {
    let exact = exact_quantities(a, with_kappa)?;
    stability_report_prepared(a, b, cfg, &exact)
}

/// The exact-arithmetic metrics of a matrix, independent of any floating
/// precision. Computing them once and passing them to
/// [`stability_report_prepared`] avoids redoing the (dominant) exact work
/// when sweeping several precisions over the same matrix.
#[derive(Debug, Clone)]
pub struct ExactQuantities {
    pub g_exact: Rational,
    pub kappa: Option<f64>,
}

/// Compute the precision-independent part of a stability report.
pub fn exact_quantities(
    a: &RationalMatrix,
    with_kappa: bool,
) -> Result<ExactQuantities, StabilityError> {
    let n = a.rows();
    let g_exact = growth_factor_exact(a)?;
    assert!(
        g_exact <= pow2((n as i64) - 1),
        "exact partial-pivoting growth is bounded by doubling per step"
    );
    let kappa = if with_kappa { Some(condition_number(a)?) } else { None };
    Ok(ExactQuantities { g_exact, kappa })
}

/// Assemble a [`StabilityReport`] from precomputed exact quantities plus the
/// floating-point metrics at one precision.
pub fn stability_report_prepared(
    a: &RationalMatrix,
    b: Option<&[Rational]>,
    cfg: &FpConfig,
    exact: &ExactQuantities,
) -> Result<StabilityReport, StabilityError> {
    let n = a.rows();
    let kappa = exact.kappa;
    let f64f = F64Field;
    let g_exact = f64f.from_rational(&exact.g_exact);

    let (g_fp, backward_norm, forward_rel, fp_succeeded) = match growth_factor_fp(a, cfg) {
        Ok(g) => {
            assert!(g >= Rational::one(), "input is included in the growth max");
            let back = backward_error(a, cfg)?;
            let (fwd, ok) = match b {
                Some(rhs) => match forward_error(a, rhs, cfg) {
                    Ok(x) => (Some(x), back.e_is_applicable),
                    Err(StabilityError::Elim(ElimError::SingularU { .. })) => (None, false),
                    Err(e) => return Err(e),
                },
                None => (None, back.e_is_applicable),
            };
            (Some(f64f.from_rational(&g)), Some(back.h_norm), fwd, ok)
        }
        Err(StabilityError::FpEliminationFailed { .. }) => (None, None, None, false),
        Err(e) => return Err(e),
    };
    let pivot_match = pivot_agreement(a, cfg).agree;
    Ok(StabilityReport {
        n,
        precision_bits: cfg.precision_bits,
        g_fp,
        g_exact,
        backward_norm,
        forward_rel,
        kappa,
        pivot_match,
        fp_succeeded,
    })
}
