//! Polytopes generated by the partial-pivoting recursion.
//!
//! For an n×m rational matrix B the recursion produces, step by step,
//! a normal vector `v_s` and a threshold `b_s`:
//!
//! * `v_1 = e_1`;
//! * at step `s`, the candidate score of row `i` is `⟨v_s, B_i⟩`, which
//!   equals the step-`s` Schur-complement entry of column `s` after
//!   eliminating on the rows picked so far — so the row with the largest
//!   absolute score is exactly the partial-pivoting choice `i_s`;
//! * `b_s = |⟨v_s, B_{i_s}⟩|` (the winning pivot magnitude);
//! * `v_{s+1}` has its first `s` coordinates equal to
//!   `−((B[I_s, 0..s])⁻¹ B[I_s, s])ᵀ`, coordinate `s` equal to 1, zeros
//!   after — by construction it annihilates every already-picked row.
//!
//! The polytope after r steps is `K_r = {x : |⟨v_s, x⟩| ≤ b_s, s ≤ r}`.
//! Since `v_s` is supported on the first `s` coordinates, the standard
//! Gaussian measure of `K_r` in ambient dimension m factors through the
//! first r coordinates; [`gaussian_measure_mc`] therefore samples in the
//! reduced dimension r.

use crate::elim::{gepp_factor, solve_matrix, ElimError, EliminationTrace, FactorOptions};
use crate::field::{ExactField, F64Field, Field};
use crate::matrix::{dot, IndexSet, RationalMatrix};
use crate::rng::RngStream;
use crate::scalar::Rational;
use crate::stats::binomial_std_error;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

/// Samples per Monte Carlo block; each block draws from its own substream,
/// so hit counts are independent of the thread count.
const MC_BLOCK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolytopeError {
    #[error("requested {r} steps on a {n}x{m} matrix")]
    StepsOutOfRange { r: usize, n: usize, m: usize },
    #[error("pivot block at step {step} is singular")]
    SingularBlock { step: usize },
    #[error("all candidate scores vanish at step {step}")]
    DegenerateStep { step: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error(transparent)]
    Elim(#[from] ElimError),
}

/// The constraint system `|⟨v_s, x⟩| ≤ b_s, s = 1..r` produced by the
/// pivoting recursion on a fixed matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotPolytope {
    /// Length of x (the matrix's column count m).
    pub ambient_dim: usize,
    /// `v_1..v_r`; `v_s` has coordinate `s−1` equal to one and zeros from
    /// coordinate `s` on.
    pub normals: Vec<Vec<Rational>>,
    /// `b_1..b_r ≥ 0`.
    pub thresholds: Vec<Rational>,
    /// Rows picked at each step (original indices).
    pub pivot_rows: Vec<usize>,
    /// Steps at which more than one row attained the maximal score
    /// (smallest index wins, matching the eliminator).
    pub tie_count: usize,
}

impl PivotPolytope {
    /// Number of constraints r (= effective dimension of the measure).
    pub fn reduced_dim(&self) -> usize {
        self.normals.len()
    }

    /// Exact membership test for a full-length point.
    pub fn contains(&self, x: &[Rational]) -> bool {
        assert_eq!(x.len(), self.ambient_dim, "point length must match ambient dim");
        self.normals.iter().zip(&self.thresholds).all(|(v, b)| {
            let score = dot(&ExactField, v, x);
            score.abs() <= *b
        })
    }

    /// Exact membership for a reduced point of length r; valid because
    /// every normal is supported on the first r coordinates.
    pub fn contains_reduced(&self, x: &[Rational]) -> bool {
        let r = self.reduced_dim();
        assert_eq!(x.len(), r, "reduced point length must be r");
        self.normals.iter().zip(&self.thresholds).all(|(v, b)| {
            let score = dot(&ExactField, &v[..r], x);
            score.abs() <= *b
        })
    }

    /// Thresholds divided by the Euclidean norms of their normals
    /// (half-widths of the slabs), as f64 diagnostics.
    pub fn normalized_thresholds(&self) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.thresholds)
            .map(|(v, b)| {
                let f = F64Field;
                let norm: f64 = v.iter().map(|q| f.from_rational(q).powi(2)).sum::<f64>().sqrt();
                f.from_rational(b) / norm
            })
            .collect()
    }
}

fn normal_from_rows(
    b: &RationalMatrix,
    picked: &IndexSet,
    step: usize,
) -> Result<Vec<Rational>, PolytopeError> {
    let m = b.cols();
    let s = step; // 1-based step index; v_s has s-1 solved coordinates.
    let mut v = vec![Rational::zero(); m];
    if s >= 2 {
        let block = b
            .submatrix(picked, &IndexSet::range(0, s - 1))
            .map_err(|e| PolytopeError::Dimension(e.to_string()))?;
        let col = b
            .submatrix(picked, &IndexSet::from_iter([s - 1]).unwrap())
            .map_err(|e| PolytopeError::Dimension(e.to_string()))?;
        let w = solve_matrix(&block, &col).map_err(|e| match e {
            ElimError::ZeroColumn { .. } | ElimError::SingularU { .. } => {
                PolytopeError::SingularBlock { step: s }
            }
            other => PolytopeError::Elim(other),
        })?;
        for (k, vk) in v.iter_mut().take(s - 1).enumerate() {
            *vk = -w.get(k, 0).clone();
        }
    }
    v[s - 1] = Rational::from_integer(1.into());
    // The construction annihilates every picked row.
    for i in picked.iter() {
        debug_assert!(
            dot(&ExactField, &v, b.row(i)).is_zero(),
            "normal must vanish on picked rows"
        );
    }
    Ok(v)
}

/// Normal vector `v_s` (1-based step `s`) derived from the first `s−1`
/// pivot rows of an existing elimination trace over the same matrix.
pub fn pivot_normal_vector(
    a: &RationalMatrix,
    s: usize,
    trace: &EliminationTrace<ExactField>,
) -> Result<Vec<Rational>, PolytopeError> {
    if s == 0 || s > trace.n || s > a.cols() {
        return Err(PolytopeError::StepsOutOfRange { r: s, n: a.rows(), m: a.cols() });
    }
    let picked = trace.pivot_index_set(s - 1);
    normal_from_rows(a, &picked, s)
}

/// Run the pivoting recursion for `r` steps from scratch, returning the
/// polytope. Fails if a step's candidate scores all vanish (the pivot
/// search has no nonzero entry) or an intermediate block is singular.
pub fn pivot_recursion(b: &RationalMatrix, r: usize) -> Result<PivotPolytope, PolytopeError> {
    let (n, m) = (b.rows(), b.cols());
    if r == 0 || r > n || r > m {
        return Err(PolytopeError::StepsOutOfRange { r, n, m });
    }
    let mut picked = IndexSet::new();
    let mut normals = Vec::with_capacity(r);
    let mut thresholds = Vec::with_capacity(r);
    let mut pivot_rows = Vec::with_capacity(r);
    let mut tie_count = 0usize;
    for s in 1..=r {
        let v = normal_from_rows(b, &picked, s)?;
        // Largest |score| over all rows; picked rows score exactly zero.
        let mut best: Option<(usize, Rational)> = None;
        let mut achievers = 0usize;
        for i in 0..n {
            let score = dot(&ExactField, &v, b.row(i)).abs();
            match &best {
                Some((_, cur)) if score < *cur => {}
                Some((_, cur)) if score == *cur => {
                    if !score.is_zero() {
                        achievers += 1;
                    }
                }
                _ => {
                    best = Some((i, score));
                    achievers = 1;
                }
            }
        }
        let (i_s, b_s) = best.expect("n >= 1");
        if b_s.is_zero() {
            return Err(PolytopeError::DegenerateStep { step: s });
        }
        if achievers > 1 {
            tie_count += 1;
        }
        picked.push(i_s).map_err(|e| PolytopeError::Dimension(e.to_string()))?;
        normals.push(v);
        thresholds.push(b_s);
        pivot_rows.push(i_s);
    }
    Ok(PivotPolytope { ambient_dim: m, normals, thresholds, pivot_rows, tie_count })
}

/// Build the polytope using the pivot rows recorded in an elimination
/// trace (no fresh argmax). Thresholds are the absolute scores of the
/// traced pivot rows.
pub fn build_polytope(
    a: &RationalMatrix,
    r: usize,
    trace: &EliminationTrace<ExactField>,
) -> Result<PivotPolytope, PolytopeError> {
    let (n, m) = (a.rows(), a.cols());
    if r == 0 || r > trace.n || r > m {
        return Err(PolytopeError::StepsOutOfRange { r, n, m });
    }
    let mut normals = Vec::with_capacity(r);
    let mut thresholds = Vec::with_capacity(r);
    for s in 1..=r {
        let v = pivot_normal_vector(a, s, trace)?;
        let i_s = trace.pivot_rows[s - 1];
        let b_s = dot(&ExactField, &v, a.row(i_s)).abs();
        if b_s.is_zero() {
            return Err(PolytopeError::DegenerateStep { step: s });
        }
        normals.push(v);
        thresholds.push(b_s);
    }
    Ok(PivotPolytope {
        ambient_dim: m,
        normals,
        thresholds,
        pivot_rows: trace.pivot_rows[..r].to_vec(),
        tie_count: trace.tie_count,
    })
}

/// Agreement check between the from-scratch recursion and the eliminator's
/// partial-pivoting choices on the same matrix: both resolve ties by the
/// smallest row index, so the sequences must coincide exactly.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PivotConsistency {
    pub r: usize,
    pub recursion_pivots: Vec<usize>,
    pub elimination_pivots: Vec<usize>,
    pub tie_count: usize,
    pub agree: bool,
}

pub fn consistency_check_pivots(
    a: &RationalMatrix,
    r: usize,
) -> Result<PivotConsistency, PolytopeError> {
    let poly = pivot_recursion(a, r)?;
    let trace = gepp_factor(a, FactorOptions::default())?;
    let elim_pivots = trace.pivot_rows[..r].to_vec();
    let agree = poly.pivot_rows == elim_pivots;
    Ok(PivotConsistency {
        r,
        recursion_pivots: poly.pivot_rows,
        elimination_pivots: elim_pivots,
        tie_count: poly.tie_count,
        agree,
    })
}

/// Monte Carlo estimate of a standard-Gaussian measure.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MeasureEstimate {
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    pub std_error: f64,
}

struct ReducedPolytope {
    r: usize,
    /// Row-major normals, truncated to the first r coordinates.
    normals: Vec<f64>,
    /// Thresholds rounded outward (next representable above), so the f64
    /// polytope contains the exact one; the bias is far below MC noise.
    thresholds: Vec<f64>,
}

impl ReducedPolytope {
    fn new(poly: &PivotPolytope) -> Self {
        let f = F64Field;
        let r = poly.reduced_dim();
        let mut normals = Vec::with_capacity(r * r);
        for v in &poly.normals {
            for q in &v[..r] {
                normals.push(f.from_rational(q));
            }
        }
        let thresholds = poly.thresholds.iter().map(|b| f.from_rational(b).next_up()).collect();
        ReducedPolytope { r, normals, thresholds }
    }

    fn hit(&self, x: &[f64]) -> bool {
        for (s, b) in self.thresholds.iter().enumerate() {
            let row = &self.normals[s * self.r..(s + 1) * self.r];
            let score: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            if score.abs() > *b {
                return false;
            }
        }
        true
    }
}

/// Estimate the standard-Gaussian measure of the polytope by Monte Carlo
/// in the reduced dimension r. Sampling is split into fixed-size blocks,
/// each drawing from `stream.substream(block_index)`, and hit counts are
/// summed as integers — the result is identical for any thread count.
pub fn gaussian_measure_mc(
    poly: &PivotPolytope,
    samples: u64,
    stream: &RngStream,
) -> MeasureEstimate {
    assert!(samples > 0, "need at least one sample");
    let reduced = ReducedPolytope::new(poly);
    let n_blocks = samples.div_ceil(MC_BLOCK);
    let hits: u64 = (0..n_blocks)
        .into_par_iter()
        .map(|t| {
            let mut s = stream.substream(t);
            let count = MC_BLOCK.min(samples - t * MC_BLOCK);
            let mut x = vec![0.0f64; reduced.r];
            let mut h = 0u64;
            for _ in 0..count {
                for xi in x.iter_mut() {
                    *xi = s.next_gaussian();
                }
                if reduced.hit(&x) {
                    h += 1;
                }
            }
            h
        })
        .sum();
    MeasureEstimate {
        hits,
        samples,
        estimate: hits as f64 / samples as f64,
        std_error: binomial_std_error(hits, samples),
    }
}
