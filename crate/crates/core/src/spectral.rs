//! Singular values, rowspan distances, and the probes built on them.
//!
//! * [`singular_values`] — one-sided Jacobi in any [`SqrtField`]: rotations
//!   orthogonalize column pairs until every normalized off-diagonal Gram
//!   entry is below the field's tolerance. High relative accuracy, fully
//!   deterministic, no external linear algebra.
//! * [`singular_values_of_rational`] — exact inputs are carried in emulated
//!   arithmetic of at least 106 bits, comfortably beyond the 1e-20 relative
//!   target for the sizes used here (n ≤ 64).
//! * [`dist_sq_to_rowspan_exact`] — exact squared distance from a vector to
//!   the span of rows, via Gram determinant ratios, with dependent rows
//!   dropped exactly. [`dist_to_rowspan_float`] is the independent
//!   orthogonalization route; the two are cross-checked in tests.
//! * [`smin_dist_sandwich_check`] — verifies
//!   `min_i dist(row_i, span(others)) ≥ s_min(Qᵀ) ≥ min_i dist / √m`.
//! * [`pivot_spectrum_profile`] — singular values of the pivot block
//!   `A[I_r, 0..r]`, optionally widened to `A[I_r, 0..r+w]` for its smallest
//!   singular value.
//! * [`restricted_invertibility_witness`] — brute-force search for a column
//!   subset witnessing the restricted invertibility bound
//!   `s_min(B_J) ≥ (1−ε)‖B‖_HS/√t` with `|J| = ⌊ε²‖B‖²_HS/‖B‖²⌋`.

use crate::elim::{gepp_factor, ElimError, FactorOptions};
use crate::field::{ExactField, F64Field, Field, FpField, SqrtField};
use crate::matrix::{dot, DenseMatrix, IndexSet, RationalMatrix};
use crate::scalar::{EmulatedFloat, Rational};
use num_traits::Zero;
use thiserror::Error;

/// Maximum Jacobi sweeps before declaring failure.
const MAX_SWEEPS: usize = 30;

/// Carrier precision floor for exact-input singular values.
const MIN_CARRIER_BITS: u32 = 106;

/// Column-subset search is exponential; refuse beyond this width.
const MAX_WITNESS_COLUMNS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("carrier of {bits} bits is below the {MIN_CARRIER_BITS}-bit floor for exact input")]
    CarrierTooNarrow { bits: u32 },
    #[error("witness search over {t} columns exceeds the brute-force cap of {MAX_WITNESS_COLUMNS}")]
    CombinatorialTooLarge { t: usize },
    #[error("epsilon {0} outside (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("witness target size is zero (epsilon² ‖B‖²_HS < ‖B‖²)")]
    WitnessTargetEmpty,
    #[error(
        "no column subset of size {target} reaches the bound {bound:.6e} (best s_min {best:.6e})"
    )]
    NoWitness { target: usize, bound: f64, best: f64 },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error(transparent)]
    Elim(#[from] ElimError),
}

/// All singular values of `m`, descending, computed by one-sided Jacobi in
/// the matrix's own field. Returns `min(rows, cols)` values (zeros included
/// for rank-deficient input).
pub fn singular_values<F: SqrtField>(m: &DenseMatrix<F>) -> Result<Vec<F::Elem>, SpectralError> {
    let f = m.field().clone();
    // Tall orientation: columns are the vectors being orthogonalized.
    let work = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let (rows, cols) = (work.rows(), work.cols());
    if cols == 0 {
        return Ok(Vec::new());
    }
    let mut v: Vec<Vec<F::Elem>> = (0..cols).map(|j| work.col(j)).collect();
    let tol = f.spectral_tol();
    let tol_sq = f.mul(&tol, &tol);
    let two = f.from_i64(2);
    let one = f.one();

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&f, &v[p], &v[p]);
                let beta = dot(&f, &v[q], &v[q]);
                let gamma = dot(&f, &v[p], &v[q]);
                // Rotate while γ² > tol²·α·β (relative off-diagonal test).
                let lhs = f.mul(&gamma, &gamma);
                let rhs = f.mul(&tol_sq, &f.mul(&alpha, &beta));
                if f.cmp(&lhs, &rhs) != std::cmp::Ordering::Greater {
                    continue;
                }
                rotated = true;
                // zeta = (β−α)/2γ; t = sgn(ζ)/(|ζ|+√(1+ζ²)); c = 1/√(1+t²).
                let zeta = f.div(&f.sub(&beta, &alpha), &f.mul(&two, &gamma));
                let mag = f.sqrt(&f.add(&one, &f.mul(&zeta, &zeta)));
                let t = if f.is_zero(&zeta) {
                    one.clone()
                } else {
                    let denom = f.add(&f.abs(&zeta), &mag);
                    let t = f.div(&one, &denom);
                    if f.cmp(&zeta, &f.zero()) == std::cmp::Ordering::Less {
                        f.neg(&t)
                    } else {
                        t
                    }
                };
                let c = f.div(&one, &f.sqrt(&f.add(&one, &f.mul(&t, &t))));
                let s = f.mul(&c, &t);
                for i in 0..rows {
                    let vp = v[p][i].clone();
                    let vq = v[q][i].clone();
                    v[p][i] = f.sub(&f.mul(&c, &vp), &f.mul(&s, &vq));
                    v[q][i] = f.add(&f.mul(&s, &vp), &f.mul(&c, &vq));
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpectralError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut sigma: Vec<F::Elem> = v
        .iter()
        .map(|col| {
            let mut acc = f.zero();
            for x in col {
                acc = f.add(&acc, &f.mul(x, x));
            }
            f.sqrt(&acc)
        })
        .collect();
    sigma.sort_by(|a, b| f.cmp(b, a));
    Ok(sigma)
}

/// Singular values of an exact rational matrix, computed in an emulated
/// carrier of `carrier_bits ≥ 106` bits. Values come back in the carrier
/// (convert with `.to_f64()` for reporting).
pub fn singular_values_of_rational(
    m: &RationalMatrix,
    carrier_bits: u32,
) -> Result<Vec<EmulatedFloat>, SpectralError> {
    if carrier_bits < MIN_CARRIER_BITS {
        return Err(SpectralError::CarrierTooNarrow { bits: carrier_bits });
    }
    let carrier = FpField::with_precision(carrier_bits).expect("valid precision");
    singular_values(&m.convert(&carrier))
}

/// Singular values of a 2×2 matrix `[[a, b], [c, d]]` in closed form
/// (descending pair).
pub fn singular_values_2x2_f64(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let big = f64::hypot(a + d, b - c);
    let small = f64::hypot(a - d, b + c);
    ((big + small) / 2.0, (big - small).abs() / 2.0)
}

/// Exact determinant via partial-pivoting elimination (sign from the
/// transposition count).
pub fn det_exact(m: &RationalMatrix) -> Rational {
    match gepp_factor(m, FactorOptions::default()) {
        Ok(t) => {
            let mut det = Rational::from_integer(1.into());
            for i in 0..t.n {
                det *= t.u.get(i, i);
            }
            let swaps = t.transpositions.iter().filter(|&&(k, y)| k != y).count();
            if swaps % 2 == 1 {
                -det
            } else {
                det
            }
        }
        Err(ElimError::ZeroColumn { .. }) => Rational::zero(),
        Err(e) => panic!("determinant of malformed matrix: {e}"),
    }
}

fn gram_of_rows(rows: &RationalMatrix, selected: &[usize], extra: Option<&[Rational]>) -> RationalMatrix {
    let f = ExactField;
    let k = selected.len() + extra.map_or(0, |_| 1);
    let row_of = |idx: usize| -> &[Rational] {
        if idx < selected.len() {
            rows.row(selected[idx])
        } else {
            extra.expect("extra row requested")
        }
    };
    DenseMatrix::from_fn(f, k, k, |i, j| dot(&ExactField, row_of(i), row_of(j)))
}

/// Exact squared Euclidean distance from `v` to the span of the rows of
/// `rows` (both over rationals). Linearly dependent rows are detected
/// exactly and dropped; the distance is to the span of the independent
/// subset (the same subspace).
pub fn dist_sq_to_rowspan_exact(v: &[Rational], rows: &RationalMatrix) -> Rational {
    assert_eq!(v.len(), rows.cols(), "vector length must match row length");
    // Greedy independent subset: row i joins if it grows the Gram rank.
    let mut sel: Vec<usize> = Vec::new();
    let mut det_sel = Rational::from_integer(1.into());
    for i in 0..rows.rows() {
        let mut cand = sel.clone();
        cand.push(i);
        let d = det_exact(&gram_of_rows(rows, &cand, None));
        if !d.is_zero() {
            sel = cand;
            det_sel = d;
        }
    }
    if sel.is_empty() {
        // Span is {0}: distance is the norm of v itself.
        return dot(&ExactField, v, v);
    }
    let det_aug = det_exact(&gram_of_rows(rows, &sel, Some(v)));
    det_aug / det_sel
}

/// Distance from `v` to the rowspan of `rows`, by modified Gram–Schmidt in
/// the matrix's own (sqrt-capable) field. Rows whose orthogonal residual is
/// negligible relative to their norm are treated as dependent and skipped.
pub fn dist_to_rowspan_float<F: SqrtField>(v: &[F::Elem], rows: &DenseMatrix<F>) -> F::Elem {
    let f = rows.field().clone();
    assert_eq!(v.len(), rows.cols());
    let tol = f.spectral_tol();
    let mut basis: Vec<Vec<F::Elem>> = Vec::new();
    for i in 0..rows.rows() {
        let mut w: Vec<F::Elem> = rows.row(i).to_vec();
        let orig_norm_sq = dot(&f, &w, &w);
        for b in &basis {
            let coeff = dot(&f, &w, b);
            for (wx, bx) in w.iter_mut().zip(b) {
                *wx = f.sub(wx, &f.mul(&coeff, bx));
            }
        }
        let res_sq = dot(&f, &w, &w);
        // Dependent if ||residual||² ≤ tol²·||row||².
        let thresh = f.mul(&f.mul(&tol, &tol), &orig_norm_sq);
        if f.cmp(&res_sq, &thresh) != std::cmp::Ordering::Greater {
            continue;
        }
        let nrm = f.sqrt(&res_sq);
        for wx in w.iter_mut() {
            *wx = f.div(wx, &nrm);
        }
        basis.push(w);
    }
    let mut w: Vec<F::Elem> = v.to_vec();
    for b in &basis {
        let coeff = dot(&f, &w, b);
        for (wx, bx) in w.iter_mut().zip(b) {
            *wx = f.sub(wx, &f.mul(&coeff, bx));
        }
    }
    f.sqrt(&dot(&f, &w, &w))
}

/// Exact-input distance, reported as the correctly rounded `f64` of the
/// exact value (square root taken in 106-bit carrier arithmetic).
pub fn dist_to_rowspan_f64(v: &[Rational], rows: &RationalMatrix) -> f64 {
    let d_sq = dist_sq_to_rowspan_exact(v, rows);
    let carrier = FpField::with_precision(MIN_CARRIER_BITS).expect("valid precision");
    carrier.sqrt(&carrier.from_rational(&d_sq)).to_f64()
}

/// Outcome of the minimum-singular-value vs row-distance sandwich.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SandwichReport {
    pub m: usize,
    pub k: usize,
    /// `min_i dist(row_i, span of the other rows)`.
    pub min_row_distance: f64,
    /// `s_min(Qᵀ) = s_m(Q)` (m ≤ k).
    pub smin: f64,
    /// `s_min ≤ min_dist + slack`.
    pub upper_ok: bool,
    /// `s_min ≥ min_dist/√m − slack`.
    pub lower_ok: bool,
    pub slack: f64,
}

impl SandwichReport {
    pub fn ok(&self) -> bool {
        self.upper_ok && self.lower_ok
    }
}

/// Check `min_i dist(H_i, row_i) ≥ s_min(Qᵀ) ≥ min_i dist / √m` for an
/// `m×k` matrix with `m ≤ k`, where `H_i` is the span of the other rows.
/// Distances are exact (rounded once for reporting); `s_min` comes from the
/// 106-bit carrier.
pub fn smin_dist_sandwich_check(q: &RationalMatrix, slack: f64) -> Result<SandwichReport, SpectralError> {
    let (m, k) = (q.rows(), q.cols());
    if m == 0 || m > k {
        return Err(SpectralError::Dimension(format!(
            "need 1 ≤ rows ≤ cols, got {m}x{k}"
        )));
    }
    let mut min_dist = f64::INFINITY;
    for i in 0..m {
        let others: Vec<usize> = (0..m).filter(|&r| r != i).collect();
        let rows = q
            .submatrix(&IndexSet::from_iter(others).unwrap(), &IndexSet::range(0, k))
            .expect("in-range");
        let d = dist_to_rowspan_f64(q.row(i), &rows);
        if d < min_dist {
            min_dist = d;
        }
    }
    let sigma = singular_values_of_rational(q, MIN_CARRIER_BITS)?;
    let smin = sigma.last().expect("nonempty").to_f64();
    Ok(SandwichReport {
        m,
        k,
        min_row_distance: min_dist,
        smin,
        upper_ok: smin <= min_dist + slack,
        lower_ok: smin >= min_dist / (m as f64).sqrt() - slack,
        slack,
    })
}

/// Singular-value profile of a pivot block.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectrumProfile {
    pub r: usize,
    pub widen: usize,
    /// σ₁ ≥ … ≥ σ_r of the square block `A[I_r, 0..r]`.
    pub sigma: Vec<f64>,
    /// Smallest singular value of the widened block `A[I_r, 0..r+widen]`
    /// (present when `widen > 0`).
    pub sigma_min_widened: Option<f64>,
}

/// Profile of the block picked out by the ordered pivot set `I_r`: singular
/// values of `A[I_r, 0..r]`, plus the smallest singular value of the
/// widened rectangular block when `widen > 0`.
pub fn pivot_spectrum_profile(
    a: &RationalMatrix,
    pivot_rows: &IndexSet,
    widen: usize,
) -> Result<SpectrumProfile, SpectralError> {
    let r = pivot_rows.len();
    if r == 0 {
        return Err(SpectralError::Dimension("empty pivot set".into()));
    }
    if r + widen > a.cols() {
        return Err(SpectralError::Dimension(format!(
            "r + widen = {} exceeds {} columns",
            r + widen,
            a.cols()
        )));
    }
    let square = a
        .submatrix(pivot_rows, &IndexSet::range(0, r))
        .map_err(|e| SpectralError::Dimension(e.to_string()))?;
    let sigma: Vec<f64> = singular_values_of_rational(&square, MIN_CARRIER_BITS)?
        .iter()
        .map(|s| s.to_f64())
        .collect();
    let sigma_min_widened = if widen > 0 {
        let wide = a
            .submatrix(pivot_rows, &IndexSet::range(0, r + widen))
            .map_err(|e| SpectralError::Dimension(e.to_string()))?;
        let sv = singular_values_of_rational(&wide, MIN_CARRIER_BITS)?;
        Some(sv.last().expect("nonempty").to_f64())
    } else {
        None
    };
    Ok(SpectrumProfile { r, widen, sigma, sigma_min_widened })
}

/// A column subset certifying restricted invertibility.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InvertibilityWitness {
    pub columns: IndexSet,
    pub smin: f64,
    pub bound: f64,
    pub target_size: usize,
    pub hs_norm: f64,
    pub spectral_norm: f64,
}

fn for_each_subset(t: usize, k: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    // Lexicographic k-subsets of {0..t}; `visit` returns true to stop.
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 || k > t {
        return;
    }
    loop {
        if visit(&idx) {
            return;
        }
        // Advance.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + t - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Find a column subset `J` of size `⌊ε²‖B‖²_HS/‖B‖²⌋` with
/// `s_min(B_J) ≥ (1−ε)‖B‖_HS/√t` for a `u×t` matrix `B` (`t ≤ 12`;
/// the search is exhaustive). Larger subsets can never succeed when all
/// target-size subsets fail (adding a column weakly decreases the minimum
/// singular value), so only the target size is searched.
pub fn restricted_invertibility_witness(
    b: &RationalMatrix,
    eps: f64,
) -> Result<InvertibilityWitness, SpectralError> {
    if !(0.0..1.0).contains(&eps) || eps == 0.0 {
        return Err(SpectralError::EpsilonOutOfRange(eps));
    }
    let t = b.cols();
    if t > MAX_WITNESS_COLUMNS {
        return Err(SpectralError::CombinatorialTooLarge { t });
    }
    if t == 0 || b.rows() == 0 {
        return Err(SpectralError::Dimension("empty matrix".into()));
    }
    let bf = b.convert(&F64Field);
    let sigma = singular_values(&bf)?;
    let spectral = sigma[0];
    let hs = bf.hs_norm();
    if spectral == 0.0 {
        return Err(SpectralError::Dimension("zero matrix has no witness".into()));
    }
    // Tiny fudge keeps exact-ratio inputs (e.g. ε²·t an integer) from
    // flooring down through float fuzz.
    let target = (eps * eps * (hs / spectral).powi(2) + 1e-12).floor() as usize;
    if target == 0 {
        return Err(SpectralError::WitnessTargetEmpty);
    }
    let bound = (1.0 - eps) * hs / (t as f64).sqrt();

    let all_rows = IndexSet::range(0, b.rows());
    let mut found: Option<(Vec<usize>, f64)> = None;
    let mut best = f64::NEG_INFINITY;
    for_each_subset(t, target, |subset| {
        let cols = IndexSet::from_iter(subset.iter().copied()).unwrap();
        let sub = bf.submatrix(&all_rows, &cols).expect("in-range");
        let sv = singular_values(&sub).expect("Jacobi converges on f64 submatrix");
        let smin = sv.last().copied().unwrap_or(0.0);
        if smin > best {
            best = smin;
        }
        if smin >= bound {
            found = Some((subset.to_vec(), smin));
            true
        } else {
            false
        }
    });
    match found {
        Some((cols, smin)) => Ok(InvertibilityWitness {
            columns: IndexSet::from_iter(cols).unwrap(),
            smin,
            bound,
            target_size: target,
            hs_norm: hs,
            spectral_norm: spectral,
        }),
        None => Err(SpectralError::NoWitness { target, bound, best }),
    }
}
