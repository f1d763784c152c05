//! Gaussian elimination without pivoting and with partial pivoting, over any
//! [`Field`].
//!
//! Both variants produce an [`EliminationTrace`]: the factors `L` and `U`,
//! the transpositions applied, the pivot rows in original numbering, the
//! per-step multipliers, the running per-step maximum entry magnitude (the
//! raw material of growth factors), and — optionally — every intermediate
//! matrix.
//!
//! Conventions:
//!
//! * Indices are 0-based. Step `k` eliminates column `k`; an `n×n` matrix
//!   takes steps `0..n-1`.
//! * `A^(k)` denotes the working matrix after `k` steps, in *permuted*
//!   coordinates (rows where the algorithm put them). The *unpermuted*
//!   intermediate `M^(k)` (rows restored to original positions) is
//!   reconstructed by [`unpermuted_intermediate`].
//! * Partial pivoting picks the row of maximum absolute value in the pivot
//!   column; exact ties go to the smallest row position, and every tie is
//!   counted in the trace.
//! * Eliminated positions are set to exact zero — that is the definition of
//!   the update, not an arithmetic result, in both exact and float fields.
//! * In a float field every `+`, `-`, `*`, `/` rounds once at the field's
//!   precision: three rounded operations per updated entry (divide once per
//!   row for the multiplier, then multiply and subtract per entry).

use std::collections::BTreeMap;

use crate::field::{ExactField, Field};
use crate::matrix::{DenseMatrix, IndexSet, RationalMatrix};
use crate::scalar::Rational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which elimination was run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EliminationVariant {
    /// Pivot is always the diagonal position (fails on a zero pivot).
    NoPivoting,
    /// Pivot is the largest-magnitude entry in the column, smallest index on
    /// ties.
    PartialPivoting,
}

/// Errors from elimination and the operations built on traces.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElimError {
    #[error("matrix must be square and nonempty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("zero pivot at step {step} (no-pivoting run)")]
    ZeroPivot { step: usize },
    #[error("pivot column {step} is entirely zero (singular input)")]
    ZeroColumn { step: usize },
    #[error("upper factor has zero diagonal at {index}; system is singular")]
    SingularU { index: usize },
    #[error("the {size}x{size} leading block indexed by the pivot set is singular")]
    SingularBlock { size: usize },
    #[error("intermediates were not recorded for this trace")]
    MissingIntermediates,
    #[error("step {step} out of range for an elimination with {steps} steps")]
    StepOutOfRange { step: usize, steps: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Options for a factorization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorOptions {
    /// Record every intermediate matrix `A^(0) .. A^(n-1)`.
    pub record_intermediates: bool,
    /// Intermediates are recorded only when `n` is at most this (quadratic
    /// memory per step otherwise).
    pub intermediate_cap: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions { record_intermediates: false, intermediate_cap: 256 }
    }
}

impl FactorOptions {
    pub fn recording() -> Self {
        FactorOptions { record_intermediates: true, ..Default::default() }
    }
}

/// Complete record of one elimination run.
#[derive(Debug, Clone)]
pub struct EliminationTrace<F: Field> {
    pub variant: EliminationVariant,
    pub n: usize,
    /// Original row index chosen as pivot at each step, plus the row left in
    /// the last position: length `n`, and as a set this is `I_n`.
    pub pivot_rows: Vec<usize>,
    /// `(step, position)` row swaps, one per step (`position == step` when
    /// nothing moved). Empty for no-pivoting runs.
    pub transpositions: Vec<(usize, usize)>,
    /// `multipliers[k]` holds the column-`k` multipliers for positions
    /// `k+1..n` at the moment of elimination (after step `k`'s swap).
    pub multipliers: Vec<Vec<F::Elem>>,
    /// `step_max[k]` = max |entry| of `A^(k)`, `k = 0..n-1` (index 0 is the
    /// input matrix itself).
    pub step_max: Vec<F::Elem>,
    /// `A^(0) .. A^(n-1)` in permuted coordinates, when recorded.
    pub intermediates: Option<Vec<DenseMatrix<F>>>,
    /// Final position → original-row map (the permutation `P` as a lookup:
    /// row `i` of `PA` is row `perm[i]` of `A`).
    pub perm: Vec<usize>,
    /// Unit lower-triangular factor, rows in final permuted order.
    pub l: DenseMatrix<F>,
    /// Upper-triangular factor: `P A = L U`.
    pub u: DenseMatrix<F>,
    /// The run completed but `U[n-1][n-1]` is exactly zero (singular input
    /// that partial pivoting cannot flag earlier).
    pub u_last_diag_zero: bool,
    /// Number of steps at which the pivot magnitude was attained by more
    /// than one admissible row (exact ties; resolved to the smallest index).
    pub tie_count: usize,
}

impl<F: Field> EliminationTrace<F> {
    /// The permutation matrix `P` with `P A = L U`.
    pub fn permutation_matrix(&self, field: &F) -> DenseMatrix<F> {
        let mut p = DenseMatrix::zeros(field.clone(), self.n, self.n);
        for (pos, &orig) in self.perm.iter().enumerate() {
            p.set(pos, orig, field.one());
        }
        p
    }

    /// `I_k`: the first `k` pivot rows, in pivot order.
    pub fn pivot_index_set(&self, k: usize) -> IndexSet {
        IndexSet::from_iter(self.pivot_rows[..k].iter().copied())
            .expect("pivot rows are distinct")
    }

    /// All prefixes `I_1 ..= I_n`.
    pub fn pivot_index_sets(&self) -> Vec<IndexSet> {
        (1..=self.n).map(|k| self.pivot_index_set(k)).collect()
    }

    /// `A^(k)` in permuted coordinates (recorded runs only).
    pub fn intermediate(&self, k: usize) -> Result<&DenseMatrix<F>, ElimError> {
        let ints = self.intermediates.as_ref().ok_or(ElimError::MissingIntermediates)?;
        ints.get(k).ok_or(ElimError::StepOutOfRange { step: k, steps: ints.len() })
    }

    /// Position → original map after only the first `k` steps' swaps.
    pub fn perm_after(&self, k: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.n).collect();
        for &(step, pos) in self.transpositions.iter().filter(|(s, _)| *s < k) {
            perm.swap(step, pos);
        }
        perm
    }
}

fn argmax_abs_in_column<F: Field>(
    f: &F,
    w: &DenseMatrix<F>,
    col: usize,
    from: usize,
) -> (usize, usize) {
    let n = w.rows();
    let mut best = from;
    let mut ties = 1usize;
    for i in from + 1..n {
        match f.cmp_abs(w.get(i, col), w.get(best, col)) {
            std::cmp::Ordering::Greater => {
                best = i;
                ties = 1;
            }
            std::cmp::Ordering::Equal => ties += 1,
            std::cmp::Ordering::Less => {}
        }
    }
    (best, ties)
}

fn factor<F: Field>(
    a: &DenseMatrix<F>,
    variant: EliminationVariant,
    opts: FactorOptions,
) -> Result<EliminationTrace<F>, ElimError> {
    let n = a.rows();
    if n == 0 || !a.is_square() {
        return Err(ElimError::NotSquare { rows: n, cols: a.cols() });
    }
    let f = a.field().clone();
    let mut w = a.clone();
    let mut l = DenseMatrix::identity(f.clone(), n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut transpositions = Vec::new();
    let mut pivot_rows = Vec::with_capacity(n);
    let mut multipliers = Vec::with_capacity(n.saturating_sub(1));
    let mut tie_count = 0usize;
    let record = opts.record_intermediates && n <= opts.intermediate_cap;
    let mut intermediates = if record { Some(vec![w.clone()]) } else { None };
    let mut step_max = Vec::with_capacity(n);
    step_max.push(f.abs(&w.max_abs().expect("nonempty matrix")));

    for k in 0..n - 1 {
        let y = match variant {
            EliminationVariant::NoPivoting => k,
            EliminationVariant::PartialPivoting => {
                let (best, ties) = argmax_abs_in_column(&f, &w, k, k);
                if ties > 1 && !f.is_zero(w.get(best, k)) {
                    tie_count += 1;
                }
                best
            }
        };
        if f.is_zero(w.get(y, k)) {
            return Err(match variant {
                EliminationVariant::NoPivoting => ElimError::ZeroPivot { step: k },
                EliminationVariant::PartialPivoting => ElimError::ZeroColumn { step: k },
            });
        }
        if y != k {
            w.swap_rows(k, y);
            perm.swap(k, y);
            // The already-computed multiplier columns travel with their rows.
            for j in 0..k {
                let a = l.get(k, j).clone();
                let b = l.get(y, j).clone();
                l.set(k, j, b);
                l.set(y, j, a);
            }
        }
        if variant == EliminationVariant::PartialPivoting {
            transpositions.push((k, y));
        }
        pivot_rows.push(perm[k]);

        let mut step_mults = Vec::with_capacity(n - k - 1);
        let pivot = w.get(k, k).clone();
        for i in k + 1..n {
            let m = f.div(w.get(i, k), &pivot);
            l.set(i, k, m.clone());
            w.set(i, k, f.zero());
            for j in k + 1..n {
                let upd = f.sub(w.get(i, j), &f.mul(&m, w.get(k, j)));
                w.set(i, j, upd);
            }
            step_mults.push(m);
        }
        multipliers.push(step_mults);
        step_max.push(f.abs(&w.max_abs().expect("nonempty matrix")));
        if let Some(ints) = intermediates.as_mut() {
            ints.push(w.clone());
        }
    }
    pivot_rows.push(perm[n - 1]);

    let u_last_diag_zero = f.is_zero(w.get(n - 1, n - 1));
    // Zero the strictly-lower part of U (already zeroed during elimination,
    // but the working matrix is reused as-is).
    let u = w;

    Ok(EliminationTrace {
        variant,
        n,
        pivot_rows,
        transpositions,
        multipliers,
        step_max,
        intermediates,
        perm,
        l,
        u,
        u_last_diag_zero,
        tie_count,
    })
}

/// Elimination with no pivoting. Errors with [`ElimError::ZeroPivot`] the
/// moment a diagonal pivot is exactly zero.
pub fn genp_factor<F: Field>(
    a: &DenseMatrix<F>,
    opts: FactorOptions,
) -> Result<EliminationTrace<F>, ElimError> {
    factor(a, EliminationVariant::NoPivoting, opts)
}

/// Elimination with partial pivoting (largest |entry| in the column,
/// smallest row index on exact ties).
pub fn gepp_factor<F: Field>(
    a: &DenseMatrix<F>,
    opts: FactorOptions,
) -> Result<EliminationTrace<F>, ElimError> {
    factor(a, EliminationVariant::PartialPivoting, opts)
}

/// `M^(k)`: the `k`-th intermediate with rows restored to their original
/// positions (undoing the swaps applied so far). Requires a recorded trace.
pub fn unpermuted_intermediate<F: Field>(
    a_field: &F,
    trace: &EliminationTrace<F>,
    k: usize,
) -> Result<DenseMatrix<F>, ElimError> {
    let ak = trace.intermediate(k)?;
    let perm_k = trace.perm_after(k);
    let mut inv = vec![0usize; trace.n];
    for (pos, &orig) in perm_k.iter().enumerate() {
        inv[orig] = pos;
    }
    let _ = a_field;
    Ok(ak.permute_rows(&inv))
}

/// Rows of the Schur-form tail `A_{j,[k..n)} - A_{j,[0..k)} (A_{I,[0..k)})^{-1} A_{I,[k..n)}`
/// for each requested row `j`, where `I` is the (ordered) pivot set of the
/// first `k` steps.
///
/// For rows outside `I` this reproduces the nonzero tail of the unpermuted
/// intermediate `M^(k)` without replaying the elimination; with `k = 0` the
/// rows come back unchanged. The leading block must be invertible.
pub fn schur_complement_rows<F: Field>(
    a: &DenseMatrix<F>,
    pivot_set: &IndexSet,
    rows: &IndexSet,
) -> Result<DenseMatrix<F>, ElimError> {
    let n = a.rows();
    let k = pivot_set.len();
    if a.cols() < k {
        return Err(ElimError::Dimension(format!(
            "pivot set of size {k} against {} columns",
            a.cols()
        )));
    }
    let f = a.field().clone();
    let lead_cols = IndexSet::range(0, k);
    let tail_cols = IndexSet::range(k, a.cols());
    let width = a.cols() - k;
    if k == 0 {
        return a
            .submatrix(rows, &tail_cols)
            .map_err(|e| ElimError::Dimension(e.to_string()));
    }
    for &j in rows.as_slice() {
        if j >= n {
            return Err(ElimError::Dimension(format!("row {j} out of range for n={n}")));
        }
    }
    let block = a
        .submatrix(pivot_set, &lead_cols)
        .map_err(|e| ElimError::Dimension(e.to_string()))?;
    let tail = a
        .submatrix(pivot_set, &tail_cols)
        .map_err(|e| ElimError::Dimension(e.to_string()))?;
    // Y = block^{-1} tail via one factorization; singular block is an error.
    let y = solve_matrix(&block, &tail).map_err(|_| ElimError::SingularBlock { size: k })?;
    let mut out = DenseMatrix::zeros(f.clone(), rows.len(), width);
    for (r, &j) in rows.as_slice().iter().enumerate() {
        for c in 0..width {
            let mut acc = a.get(j, k + c).clone();
            for s in 0..k {
                acc = f.sub(&acc, &f.mul(a.get(j, s), y.get(s, c)));
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

/// Solve `A x = b` using a trace's factors: permute, forward-substitute
/// through `L`, back-substitute through `U`. Arithmetic happens in the
/// trace's field (so float traces solve in rounded arithmetic).
pub fn solve_with_trace<F: Field>(
    field: &F,
    trace: &EliminationTrace<F>,
    b: &[F::Elem],
) -> Result<Vec<F::Elem>, ElimError> {
    let n = trace.n;
    if b.len() != n {
        return Err(ElimError::Dimension(format!(
            "rhs of length {} for a {n}x{n} system",
            b.len()
        )));
    }
    let f = field;
    // y = L^{-1} (P b)
    let mut y: Vec<F::Elem> = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = b[trace.perm[i]].clone();
        for j in 0..i {
            acc = f.sub(&acc, &f.mul(trace.l.get(i, j), &y[j]));
        }
        y.push(acc);
    }
    // x = U^{-1} y
    let mut x = vec![f.zero(); n];
    for i in (0..n).rev() {
        if f.is_zero(trace.u.get(i, i)) {
            return Err(ElimError::SingularU { index: i });
        }
        let mut acc = y[i].clone();
        for j in i + 1..n {
            acc = f.sub(&acc, &f.mul(trace.u.get(i, j), &x[j]));
        }
        x[i] = f.div(&acc, trace.u.get(i, i));
    }
    Ok(x)
}

/// Solve `A X = B` for a matrix right-hand side (one factorization, many
/// back-substitutions).
pub fn solve_matrix<F: Field>(
    a: &DenseMatrix<F>,
    b: &DenseMatrix<F>,
) -> Result<DenseMatrix<F>, ElimError> {
    if a.rows() != b.rows() {
        return Err(ElimError::Dimension(format!(
            "{}x{} system with {}x{} rhs",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let f = a.field().clone();
    let trace = gepp_factor(a, FactorOptions::default())?;
    if trace.u_last_diag_zero {
        return Err(ElimError::SingularU { index: a.rows() - 1 });
    }
    let mut out = DenseMatrix::zeros(f.clone(), b.rows(), b.cols());
    for c in 0..b.cols() {
        let col: Vec<F::Elem> = (0..b.rows()).map(|r| b.get(r, c).clone()).collect();
        let x = solve_with_trace(&f, &trace, &col)?;
        for (r, v) in x.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// Exact inverse via partial-pivoting elimination.
pub fn invert<F: Field>(a: &DenseMatrix<F>) -> Result<DenseMatrix<F>, ElimError> {
    let f = a.field().clone();
    let id = DenseMatrix::identity(f, a.rows());
    solve_matrix(a, &id)
}

/// Verify the augmented-row update identity used to peel elimination steps
/// off a block:
///
/// with `B` square of size `m`, split at `v` into `B_u` (first `v` rows) and
/// `B_l`, quadrants `B_ul, B_ur, B_ll, B_lr` (splitting columns at `v` too),
/// and a row vector `X` split as `(X_l | X_r)`, the row
/// `(-X B^{-1} | 1)` equals `(-X' B'^{-1} | 1) · ( -[B_l; X] B_u^+ | Id )`
/// where `B' = B_lr - B_ll B_ul^{-1} B_ur`, `X' = X_r - X_l B_ul^{-1} B_ur`,
/// and `B_u^+ = B_u^T (B_u B_u^T)^{-1}` is the right pseudoinverse of the
/// wide block `B_u`.
///
/// Returns the maximum absolute entry of the difference of the two sides —
/// exactly zero in exact arithmetic whenever all the inverses exist.
pub fn verify_recursion_identity(
    b: &RationalMatrix,
    x: &[Rational],
    split: usize,
) -> Result<Rational, ElimError> {
    let m = b.rows();
    if !b.is_square() || m == 0 {
        return Err(ElimError::NotSquare { rows: m, cols: b.cols() });
    }
    if x.len() != m {
        return Err(ElimError::Dimension(format!("X of length {} for m={m}", x.len())));
    }
    if split == 0 || split >= m {
        return Err(ElimError::Dimension(format!("split {split} must be in 1..{m}")));
    }
    let f = ExactField;
    let v = split;
    let rows_u = IndexSet::range(0, v);
    let rows_l = IndexSet::range(v, m);
    let cols_l = IndexSet::range(0, v);
    let cols_r = IndexSet::range(v, m);
    let sub = |rs: &IndexSet, cs: &IndexSet| b.submatrix(rs, cs).expect("in-range split");
    let b_u = sub(&rows_u, &IndexSet::range(0, m));
    let b_ul = sub(&rows_u, &cols_l);
    let b_ur = sub(&rows_u, &cols_r);
    let b_ll = sub(&rows_l, &cols_l);
    let b_lr = sub(&rows_l, &cols_r);

    // B_ul^{-1} B_ur, shared by B' and X'.
    let w = solve_matrix(&b_ul, &b_ur).map_err(|_| ElimError::SingularBlock { size: v })?;
    let b_prime = b_lr.sub_matrix(&b_ll.matmul(&w).unwrap()).unwrap();
    let x_row = RationalMatrix::from_rows(f, vec![x.to_vec()]).unwrap();
    let x_l = x_row.submatrix(&IndexSet::range(0, 1), &cols_l).unwrap();
    let x_r = x_row.submatrix(&IndexSet::range(0, 1), &cols_r).unwrap();
    let x_prime = x_r.sub_matrix(&x_l.matmul(&w).unwrap()).unwrap();

    // Left side: (-X B^{-1} | 1).
    // X B^{-1} = (B^{-T} X^T)^T: solve B^T y = X^T.
    let xt = x_row.transpose();
    let y = solve_matrix(&b.transpose(), &xt).map_err(|_| ElimError::SingularBlock { size: m })?;
    let mut lhs: Vec<Rational> = (0..m).map(|i| -y.get(i, 0).clone()).collect();
    lhs.push(Rational::from_integer(1.into()));

    // Right side pieces.
    let yp = solve_matrix(&b_prime.transpose(), &x_prime.transpose())
        .map_err(|_| ElimError::SingularBlock { size: m - v })?;
    let mut left_factor: Vec<Rational> = (0..m - v).map(|i| -yp.get(i, 0).clone()).collect();
    left_factor.push(Rational::from_integer(1.into()));

    // B_u^+ = B_u^T (B_u B_u^T)^{-1}  (right pseudoinverse of the wide B_u).
    let gram = b_u.matmul(&b_u.transpose()).unwrap();
    let gram_inv = invert(&gram).map_err(|_| ElimError::SingularBlock { size: v })?;
    let pinv = b_u.transpose().matmul(&gram_inv).unwrap(); // m x v

    // Stack [B_l; X] ((m-v+1) x m), times -B_u^+ -> (m-v+1) x v.
    let mut stacked_rows: Vec<Vec<Rational>> = Vec::with_capacity(m - v + 1);
    for &i in rows_l.as_slice() {
        stacked_rows.push(b.row(i).to_vec());
    }
    stacked_rows.push(x.to_vec());
    let stacked = RationalMatrix::from_rows(f, stacked_rows).unwrap();
    let neg_block = stacked.matmul(&pinv).unwrap();

    // Right factor: ( -neg_block | Id_{m-v+1} ), shape (m-v+1) x (m+1).
    // rhs = left_factor · right_factor.
    let rows_rf = m - v + 1;
    let mut rhs = vec![Rational::zero(); m + 1];
    for (j, r) in rhs.iter_mut().enumerate().take(v) {
        for i in 0..rows_rf {
            *r += &left_factor[i] * -neg_block.get(i, j);
        }
    }
    for i in 0..rows_rf {
        rhs[v + i] = left_factor[i].clone();
    }

    let mut worst = Rational::zero();
    for (a, b) in lhs.iter().zip(rhs.iter()) {
        let d = num_traits::Signed::abs(&(a - b));
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// The classical worst-case matrix for partial pivoting: ones on the
/// diagonal and last column, −1 below the diagonal, zero elsewhere. Partial
/// pivoting performs no swaps and the last column doubles each step, giving
/// growth exactly `2^(n-1)`.
pub fn worst_case_growth_matrix<F: Field>(field: &F, n: usize) -> DenseMatrix<F> {
    DenseMatrix::from_fn(field.clone(), n, n, |i, j| {
        if j == n - 1 || i == j {
            field.one()
        } else if i > j {
            field.from_i64(-1)
        } else {
            field.zero()
        }
    })
}

/// Growth factor straight off a trace: `max_k max|A^(k)| / max|A^(0)|`
/// (the `k = 0` term makes it at least 1 by construction).
pub fn growth_factor_of_trace<F: Field>(field: &F, trace: &EliminationTrace<F>) -> Rational {
    let f = field;
    let denom = f.to_rational(&trace.step_max[0]);
    assert!(!denom.is_zero(), "zero matrix has no growth factor");
    let mut best = trace.step_max[0].clone();
    for v in &trace.step_max[1..] {
        if f.cmp(v, &best) == std::cmp::Ordering::Greater {
            best = v.clone();
        }
    }
    f.to_rational(&best) / denom
}

/// Count how many times each original row was chosen as pivot across many
/// traces (diagnostic; used by the harness).
pub fn pivot_histogram<F: Field>(traces: &[EliminationTrace<F>]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for t in traces {
        for &r in &t.pivot_rows {
            *h.entry(r).or_insert(0) += 1;
        }
    }
    h
}
