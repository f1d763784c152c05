//! Exact partial-pivoting growth statistics at scale, via fraction-free
//! elimination.
//!
//! Running the partial-pivoting algorithm directly over rationals spends
//! nearly all its time normalizing fractions. This module computes the same
//! pivot sequence and the same per-step intermediate maxima using the
//! one-step fraction-free (division-exact) recurrence on a column-scaled
//! integer matrix:
//!
//! * scale column `j` by the lcm `d_j` of its denominators (a power of two
//!   for float-rounded inputs), giving an integer matrix `W`;
//! * after `k` steps the true intermediate entry is `W[i][j] / (D_k · d_j)`,
//!   where `D_k` is the signed determinant of the leading `k×k` block in
//!   pivot order — maintained as the previous step's pivot;
//! * the update `W[i][j] ← (W[k][k]·W[i][j] − W[i][k]·W[k][j]) / D_k` is an
//!   exact integer division.
//!
//! Pivot comparisons at step `k` share the positive denominator
//! `|D_k| · d_k`, so comparing integers `|W[i][k]|` reproduces — including
//! ties and the smallest-index resolution — exactly the decisions the
//! generic eliminator makes on the rationals themselves. The tests
//! cross-check the two engines entry for entry.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::elim::ElimError;
use crate::matrix::RationalMatrix;
use crate::scalar::Rational;

/// Exact growth statistics of one partial-pivoting elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactGrowthStats {
    pub n: usize,
    /// Original row index pivoting each step (last entry: the remaining row).
    pub pivot_rows: Vec<usize>,
    /// `max_k max|A^(k)| / max|A^(0)|`, including `k = 0` (hence ≥ 1).
    pub growth_factor: Rational,
    /// `max|A^(k)|` for `k = 0..n-1`, exact.
    pub step_max: Vec<Rational>,
    /// Steps whose pivot magnitude was attained more than once.
    pub tie_count: usize,
    /// The final diagonal entry of `U` is exactly zero.
    pub u_last_diag_zero: bool,
}

/// Tracks the maximum of `num/den` terms (`den > 0`) with a bit-length
/// prefilter so exact big-integer cross-multiplications happen only near
/// the current maximum.
struct MaxTracker {
    num: BigUint,
    den: BigUint,
    /// Lower bound on log2 of the current max (−1 slack from bit lengths).
    log2_lb: i64,
}

impl MaxTracker {
    fn new() -> Self {
        MaxTracker { num: BigUint::zero(), den: BigUint::one(), log2_lb: i64::MIN }
    }

    fn offer(&mut self, num: &BigUint, den: &BigUint) {
        if num.is_zero() {
            return;
        }
        let approx = num.bits() as i64 - den.bits() as i64;
        // log2(num/den) < approx + 1; if even that upper bound is below the
        // current max's lower bound, skip the exact comparison.
        if approx + 1 < self.log2_lb {
            return;
        }
        if self.num.is_zero() || num * &self.den > &self.num * den {
            self.num = num.clone();
            self.den = den.clone();
            self.log2_lb = self.num.bits() as i64 - self.den.bits() as i64 - 1;
        }
    }

    fn value(&self) -> Rational {
        Rational::new(BigInt::from(self.num.clone()), BigInt::from(self.den.clone()))
    }
}

/// Exact growth statistics of partial-pivoting elimination on `a`, without
/// materializing rational intermediates. Costs integer arithmetic on minors
/// (entries at step `k` are `(k+1)`-dimensional minors of the scaled input).
pub fn exact_growth_stats(a: &RationalMatrix) -> Result<ExactGrowthStats, ElimError> {
    let n = a.rows();
    if n == 0 || !a.is_square() {
        return Err(ElimError::NotSquare { rows: n, cols: a.cols() });
    }

    // Column scales: d_j = lcm of denominators in column j.
    let mut d_cols: Vec<BigUint> = Vec::with_capacity(n);
    for j in 0..n {
        let mut l = BigUint::one();
        for i in 0..n {
            l = l.lcm(a.get(i, j).denom().magnitude());
        }
        d_cols.push(l);
    }

    // Integer working matrix W[i][j] = numer(a_ij) * d_j / denom(a_ij).
    let mut w: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let q = a.get(i, j);
                    let scale = &d_cols[j] / q.denom().magnitude();
                    q.numer() * BigInt::from(scale)
                })
                .collect()
        })
        .collect();
    let mut labels: Vec<usize> = (0..n).collect();

    let mut prev = BigInt::one(); // D_k, signed
    let mut tie_count = 0usize;
    let mut step_max: Vec<Rational> = Vec::with_capacity(n);
    // Running max over frozen rows; active-block max recomputed per step.
    let mut frozen = MaxTracker::new();

    // step_max[0]: the input itself (divisor 1 per column scale).
    {
        let mut t = MaxTracker::new();
        for row in &w {
            for (j, v) in row.iter().enumerate() {
                t.offer(v.magnitude(), &d_cols[j]);
            }
        }
        step_max.push(t.value());
    }

    for k in 0..n - 1 {
        // Pivot: max |W[i][k]| over i >= k (common positive denominator).
        let mut best = k;
        let mut ties = 1usize;
        for i in k + 1..n {
            match w[i][k].magnitude().cmp(w[best][k].magnitude()) {
                std::cmp::Ordering::Greater => {
                    best = i;
                    ties = 1;
                }
                std::cmp::Ordering::Equal => ties += 1,
                std::cmp::Ordering::Less => {}
            }
        }
        if w[best][k].is_zero() {
            return Err(ElimError::ZeroColumn { step: k });
        }
        if ties > 1 {
            tie_count += 1;
        }
        w.swap(k, best);
        labels.swap(k, best);

        let piv = w[k][k].clone();
        let prev_mag = prev.magnitude().clone();
        // Freeze row k: its entries (divisor D_k * d_j) are final U values.
        for j in k..n {
            let den = &prev_mag * &d_cols[j];
            frozen.offer(w[k][j].magnitude(), &den);
        }

        // Fraction-free update of the active block.
        let (pivot_row, rest) = {
            let (head, tail) = w.split_at_mut(k + 1);
            (&head[k], tail)
        };
        for row in rest.iter_mut() {
            let lead = std::mem::replace(&mut row[k], BigInt::zero());
            for j in k + 1..n {
                let t = &piv * &row[j] - &lead * &pivot_row[j];
                debug_assert!((&t % &prev).is_zero(), "fraction-free division must be exact");
                row[j] = t / &prev;
            }
        }
        prev = piv;

        // step_max[k+1] = max(frozen rows, active block / (D_{k+1} d_j)).
        let mut t = MaxTracker::new();
        t.offer(&frozen.num, &frozen.den);
        let prev_mag = prev.magnitude();
        for row in w.iter().skip(k + 1) {
            for (j, v) in row.iter().enumerate().skip(k + 1) {
                let den = prev_mag * &d_cols[j];
                t.offer(v.magnitude(), &den);
            }
        }
        step_max.push(t.value());
    }

    let u_last_diag_zero = w[n - 1][n - 1].is_zero();
    let denom = step_max[0].clone();
    assert!(!denom.is_zero(), "zero matrix has no growth factor");
    let mut best = step_max[0].clone();
    for v in &step_max[1..] {
        if v > &best {
            best = v.clone();
        }
    }

    Ok(ExactGrowthStats {
        n,
        pivot_rows: labels,
        growth_factor: best / denom,
        step_max,
        tie_count,
        u_last_diag_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elim::{
        gepp_factor, growth_factor_of_trace, worst_case_growth_matrix, FactorOptions,
    };
    use crate::field::ExactField;
    use crate::matrix::DenseMatrix;
    use crate::rng::{sample_gaussian_matrix, RngStream};
    use crate::scalar::{rat, rat_i64};

    /// Random rationals with genuinely mixed denominators (not just dyadic).
    fn random_mixed(n: usize, seed: u64) -> RationalMatrix {
        let mut s = RngStream::new(seed, 0);
        DenseMatrix::from_fn(ExactField, n, n, |_, _| {
            let num = (s.next_u64() % 41) as i64 - 20;
            let den = (s.next_u64() % 9) as i64 + 1;
            rat(num, den)
        })
    }

    #[test]
    fn agrees_with_generic_eliminator_on_mixed_rationals() {
        for seed in 0..12 {
            let a = random_mixed(6, 1000 + seed);
            let stats = match exact_growth_stats(&a) {
                Ok(s) => s,
                Err(ElimError::ZeroColumn { step }) => {
                    // The generic engine must fail identically.
                    assert_eq!(
                        gepp_factor(&a, FactorOptions::default()).unwrap_err(),
                        ElimError::ZeroColumn { step }
                    );
                    continue;
                }
                Err(e) => panic!("{e}"),
            };
            let trace = gepp_factor(&a, FactorOptions::recording()).unwrap();
            assert_eq!(stats.pivot_rows, trace.pivot_rows, "pivot sequence (seed {seed})");
            assert_eq!(stats.tie_count, trace.tie_count);
            assert_eq!(stats.u_last_diag_zero, trace.u_last_diag_zero);
            assert_eq!(
                stats.growth_factor,
                growth_factor_of_trace(&ExactField, &trace)
            );
            for (k, m) in stats.step_max.iter().enumerate() {
                assert_eq!(m, &trace.step_max[k], "step {k} max (seed {seed})");
            }
        }
    }

    #[test]
    fn agrees_on_gaussian_dyadic_input() {
        for seed in 0..6 {
            let mut s = RngStream::new(313 + seed, 0);
            let a = sample_gaussian_matrix(&ExactField, 8, 8, &mut s);
            let stats = exact_growth_stats(&a).unwrap();
            let trace = gepp_factor(&a, FactorOptions::default()).unwrap();
            assert_eq!(stats.pivot_rows, trace.pivot_rows);
            assert_eq!(stats.step_max, trace.step_max);
            assert_eq!(
                stats.growth_factor,
                growth_factor_of_trace(&ExactField, &trace)
            );
        }
    }

    #[test]
    fn worst_case_matrix_growth_is_power_of_two() {
        for n in [4usize, 8, 10] {
            let a = worst_case_growth_matrix(&ExactField, n);
            let stats = exact_growth_stats(&a).unwrap();
            assert_eq!(stats.growth_factor, rat_i64(1 << (n - 1)), "n = {n}");
            assert_eq!(stats.pivot_rows, (0..n).collect::<Vec<_>>(), "no swaps");
            // Exact doubling of the running max at every step.
            for k in 1..n {
                assert_eq!(stats.step_max[k], rat_i64(2) * &stats.step_max[k - 1]);
            }
        }
    }

    #[test]
    fn growth_factor_is_at_least_one() {
        for seed in 0..10 {
            let mut s = RngStream::new(99, seed);
            let a = sample_gaussian_matrix(&ExactField, 10, 10, &mut s);
            let stats = exact_growth_stats(&a).unwrap();
            assert!(stats.growth_factor >= rat_i64(1));
        }
    }

    #[test]
    fn per_step_doubling_bound_holds() {
        for seed in 0..10 {
            let mut s = RngStream::new(202, seed);
            let a = sample_gaussian_matrix(&ExactField, 9, 9, &mut s);
            let stats = exact_growth_stats(&a).unwrap();
            for k in 1..9 {
                assert!(
                    stats.step_max[k] <= rat_i64(2) * &stats.step_max[k - 1],
                    "doubling bound violated at step {k} (seed {seed})"
                );
            }
        }
    }

    #[test]
    fn ties_and_singularity_flags() {
        let f = ExactField;
        let a = DenseMatrix::from_i64_rows(f, &[&[1, -1], &[1, 1]]);
        let stats = exact_growth_stats(&a).unwrap();
        assert_eq!(stats.tie_count, 1);
        let b = DenseMatrix::from_i64_rows(f, &[&[1, 1], &[1, 1]]);
        let stats = exact_growth_stats(&b).unwrap();
        assert!(stats.u_last_diag_zero);
        let c = DenseMatrix::from_i64_rows(f, &[&[0, 1], &[0, 2]]);
        assert_eq!(
            exact_growth_stats(&c).unwrap_err(),
            ElimError::ZeroColumn { step: 0 }
        );
    }

    #[test]
    fn handles_scale_extremes() {
        // Columns at wildly different scales exercise the column-scaling
        // bookkeeping (Vandermonde base keeps the matrix nonsingular).
        let f = ExactField;
        let a = DenseMatrix::from_fn(f, 4, 4, |i, j| {
            rat_i64((i as i64 + 2).pow(j as u32)) * crate::scalar::pow2(-(20 * j as i64))
        });
        let stats = exact_growth_stats(&a).unwrap();
        let trace = gepp_factor(&a, FactorOptions::default()).unwrap();
        assert_eq!(stats.pivot_rows, trace.pivot_rows);
        assert_eq!(stats.step_max, trace.step_max);
    }

    #[test]
    fn moderate_size_runs_quickly() {
        // Smoke test that n=40 dyadic input is well under a second.
        let mut s = RngStream::new(7, 7);
        let a = sample_gaussian_matrix(&ExactField, 40, 40, &mut s);
        let t0 = std::time::Instant::now();
        let stats = exact_growth_stats(&a).unwrap();
        assert!(stats.growth_factor >= rat_i64(1));
        assert!(t0.elapsed().as_secs_f64() < 5.0);
    }
}
