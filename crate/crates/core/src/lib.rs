//! Gaussian elimination with and without partial pivoting over exact
//! rationals and software floats of any precision, plus the measurement
//! instruments built on it: growth factors, backward/forward errors, pivot
//! polytopes with Gaussian-measure estimation, singular-value probes, and
//! rowspan distances.
//!
//! Layering, bottom up:
//!
//! * [`scalar`] — exact rationals and the emulated float ([`scalar::EmulatedFloat`]).
//! * [`field`] — arithmetic dispatch: exact / emulated(p) / native f64.
//! * [`matrix`] — dense matrices and ordered index sets.
//! * [`rng`] — counter-based Philox streams and Gaussian sampling.
//! * [`elim`] — the two elimination algorithms, traces, intermediates,
//!   Schur-form row reconstruction, solves, and the block recursion
//!   identity checker.
//! * [`growth`] — fraction-free exact elimination: pivot sequences and
//!   per-step intermediate maxima at scale.
//! * [`spectral`] — one-sided Jacobi singular values, rowspan distances,
//!   the minimum-singular-value/distance sandwich, and restricted
//!   invertibility witnesses.
//! * [`polytope`] — pivot polytopes: normal-vector recursion, membership,
//!   Monte Carlo Gaussian measure, pivot-consistency checking.
//! * [`stability`] — growth factors, backward/forward error, condition
//!   numbers, pivot agreement, and the 2×2 no-pivoting instability probe.
//! * [`stats`] — binomial confidence intervals and the normal CDF.

pub mod elim;
pub mod field;
pub mod growth;
pub mod matrix;
pub mod polytope;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod stability;
pub mod stats;
