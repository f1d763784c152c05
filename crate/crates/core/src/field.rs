//! A small field abstraction so elimination, solves and spectral probes can
//! run over exact rationals, emulated floats of any precision, or native
//! `f64`, with the arithmetic semantics owned by the field value.
//!
//! The field object (not the element type) carries configuration: an
//! [`FpField`] holds its precision, so "multiply at 24 bits" and "multiply
//! at 53 bits" are different fields over the same element type.

use std::cmp::Ordering;
use std::fmt;

use crate::scalar::{
    fp_add, fp_div, fp_mul, fp_sqrt, fp_sub, round_to_precision, EmulatedFloat, FpConfig,
    Rational,
};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// Identifies which arithmetic a value was produced under; recorded in
/// traces and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldTag {
    /// Exact rational arithmetic.
    Exact,
    /// Software float with the given significand bits.
    Emulated(u32),
    /// Native IEEE-754 binary64.
    Native64,
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::Exact => write!(f, "exact"),
            FieldTag::Emulated(p) => write!(f, "fp{p}"),
            FieldTag::Native64 => write!(f, "f64"),
        }
    }
}

/// An ordered field with exact injections from / projections to rationals.
///
/// `div` panics on a zero divisor: callers guard with [`Field::is_zero`]
/// (pivot checks, diagonal checks) and report domain errors themselves.
pub trait Field: Clone + Send + Sync + 'static {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    /// Inject a rational: exact for [`ExactField`], rounded once (to nearest)
    /// for the float fields.
    fn from_rational(&self, q: &Rational) -> Self::Elem;
    /// Exact rational image of an element (every element of every field here
    /// is a rational number).
    fn to_rational(&self, a: &Self::Elem) -> Rational;

    /// Inject a finite `f64` exactly, then round once if the field is
    /// narrower than 53 bits. Panics on NaN/∞.
    fn from_f64(&self, v: f64) -> Self::Elem {
        let e = EmulatedFloat::from_f64_exact(v).expect("non-finite f64 injection");
        self.from_rational(&e.to_rational())
    }

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn abs(&self, a: &Self::Elem) -> Self::Elem;

    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn cmp(&self, a: &Self::Elem, b: &Self::Elem) -> Ordering;
    fn cmp_abs(&self, a: &Self::Elem, b: &Self::Elem) -> Ordering {
        self.cmp(&self.abs(a), &self.abs(b))
    }

    fn tag(&self) -> FieldTag;
}

/// Fields that can take square roots of nonnegative elements (used by the
/// spectral routines; the exact field deliberately has no such operation).
pub trait SqrtField: Field {
    /// `sqrt(a)` for `a ≥ 0`, rounded to the field's precision. Panics on
    /// negative input (callers square things first or clamp).
    fn sqrt(&self, a: &Self::Elem) -> Self::Elem;

    /// Convergence threshold for iterative spectral routines in this field:
    /// small enough to exhaust the precision, large enough to terminate.
    fn spectral_tol(&self) -> Self::Elem;
}

/// Exact rational arithmetic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExactField;

impl Field for ExactField {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        crate::scalar::rat_i64(1)
    }
    fn from_i64(&self, v: i64) -> Rational {
        crate::scalar::rat_i64(v)
    }
    fn from_rational(&self, q: &Rational) -> Rational {
        q.clone()
    }
    fn to_rational(&self, a: &Rational) -> Rational {
        a.clone()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a - b
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn div(&self, a: &Rational, b: &Rational) -> Rational {
        assert!(!b.is_zero(), "exact division by zero");
        a / b
    }
    fn neg(&self, a: &Rational) -> Rational {
        -a
    }
    fn abs(&self, a: &Rational) -> Rational {
        a.abs()
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn cmp(&self, a: &Rational, b: &Rational) -> Ordering {
        a.cmp(b)
    }
    fn tag(&self) -> FieldTag {
        FieldTag::Exact
    }
}

/// Software floating point at a fixed precision: every operation is the
/// exact result rounded once (nearest, ties to even).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpField {
    pub cfg: FpConfig,
}

impl FpField {
    pub fn new(cfg: FpConfig) -> Self {
        FpField { cfg }
    }

    pub fn with_precision(p: u32) -> Result<Self, crate::scalar::ScalarError> {
        Ok(FpField { cfg: FpConfig::new(p)? })
    }

    pub fn precision_bits(&self) -> u32 {
        self.cfg.precision_bits
    }
}

impl Field for FpField {
    type Elem = EmulatedFloat;

    fn zero(&self) -> EmulatedFloat {
        EmulatedFloat::zero()
    }
    fn one(&self) -> EmulatedFloat {
        EmulatedFloat::one()
    }
    fn from_i64(&self, v: i64) -> EmulatedFloat {
        // Rounded like any other injection: large integers may not fit p bits.
        EmulatedFloat::from_i64(v).round_to(self.cfg.precision_bits)
    }
    fn from_rational(&self, q: &Rational) -> EmulatedFloat {
        round_to_precision(q, &self.cfg)
    }
    fn to_rational(&self, a: &EmulatedFloat) -> Rational {
        a.to_rational()
    }
    fn from_f64(&self, v: f64) -> EmulatedFloat {
        EmulatedFloat::from_f64_exact(v)
            .expect("non-finite f64 injection")
            .round_to(self.cfg.precision_bits)
    }
    fn add(&self, a: &EmulatedFloat, b: &EmulatedFloat) -> EmulatedFloat {
        fp_add(a, b, &self.cfg)
    }
    fn sub(&self, a: &EmulatedFloat, b: &EmulatedFloat) -> EmulatedFloat {
        fp_sub(a, b, &self.cfg)
    }
    fn mul(&self, a: &EmulatedFloat, b: &EmulatedFloat) -> EmulatedFloat {
        fp_mul(a, b, &self.cfg)
    }
    fn div(&self, a: &EmulatedFloat, b: &EmulatedFloat) -> EmulatedFloat {
        fp_div(a, b, &self.cfg).expect("float division by zero")
    }
    fn neg(&self, a: &EmulatedFloat) -> EmulatedFloat {
        a.neg()
    }
    fn abs(&self, a: &EmulatedFloat) -> EmulatedFloat {
        a.abs()
    }
    fn is_zero(&self, a: &EmulatedFloat) -> bool {
        a.is_zero()
    }
    fn cmp(&self, a: &EmulatedFloat, b: &EmulatedFloat) -> Ordering {
        a.cmp_value(b)
    }
    fn cmp_abs(&self, a: &EmulatedFloat, b: &EmulatedFloat) -> Ordering {
        a.cmp_abs(b)
    }
    fn tag(&self) -> FieldTag {
        FieldTag::Emulated(self.cfg.precision_bits)
    }
}

impl SqrtField for FpField {
    fn sqrt(&self, a: &EmulatedFloat) -> EmulatedFloat {
        fp_sqrt(a, &self.cfg).expect("square root of negative value")
    }

    fn spectral_tol(&self) -> EmulatedFloat {
        // 10^-30 saturated at a few ulps: at very high precision the fixed
        // threshold dominates; at low precision the iteration must be allowed
        // to stop once it hits the carrier's own resolution.
        let p = self.cfg.precision_bits as i64;
        let fixed = Rational::new(1.into(), num_bigint::BigInt::from(10u8).pow(30));
        let floor = crate::scalar::pow2(4 - p);
        let tol = if fixed > floor { fixed } else { floor };
        self.from_rational(&tol)
    }
}

/// Native IEEE-754 binary64. Used as the fast carrier for probes on
/// float-field data (every emulated value with p ≤ 53 at desk scale is
/// exactly an f64) and for Monte Carlo hit tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct F64Field;

impl Field for F64Field {
    type Elem = f64;

    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    fn from_i64(&self, v: i64) -> f64 {
        v as f64
    }
    fn from_rational(&self, q: &Rational) -> f64 {
        // Correct rounding via the 53-bit emulated path (naive num/den
        // division would round twice).
        round_to_precision(q, &FpConfig { precision_bits: 53 }).to_f64()
    }
    fn to_rational(&self, a: &f64) -> Rational {
        EmulatedFloat::from_f64_exact(*a)
            .expect("non-finite f64 in exact lift")
            .to_rational()
    }
    fn from_f64(&self, v: f64) -> f64 {
        assert!(v.is_finite(), "non-finite f64 injection");
        v
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn div(&self, a: &f64, b: &f64) -> f64 {
        assert!(*b != 0.0, "f64 division by zero");
        a / b
    }
    fn neg(&self, a: &f64) -> f64 {
        -a
    }
    fn abs(&self, a: &f64) -> f64 {
        a.abs()
    }
    fn is_zero(&self, a: &f64) -> bool {
        *a == 0.0
    }
    fn cmp(&self, a: &f64, b: &f64) -> Ordering {
        a.partial_cmp(b).expect("NaN in field comparison")
    }
    fn tag(&self) -> FieldTag {
        FieldTag::Native64
    }
}

impl SqrtField for F64Field {
    fn sqrt(&self, a: &f64) -> f64 {
        assert!(*a >= 0.0, "square root of negative value");
        a.sqrt()
    }

    fn spectral_tol(&self) -> f64 {
        // A few ulps above 2^-53; tighter never converges in binary64.
        2f64.powi(-49)
    }
}
