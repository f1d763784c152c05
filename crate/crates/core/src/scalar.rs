//! Exact rational scalars and an arbitrary-precision software float.
//!
//! Two scalar kinds back everything in this crate:
//!
//! * [`Rational`] — arbitrary-precision rationals, always in lowest terms
//!   with positive denominator. Field operations are exact.
//! * [`EmulatedFloat`] — a binary floating-point value `sign · sig · 2^exp`
//!   with an odd (or zero) significand and an unbounded exponent. Rounding
//!   to `p` significant bits uses round-to-nearest, ties to even, so results
//!   match IEEE-754 arithmetic at `p = 24` / `p = 53` inside the exponent
//!   range of `f32` / `f64`, while `p` may be any value ≥ 2 and exponents
//!   never overflow or go subnormal.
//!
//! Every rounded operation is "exact value, then one rounding": the
//! mathematically exact result is formed (or compared against exactly) and
//! rounded once to the target precision. [`fp_arith`] and
//! [`round_to_precision`] are the two entry points the rest of the crate
//! uses; the exact (unrounded) dyadic operations are public as well because
//! backward-error computations lift float results back into exact
//! arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational scalar: arbitrary-precision, lowest terms, positive
/// denominator (all maintained by construction).
pub type Rational = BigRational;

/// Shorthand: the rational `v/1`.
pub fn rat_i64(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Shorthand: the rational `num/den`. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// The rational `2^k` for any (possibly negative) `k`.
pub fn pow2(k: i64) -> Rational {
    if k >= 0 {
        Rational::from_integer(BigInt::one() << k as usize)
    } else {
        Rational::new(BigInt::one(), BigInt::one() << (-k) as usize)
    }
}

/// Parse a decimal literal (`-12`, `3.25`, `1.5e-3`) into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Rational, ScalarError> {
    let err = || ScalarError::DecimalParse(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    // Split off an exponent part if present.
    let (mant, exp10) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = t[pos + 1..].parse().map_err(|_| err())?;
            (&t[..pos], e)
        }
        None => (t, 0i64),
    };
    let (mant, neg) = match mant.strip_prefix('-') {
        Some(rest) => (rest, true),
        None => (mant.strip_prefix('+').unwrap_or(mant), false),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(pos) => (&mant[..pos], &mant[pos + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let digits: String = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let num = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(err)?;
    let num = if neg { -num } else { num };
    let scale = frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if exp10 - scale >= 0 {
        Rational::from_integer(num * ten.pow((exp10 - scale) as u32))
    } else {
        Rational::new(num, ten.pow((scale - exp10) as u32))
    };
    Ok(value)
}

/// Errors from scalar construction and float arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("precision must be at least 2 bits, got {0}")]
    PrecisionTooSmall(u32),
    #[error("float division by zero")]
    DivisionByZero,
    #[error("square root of a negative value")]
    NegativeSqrt,
    #[error("cannot parse {0:?} as a decimal rational")]
    DecimalParse(String),
    #[error("cannot parse {0:?} as a float literal (expected e.g. \"-5*2^-3\")")]
    FloatParse(String),
}

/// Working-precision configuration for emulated float arithmetic.
///
/// `precision_bits` is the significand length `p` (including the leading
/// bit); the unit roundoff is `2^-p`. `p = 53` reproduces `f64` results,
/// `p = 24` reproduces `f32`, and any `p ≥ 2` is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FpConfig {
    pub precision_bits: u32,
}

impl FpConfig {
    pub fn new(precision_bits: u32) -> Result<Self, ScalarError> {
        if precision_bits < 2 {
            return Err(ScalarError::PrecisionTooSmall(precision_bits));
        }
        Ok(FpConfig { precision_bits })
    }

    /// The unit roundoff `u = 2^-p`: relative error of one rounding is ≤ u.
    pub fn unit_roundoff(&self) -> Rational {
        pow2(-(self.precision_bits as i64))
    }
}

/// Unit roundoff `2^-p` for a configuration (free-function form).
pub fn unit_roundoff(cfg: &FpConfig) -> Rational {
    cfg.unit_roundoff()
}

/// A software float: `sign · sig · 2^exp` with `sig` odd (or zero for the
/// canonical zero, which has `sign = +1, exp = 0`).
///
/// The representation is the canonical odd-significand form of a dyadic
/// rational, so structural equality is value equality, any precision can be
/// read back off it (`sig` rounded to `p` bits has its significand in
/// `[2^(p-1), 2^p)` after shifting), and exact addition/multiplication are
/// closed. The exponent is an arbitrary-precision integer: no overflow, no
/// underflow, no subnormals, no infinities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmulatedFloat {
    sign: i8,
    sig: BigUint,
    exp: BigInt,
}

impl EmulatedFloat {
    fn normalized(sign: i8, mut sig: BigUint, mut exp: BigInt) -> Self {
        if sig.is_zero() {
            return EmulatedFloat { sign: 1, sig, exp: BigInt::zero() };
        }
        let tz = sig.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            sig >>= tz;
            exp += tz;
        }
        debug_assert!(sign == 1 || sign == -1);
        EmulatedFloat { sign, sig, exp }
    }

    pub fn zero() -> Self {
        EmulatedFloat { sign: 1, sig: BigUint::zero(), exp: BigInt::zero() }
    }

    pub fn one() -> Self {
        EmulatedFloat { sign: 1, sig: BigUint::one(), exp: BigInt::zero() }
    }

    pub fn from_i64(v: i64) -> Self {
        let sign = if v < 0 { -1 } else { 1 };
        Self::normalized(sign, BigUint::from(v.unsigned_abs()), BigInt::zero())
    }

    /// Exact conversion from `f64`; `None` for NaN or infinities.
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Self::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074i64) // subnormal
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Some(Self::normalized(sign, BigUint::from(mant), BigInt::from(exp)))
    }

    /// Exact conversion from a rational whose denominator is a power of two;
    /// `None` otherwise.
    pub fn from_rational_dyadic(q: &Rational) -> Option<Self> {
        if q.is_zero() {
            return Some(Self::zero());
        }
        let den = q.denom().magnitude();
        let tz = den.trailing_zeros().unwrap_or(0);
        if den >> tz != BigUint::one() {
            return None;
        }
        let sign = if q.numer().is_negative() { -1 } else { 1 };
        Some(Self::normalized(
            sign,
            q.numer().magnitude().clone(),
            -BigInt::from(tz),
        ))
    }

    pub fn to_rational(&self) -> Rational {
        if self.sig.is_zero() {
            return Rational::zero();
        }
        let mag = BigInt::from(self.sig.clone());
        let signed = if self.sign < 0 { -mag } else { mag };
        let exp = self.exp.to_i64().expect("exponent too large for conversion");
        Rational::from_integer(signed) * pow2(exp)
    }

    /// Nearest `f64` (correctly rounded); saturates to ±∞ / ±0 outside the
    /// `f64` exponent range.
    pub fn to_f64(&self) -> f64 {
        if self.sig.is_zero() {
            return 0.0;
        }
        let r = self.round_to(53);
        let exp = match r.exp.to_i64() {
            Some(e) => e,
            None => {
                return if r.exp.is_positive() {
                    f64::INFINITY * r.sign as f64
                } else {
                    0.0 * r.sign as f64
                }
            }
        };
        let m = r.sig.to_u64().expect("53-bit significand fits u64") as f64;
        let v = if (-2000..=2000).contains(&exp) {
            // powi is exact for powers of two in range; split to dodge
            // overflow/underflow of the intermediate power.
            if exp >= -1000 {
                m * 2f64.powi(exp as i32)
            } else {
                m * 2f64.powi(-1000) * 2f64.powi((exp + 1000) as i32)
            }
        } else if exp > 0 {
            f64::INFINITY
        } else {
            0.0
        };
        v * r.sign as f64
    }

    pub fn is_zero(&self) -> bool {
        self.sig.is_zero()
    }

    /// -1, 0 or +1.
    pub fn signum(&self) -> i8 {
        if self.sig.is_zero() {
            0
        } else {
            self.sign
        }
    }

    /// Odd significand (zero only for the zero value).
    pub fn significand(&self) -> &BigUint {
        &self.sig
    }

    /// Exponent of the odd-significand form.
    pub fn exponent(&self) -> &BigInt {
        &self.exp
    }

    /// Number of significand bits in the canonical (odd) form; 0 for zero.
    pub fn significand_bits(&self) -> u64 {
        self.sig.bits()
    }

    /// Exponent of the most significant bit: the value's magnitude lies in
    /// `[2^msb, 2^(msb+1))`. `None` for zero.
    pub fn msb_exponent(&self) -> Option<BigInt> {
        if self.sig.is_zero() {
            None
        } else {
            Some(self.exp.clone() + (self.sig.bits() - 1))
        }
    }

    pub fn neg(&self) -> Self {
        if self.sig.is_zero() {
            return self.clone();
        }
        EmulatedFloat { sign: -self.sign, sig: self.sig.clone(), exp: self.exp.clone() }
    }

    pub fn abs(&self) -> Self {
        EmulatedFloat { sign: 1, sig: self.sig.clone(), exp: self.exp.clone() }
    }

    fn cmp_mag(&self, other: &Self) -> Ordering {
        match (self.sig.is_zero(), other.sig.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let ma = self.exp.clone() + (self.sig.bits() - 1);
        let mb = other.exp.clone() + (other.sig.bits() - 1);
        match ma.cmp(&mb) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Same leading-bit position: align the shorter significand.
        let (ba, bb) = (self.sig.bits(), other.sig.bits());
        if ba >= bb {
            self.sig.cmp(&(&other.sig << (ba - bb)))
        } else {
            (&self.sig << (bb - ba)).cmp(&other.sig)
        }
    }

    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        self.cmp_mag(other)
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match (self.signum(), other.signum()) {
            (a, b) if a < b => Ordering::Less,
            (a, b) if a > b => Ordering::Greater,
            (0, 0) => Ordering::Equal,
            (s, _) => {
                let mag = self.cmp_mag(other);
                if s > 0 {
                    mag
                } else {
                    mag.reverse()
                }
            }
        }
    }

    /// Exact sum (no rounding). Alignment cost is proportional to the
    /// exponent gap; use [`fp_add`] for rounded arithmetic, which
    /// short-circuits astronomically separated operands.
    pub fn add_exact(&self, other: &Self) -> Self {
        if self.sig.is_zero() {
            return other.clone();
        }
        if other.sig.is_zero() {
            return self.clone();
        }
        let e = self.exp.clone().min(other.exp.clone());
        let sa: u64 = (&self.exp - &e).to_u64().expect("exponent gap too large");
        let sb: u64 = (&other.exp - &e).to_u64().expect("exponent gap too large");
        let va = BigInt::from(&self.sig << sa) * self.sign;
        let vb = BigInt::from(&other.sig << sb) * other.sign;
        let sum = va + vb;
        let sign = if sum.is_negative() { -1 } else { 1 };
        Self::normalized(sign, sum.magnitude().clone(), e)
    }

    pub fn sub_exact(&self, other: &Self) -> Self {
        self.add_exact(&other.neg())
    }

    /// Exact product (no rounding).
    pub fn mul_exact(&self, other: &Self) -> Self {
        if self.sig.is_zero() || other.sig.is_zero() {
            return Self::zero();
        }
        Self::normalized(
            self.sign * other.sign,
            &self.sig * &other.sig,
            &self.exp + &other.exp,
        )
    }

    /// Round to at most `p` significand bits, nearest, ties to even.
    pub fn round_to(&self, p: u32) -> Self {
        self.round_to_with_hint(p, Ordering::Equal)
    }

    /// Round to `p` bits where the true value being rounded equals this
    /// dyadic value plus an infinitesimal in the direction given by `hint`
    /// (`Less`: true value is below, `Greater`: above, `Equal`: this value is
    /// exact). The hint breaks exact-tie cases the way the true value would;
    /// the fallback for a genuinely exact tie is ties-to-even.
    fn round_to_with_hint(&self, p: u32, hint: Ordering) -> Self {
        if self.sig.is_zero() {
            return self.clone();
        }
        // Work on the magnitude: flip the hint for negative values.
        let mag_hint = if self.sign > 0 { hint } else { hint.reverse() };
        let bits = self.sig.bits();
        if bits <= p as u64 {
            return self.clone();
        }
        let drop = bits - p as u64;
        let q = &self.sig >> drop;
        let r = &self.sig - (&q << drop);
        let half = BigUint::one() << (drop - 1);
        let up = match r.cmp(&half) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match mag_hint {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => q.is_odd(),
            },
        };
        let q = if up { q + BigUint::one() } else { q };
        Self::normalized(self.sign, q, &self.exp + drop)
    }
}

impl PartialOrd for EmulatedFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl Ord for EmulatedFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl fmt::Display for EmulatedFloat {
    /// Lossless textual form `±sig*2^exp` (e.g. `-5*2^-3`); `0` for zero.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sig.is_zero() {
            return write!(f, "0");
        }
        let s = if self.sign < 0 { "-" } else { "" };
        write!(f, "{}{}*2^{}", s, self.sig, self.exp)
    }
}

impl FromStr for EmulatedFloat {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, ScalarError> {
        let err = || ScalarError::FloatParse(s.to_string());
        let t = s.trim();
        if t == "0" {
            return Ok(Self::zero());
        }
        let (mant, exp) = t.split_once("*2^").ok_or_else(err)?;
        let (mant, sign) = match mant.strip_prefix('-') {
            Some(rest) => (rest, -1),
            None => (mant, 1),
        };
        let sig = BigUint::parse_bytes(mant.as_bytes(), 10).ok_or_else(err)?;
        let exp = BigInt::parse_bytes(exp.as_bytes(), 10).ok_or_else(err)?;
        if sig.is_zero() {
            return Err(err());
        }
        Ok(Self::normalized(sign, sig, exp))
    }
}

impl Serialize for EmulatedFloat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EmulatedFloat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Round an exact rational to `p = cfg.precision_bits` significand bits
/// (nearest, ties to even). This is the `fl(·)` map: total on rationals,
/// idempotent on its image, monotone, and exact on dyadics that already fit.
pub fn round_to_precision(x: &Rational, cfg: &FpConfig) -> EmulatedFloat {
    let p = cfg.precision_bits;
    if x.is_zero() {
        return EmulatedFloat::zero();
    }
    let sign: i8 = if x.numer().is_negative() { -1 } else { 1 };
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();

    // l = floor(log2(n/d)); first guess from bit lengths, then one exact fix.
    let mut l = n.bits() as i64 - d.bits() as i64;
    let ge_pow2 = |l: i64| -> bool {
        // n/d >= 2^l ?
        if l >= 0 {
            *n >= (d << l as u64)
        } else {
            (n << (-l) as u64) >= *d
        }
    };
    if !ge_pow2(l) {
        l -= 1;
    }
    debug_assert!(ge_pow2(l) && !ge_pow2(l + 1));

    // Want m = round(n/d * 2^k) with k = p-1-l, so m lands in [2^(p-1), 2^p].
    let k = (p as i64 - 1) - l;
    let (num_s, den_s) = if k >= 0 {
        (n << k as u64, d.clone())
    } else {
        (n.clone(), d << (-k) as u64)
    };
    let (m0, r) = num_s.div_rem(&den_s);
    let up = match (&r << 1u32).cmp(&den_s) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => m0.is_odd(),
    };
    let m = if up { m0 + BigUint::one() } else { m0 };
    EmulatedFloat::normalized(sign, m, BigInt::from(-k))
}

/// The four rounded arithmetic operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FpOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Correctly rounded sum: `fl(a + b)` at `cfg` precision.
///
/// When the operands' magnitudes are separated by more bits than can affect
/// the rounded result, the sum is not materialized; the larger operand is
/// rounded with a directional hint instead, so cost stays proportional to
/// the operand sizes rather than the exponent gap.
pub fn fp_add(a: &EmulatedFloat, b: &EmulatedFloat, cfg: &FpConfig) -> EmulatedFloat {
    let p = cfg.precision_bits;
    if a.is_zero() {
        return b.round_to(p);
    }
    if b.is_zero() {
        return a.round_to(p);
    }
    let (big, small) = if a.cmp_mag(b) == Ordering::Less { (b, a) } else { (a, b) };
    let gap = big.msb_exponent().unwrap() - small.msb_exponent().unwrap();
    // Sound cutoff: beyond big's own bit span plus p (and margin), the small
    // operand can only perturb tie decisions, which the hint reproduces.
    let cutoff = BigInt::from(big.significand_bits() + p as u64 + 4);
    if gap >= cutoff {
        let hint = if small.sign > 0 { Ordering::Greater } else { Ordering::Less };
        return big.round_to_with_hint(p, hint);
    }
    big.add_exact(small).round_to(p)
}

/// Correctly rounded difference: `fl(a - b)`.
pub fn fp_sub(a: &EmulatedFloat, b: &EmulatedFloat, cfg: &FpConfig) -> EmulatedFloat {
    fp_add(a, &b.neg(), cfg)
}

/// Correctly rounded product: `fl(a * b)`.
pub fn fp_mul(a: &EmulatedFloat, b: &EmulatedFloat, cfg: &FpConfig) -> EmulatedFloat {
    a.mul_exact(b).round_to(cfg.precision_bits)
}

/// Correctly rounded quotient: `fl(a / b)`; error on zero divisor.
pub fn fp_div(
    a: &EmulatedFloat,
    b: &EmulatedFloat,
    cfg: &FpConfig,
) -> Result<EmulatedFloat, ScalarError> {
    if b.is_zero() {
        return Err(ScalarError::DivisionByZero);
    }
    if a.is_zero() {
        return Ok(EmulatedFloat::zero());
    }
    let p = cfg.precision_bits as u64;
    // Scale the dividend so the floor quotient carries p+1 significant bits,
    // then round with the remainder as the directional hint.
    let (la, lb) = (a.sig.bits(), b.sig.bits());
    let shift = (lb + p + 1).saturating_sub(la);
    let (q, r) = (&a.sig << shift).div_rem(&b.sig);
    let exp = &a.exp - &b.exp - BigInt::from(shift);
    let hint = if r.is_zero() { Ordering::Equal } else { Ordering::Greater };
    let sign = a.sign * b.sign;
    // Build the magnitude, round with the hint valid for magnitudes, then
    // apply the sign (round_to_with_hint flips hints for negative values,
    // hence rounding the magnitude first).
    let mag = EmulatedFloat::normalized(1, q, exp);
    let rounded = mag.round_to_with_hint(p as u32, hint);
    Ok(if sign < 0 { rounded.neg() } else { rounded })
}

/// Correctly rounded square root: `fl(sqrt(a))`; error on negative input.
pub fn fp_sqrt(a: &EmulatedFloat, cfg: &FpConfig) -> Result<EmulatedFloat, ScalarError> {
    if a.signum() < 0 {
        return Err(ScalarError::NegativeSqrt);
    }
    if a.is_zero() {
        return Ok(EmulatedFloat::zero());
    }
    let p = cfg.precision_bits as u64;
    // Even exponent so the square root has a dyadic exponent; scale so the
    // integer square root carries at least p+1 bits.
    let mut exp = a.exp.clone();
    let mut v = a.sig.clone();
    if exp.is_odd() {
        v <<= 1u32;
        exp -= 1;
    }
    let bits = v.bits();
    let want = 2 * (p + 2);
    let t = if bits < want { (want - bits).div_ceil(2) } else { 0 };
    v <<= 2 * t;
    exp -= 2 * t;
    let s = num_integer::Roots::sqrt(&v);
    let hint = if &s * &s == v { Ordering::Equal } else { Ordering::Greater };
    let half_exp = exp / 2;
    let mag = EmulatedFloat::normalized(1, s, half_exp);
    Ok(mag.round_to_with_hint(p as u32, hint))
}

/// Dispatching form of the rounded operations: `fl(a ∘ b)`.
pub fn fp_arith(
    op: FpOp,
    a: &EmulatedFloat,
    b: &EmulatedFloat,
    cfg: &FpConfig,
) -> Result<EmulatedFloat, ScalarError> {
    match op {
        FpOp::Add => Ok(fp_add(a, b, cfg)),
        FpOp::Sub => Ok(fp_sub(a, b, cfg)),
        FpOp::Mul => Ok(fp_mul(a, b, cfg)),
        FpOp::Div => fp_div(a, b, cfg),
    }
}

/// Scientific-notation decimal string of a rational, correctly rounded
/// (half away from zero) to `sig_digits` significant digits:
/// `-d.ddd…e±k`. Exact values whose decimal expansion terminates within
/// the budget still print all `sig_digits` digits, so equal inputs always
/// produce identical strings.
pub fn decimal_string(x: &Rational, sig_digits: u32) -> String {
    assert!(sig_digits >= 1, "need at least one significant digit");
    if x.is_zero() {
        return "0".to_string();
    }
    let sign = if x.numer().is_negative() { "-" } else { "" };
    let n = x.numer().magnitude().clone();
    let d = x.denom().magnitude().clone();

    // e = floor(log10(n/d)): digit-count estimate, then exact adjustment.
    let ten = BigUint::from(10u32);
    let pow10 = |k: u64| -> BigUint { num_traits::pow::pow(ten.clone(), k as usize) };
    let digits_n = n.to_str_radix(10).len() as i64;
    let digits_d = d.to_str_radix(10).len() as i64;
    let mut e = digits_n - digits_d;
    let ge_pow10 = |e: i64| -> bool {
        if e >= 0 {
            n >= &d * pow10(e as u64)
        } else {
            &n * pow10((-e) as u64) >= d
        }
    };
    while !ge_pow10(e) {
        e -= 1;
    }
    while ge_pow10(e + 1) {
        e += 1;
    }

    // m = round(n/d · 10^(sig-1-e)), giving exactly `sig_digits` digits.
    let k = (sig_digits as i64 - 1) - e;
    let (num_s, den_s) = if k >= 0 {
        (&n * pow10(k as u64), d.clone())
    } else {
        (n.clone(), &d * pow10((-k) as u64))
    };
    let (q, r) = num_s.div_rem(&den_s);
    let mut m = if (&r << 1u32) >= den_s { q + BigUint::one() } else { q };
    // Rounding can carry 99…9 into 100…0: one extra digit, bump the exponent.
    if m.to_str_radix(10).len() as u32 > sig_digits {
        m /= &ten;
        e += 1;
    }
    let digits = m.to_str_radix(10);
    debug_assert_eq!(digits.len() as u32, sig_digits);
    if sig_digits == 1 {
        format!("{sign}{digits}e{e}")
    } else {
        format!("{sign}{}.{}e{e}", &digits[..1], &digits[1..])
    }
}
