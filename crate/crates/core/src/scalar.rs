//! Extended-range binary floating point scalar.
//!
//! Masses in the generated spaces span hundreds of binary orders of magnitude
//! (the normalization weights shrink super-exponentially while leaf masses
//! grow), so nothing here goes through `f64`. Values carry a binary mantissa
//! of configurable width and a 32-bit exponent.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use astro_float::{BigFloat, Consts, RoundingMode, Sign, Word};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Default mantissa width in bits.
pub const DEFAULT_PRECISION: usize = 128;
/// Narrowest mantissa accepted by [`set_working_precision`].
pub const MIN_PRECISION: usize = 64;

const RM: RoundingMode = RoundingMode::ToEven;
const GUARD_BITS: usize = 64;
// Exact sums are capped at this many mantissa bits; beyond it the fixed
// pairwise tree still makes the result deterministic.
const MAX_EXACT_SUM_BITS: usize = 16384;
const WORD_BITS: usize = Word::BITS as usize;

static WORKING_PRECISION: AtomicUsize = AtomicUsize::new(DEFAULT_PRECISION);

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// Sets the mantissa width used for every value created afterwards.
///
/// Widths are rounded up to a multiple of 64 bits.
pub fn set_working_precision(bits: usize) {
    let bits = bits.max(MIN_PRECISION);
    let bits = bits.div_ceil(WORD_BITS) * WORD_BITS;
    WORKING_PRECISION.store(bits, AtomicOrdering::SeqCst);
}

pub fn working_precision() -> usize {
    WORKING_PRECISION.load(AtomicOrdering::SeqCst)
}

/// A real number `sign * mantissa * 2^exponent`.
#[derive(Clone)]
pub struct ExtScalar(BigFloat);

impl ExtScalar {
    fn wrap(v: BigFloat) -> Self {
        debug_assert!(
            !v.is_nan(),
            "ExtScalar operation produced NaN: {:?}",
            v.err()
        );
        ExtScalar(v)
    }

    fn prec(&self) -> usize {
        self.0.mantissa_max_bit_len().unwrap_or(DEFAULT_PRECISION)
    }

    /// Mantissa width of this value in bits.
    pub fn precision(&self) -> usize {
        self.prec()
    }

    fn out_prec(&self, other: &Self) -> usize {
        self.prec().max(other.prec()).max(working_precision())
    }

    pub fn zero() -> Self {
        Self::from_u64(0)
    }

    pub fn one() -> Self {
        Self::from_u64(1)
    }

    pub fn from_u64(v: u64) -> Self {
        Self::wrap(BigFloat::from_u64(v, working_precision()))
    }

    pub fn from_i64(v: i64) -> Self {
        Self::wrap(BigFloat::from_i64(v, working_precision()))
    }

    pub fn from_u128(v: u128) -> Self {
        Self::wrap(BigFloat::from_u128(v, working_precision().max(128)))
            .round_to(working_precision())
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "non-finite f64 {v}");
        Self::wrap(BigFloat::from_f64(v, working_precision().max(64)))
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        if v.is_zero() {
            return Self::zero();
        }
        let words: Vec<Word> = v.to_u64_digits().into_iter().map(|w| w as Word).collect();
        let bits = (words.len() * WORD_BITS) as i32;
        let exact = BigFloat::from_words(&words, Sign::Pos, bits);
        Self::wrap(exact).round_to(working_precision())
    }

    /// `2^e`, exact.
    pub fn pow2(e: i64) -> Self {
        let mut v = BigFloat::from_u64(1, working_precision());
        let e = i32::try_from(e + 1).expect("exponent out of range");
        v.set_exponent(e);
        Self::wrap(v)
    }

    fn round_to(self, p: usize) -> Self {
        let mut v = self.0;
        if v.mantissa_max_bit_len().is_some_and(|m| m != p) {
            v.set_precision(p, RM).expect("set precision");
        }
        Self::wrap(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn is_negative(&self) -> bool {
        !self.is_zero() && self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && self.0.is_positive()
    }

    pub fn signum(&self) -> i8 {
        if self.is_zero() {
            0
        } else if self.0.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn abs(&self) -> Self {
        let mut v = self.0.clone();
        v.set_sign(Sign::Pos);
        Self::wrap(v)
    }

    pub fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn recip(&self) -> Self {
        &Self::one() / self
    }

    pub fn sqrt(&self) -> Self {
        let p = self.prec().max(working_precision());
        Self::wrap(self.0.sqrt(p, RM))
    }

    /// Integer power by repeated squaring, carried out with guard bits.
    pub fn powi(&self, n: i64) -> Self {
        let p = self.prec().max(working_precision());
        let wide = self.0.powi(n.unsigned_abs() as usize, p + GUARD_BITS, RM);
        let v = if n < 0 {
            BigFloat::from_u64(1, p + GUARD_BITS).div(&wide, p + GUARD_BITS, RM)
        } else {
            wide
        };
        Self::wrap(v).round_to(p)
    }

    /// `self^e` for `self >= 0`.
    ///
    /// Integer and half-integer exponents go through exact-friendly paths so
    /// that e.g. `4^1.5` is exactly 8.
    pub fn powf(&self, e: &ExtScalar) -> Self {
        assert!(!self.is_negative(), "powf of a negative base");
        if e.is_zero() {
            return Self::one();
        }
        if self.is_zero() {
            assert!(e.is_positive(), "0 raised to a non-positive power");
            return Self::zero();
        }
        if let Some(k) = e.to_small_int() {
            return self.powi(k);
        }
        if let Some(k2) = (e * &Self::from_u64(2)).to_small_int() {
            return self.sqrt().powi(k2);
        }
        let p = self.out_prec(e);
        let v = CONSTS.with(|cc| self.0.pow(&e.0, p + GUARD_BITS, RM, &mut cc.borrow_mut()));
        Self::wrap(v).round_to(p)
    }

    pub fn powf64(&self, e: f64) -> Self {
        self.powf(&Self::from_f64(e))
    }

    /// Natural logarithm, for `self > 0`.
    pub fn ln(&self) -> Self {
        let p = self.prec().max(working_precision());
        let v = CONSTS.with(|cc| self.0.ln(p + GUARD_BITS, RM, &mut cc.borrow_mut()));
        Self::wrap(v).round_to(p)
    }

    /// Integer value if `self` is an integer of magnitude below 2^40.
    pub fn to_small_int(&self) -> Option<i64> {
        if self.is_zero() {
            return Some(0);
        }
        if !self.0.is_int() {
            return None;
        }
        let (m, e) = self.to_parts()?;
        if e < 0 || m.bits() as i64 + e > 40 {
            return None;
        }
        let mag = (m << e as usize).to_i64()?;
        Some(if self.is_negative() { -mag } else { mag })
    }

    pub fn floor(&self) -> Self {
        Self::wrap(self.0.floor())
    }

    /// Floor of a nonnegative value as a big integer.
    pub fn floor_biguint(&self) -> BigUint {
        assert!(!self.is_negative());
        let f = self.floor();
        match f.to_parts() {
            None => BigUint::zero(),
            Some((m, e)) if e >= 0 => m << e as usize,
            Some((m, e)) => m >> (-e) as usize,
        }
    }

    /// Odd integer mantissa `m` and exponent `e` with `|self| = m * 2^e`;
    /// `None` for zero.
    pub fn to_parts(&self) -> Option<(BigUint, i64)> {
        if self.is_zero() {
            return None;
        }
        let (words, _, _, exp, _) = self.0.as_raw_parts()?;
        let mut bytes = Vec::with_capacity(words.len() * 8);
        for w in words {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        let mut m = BigUint::from_bytes_le(&bytes);
        let mut e = exp as i64 - (words.len() * WORD_BITS) as i64;
        let tz = m.trailing_zeros().unwrap_or(0);
        m >>= tz as usize;
        e += tz as i64;
        Some((m, e))
    }

    /// Builds `sign * m * 2^e` exactly.
    pub fn from_parts(negative: bool, m: &BigUint, e: i64) -> Self {
        if m.is_zero() {
            return Self::zero();
        }
        let words: Vec<Word> = m.to_u64_digits().into_iter().map(|w| w as Word).collect();
        let bits = (words.len() * WORD_BITS) as i64;
        let exp = i32::try_from(bits + e).expect("exponent out of range");
        let sign = if negative { Sign::Neg } else { Sign::Pos };
        let v = Self::wrap(BigFloat::from_words(&words, sign, exp));
        let p = v.prec().max(working_precision());
        v.round_to(p)
    }

    /// Approximate `log2(|self|)`; `-inf` for zero.
    pub fn log2_approx(&self) -> f64 {
        match self.to_parts() {
            None => f64::NEG_INFINITY,
            Some((m, e)) => {
                let bits = m.bits() as i64;
                let shift = (bits - 53).max(0);
                let top = (&m >> shift as usize).to_f64().unwrap_or(1.0);
                top.log2() + (e + shift) as f64
            }
        }
    }

    /// Nearest `f64`, saturating to 0 or infinity outside its range.
    pub fn to_f64(&self) -> f64 {
        let l = self.log2_approx();
        if l == f64::NEG_INFINITY {
            return 0.0;
        }
        let (m, e) = self.to_parts().expect("nonzero");
        let bits = m.bits() as i64;
        let shift = (bits - 64).max(0);
        let top = (&m >> shift as usize).to_f64().unwrap_or(0.0);
        let mag = if e + shift > 1100 {
            f64::INFINITY
        } else if e + shift < -1200 {
            0.0
        } else {
            top * 2f64.powi((e + shift) as i32)
        };
        if self.is_negative() {
            -mag
        } else {
            mag
        }
    }

    /// `|a - b| <= tol * max(|a|, |b|)`.
    pub fn approx_eq_rel(&self, other: &Self, tol: f64) -> bool {
        let diff = (self - other).abs();
        if diff.is_zero() {
            return true;
        }
        let scale = self.abs().max_of(other.abs());
        diff <= &scale * &Self::from_f64(tol)
    }

    /// `self <= bound * (1 + tol)` for nonnegative bounds.
    pub fn le_rel(&self, bound: &Self, tol: f64) -> bool {
        *self <= bound * &(Self::one() + Self::from_f64(tol))
    }

    /// Relative difference `|a - b| / max(|a|, |b|)` (0 when both vanish).
    pub fn rel_diff(&self, other: &Self) -> Self {
        let diff = (self - other).abs();
        if diff.is_zero() {
            return Self::zero();
        }
        diff / self.abs().max_of(other.abs())
    }

    /// Sum with exact intermediate additions over a fixed pairwise tree,
    /// rounded once at the end.
    pub fn sum<'a, I>(items: I) -> Self
    where
        I: IntoIterator<Item = &'a ExtScalar>,
    {
        let v: Vec<&ExtScalar> = items.into_iter().collect();
        if v.is_empty() {
            return Self::zero();
        }
        let exact = pairwise_exact(&v);
        let p = working_precision().max(v.iter().map(|x| x.prec()).max().unwrap_or(0));
        Self::wrap(exact).round_to(p)
    }

    /// Unrounded sum; feed the running total back in and finish with
    /// [`ExtScalar::rounded`] to reproduce [`ExtScalar::sum`] bit for bit.
    pub fn add_exact(&self, other: &ExtScalar) -> ExtScalar {
        Self::wrap(add_exact(&self.0, &other.0))
    }

    /// Rounds to the working precision (or the operand's own, if wider than
    /// `floor`).
    pub fn rounded(&self, floor: usize) -> ExtScalar {
        self.clone().round_to(working_precision().max(floor))
    }

    /// Same as [`ExtScalar::sum`] for owned values.
    pub fn sum_owned(items: &[ExtScalar]) -> Self {
        Self::sum(items.iter())
    }

    /// Exact textual form `[-]0x<odd hex mantissa>p<exp>`, or `0`.
    pub fn to_exp2_string(&self) -> String {
        match self.to_parts() {
            None => "0".to_string(),
            Some((m, e)) => {
                let sign = if self.is_negative() { "-" } else { "" };
                format!("{sign}0x{}p{e}", m.to_str_radix(16))
            }
        }
    }

    pub fn parse_exp2(s: &str) -> Option<Self> {
        let s = s.trim();
        if s == "0" {
            return Some(Self::zero());
        }
        let (neg, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let rest = rest.strip_prefix("0x")?;
        let (mant, exp) = rest.split_once('p')?;
        let m = BigUint::parse_bytes(mant.as_bytes(), 16)?;
        let e: i64 = exp.parse().ok()?;
        Some(Self::from_parts(neg, &m, e))
    }

    /// Decimal rendering with `digits` significant digits (trailing zeros
    /// trimmed), plain notation for moderate magnitudes and `d.ddde±k`
    /// otherwise.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let digits = digits.max(1);
        let Some((m, e)) = self.to_parts() else {
            return "0".to_string();
        };
        let sign = if self.is_negative() { "-" } else { "" };
        // Initial guess for floor(log10 |x|).
        let mut k = ((m.bits() as f64 - 1.0 + e as f64) * std::f64::consts::LOG10_2).floor() as i64;
        let ten = BigUint::from(10u32);
        let lower = ten.pow((digits - 1) as u32);
        let upper = ten.pow(digits as u32);
        let q = loop {
            let s = digits as i64 - 1 - k;
            let mut num = m.clone();
            let mut den = BigUint::one();
            if e >= 0 {
                num <<= e as usize;
            } else {
                den <<= (-e) as usize;
            }
            if s >= 0 {
                num *= ten.pow(s as u32);
            } else {
                den *= ten.pow((-s) as u32);
            }
            let q = round_half_even(&num, &den);
            if q >= upper {
                k += 1;
            } else if q < lower {
                k -= 1;
            } else {
                break q;
            }
        };
        let mut ds = q.to_str_radix(10);
        while ds.len() > 1 && ds.ends_with('0') {
            ds.pop();
        }
        if (-7..21).contains(&k) {
            if k >= 0 {
                let k = k as usize;
                if ds.len() <= k + 1 {
                    let zeros = "0".repeat(k + 1 - ds.len());
                    format!("{sign}{ds}{zeros}")
                } else {
                    format!("{sign}{}.{}", &ds[..=k], &ds[k + 1..])
                }
            } else {
                let zeros = "0".repeat((-k - 1) as usize);
                format!("{sign}0.{zeros}{ds}")
            }
        } else if ds.len() == 1 {
            format!("{sign}{ds}e{k}")
        } else {
            format!("{sign}{}.{}e{k}", &ds[..1], &ds[1..])
        }
    }

    /// Decimal rendering with as many digits as the mantissa width carries.
    pub fn to_decimal(&self) -> String {
        let digits = (self.prec() as f64 * std::f64::consts::LOG10_2).floor() as usize + 1;
        self.to_decimal_string(digits)
    }
}

fn round_half_even(num: &BigUint, den: &BigUint) -> BigUint {
    let q = num / den;
    let r = num - &q * den;
    let twice = &r << 1usize;
    match twice.cmp(den) {
        Ordering::Greater => q + 1u32,
        Ordering::Less => q,
        Ordering::Equal => {
            if q.bit(0) {
                q + 1u32
            } else {
                q
            }
        }
    }
}

fn pairwise_exact(v: &[&ExtScalar]) -> BigFloat {
    match v.len() {
        1 => v[0].0.clone(),
        2 => add_exact(&v[0].0, &v[1].0),
        n => {
            let (l, r) = v.split_at(n / 2);
            add_exact(&pairwise_exact(l), &pairwise_exact(r))
        }
    }
}

fn add_exact(a: &BigFloat, b: &BigFloat) -> BigFloat {
    let s = a.add_full_prec(b);
    match s.mantissa_max_bit_len() {
        Some(bits) if bits > MAX_EXACT_SUM_BITS => a.add(b, MAX_EXACT_SUM_BITS, RM),
        _ => s,
    }
}

impl PartialEq for ExtScalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtScalar {}

impl PartialOrd for ExtScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return 0.cmp(&other.signum()),
            (false, true) => return self.signum().cmp(&0),
            _ => {}
        }
        let c = self.0.cmp(&other.0).expect("comparison with NaN");
        c.cmp(&0)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl<'a> $tr<&'a ExtScalar> for &'a ExtScalar {
            type Output = ExtScalar;
            fn $method(self, rhs: &'a ExtScalar) -> ExtScalar {
                let p = self.out_prec(rhs);
                ExtScalar::wrap(self.0.$inner(&rhs.0, p, RM))
            }
        }
        impl $tr<ExtScalar> for ExtScalar {
            type Output = ExtScalar;
            fn $method(self, rhs: ExtScalar) -> ExtScalar {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a ExtScalar> for ExtScalar {
            type Output = ExtScalar;
            fn $method(self, rhs: &'a ExtScalar) -> ExtScalar {
                (&self).$method(rhs)
            }
        }
        impl<'a> $tr<ExtScalar> for &'a ExtScalar {
            type Output = ExtScalar;
            fn $method(self, rhs: ExtScalar) -> ExtScalar {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for ExtScalar {
    type Output = ExtScalar;
    fn neg(self) -> ExtScalar {
        ExtScalar::wrap(self.0.neg())
    }
}

impl fmt::Debug for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({})",
            self.to_decimal_string(24),
            self.to_exp2_string()
        )
    }
}

impl fmt::Display for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

/// Serialized as `{"dec": <decimal>, "exp2": <exact binary form>}`.
impl serde::Serialize for ExtScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("dec", &self.to_decimal())?;
        m.serialize_entry("exp2", &self.to_exp2_string())?;
        m.end()
    }
}

impl From<u64> for ExtScalar {
    fn from(v: u64) -> Self {
        Self::from_u64(v)
    }
}

impl From<u32> for ExtScalar {
    fn from(v: u32) -> Self {
        Self::from_u64(v as u64)
    }
}
