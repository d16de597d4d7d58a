//! Outward-rounded interval arithmetic on arbitrary-precision binary floats,
//! exact rational inputs, and certified floors of real powers.
//!
//! Lower endpoints are rounded toward negative infinity and upper endpoints
//! toward positive infinity at every step, so an [`Interval`] always encloses
//! the exact real value of the expression that produced it. Transcendentals
//! (`ln`, `exp`, `sqrt`) are correctly rounded by the backend in the requested
//! direction, and all of them are monotone, which makes endpoint evaluation
//! sufficient.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_float::round::mode::{Down, HalfEven, Up};
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Lo = FBig<Down, 2>;
type Hi = FBig<Up, 2>;

/// Default working precision in significant decimal digits.
pub const DEFAULT_DIGITS: u32 = 40;

/// Number of precision doublings tried before a floor is reported ambiguous.
pub const MAX_ESCALATIONS: u32 = 4;

/// Largest exact power (in bits) the floor resolver is willing to build.
const EXACT_POWER_BIT_BUDGET: u64 = 1 << 20;

/// Binary precision carrying at least `digits` significant decimal digits,
/// plus a few guard bits.
pub fn digits_to_bits(digits: u32) -> usize {
    // log2(10) < 3.3220
    (digits as usize * 33220).div_ceil(10000) + 8
}

#[derive(Clone)]
pub struct Interval {
    lo: Lo,
    hi: Hi,
}

impl Interval {
    fn from_parts(lo: Lo, hi: Hi) -> Self {
        debug_assert!(lo <= hi, "inverted interval");
        Interval { lo, hi }
    }

    pub fn from_u64(v: u64, bits: usize) -> Self {
        Self::from_ubig(&UBig::from(v), bits)
    }

    pub fn from_ubig(v: &UBig, bits: usize) -> Self {
        let lo = Lo::from(v.clone()).with_precision(bits).value();
        let hi = Hi::from(v.clone()).with_precision(bits).value();
        Self::from_parts(lo, hi)
    }

    pub fn from_ibig(v: &IBig, bits: usize) -> Self {
        let lo = Lo::from(v.clone()).with_precision(bits).value();
        let hi = Hi::from(v.clone()).with_precision(bits).value();
        Self::from_parts(lo, hi)
    }

    /// Exact enclosure of a finite double (a point interval when `bits >= 53`).
    pub fn from_f64(v: f64, bits: usize) -> Self {
        assert!(v.is_finite(), "non-finite input {v}");
        let lo = Lo::try_from(v).expect("finite").with_precision(bits).value();
        let hi = Hi::try_from(v).expect("finite").with_precision(bits).value();
        Self::from_parts(lo, hi)
    }

    pub fn from_rational(r: &Rational, bits: usize) -> Self {
        Self::from_u64(r.num, bits) / Self::from_u64(r.den, bits)
    }

    pub fn pi(bits: usize) -> Self {
        Self::from_parts(Lo::pi(bits), Hi::pi(bits))
    }

    /// Euler's number, as `exp(1)`.
    pub fn e(bits: usize) -> Self {
        Self::from_u64(1, bits).exp()
    }

    /// Smallest interval containing both arguments.
    pub fn hull(a: &Interval, b: &Interval) -> Interval {
        let lo = if a.lo <= b.lo { a.lo.clone() } else { b.lo.clone() };
        let hi = if a.hi >= b.hi { a.hi.clone() } else { b.hi.clone() };
        Self::from_parts(lo, hi)
    }

    pub fn precision(&self) -> usize {
        self.lo.precision().max(self.hi.precision())
    }

    /// Lower endpoint rounded down to a double.
    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64().value()
    }

    /// Upper endpoint rounded up to a double.
    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64().value()
    }

    pub fn mid_f64(&self) -> f64 {
        let lo = self.lo.clone().with_rounding::<HalfEven>();
        let hi = self.hi.clone().with_rounding::<HalfEven>();
        ((lo + hi) / FBig::<HalfEven, 2>::from(2u8)).to_f64().value()
    }

    /// Upper bound on the width.
    pub fn width_f64(&self) -> f64 {
        let w: Hi = self.hi.clone() - self.lo.clone().with_rounding::<Up>();
        w.to_f64().value()
    }

    pub fn contains_f64(&self, v: f64) -> bool {
        let p = Lo::try_from(v).expect("finite");
        self.lo <= p && p <= self.hi
    }

    pub fn contains_ubig(&self, v: &UBig) -> bool {
        let p = Lo::from(v.clone());
        self.lo <= p && p <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Every point of `self` is strictly below every point of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    pub fn certainly_positive(&self) -> bool {
        self.lo > Lo::ZERO
    }

    pub fn certainly_negative(&self) -> bool {
        self.hi < Hi::ZERO
    }

    /// `Some(sign)` when the sign is decided by the enclosure.
    pub fn sign(&self) -> Option<Ordering> {
        if self.certainly_positive() {
            Some(Ordering::Greater)
        } else if self.certainly_negative() {
            Some(Ordering::Less)
        } else if self.lo == Lo::ZERO && self.hi == Hi::ZERO {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn floor_bounds(&self) -> (IBig, IBig) {
        (
            self.lo.floor().to_int().value(),
            self.hi.floor().to_int().value(),
        )
    }

    pub fn ceil_bounds(&self) -> (IBig, IBig) {
        (
            self.lo.ceil().to_int().value(),
            self.hi.ceil().to_int().value(),
        )
    }

    pub fn ln(&self) -> Result<Interval> {
        if self.lo <= Lo::ZERO {
            return Err(Error::Domain {
                function: "ln",
                value: self.lo_f64(),
                domain: "(0, inf)",
            });
        }
        Ok(Self::from_parts(self.lo.ln(), self.hi.ln()))
    }

    pub fn exp(&self) -> Interval {
        Self::from_parts(self.lo.exp(), self.hi.exp())
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.lo < Lo::ZERO {
            return Err(Error::Domain {
                function: "sqrt",
                value: self.lo_f64(),
                domain: "[0, inf)",
            });
        }
        Ok(Self::from_parts(self.lo.sqrt(), self.hi.sqrt()))
    }

    pub fn recip(&self) -> Interval {
        Self::from_u64(1, self.precision()) / self
    }

    pub fn square(&self) -> Interval {
        let a = self * self;
        if self.lo < Lo::ZERO && self.hi > Hi::ZERO {
            Self::from_parts(Lo::ZERO, a.hi)
        } else {
            a
        }
    }

    /// Midpoint in decimal scientific notation with `sig` significant digits.
    pub fn to_decimal_string(&self, sig: usize) -> String {
        let lo = self.lo.clone().with_rounding::<HalfEven>();
        let hi = self.hi.clone().with_rounding::<HalfEven>();
        let mid = (lo + hi) / FBig::<HalfEven, 2>::from(2u8);
        let dec = mid.with_base_and_precision::<10>(sig).value();
        dec.to_string()
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo_f64(), self.hi_f64())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo_f64(), self.hi_f64())
    }
}

fn as_lo(h: &Hi) -> Lo {
    h.clone().with_rounding::<Down>()
}

fn as_hi(l: &Lo) -> Hi {
    l.clone().with_rounding::<Up>()
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, rhs: &Interval) -> Interval {
        Interval::from_parts(&self.lo + &rhs.lo, &self.hi + &rhs.hi)
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, rhs: &Interval) -> Interval {
        Interval::from_parts(&self.lo - &as_lo(&rhs.hi), &self.hi - &as_hi(&rhs.lo))
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::from_parts(-as_lo(&self.hi), -as_hi(&self.lo))
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, rhs: &Interval) -> Interval {
        let (al, ah) = (&self.lo, &as_lo(&self.hi));
        let (bl, bh) = (&rhs.lo, &as_lo(&rhs.hi));
        let lows = [al * bl, al * bh, ah * bl, ah * bh];
        let (al, ah) = (&as_hi(&self.lo), &self.hi);
        let (bl, bh) = (&as_hi(&rhs.lo), &rhs.hi);
        let highs = [al * bl, al * bh, ah * bl, ah * bh];
        let lo = lows.into_iter().reduce(|a, b| if b < a { b } else { a });
        let hi = highs.into_iter().reduce(|a, b| if b > a { b } else { a });
        Interval::from_parts(lo.expect("nonempty"), hi.expect("nonempty"))
    }
}

impl Div for &Interval {
    type Output = Interval;
    fn div(self, rhs: &Interval) -> Interval {
        assert!(
            rhs.certainly_positive() || rhs.certainly_negative(),
            "interval division by an enclosure of zero"
        );
        let (al, ah) = (&self.lo, &as_lo(&self.hi));
        let (bl, bh) = (&rhs.lo, &as_lo(&rhs.hi));
        let lows = [al / bl, al / bh, ah / bl, ah / bh];
        let (al, ah) = (&as_hi(&self.lo), &self.hi);
        let (bl, bh) = (&as_hi(&rhs.lo), &rhs.hi);
        let highs = [al / bl, al / bh, ah / bl, ah / bh];
        let lo = lows.into_iter().reduce(|a, b| if b < a { b } else { a });
        let hi = highs.into_iter().reduce(|a, b| if b > a { b } else { a });
        Interval::from_parts(lo.expect("nonempty"), hi.expect("nonempty"))
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval { (&self).$m(&rhs) }
        }
        impl $tr<&Interval> for Interval {
            type Output = Interval;
            fn $m(self, rhs: &Interval) -> Interval { (&self).$m(rhs) }
        }
        impl $tr<Interval> for &Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        -&self
    }
}

/// Values that can be enclosed in an [`Interval`].
pub trait ToInterval {
    fn to_interval(&self, bits: usize) -> Interval;
}

impl ToInterval for u64 {
    fn to_interval(&self, bits: usize) -> Interval {
        Interval::from_u64(*self, bits)
    }
}

impl ToInterval for UBig {
    fn to_interval(&self, bits: usize) -> Interval {
        Interval::from_ubig(self, bits)
    }
}

impl ToInterval for f64 {
    fn to_interval(&self, bits: usize) -> Interval {
        Interval::from_f64(*self, bits)
    }
}

impl ToInterval for Rational {
    fn to_interval(&self, bits: usize) -> Interval {
        Interval::from_rational(self, bits)
    }
}

impl ToInterval for Interval {
    fn to_interval(&self, _bits: usize) -> Interval {
        self.clone()
    }
}

/// Enclosure of `ln x` whose width is at most `10^(2 - digits)`.
pub fn ln_hp<T: ToInterval + ?Sized>(x: &T, digits: u32) -> Result<Interval> {
    x.to_interval(digits_to_bits(digits)).ln()
}

/// A nonnegative rational read exactly from user input (`0.2`, `1/3`, `2.5e-1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let g = gcd(num, den).max(1);
        Ok(Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `1 + self` as (numerator, denominator), without overflow.
    pub fn one_plus(&self) -> (u128, u128) {
        (self.den as u128 + self.num as u128, self.den as u128)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse {s:?} as a nonnegative rational"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Rational::new(n, d).map_err(|_| bad());
        }
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let mantissa = mantissa.strip_prefix('+').unwrap_or(mantissa);
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num = UBig::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
        let mut den = UBig::ONE;
        let scale = exp - frac_part.len() as i32;
        if scale >= 0 {
            num *= UBig::from(10u8).pow(scale as usize);
        } else {
            den = UBig::from(10u8).pow((-scale) as usize);
        }
        let g = dashu_int::ops::Gcd::gcd(&num, &den);
        let num = u64::try_from(&num / &g).map_err(|_| bad())?;
        let den = u64::try_from(&den / &g).map_err(|_| bad())?;
        Rational::new(num, den)
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certainty {
    Certified,
    Ambiguous,
}

/// `floor(g^(1+alpha))` together with how it was established.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedFloor {
    #[serde(with = "crate::report::ubig_string")]
    pub value: UBig,
    pub input_expression: String,
    pub certainty: Certainty,
    /// Significant decimal digits of the final evaluation.
    pub working_precision: u32,
    /// Decided by exact integer comparison rather than by the enclosure.
    pub exact: bool,
}

impl CertifiedFloor {
    pub fn is_certified(&self) -> bool {
        self.certainty == Certainty::Certified
    }
}

/// Enclosure of `g^(1+alpha)` at the given number of decimal digits.
pub fn power_enclosure(g: u64, alpha: &Rational, digits: u32) -> Interval {
    let bits = digits_to_bits(digits);
    let (n, d) = alpha.one_plus();
    let exponent = Interval::from_ubig(&UBig::from(n), bits) / Interval::from_ubig(&UBig::from(d), bits);
    let ln_g = Interval::from_u64(g, bits).ln().expect("g >= 1");
    (ln_g * exponent).exp()
}

/// Exact comparison of `g^(n/d)` against the integer `candidate`, when the
/// powers involved are small enough to build.
fn exact_power_cmp(g: u64, n: u128, d: u128, candidate: &UBig) -> Option<Ordering> {
    let log2_g = 64 - g.leading_zeros() as u128;
    let bits = n.checked_mul(log2_g)?;
    if bits > EXACT_POWER_BIT_BUDGET as u128 || d > EXACT_POWER_BIT_BUDGET as u128 {
        return None;
    }
    let lhs = UBig::from(g).pow(n as usize);
    let rhs = candidate.pow(d as usize);
    Some(lhs.cmp(&rhs))
}

/// Certified `floor(g^(1+alpha))`.
///
/// Starts at `digits` significant digits and doubles up to [`MAX_ESCALATIONS`]
/// times while the enclosure straddles an integer. Exact powers (for example
/// `100^2` or `10^(6*3/2)`) never separate from the integer, so a straddle is
/// first tried as an exact comparison `g^n` vs `N^d` with `1+alpha = n/d`.
pub fn power_floor(g: u64, alpha: &Rational, digits: u32) -> Result<CertifiedFloor> {
    if g < 2 {
        return Err(Error::InvalidArgument(format!("power_floor needs g >= 2, got {g}")));
    }
    if digits < 20 {
        return Err(Error::InvalidArgument(format!("power_floor needs precision >= 20, got {digits}")));
    }
    let input_expression = format!("{g}^(1+{alpha})");
    let (n, d) = alpha.one_plus();
    let mut working = digits;
    let mut last_floor = UBig::ZERO;
    for attempt in 0..=MAX_ESCALATIONS {
        working = digits << attempt;
        let enclosure = power_enclosure(g, alpha, working);
        let (lo, hi) = enclosure.floor_bounds();
        let lo = UBig::try_from(lo).expect("g^(1+alpha) >= 1");
        let hi = UBig::try_from(hi).expect("g^(1+alpha) >= 1");
        if lo == hi {
            return Ok(CertifiedFloor {
                value: lo,
                input_expression,
                certainty: Certainty::Certified,
                working_precision: working,
                exact: false,
            });
        }
        // width < 1, so `hi` is the only integer the enclosure can contain
        if let Some(ord) = exact_power_cmp(g, n, d, &hi) {
            let value = if ord == Ordering::Less { lo } else { hi };
            return Ok(CertifiedFloor {
                value,
                input_expression,
                certainty: Certainty::Certified,
                working_precision: working,
                exact: true,
            });
        }
        last_floor = lo;
    }
    Ok(CertifiedFloor {
        value: last_floor,
        input_expression,
        certainty: Certainty::Ambiguous,
        working_precision: working,
        exact: false,
    })
}
