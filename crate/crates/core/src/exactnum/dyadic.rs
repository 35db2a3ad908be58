use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rat::{sign_of, Rat};
use crate::error::Error;

/// Largest exponent magnitude (in bits) that may be materialised, either when
/// converting to [`Rat`] or when aligning two operands for addition.
pub const MAX_MATERIALIZED_BITS: u64 = 1_000_000;

/// `sign · mantissa · 2^exponent` with an odd mantissa and a big-integer exponent.
///
/// The exponent is never expanded into a denominator unless a caller asks for it,
/// so values such as `2^(-2^523)` are cheap to hold, multiply and compare.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    sign: i8,
    mantissa: BigUint,
    exponent: BigInt,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { sign: 0, mantissa: BigUint::zero(), exponent: BigInt::zero() }
    }

    pub fn one() -> Self {
        Dyadic::pow2(BigInt::zero())
    }

    /// `2^e`.
    pub fn pow2(e: impl Into<BigInt>) -> Self {
        Dyadic { sign: 1, mantissa: BigUint::one(), exponent: e.into() }
    }

    pub fn new(sign: i8, mantissa: impl Into<BigUint>, exponent: impl Into<BigInt>) -> Self {
        let m = mantissa.into();
        if sign == 0 || m.is_zero() {
            return Dyadic::zero();
        }
        let mut d = Dyadic { sign: sign.signum(), mantissa: m, exponent: exponent.into() };
        d.normalize();
        d
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        let n = n.into();
        let s = sign_of(&n);
        Dyadic::new(s, n.magnitude().clone(), 0)
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            *self = Dyadic::zero();
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz as usize;
            self.exponent += tz;
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> &BigInt {
        &self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// `Some(e)` when the value is exactly `2^e`.
    pub fn log2_exact(&self) -> Option<&BigInt> {
        (self.sign == 1 && self.mantissa.is_one()).then_some(&self.exponent)
    }

    /// Exponent of the leading bit plus one; defines magnitude order.
    fn top(&self) -> BigInt {
        &self.exponent + BigInt::from(self.mantissa.bits())
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { sign: -self.sign, ..self.clone() }
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic { sign: self.sign.abs(), ..self.clone() }
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() || other.is_zero() {
            return Dyadic::zero();
        }
        Dyadic::new(self.sign * other.sign, &self.mantissa * &other.mantissa, &self.exponent + &other.exponent)
    }

    /// Multiplies by `2^e`; never fails.
    pub fn mul_pow2(&self, e: impl Into<BigInt>) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { sign: self.sign, mantissa: self.mantissa.clone(), exponent: &self.exponent + e.into() }
    }

    /// Exact sum; refuses when the exponents are too far apart to align.
    pub fn add(&self, other: &Dyadic) -> Result<Dyadic, Error> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let (lo, hi) = if self.exponent <= other.exponent { (self, other) } else { (other, self) };
        let shift = (&hi.exponent - &lo.exponent).to_u64().filter(|s| *s <= MAX_MATERIALIZED_BITS).ok_or_else(|| {
            Error::ExponentTooLarge(format!("aligning exponents {} and {}", lo.exponent, hi.exponent))
        })?;
        let a = BigInt::from(lo.mantissa.clone()) * lo.sign as i64;
        let b = (BigInt::from(hi.mantissa.clone()) << shift as usize) * hi.sign as i64;
        let s = a + b;
        Ok(Dyadic::new(sign_of(&s), s.magnitude().clone(), lo.exponent.clone()))
    }

    pub fn sub(&self, other: &Dyadic) -> Result<Dyadic, Error> {
        self.add(&other.neg())
    }

    fn cmp_magnitude(&self, other: &Dyadic) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.top().cmp(&other.top()) {
            Ordering::Equal => {}
            o => return o,
        }
        // Same leading-bit position: exponents differ by less than the mantissa width.
        let (a, b) = (&self.mantissa, &other.mantissa);
        match self.exponent.cmp(&other.exponent) {
            Ordering::Equal => a.cmp(b),
            Ordering::Greater => {
                let s = (&self.exponent - &other.exponent).to_usize().expect("bounded by mantissa width");
                (a << s).cmp(b)
            }
            Ordering::Less => {
                let s = (&other.exponent - &self.exponent).to_usize().expect("bounded by mantissa width");
                a.cmp(&(b << s))
            }
        }
    }

    /// Exact conversion; refuses beyond [`MAX_MATERIALIZED_BITS`].
    pub fn to_rat(&self) -> Result<Rat, Error> {
        if self.is_zero() {
            return Ok(Rat::zero());
        }
        let e = self.exponent.to_i64().filter(|e| e.unsigned_abs() <= MAX_MATERIALIZED_BITS).ok_or_else(|| {
            Error::ExponentTooLarge(format!("exponent {} cannot be materialised", self.exponent))
        })?;
        let m = Rat::from_int(BigInt::from(self.mantissa.clone()) * self.sign as i64);
        Ok(m * Rat::pow2(e))
    }

    /// Exact conversion from a rational whose denominator is a power of two.
    pub fn from_rat(r: &Rat) -> Option<Dyadic> {
        if r.is_zero() {
            return Some(Dyadic::zero());
        }
        let d = r.denom().magnitude();
        if d.count_ones() != 1 {
            return None;
        }
        let k = d.bits() - 1;
        let n = r.numer();
        Some(Dyadic::new(sign_of(n), n.magnitude().clone(), -BigInt::from(k)))
    }

    /// Nearest `f64`, flushing to zero or saturating when out of range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let top = self.top();
        if top < BigInt::from(-1100) {
            return 0.0;
        }
        if top > BigInt::from(1100) {
            return self.sign as f64 * f64::INFINITY;
        }
        let e = self.exponent.to_i64().unwrap();
        let bits = self.mantissa.bits() as i64;
        let (m, e) = if bits > 64 {
            let drop = bits - 64;
            ((&self.mantissa >> drop as usize).to_f64().unwrap(), e + drop)
        } else {
            (self.mantissa.to_f64().unwrap(), e)
        };
        self.sign as f64 * m * 2f64.powi(e.clamp(-1200, 1200) as i32)
    }

    /// True when the value is an odd multiple of a power of two, i.e. always for nonzero values.
    pub fn is_normalized(&self) -> bool {
        self.is_zero() || self.mantissa.is_odd()
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            o => return o,
        }
        match self.sign {
            0 => Ordering::Equal,
            1 => self.cmp_magnitude(other),
            _ => other.cmp_magnitude(self),
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = self.exponent.bits();
        if bits > 128 {
            write!(f, "{}{}·2^(<{}-bit exponent>)", if self.sign < 0 { "-" } else { "" }, self.mantissa, bits)
        } else {
            write!(f, "{}{}·2^{}", if self.sign < 0 { "-" } else { "" }, self.mantissa, self.exponent)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    sign: i8,
    mantissa: String,
    exp2: String,
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DyadicRepr { sign: self.sign, mantissa: self.mantissa.to_string(), exp2: self.exponent.to_string() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = DyadicRepr::deserialize(d)?;
        let m = BigUint::from_str(&r.mantissa).map_err(serde::de::Error::custom)?;
        let e = BigInt::from_str(&r.exp2).map_err(serde::de::Error::custom)?;
        if !matches!(r.sign, -1..=1) {
            return Err(serde::de::Error::custom("sign must be -1, 0 or 1"));
        }
        Ok(Dyadic::new(r.sign, m, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_to_odd_mantissa() {
        let d = Dyadic::new(1, 12u32, 0);
        assert_eq!(d.mantissa(), &BigUint::from(3u32));
        assert_eq!(d.exponent(), &BigInt::from(2));
        assert!(d.is_normalized());
    }

    #[test]
    fn astronomical_exponents_compare_without_materialising() {
        // 2^(-2^523) versus 2^-520
        let huge = BigInt::one() << 523usize;
        let tiny = Dyadic::pow2(-huge);
        let small = Dyadic::pow2(-520);
        assert!(tiny < small);
        assert!(tiny > Dyadic::zero());
        assert!(tiny.neg() < Dyadic::zero());
        assert!(tiny.to_rat().is_err());
        assert!(tiny.add(&small).is_err());
        assert_eq!(tiny.to_f64(), 0.0);
    }

    #[test]
    fn same_top_bit_comparison_aligns() {
        // 3·2^0 = 3 versus 5·2^-1 = 2.5, both have their top bit at 2^1
        let a = Dyadic::new(1, 3u32, 0);
        let b = Dyadic::new(1, 5u32, -1);
        assert!(a > b);
        assert!(a.neg() < b.neg());
    }

    #[test]
    fn json_shape() {
        let d = Dyadic::pow2(-512);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"sign":1,"mantissa":"1","exp2":"-512"}"#);
        let back: Dyadic = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rat_conversion_refuses_past_limit() {
        let ok = Dyadic::pow2(-(MAX_MATERIALIZED_BITS as i64));
        assert!(ok.to_rat().is_ok());
        let too_far = Dyadic::pow2(-(MAX_MATERIALIZED_BITS as i64) - 1);
        assert!(too_far.to_rat().is_err());
        assert!(Dyadic::from_rat(&Rat::new(1, 3)).is_none());
    }

    proptest! {
        #[test]
        fn rat_round_trip_and_order(m1 in -5000i64..5000, e1 in -80i64..80, m2 in -5000i64..5000, e2 in -80i64..80) {
            let a = Dyadic::from_int(m1).mul_pow2(e1);
            let b = Dyadic::from_int(m2).mul_pow2(e2);
            let (ra, rb) = (a.to_rat().unwrap(), b.to_rat().unwrap());
            prop_assert_eq!(Dyadic::from_rat(&ra).unwrap(), a.clone());
            prop_assert_eq!(a.cmp(&b), ra.cmp(&rb));
            prop_assert_eq!(a.add(&b).unwrap().to_rat().unwrap(), ra.clone() + &rb);
            prop_assert_eq!(a.mul(&b).to_rat().unwrap(), ra * rb);
        }
    }
}
