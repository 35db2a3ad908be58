use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Exact rational number, always kept in lowest terms with a positive denominator.
///
/// Serialized as the string `"p/q"` (the denominator is always written, even when it is 1).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        let d = denom.into();
        assert!(!d.is_zero(), "zero denominator");
        Rat(BigRational::new(numer.into(), d))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rat(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    /// `2^e` for any (possibly negative) exponent.
    pub fn pow2(e: i64) -> Self {
        let p = BigInt::one() << e.unsigned_abs();
        if e >= 0 {
            Rat::from_int(p)
        } else {
            Rat(BigRational::new_raw(BigInt::one(), p))
        }
    }

    /// `1 / n`.
    pub fn recip_int(n: u64) -> Self {
        Rat::new(1, n)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn recip(&self) -> Rat {
        Rat(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn pow(&self, e: i32) -> Rat {
        Rat(num_traits::Pow::pow(&self.0, e))
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// Rewrites the values over their least common denominator: `values[i] = nums[i] / denom`.
    pub fn common_numerators(values: &[Rat]) -> (Vec<BigInt>, BigInt) {
        let denom = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let nums = values.iter().map(|v| v.numer() * (&denom / v.denom())).collect();
        (nums, denom)
    }

    /// Nearest `f64`. Values below the subnormal range flush to zero; values
    /// above `f64::MAX` saturate to infinity (callers that need finiteness check it).
    pub fn to_f64(&self) -> f64 {
        if let Some(v) = self.0.to_f64() {
            if v.is_finite() && (v != 0.0 || self.is_zero()) {
                return v;
            }
        }
        // Fall back to a scaled division that never materialises a huge float.
        let n = self.numer();
        let d = self.denom();
        let shift = n.bits() as i64 - d.bits() as i64;
        // Bring the quotient into [2^52, 2^54) before converting.
        let (nn, dd) = if shift < 53 {
            (n << (53 - shift) as usize, d.clone())
        } else {
            (n.clone(), d << (shift - 53) as usize)
        };
        let q = nn.div_floor(&dd).to_f64().unwrap_or(f64::NAN);
        q * 2f64.powi((shift - 53).clamp(-2000, 2000) as i32)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64) -> Option<Rat> {
        BigRational::from_float(v).map(Rat)
    }

    /// Parses `p/q`, an integer, or a plain decimal such as `-0.375` or `1.5e-3`,
    /// all without passing through binary floating point.
    pub fn parse(s: &str) -> Result<Rat, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational: {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            return Ok(Rat::new(p, q));
        }
        let (mantissa, exp10) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (neg, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let all = format!("{int_part}{frac_part}");
        let n = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
        let scale = exp10 - frac_part.len() as i32;
        let ten = Rat::from_int(10);
        let mut r = Rat::from_int(n) * ten.pow(scale);
        if neg {
            r = -r;
        }
        Ok(r)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rat::parse(s)
    }
}

impl From<i64> for Rat {
    fn from(v: i64) -> Self {
        Rat::from_int(v)
    }
}

impl From<BigRational> for Rat {
    fn from(v: BigRational) -> Self {
        Rat(v)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Rat::parse(&s).map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                Rat(self.0.$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: &'a Rat) -> Rat {
                Rat(self.0.$m(&rhs.0))
            }
        }
        impl<'a> $tr<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $m(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$m(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

/// Sign of a big integer as -1/0/+1.
pub(crate) fn sign_of(n: &BigInt) -> i8 {
    match n.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn display_always_has_denominator() {
        assert_eq!(Rat::from_int(3).to_string(), "3/1");
        assert_eq!(Rat::new(-2, 4).to_string(), "-1/2");
        assert_eq!(Rat::new(3, -6).to_string(), "-1/2");
    }

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(Rat::parse("10/21").unwrap(), Rat::new(10, 21));
        assert_eq!(Rat::parse("0.3").unwrap(), Rat::new(3, 10));
        assert_eq!(Rat::parse("-0.7").unwrap(), Rat::new(-7, 10));
        assert_eq!(Rat::parse("1.5e-3").unwrap(), Rat::new(3, 2000));
        assert_eq!(Rat::parse("-2").unwrap(), Rat::from_int(-2));
        assert_eq!(Rat::parse(".5").unwrap(), Rat::new(1, 2));
        assert!(Rat::parse("1/0").is_err());
        assert!(Rat::parse("abc").is_err());
        assert!(Rat::parse("").is_err());
    }

    #[test]
    fn tiny_values_convert_to_f64() {
        let v = Rat::pow2(-512);
        assert_eq!(v.to_f64(), 2f64.powi(-512));
        let w = Rat::pow2(-1000) * Rat::new(3, 1);
        assert_eq!(w.to_f64(), 3.0 * 2f64.powi(-1000));
        assert_eq!(Rat::new(1, 3).to_f64(), 1.0 / 3.0);
    }

    #[test]
    fn serde_uses_p_over_q() {
        let r = Rat::new(-5, 6);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "\"-5/6\"");
        let back: Rat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-10_000i64..10_000, 1i64..10_000).prop_map(|(p, q)| Rat::new(p, q))
    }

    proptest! {
        #[test]
        fn add_sub_round_trips(a in small_rat(), b in small_rat()) {
            let back = (a.clone() + &b) - &b;
            prop_assert_eq!(&back, &a);
            // lowest terms, positive denominator
            prop_assert!(back.denom().is_positive());
            prop_assert!(back.numer().gcd(back.denom()).is_one());
        }

        #[test]
        fn mul_div_round_trips(a in small_rat(), b in small_rat()) {
            prop_assume!(!b.is_zero());
            let q = (a.clone() * &b) / &b;
            prop_assert_eq!(q, a);
        }
    }
}
