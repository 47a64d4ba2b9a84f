//! Exact rationals, the extended real line, and their text renderings.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational with unbounded numerator and denominator.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Renders `p/q`, or just `p` when the denominator is one.
pub fn render_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct RationalParseError(pub String);

/// Parses `p` or `p/q` with `q > 0`.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let t = text.trim();
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p = BigInt::from_str(p).map_err(|_| err())?;
    let q = BigInt::from_str(q).map_err(|_| err())?;
    if !q.is_positive() {
        return Err(err());
    }
    Ok(Rational::new(p, q))
}

pub fn floor_to_bigint(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

pub fn ceil_to_bigint(r: &Rational) -> BigInt {
    -((-r.numer()).div_floor(r.denom()))
}

pub fn floor_to_usize(r: &Rational) -> Option<usize> {
    floor_to_bigint(r).to_usize()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// Decimal rendering with `digits` significant digits, rounding half to even.
/// Uses positional notation for exponents in `-5..12` and `d.ddde±x` otherwise.
pub fn render_decimal(r: &Rational, digits: u32) -> String {
    assert!(digits >= 1);
    if r.is_zero() {
        return format!("0.{}", "0".repeat(digits as usize - 1));
    }
    let negative = r.is_negative();
    let mag = r.abs();
    let ten = BigInt::from(10);
    // exponent e with 10^e <= mag < 10^(e+1)
    let mut e: i64 = mag.numer().to_string().len() as i64 - mag.denom().to_string().len() as i64;
    let pow10 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(num_traits::pow(ten.clone(), k as usize))
        } else {
            Rational::new(BigInt::one(), num_traits::pow(ten.clone(), (-k) as usize))
        }
    };
    while pow10(e) > mag {
        e -= 1;
    }
    while pow10(e + 1) <= mag {
        e += 1;
    }
    let scaled = &mag * pow10(digits as i64 - 1 - e);
    let mut q = round_half_even(&scaled);
    if q == num_traits::pow(ten.clone(), digits as usize) {
        q /= &ten;
        e += 1;
    }
    let ds = q.to_string();
    let body = if (-5..12).contains(&e) {
        if e >= 0 {
            let int_len = (e + 1) as usize;
            if int_len >= ds.len() {
                format!("{}{}", ds, "0".repeat(int_len - ds.len()))
            } else {
                format!("{}.{}", &ds[..int_len], &ds[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), ds)
        }
    } else if ds.len() > 1 {
        format!("{}.{}e{}", &ds[..1], &ds[1..], e)
    } else {
        format!("{}e{}", ds, e)
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn round_half_even(x: &Rational) -> BigInt {
    let fl = floor_to_bigint(x);
    let frac = x - Rational::from_integer(fl.clone());
    let half = ratio(1, 2);
    match frac.cmp(&half) {
        Ordering::Less => fl,
        Ordering::Greater => fl + 1,
        Ordering::Equal => {
            if fl.is_even() {
                fl
            } else {
                fl + 1
            }
        }
    }
}

/// A point of the two-point compactification of the reals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtendedReal {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl ExtendedReal {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtendedReal::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn neg(&self) -> ExtendedReal {
        match self {
            ExtendedReal::NegInf => ExtendedReal::PosInf,
            ExtendedReal::PosInf => ExtendedReal::NegInf,
            ExtendedReal::Finite(r) => ExtendedReal::Finite(-r),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            ExtendedReal::NegInf => 0,
            ExtendedReal::Finite(_) => 1,
            ExtendedReal::PosInf => 2,
        }
    }
}

impl From<Rational> for ExtendedReal {
    fn from(r: Rational) -> Self {
        ExtendedReal::Finite(r)
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInf => f.write_str("-inf"),
            ExtendedReal::PosInf => f.write_str("+inf"),
            ExtendedReal::Finite(r) => f.write_str(&render_rational(r)),
        }
    }
}

impl FromStr for ExtendedReal {
    type Err = RationalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "-inf" => Ok(ExtendedReal::NegInf),
            "+inf" | "inf" => Ok(ExtendedReal::PosInf),
            t => parse_rational(t).map(ExtendedReal::Finite),
        }
    }
}

/// Parses `p`, `p/q`, or a decimal such as `-1.25e-3`, exactly.
pub fn parse_number(text: &str) -> Result<Rational, RationalParseError> {
    let t = text.trim();
    if t.contains('/') || !t.contains(['.', 'e', 'E']) {
        return parse_rational(t);
    }
    let err = || RationalParseError(text.to_string());
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac.contains(['+', '-']) || (int.trim_start_matches(['+', '-']).is_empty() && frac.is_empty()) {
        return Err(err());
    }
    let digits = BigInt::from_str(&format!("{int}{frac}")).map_err(|_| err())?;
    let shift = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    Ok(if shift >= 0 {
        Rational::from_integer(digits * num_traits::pow(ten, shift as usize))
    } else {
        Rational::new(digits, num_traits::pow(ten, (-shift) as usize))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_order() {
        let xs = [ExtendedReal::NegInf, rat(-5).into(), rat(3).into(), ExtendedReal::PosInf];
        for w in xs.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn rational_round_trip() {
        for s in ["0", "-3", "7/2", "-1/3"] {
            assert_eq!(render_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(render_rational(&parse_rational("4/2").unwrap()), "2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn number_parsing() {
        assert_eq!(parse_number("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_number("-1.5e-3").unwrap(), ratio(-3, 2000));
        assert_eq!(parse_number("2e3").unwrap(), rat(2000));
        assert_eq!(parse_number("7/2").unwrap(), ratio(7, 2));
        assert_eq!(parse_number(&render_decimal(&ratio(1, 8), 12)).unwrap(), ratio(1, 8));
        assert!(parse_number(".").is_err());
        assert!(parse_number("1e").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(render_decimal(&ratio(1, 3), 12), "0.333333333333");
        assert_eq!(render_decimal(&ratio(2, 3), 12), "0.666666666667");
        assert_eq!(render_decimal(&rat(1), 12), "1.00000000000");
        assert_eq!(render_decimal(&rat(-12), 3), "-12.0");
        assert_eq!(render_decimal(&rat(0), 3), "0.00");
        // half-even: 0.125 -> 0.12, 0.135 -> 0.14
        assert_eq!(render_decimal(&ratio(1, 8), 2), "0.12");
        assert_eq!(render_decimal(&ratio(27, 200), 2), "0.14");
        assert_eq!(render_decimal(&ratio(999_999, 1_000_000), 3), "1.00");
        assert_eq!(render_decimal(&rat(1 << 50), 12), "1.12589990684e15");
        assert_eq!(render_decimal(&ratio(1, 1_000_000), 2), "1.0e-6");
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(floor_to_bigint(&ratio(-7, 2)), BigInt::from(-4));
        assert_eq!(ceil_to_bigint(&ratio(-7, 2)), BigInt::from(-3));
        assert_eq!(ceil_to_bigint(&ratio(7, 2)), BigInt::from(4));
        assert_eq!(ceil_to_bigint(&rat(3)), BigInt::from(3));
    }
}
