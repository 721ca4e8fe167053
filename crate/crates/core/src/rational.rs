//! Exact rational scalars: the carrier for every identifiability computation.
//!
//! All quantities in the identifiability pipeline (marginals, plans, costs,
//! potentials, totals) are arbitrary-precision rationals. Decimal input is
//! expanded in base 10, never routed through floating point, so parsed values
//! are bit-exact.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Arbitrary-precision rational number, always in lowest terms with a
/// positive denominator (maintained by `num_rational`).
pub type Rational = num_rational::BigRational;

/// Rational from an integer pair. Panics on zero denominator; use
/// [`parse_rational`] for fallible construction from text.
pub fn rat(num: i64, den: i64) -> Rational {
    assert!(den != 0, "zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p`, `p/q` or a decimal literal (optionally signed, optionally with
/// an exponent such as `1.5e-3`) into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::ParseRational(text.to_string()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let p: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::ParseRational(text.to_string()))?;
        let q: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::ParseRational(text.to_string()))?;
        if q.is_zero() {
            return Err(Error::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(s).ok_or_else(|| Error::ParseRational(text.to_string()))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let mut num: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().ok()?
    };
    let ten = BigInt::from(10);
    for c in frac_part.chars() {
        num = &num * &ten + BigInt::from(c.to_digit(10).unwrap());
    }
    let shift = exponent - frac_part.len() as i32;
    let mut value = Rational::from_integer(num * BigInt::from(sign));
    let pow = ten.pow(shift.unsigned_abs());
    if shift >= 0 {
        value *= Rational::from_integer(pow);
    } else {
        value /= Rational::from_integer(pow);
    }
    Some(value)
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
/// `parse_rational(render_rational(x)) == x` for every rational `x`.
pub fn render_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Nearest f64 (used only on the estimation side; identifiability never
/// leaves rational arithmetic).
pub fn to_f64(x: &Rational) -> f64 {
    let num = x.numer();
    let den = x.denom();
    // Split off the integer part first so huge numerators still convert sanely.
    let (q, r) = num_integer::Integer::div_rem(num, den);
    let q_f = big_to_f64(&q);
    let r_f = big_to_f64(&r) / big_to_f64(den);
    q_f + r_f
}

fn big_to_f64(x: &BigInt) -> f64 {
    let s = x.to_string();
    s.parse::<f64>().unwrap_or({
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational from an f64 (the binary value, not its decimal print form).
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}
