//! Exact integer and rational arithmetic.
//!
//! Every construction-critical quantity (the iterates of the Schmidt
//! construction, interval endpoints, measures) is a [`Rational`]. Floating
//! point only appears when evaluating `e(x) = exp(2 pi i x)` and in reports.

pub mod certified;
pub mod compensated;
pub mod digits;
pub mod interval;
pub mod modular;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use compensated::{neumaier_sum, Neumaier};
pub use certified::{certified_floor, CertifiedReal, Expr, DEFAULT_PRECISION_CAP, INITIAL_PRECISION};
pub use digits::{certain_digits, digits_of_rational, DigitString};
pub use modular::{frac_mod1, frac_pow_mod1, BigMod, ModRing, SmallMod, SMALL_MOD_LIMIT};

/// Exact arbitrary-precision fraction, always kept in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Canonical `"p/q"` form used by every file format. Integers keep the
/// `/1` so the representation is uniform.
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"`, a plain integer, or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("cannot parse rational {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Invalid(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = Rational::new(int_part.abs() * &scale + frac_part, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Fractional part `{x}` in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    x - x.floor()
}

pub fn floor_int(x: &Rational) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil_int(x: &Rational) -> BigInt {
    x.numer().div_ceil(x.denom())
}

/// Nearest `f64`, computed from the top bits of numerator and denominator so
/// huge operands do not overflow.
pub fn rational_to_f64(x: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let n_bits = x.numer().bits() as i64;
    let d_bits = x.denom().bits() as i64;
    // shift so that the quotient keeps ~64 significant bits
    let shift = 64 - (n_bits - d_bits);
    let scaled = if shift >= 0 {
        (x.numer() << shift as usize).div_floor(x.denom())
    } else {
        x.numer().div_floor(&(x.denom() << (-shift) as usize))
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-shift as i32)
}

/// Exact rational conversion of a finite `f64`.
pub fn f64_to_rational(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

pub fn pow_u(base: u64, exp: u32) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

pub fn pow_i(base: u64, exp: u32) -> BigInt {
    BigInt::from_biguint(Sign::Plus, pow_u(base, exp))
}

/// `base^(-exp)` as a rational.
pub fn inv_pow(base: u64, exp: u64) -> Rational {
    Rational::new(BigInt::one(), pow_i(base, exp as u32))
}

pub fn is_unit_interval(x: &Rational) -> bool {
    !x.is_negative() && x < &Rational::one()
}

/// Serde adapter storing a [`Rational`] as the string `"p/q"`.
pub mod rational_serde {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod rational_vec_serde {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

/// Serde adapter storing a big integer as a decimal string.
pub mod bigint_serde {
    use num_bigint::BigInt;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}
