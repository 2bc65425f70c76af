//! Certified evaluation of the few real-valued expressions the construction
//! needs (`e^{sqrt m}`, `e^{m^c}`, `n / log x`, ...), and certified floors.

use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::interval::Interval;
use super::{format_rational, rat_int, Rational};
use crate::error::{Error, Result};

/// Starting working precision in bits.
pub const INITIAL_PRECISION: u32 = 128;
/// Precision cap; reaching it means the value sits pathologically close to
/// an integer.
pub const DEFAULT_PRECISION_CAP: u32 = 4096;

/// Expression tree over rationals.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Rational),
    Pi,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
    /// `base^exponent` for a positive base.
    Pow(Box<Expr>, Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Self {
        Expr::Const(rat_int(n))
    }

    pub fn big(n: BigInt) -> Self {
        Expr::Const(Rational::from_integer(n))
    }

    pub fn rational(r: Rational) -> Self {
        Expr::Const(r)
    }

    pub fn exp(self) -> Self {
        Expr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Self {
        Expr::Ln(Box::new(self))
    }

    pub fn sqrt(self) -> Self {
        Expr::Sqrt(Box::new(self))
    }

    pub fn cos(self) -> Self {
        Expr::Cos(Box::new(self))
    }

    pub fn pow(self, e: Expr) -> Self {
        Expr::Pow(Box::new(self), Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Expr) -> Self {
        Expr::Add(Box::new(self), Box::new(o))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, o: Expr) -> Self {
        Expr::Sub(Box::new(self), Box::new(o))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Expr) -> Self {
        Expr::Mul(Box::new(self), Box::new(o))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, o: Expr) -> Self {
        Expr::Div(Box::new(self), Box::new(o))
    }

    /// Enclosure at `prec` bits, or `None` when a domain condition (positive
    /// logarithm argument, non-zero divisor) cannot be decided yet.
    pub fn eval(&self, prec: u32) -> Option<Interval> {
        Some(match self {
            Expr::Const(r) => Interval::from_rational(r, prec),
            Expr::Pi => Interval::pi(prec),
            Expr::Add(a, b) => a.eval(prec)?.add(&b.eval(prec)?),
            Expr::Sub(a, b) => a.eval(prec)?.sub(&b.eval(prec)?),
            Expr::Mul(a, b) => a.eval(prec)?.mul(&b.eval(prec)?),
            Expr::Div(a, b) => a.eval(prec)?.div(&b.eval(prec)?)?,
            Expr::Exp(a) => a.eval(prec)?.exp(),
            Expr::Ln(a) => a.eval(prec)?.ln()?,
            Expr::Sqrt(a) => a.eval(prec)?.sqrt()?,
            Expr::Pow(a, b) => a.eval(prec)?.pow(&b.eval(prec)?)?,
            Expr::Cos(a) => a.eval(prec)?.cos(),
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Expr::Const(r) => write!(f, "({})", format_rational(r)),
            Expr::Pi => write!(f, "pi"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/{b}"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "log({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Pow(a, b) => write!(f, "{a}^{b}"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

/// A real expression together with a rational enclosure `[lo, hi]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifiedReal {
    pub expression: String,
    #[serde(with = "super::rational_serde")]
    pub lo: Rational,
    #[serde(with = "super::rational_serde")]
    pub hi: Rational,
    pub precision_bits: u32,
}

impl CertifiedReal {
    /// Evaluates `expr`, doubling the precision until the enclosure is
    /// narrower than `2^-target_bits` (relative to 1) or the cap is hit.
    pub fn evaluate(expr: &Expr, target_bits: u32, cap: u32) -> Result<Self> {
        let mut prec = INITIAL_PRECISION.max(target_bits + 16);
        loop {
            if let Some(iv) = expr.eval(prec) {
                let slack = prec.saturating_sub(target_bits);
                if iv.width_units() <= (BigInt::from(1) << slack as usize) {
                    return Ok(Self {
                        expression: expr.to_string(),
                        lo: iv.lo_rational(),
                        hi: iv.hi_rational(),
                        precision_bits: prec,
                    });
                }
            }
            if prec >= cap {
                return Err(Error::PrecisionExhausted { expr: expr.to_string(), cap_bits: cap });
            }
            prec = (prec * 2).min(cap);
        }
    }

    pub fn midpoint_f64(&self) -> f64 {
        super::rational_to_f64(&((&self.lo + &self.hi) / rat_int(2)))
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// `floor(expr)`, widening the working precision from
/// [`INITIAL_PRECISION`] by doubling until both enclosure ends agree.
pub fn certified_floor(expr: &Expr, cap_bits: u32) -> Result<BigInt> {
    let mut prec = INITIAL_PRECISION.min(cap_bits);
    loop {
        if let Some(iv) = expr.eval(prec) {
            let (a, b) = iv.floor_bounds();
            if a == b {
                return Ok(a);
            }
        }
        if prec >= cap_bits {
            return Err(Error::PrecisionExhausted { expr: expr.to_string(), cap_bits });
        }
        prec = (prec * 2).min(cap_bits);
    }
}
