//! Base scalars: exact rationals and `f64`.
//!
//! Everything downstream is generic over [`Scalar`], so the same assembly and
//! elimination code runs exactly over [`Rational`] or approximately over `f64`,
//! and (through [`crate::dual::Dual`]) carries gradients along.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Arithmetic mode for a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Float64,
    Rational,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Float64 => f.write_str("float64"),
            Mode::Rational => f.write_str("rational"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float64" | "float" | "f64" => Ok(Mode::Float64),
            "rational" | "exact" => Ok(Mode::Rational),
            other => Err(Error::invalid(format!("unknown mode `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Whether zero tests on this scalar are exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rational) -> Self;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    /// Exact zero test on the (base) value.
    fn is_zero(&self) -> bool;

    /// Absolute value of the base value, as `f64`. Used for pivot ranking only.
    fn magnitude(&self) -> f64;

    fn abs(&self) -> Self;

    fn checked_div(&self, rhs: &Self) -> Result<Self>;

    fn recip(&self) -> Result<Self> {
        Self::one().checked_div(self)
    }

    /// Integer power by repeated squaring; negative exponents go through `recip`.
    fn powi(&self, e: i64) -> Result<Self> {
        if e < 0 {
            if self.is_zero() {
                return Err(Error::NegativePowerOfZero);
            }
            return self.recip()?.powi(-e);
        }
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        Ok(result)
    }

    /// Zero test used by verification checks: exact when `EXACT`, `|x| <= tol` otherwise.
    fn within_tol(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() <= tol
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn magnitude(&self) -> f64 {
        f64::abs(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let q = self / rhs;
        if q.is_finite() || !self.is_finite() {
            Ok(q)
        } else {
            Err(Error::DivisionByZero)
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn magnitude(&self) -> f64 {
        Signed::abs(self).to_f64().unwrap_or(f64::INFINITY)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if Zero::is_zero(rhs) {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }
}

/// Parse `"p"`, `"p/q"` or `"-p/q"` into a normalized rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("`{s}` is not a fraction string"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(Rational::new(num, den))
}

/// Canonical fraction string: `"n"` for integers, `"n/d"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Scalars that cross the JSON boundary.
///
/// Rationals travel as fraction strings and refuse JSON numbers; floats travel
/// as numbers and also accept fraction strings.
pub trait JsonScalar: Scalar {
    const MODE: Mode;
    fn from_json(v: &Value) -> Result<Self>;
    fn to_json(&self) -> Value;
}

impl JsonScalar for f64 {
    const MODE: Mode = Mode::Float64;

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::invalid(format!("bad number {n}"))),
            Value::String(s) => match s.parse::<f64>() {
                Ok(x) => Ok(x),
                Err(_) => Ok(f64::from_rational(&parse_rational(s)?)),
            },
            other => Err(Error::invalid(format!("expected a number, got {other}"))),
        }
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(self.to_string()))
    }
}

impl JsonScalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() || n.is_u64() => parse_rational(&n.to_string()),
            other => Err(Error::invalid(format!(
                "rational mode expects fraction strings such as \"3/4\", got {other}"
            ))),
        }
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
}

pub fn max_by_magnitude<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    items
        .into_iter()
        .map(|x| x.abs())
        .fold(S::zero(), |acc, x| if x > acc { x } else { acc })
}
