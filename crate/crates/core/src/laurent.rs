//! Sparse bivariate Laurent polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// Terms are keyed by `(exp_x, exp_y)`, kept in lexicographic order, and never
/// hold a zero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentPoly2 {
    terms: BTreeMap<(i64, i64), Rational>,
}

impl LaurentPoly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn one() -> Self {
        Self::constant(Rational::from_integer(BigInt::from(1)))
    }

    pub fn monomial(ex: i64, ey: i64, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(ex, ey, c);
        p
    }

    /// `x^ex y^ey` with unit coefficient.
    pub fn xy(ex: i64, ey: i64) -> Self {
        Self::monomial(ex, ey, Rational::from_integer(BigInt::from(1)))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i64, i64, Rational)>) -> Self {
        let mut p = Self::zero();
        for (ex, ey, c) in terms {
            p.add_term(ex, ey, c);
        }
        p
    }

    pub fn add_term(&mut self, ex: i64, ey: i64, c: Rational) {
        if Zero::is_zero(&c) {
            return;
        }
        let entry = self.terms.entry((ex, ey)).or_insert_with(<Rational as Zero>::zero);
        *entry += c;
        if Zero::is_zero(&*entry) {
            self.terms.remove(&(ex, ey));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, i64, &Rational)> + '_ {
        self.terms.iter().map(|(&(ex, ey), c)| (ex, ey, c))
    }

    pub fn coeff(&self, ex: i64, ey: i64) -> Rational {
        self.terms.get(&(ex, ey)).cloned().unwrap_or_else(<Rational as Zero>::zero)
    }

    pub fn has_negative_x(&self) -> bool {
        self.terms.keys().any(|&(ex, _)| ex < 0)
    }

    pub fn has_negative_y(&self) -> bool {
        self.terms.keys().any(|&(_, ey)| ey < 0)
    }

    /// Evaluate at `(x, y)` over any scalar, duals included.
    pub fn eval<S: Scalar>(&self, x: &S, y: &S) -> Result<S> {
        let mut acc = S::zero();
        let mut xpow: BTreeMap<i64, S> = BTreeMap::new();
        let mut ypow: BTreeMap<i64, S> = BTreeMap::new();
        for (&(ex, ey), c) in &self.terms {
            let px = cached_pow(&mut xpow, x, ex)?;
            let py = cached_pow(&mut ypow, y, ey)?;
            acc = acc + S::from_rational(c) * px * py;
        }
        Ok(acc)
    }

    /// Largest `|c x^ex y^ey|` over the terms, in `f64`.
    pub fn max_term_magnitude(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(ex, ey), c)| {
                let c = f64::from_rational(c);
                (c * x.powi(ex as i32) * y.powi(ey as i32)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `order`-th partial derivative in x.
    pub fn diff_x(&self, order: u32) -> Self {
        Self::from_terms(self.terms.iter().map(|(&(ex, ey), c)| {
            (ex - order as i64, ey, c * falling_factorial(ex, order))
        }))
    }

    /// `order`-th partial derivative in y.
    pub fn diff_y(&self, order: u32) -> Self {
        Self::from_terms(self.terms.iter().map(|(&(ex, ey), c)| {
            (ex, ey - order as i64, c * falling_factorial(ey, order))
        }))
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Self::from_terms(self.terms().map(|(ex, ey, c)| (ex, ey, c * k)))
    }
}

/// `e (e-1) ... (e-order+1)`
fn falling_factorial(e: i64, order: u32) -> Rational {
    let mut acc = BigInt::from(1);
    for k in 0..order as i64 {
        acc *= BigInt::from(e - k);
    }
    Rational::from_integer(acc)
}

fn cached_pow<S: Scalar>(cache: &mut BTreeMap<i64, S>, base: &S, e: i64) -> Result<S> {
    if let Some(v) = cache.get(&e) {
        return Ok(v.clone());
    }
    let v = base.powi(e)?;
    cache.insert(e, v.clone());
    Ok(v)
}

impl Add for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn add(self, rhs: Self) -> LaurentPoly2 {
        let mut out = self.clone();
        for (ex, ey, c) in rhs.terms() {
            out.add_term(ex, ey, c.clone());
        }
        out
    }
}

impl Sub for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn sub(self, rhs: Self) -> LaurentPoly2 {
        let mut out = self.clone();
        for (ex, ey, c) in rhs.terms() {
            out.add_term(ex, ey, -c.clone());
        }
        out
    }
}

impl Mul for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn mul(self, rhs: Self) -> LaurentPoly2 {
        let mut out = LaurentPoly2::zero();
        for (ax, ay, ac) in self.terms() {
            for (bx, by, bc) in rhs.terms() {
                out.add_term(ax + bx, ay + by, ac * bc);
            }
        }
        out
    }
}

impl Neg for &LaurentPoly2 {
    type Output = LaurentPoly2;
    fn neg(self) -> LaurentPoly2 {
        LaurentPoly2::from_terms(self.terms().map(|(ex, ey, c)| (ex, ey, -c.clone())))
    }
}

impl fmt::Display for LaurentPoly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (&(ex, ey), c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let c = Signed::abs(c);
            let unit = c == Rational::from_integer(1.into());
            if !unit || (ex == 0 && ey == 0) {
                write!(f, "{}", format_rational(&c))?;
            }
            for (name, e) in [("x", ex), ("y", ey)] {
                match e {
                    0 => {}
                    1 => f.write_str(name)?,
                    e => write!(f, "{name}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    ex: i64,
    ey: i64,
    c: String,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    terms: Vec<TermRepr>,
}

impl Serialize for LaurentPoly2 {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        PolyRepr {
            terms: self
                .terms()
                .map(|(ex, ey, c)| TermRepr { ex, ey, c: format_rational(c) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        let mut p = LaurentPoly2::zero();
        for t in repr.terms {
            let c = parse_rational(&t.c).map_err(serde::de::Error::custom)?;
            p.add_term(t.ex, t.ey, c);
        }
        Ok(p)
    }
}

/// Convenience for parse errors in callers that want a crate error.
pub fn poly_from_json(s: &str) -> Result<LaurentPoly2> {
    serde_json::from_str(s).map_err(|e| Error::invalid(format!("bad polynomial: {e}")))
}
