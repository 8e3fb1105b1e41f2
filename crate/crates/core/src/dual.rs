//! Forward-mode dual numbers carrying a full gradient.
//!
//! Gradient layout for point data is `[d/da_1 .. d/da_n, d/db_1 .. d/db_n]`.
//! An empty gradient stands for the zero vector of any width, which lets
//! constants be built without knowing the dimension.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone)]
pub struct Dual<S> {
    pub value: S,
    pub grad: Vec<S>,
}

impl<S: Scalar> Dual<S> {
    pub fn constant(value: S) -> Self {
        Dual { value, grad: Vec::new() }
    }

    /// A coordinate seeded with a one-hot gradient at `slot` in a space of `dim` slots.
    pub fn variable(slot: usize, value: S, dim: usize) -> Result<Self> {
        if slot >= dim {
            return Err(Error::SlotOutOfRange { slot, dim });
        }
        let mut grad = vec![S::zero(); dim];
        grad[slot] = S::one();
        Ok(Dual { value, grad })
    }

    /// Gradient padded (or taken) to exactly `dim` entries.
    pub fn gradient(&self, dim: usize) -> Vec<S> {
        (0..dim)
            .map(|i| self.grad.get(i).cloned().unwrap_or_else(S::zero))
            .collect()
    }

    pub fn partial(&self, slot: usize) -> S {
        self.grad.get(slot).cloned().unwrap_or_else(S::zero)
    }

    fn zip_grad(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Vec<S> {
        let len = self.grad.len().max(other.grad.len());
        if len == 0 {
            return Vec::new();
        }
        let zero = S::zero();
        (0..len)
            .map(|i| {
                f(
                    self.grad.get(i).unwrap_or(&zero),
                    other.grad.get(i).unwrap_or(&zero),
                )
            })
            .collect()
    }

    fn scale_grad(&self, k: &S) -> Vec<S> {
        self.grad.iter().map(|g| g.clone() * k.clone()).collect()
    }
}

/// `make_variable` for point data: slot in `[0, 2n)`.
pub fn make_variable<S: Scalar>(slot: usize, value: S, n: usize) -> Result<Dual<S>> {
    Dual::variable(slot, value, 2 * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Integer power of the left operand; the right operand is ignored.
    Pow(i64),
}

pub fn dual_arith<S: Scalar>(x: &Dual<S>, y: &Dual<S>, op: DualOp) -> Result<Dual<S>> {
    Ok(match op {
        DualOp::Add => x.clone() + y.clone(),
        DualOp::Sub => x.clone() - y.clone(),
        DualOp::Mul => x.clone() * y.clone(),
        DualOp::Div => x.checked_div(y)?,
        DualOp::Pow(e) => x.powi(e)?,
    })
}

impl<S: Scalar> PartialEq for Dual<S> {
    fn eq(&self, other: &Self) -> bool {
        if self.value != other.value {
            return false;
        }
        let len = self.grad.len().max(other.grad.len());
        (0..len).all(|i| self.partial(i) == other.partial(i))
    }
}

/// Ordered by value only.
impl<S: Scalar> PartialOrd for Dual<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl<S: Scalar> fmt::Display for Dual<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        if !self.grad.is_empty() {
            write!(f, " + [")?;
            for (i, g) in self.grad.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{g}")?;
            }
            write!(f, "]ε")?;
        }
        Ok(())
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let grad = self.zip_grad(&rhs, |a, b| a.clone() + b.clone());
        Dual { value: self.value + rhs.value, grad }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let grad = self.zip_grad(&rhs, |a, b| a.clone() - b.clone());
        Dual { value: self.value - rhs.value, grad }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (&self.value, &rhs.value);
        let grad = self.zip_grad(&rhs, |du, dv| u.clone() * dv.clone() + v.clone() * du.clone());
        Dual { value: self.value * rhs.value, grad }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            value: -self.value,
            grad: self.grad.into_iter().map(|g| -g).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    const EXACT: bool = S::EXACT;

    fn zero() -> Self {
        Dual::constant(S::zero())
    }
    fn one() -> Self {
        Dual::constant(S::one())
    }
    fn from_rational(r: &Rational) -> Self {
        Dual::constant(S::from_rational(r))
    }
    fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
    fn magnitude(&self) -> f64 {
        self.value.magnitude()
    }
    fn abs(&self) -> Self {
        if self.value < S::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        let q = self.value.checked_div(&rhs.value)?;
        // d(u/v) = (du - q dv) / v
        let num = self.zip_grad(rhs, |du, dv| du.clone() - q.clone() * dv.clone());
        let grad = num
            .iter()
            .map(|g| g.checked_div(&rhs.value))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dual { value: q, grad })
    }
    fn powi(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(Self::one());
        }
        let value = self.value.powi(e)?;
        let dfactor = S::from_i64(e) * self.value.powi(e - 1)?;
        Ok(Dual { value, grad: self.scale_grad(&dfactor) })
    }
}
