//! Scalar abstraction shared by plain reals and second-order Taylor numbers.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reduced fraction used as the exponent of `pow`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    num: i64,
    den: u64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Option<Rational> {
        if den == 0 {
            return None;
        }
        let sign = if den < 0 { -1 } else { 1 };
        let (num, den) = (num * sign, (den * sign) as u64);
        let g = gcd(num.unsigned_abs(), den).max(1);
        Some(Rational { num: num / g as i64, den: den / g })
    }

    pub fn integer(n: i64) -> Rational {
        Rational { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
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

/// Function-domain violations raised while evaluating a metric expression.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt of non-positive value {0}")]
    SqrtDomain(f64),
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("non-integer power of non-positive base {0}")]
    PowDomain(f64),
    #[error("abs is not differentiable at 0")]
    AbsAtZero,
    #[error("non-finite result")]
    NonFinite,
}

/// Number type that metric expressions can be evaluated over.
///
/// Fallible operations report a [`DomainError`] instead of producing NaN.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Div<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;

    fn checked_div(self, rhs: Self) -> Result<Self, DomainError> {
        if rhs.value() == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        Ok(self / rhs)
    }

    fn sqrt(self) -> Result<Self, DomainError>;
    fn pow(self, exponent: Rational) -> Result<Self, DomainError>;
    fn exp(self) -> Result<Self, DomainError>;
    fn ln(self) -> Result<Self, DomainError>;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn abs(self) -> Result<Self, DomainError>;
}

pub(crate) fn check_pow_domain(base: f64, exponent: Rational) -> Result<(), DomainError> {
    if exponent.is_integer() {
        if exponent.num() < 0 && base == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        Ok(())
    } else if base > 0.0 {
        Ok(())
    } else {
        Err(DomainError::PowDomain(base))
    }
}

fn finite(v: f64) -> Result<f64, DomainError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFinite)
    }
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }

    fn value(&self) -> f64 {
        *self
    }

    fn sqrt(self) -> Result<Self, DomainError> {
        if self < 0.0 {
            return Err(DomainError::SqrtDomain(self));
        }
        Ok(f64::sqrt(self))
    }

    fn pow(self, exponent: Rational) -> Result<Self, DomainError> {
        check_pow_domain(self, exponent)?;
        if exponent.is_integer() {
            Ok(self.powi(exponent.num() as i32))
        } else {
            Ok(self.powf(exponent.to_f64()))
        }
    }

    fn exp(self) -> Result<Self, DomainError> {
        finite(f64::exp(self))
    }

    fn ln(self) -> Result<Self, DomainError> {
        if self <= 0.0 {
            return Err(DomainError::LogDomain(self));
        }
        Ok(f64::ln(self))
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }

    fn cos(self) -> Self {
        f64::cos(self)
    }

    fn abs(self) -> Result<Self, DomainError> {
        if self == 0.0 {
            return Err(DomainError::AbsAtZero);
        }
        Ok(f64::abs(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_reduces_and_normalizes_sign() {
        let r = Rational::new(2, -8).unwrap();
        assert_eq!((r.num(), r.den()), (-1, 4));
        assert_eq!(r.to_string(), "-1/4");
        assert!(Rational::new(1, 0).is_none());
        assert!(Rational::new(6, 3).unwrap().is_integer());
    }

    #[test]
    fn real_domain_errors() {
        assert!(matches!(Scalar::sqrt(-1.0), Err(DomainError::SqrtDomain(_))));
        assert!(matches!(Scalar::ln(0.0), Err(DomainError::LogDomain(_))));
        assert!(Scalar::pow(-2.0, Rational::integer(3)).is_ok());
        assert!(Scalar::pow(-2.0, Rational::new(1, 3).unwrap()).is_err());
        assert!(1.0f64.checked_div(0.0).is_err());
        assert!(Scalar::abs(0.0).is_err());
    }
}
