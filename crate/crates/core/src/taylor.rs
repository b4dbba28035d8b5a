//! Second-order forward-mode automatic differentiation.
//!
//! A [`Taylor2`] carries a value, its gradient and its Hessian with respect to
//! a small set of seed directions. The Hessian is stored packed lower
//! triangular, so it is symmetric by construction.
//!
//! Constants carry empty derivative storage and broadcast against seeded
//! numbers of any width.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{check_pow_domain, DomainError, Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Taylor2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl Taylor2 {
    /// Lifts a real into a Taylor number over `num_seeds` directions, seeded
    /// with a unit gradient in `seed_index` when given.
    pub fn lift(value: f64, seed_index: Option<usize>, num_seeds: usize) -> Taylor2 {
        let mut grad = vec![0.0; num_seeds];
        if let Some(i) = seed_index {
            assert!(i < num_seeds, "seed index {i} out of range for {num_seeds} seeds");
            grad[i] = 1.0;
        }
        Taylor2 { value, grad, hess: vec![0.0; num_seeds * (num_seeds + 1) / 2] }
    }

    pub fn constant(value: f64) -> Taylor2 {
        Taylor2 { value, grad: Vec::new(), hess: Vec::new() }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Number of seed directions; zero for constants.
    pub fn num_seeds(&self) -> usize {
        self.grad.len()
    }

    /// Gradient component, zero for constants.
    pub fn grad(&self, i: usize) -> f64 {
        self.grad.get(i).copied().unwrap_or(0.0)
    }

    /// Hessian entry; `hess(i, j) == hess(j, i)` always holds.
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        if self.grad.is_empty() {
            0.0
        } else {
            self.hess[packed(i, j)]
        }
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    fn width(a: &Taylor2, b: &Taylor2) -> usize {
        match (a.grad.len(), b.grad.len()) {
            (0, n) | (n, 0) => n,
            (n, m) => {
                assert_eq!(n, m, "mismatched seed counts");
                n
            }
        }
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Taylor2 {
        let n = self.grad.len();
        let grad: Vec<f64> = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![0.0; self.hess.len()];
        for i in 0..n {
            for j in 0..=i {
                let k = packed(i, j);
                hess[k] = f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j];
            }
        }
        Taylor2 { value: f0, grad, hess }
    }

    fn recip(&self) -> Result<Taylor2, DomainError> {
        let v = self.value;
        if v == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        Ok(self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }

    fn linear(a: &Taylor2, ca: f64, b: &Taylor2, cb: f64) -> Taylor2 {
        let n = Self::width(a, b);
        let m = n * (n + 1) / 2;
        let get = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        Taylor2 {
            value: ca * a.value + cb * b.value,
            grad: (0..n).map(|i| ca * get(&a.grad, i) + cb * get(&b.grad, i)).collect(),
            hess: (0..m).map(|k| ca * get(&a.hess, k) + cb * get(&b.hess, k)).collect(),
        }
    }

    fn product(a: &Taylor2, b: &Taylor2) -> Taylor2 {
        if a.grad.is_empty() {
            return b.chain(a.value * b.value, a.value, 0.0);
        }
        if b.grad.is_empty() {
            return a.chain(a.value * b.value, b.value, 0.0);
        }
        let n = Self::width(a, b);
        let grad = (0..n).map(|i| a.value * b.grad[i] + b.value * a.grad[i]).collect();
        let mut hess = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            for j in 0..=i {
                let k = packed(i, j);
                hess[k] = a.value * b.hess[k] + b.value * a.hess[k] + a.grad[i] * b.grad[j] + a.grad[j] * b.grad[i];
            }
        }
        Taylor2 { value: a.value * b.value, grad, hess }
    }
}

impl Add for Taylor2 {
    type Output = Taylor2;
    fn add(self, rhs: Taylor2) -> Taylor2 {
        Taylor2::linear(&self, 1.0, &rhs, 1.0)
    }
}

impl Sub for Taylor2 {
    type Output = Taylor2;
    fn sub(self, rhs: Taylor2) -> Taylor2 {
        Taylor2::linear(&self, 1.0, &rhs, -1.0)
    }
}

impl Mul for Taylor2 {
    type Output = Taylor2;
    fn mul(self, rhs: Taylor2) -> Taylor2 {
        Taylor2::product(&self, &rhs)
    }
}

/// Unchecked division; a zero divisor yields non-finite components. Use
/// [`Scalar::checked_div`] for the reporting variant.
impl Div for Taylor2 {
    type Output = Taylor2;
    fn div(self, rhs: Taylor2) -> Taylor2 {
        let v = rhs.value;
        let r = rhs.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
        Taylor2::product(&self, &r)
    }
}

impl Neg for Taylor2 {
    type Output = Taylor2;
    fn neg(self) -> Taylor2 {
        self.chain(-self.value, -1.0, 0.0)
    }
}

impl Scalar for Taylor2 {
    fn constant(c: f64) -> Self {
        Taylor2::constant(c)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn checked_div(self, rhs: Self) -> Result<Self, DomainError> {
        let r = rhs.recip()?;
        Ok(Taylor2::product(&self, &r))
    }

    fn sqrt(self) -> Result<Self, DomainError> {
        let v = self.value;
        if v < 0.0 || (v == 0.0 && !self.grad.is_empty()) {
            return Err(DomainError::SqrtDomain(v));
        }
        let s = v.sqrt();
        if v == 0.0 {
            return Ok(Taylor2::constant(0.0));
        }
        Ok(self.chain(s, 0.5 / s, -0.25 / (s * v)))
    }

    fn pow(self, exponent: Rational) -> Result<Self, DomainError> {
        let v = self.value;
        check_pow_domain(v, exponent)?;
        if exponent.is_integer() {
            let n = exponent.num() as i32;
            let f0 = v.powi(n);
            let f1 = if n == 0 { 0.0 } else { n as f64 * v.powi(n - 1) };
            let f2 = if n == 0 || n == 1 { 0.0 } else { (n * (n - 1)) as f64 * v.powi(n - 2) };
            return Ok(self.chain(f0, f1, f2));
        }
        let r = exponent.to_f64();
        let f0 = v.powf(r);
        Ok(self.chain(f0, r * f0 / v, r * (r - 1.0) * f0 / (v * v)))
    }

    fn exp(self) -> Result<Self, DomainError> {
        let e = self.value.exp();
        if !e.is_finite() {
            return Err(DomainError::NonFinite);
        }
        Ok(self.chain(e, e, e))
    }

    fn ln(self) -> Result<Self, DomainError> {
        let v = self.value;
        if v <= 0.0 {
            return Err(DomainError::LogDomain(v));
        }
        Ok(self.chain(v.ln(), 1.0 / v, -1.0 / (v * v)))
    }

    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    fn abs(self) -> Result<Self, DomainError> {
        let v = self.value;
        if v == 0.0 {
            return Err(DomainError::AbsAtZero);
        }
        let sign = v.signum();
        Ok(self.chain(v.abs(), sign, 0.0))
    }
}
