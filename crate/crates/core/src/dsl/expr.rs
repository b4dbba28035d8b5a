use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::scalar::{DomainError, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Built-in single-argument functions. `pow` is represented by [`Expr::Pow`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree over coordinates `x0..xn`, differentials `d0..dn` and
/// named parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Diff(usize),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Rational),
    Call(Func, Box<Expr>),
}

/// A domain violation tagged with the printed subexpression that raised it.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{error} in `{subexpr}`")]
pub struct EvalError {
    pub error: DomainError,
    pub subexpr: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BindError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("{kind} index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { kind: &'static str, index: usize, dimension: usize },
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    /// Visits every node in pre-order.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.visit(f),
            Expr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            _ => {}
        }
    }

    pub fn parameters(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                if !names.contains(p) {
                    names.push(p.clone());
                }
            }
        });
        names
    }

    /// Largest coordinate or differential index used, if any.
    pub fn max_index(&self) -> Option<usize> {
        let mut max = None;
        self.visit(&mut |e| {
            if let Expr::Coord(i) | Expr::Diff(i) = e {
                max = Some(max.map_or(*i, |m: usize| m.max(*i)));
            }
        });
        max
    }

    /// Replaces every parameter by its value and checks index bounds.
    pub fn bind(&self, params: &BTreeMap<String, f64>, dimension: usize) -> Result<Expr, BindError> {
        let rec = |e: &Expr| e.bind(params, dimension).map(Box::new);
        Ok(match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Coord(i) | Expr::Diff(i) if *i >= dimension => {
                return Err(BindError::IndexOutOfRange {
                    kind: if matches!(self, Expr::Coord(_)) { "coordinate" } else { "differential" },
                    index: *i,
                    dimension,
                })
            }
            Expr::Coord(i) => Expr::Coord(*i),
            Expr::Diff(i) => Expr::Diff(*i),
            Expr::Param(name) => match params.get(name) {
                Some(v) => Expr::Const(*v),
                None => return Err(BindError::UnboundParameter(name.clone())),
            },
            Expr::Neg(e) => Expr::Neg(rec(e)?),
            Expr::Binary(op, l, r) => Expr::Binary(*op, rec(l)?, rec(r)?),
            Expr::Pow(e, r) => Expr::Pow(rec(e)?, *r),
            Expr::Call(f, e) => Expr::Call(*f, rec(e)?),
        })
    }

    /// Evaluates the tree. Parameters must already be bound; a leftover
    /// parameter evaluates as NaN and is reported as non-finite.
    pub fn eval<S: Scalar>(&self, x: &[S], dx: &[S]) -> Result<S, EvalError> {
        let tag = |error: DomainError, e: &Expr| EvalError { error, subexpr: e.to_string() };
        Ok(match self {
            Expr::Const(c) => S::constant(*c),
            Expr::Coord(i) => x[*i].clone(),
            Expr::Diff(i) => dx[*i].clone(),
            Expr::Param(_) => return Err(tag(DomainError::NonFinite, self)),
            Expr::Neg(e) => -e.eval(x, dx)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(x, dx)?;
                let b = r.eval(x, dx)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.checked_div(b).map_err(|err| tag(err, self))?,
                }
            }
            Expr::Pow(e, r) => e.eval(x, dx)?.pow(*r).map_err(|err| tag(err, self))?,
            Expr::Call(f, e) => {
                let a = e.eval(x, dx)?;
                let out = match f {
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                    Func::Abs => a.abs(),
                };
                out.map_err(|err| tag(err, self))?
            }
        })
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Coord(i) => write!(f, "x{i}"),
            Expr::Diff(i) => write!(f, "d{i}"),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                write_operand(f, e, e.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                write_operand(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                // right operands of equal precedence keep their grouping
                write_operand(f, r, r.precedence() <= p)
            }
            Expr::Pow(e, r) => {
                write_operand(f, e, e.precedence() < 5)?;
                if r.is_integer() && r.num() >= 0 {
                    write!(f, "^{r}")
                } else {
                    write!(f, "^({r})")
                }
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}
