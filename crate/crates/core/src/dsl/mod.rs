//! Metric expression language: parsing, printing and evaluation of `L(x, dx)`.

mod expr;
mod parser;
mod spec;

pub use expr::{BinOp, BindError, EvalError, Expr, Func};
pub use parser::{parse_expr, parse_expr_with, ParseContext, ParseError, ParseErrorKind};
pub use spec::{MetricDocument, MetricError, MetricSpec, SpecError};
