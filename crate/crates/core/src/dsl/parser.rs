//! Recursive-descent parser for the metric expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' rational)?
//! base   := number | 'x'INT | 'd'INT | ident '(' expr (',' expr)* ')' | ident | '(' expr ')'
//! ```

use std::fmt;

use thiserror::Error;

use super::expr::{BinOp, Expr, Func};
use crate::scalar::Rational;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },
}

/// Parse failure with a 1-based source location.
#[derive(Clone, Debug, PartialEq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at line {}, column {}", self.kind, self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v, _) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: tl, column: tc });
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut integral = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                integral = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
                line: tl,
                column: tc,
            })?;
            col += i - start;
            push(&mut out, Tok::Num(v, integral));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            other => {
                return Err(ParseError {
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                    line,
                    column: col,
                })
            }
        };
        push(&mut out, tok);
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

/// Optional context checked while parsing so errors carry locations.
#[derive(Clone, Copy, Default)]
pub struct ParseContext<'a> {
    pub dimension: Option<usize>,
    pub parameters: Option<&'a [&'a str]>,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    ctx: ParseContext<'a>,
}

fn leaf_index(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Token, kind: ParseErrorKind) -> ParseError {
        ParseError { kind, line: t.line, column: t.column }
    }

    fn unexpected(t: &Token, wanted: &str) -> ParseError {
        Self::err_at(t, ParseErrorKind::Syntax(format!("expected {wanted}, found {}", t.tok)))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(Self::unexpected(&t, wanted))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek().tok == Tok::Caret {
            self.next();
            let r = self.rational()?;
            return Ok(Expr::Pow(Box::new(base), r));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v, true) if v <= i32::MAX as f64 => Ok(v as i64),
            _ => Err(Self::unexpected(&t, "integer")),
        }
    }

    fn signed_integer(&mut self) -> Result<i64, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(-self.integer()?);
        }
        self.integer()
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        let start = self.peek().clone();
        let (num, den) = if start.tok == Tok::LParen {
            self.next();
            let num = self.signed_integer()?;
            let den = if self.peek().tok == Tok::Slash {
                self.next();
                self.signed_integer()?
            } else {
                1
            };
            self.expect(Tok::RParen, "`)`")?;
            (num, den)
        } else {
            (self.signed_integer()?, 1)
        };
        Rational::new(num, den)
            .ok_or_else(|| Self::err_at(&start, ParseErrorKind::Syntax("zero denominator in exponent".into())))
    }

    fn check_index(&self, t: &Token, index: usize) -> Result<(), ParseError> {
        match self.ctx.dimension {
            Some(dimension) if index >= dimension => {
                Err(Self::err_at(t, ParseErrorKind::IndexOutOfRange { index, dimension }))
            }
            _ => Ok(()),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v, _) => Ok(Expr::Const(*v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    return self.call(&t, name);
                }
                if let Some(i) = leaf_index(name, 'x') {
                    self.check_index(&t, i)?;
                    return Ok(Expr::Coord(i));
                }
                if let Some(i) = leaf_index(name, 'd') {
                    self.check_index(&t, i)?;
                    return Ok(Expr::Diff(i));
                }
                if let Some(known) = self.ctx.parameters {
                    if !known.contains(&name.as_str()) {
                        return Err(Self::err_at(&t, ParseErrorKind::UnknownIdentifier(name.clone())));
                    }
                }
                Ok(Expr::Param(name.clone()))
            }
            _ => Err(Self::unexpected(&t, "operand")),
        }
    }

    fn call(&mut self, name_tok: &Token, name: &str) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        let arity = |expected| {
            Self::err_at(name_tok, ParseErrorKind::Arity { name: name.to_string(), expected, found: args.len() })
        };
        if name == "pow" {
            if args.len() != 2 {
                return Err(arity(2));
            }
            let exponent = as_rational(&args[1]).ok_or_else(|| {
                Self::err_at(name_tok, ParseErrorKind::Syntax("pow exponent must be a rational literal".into()))
            })?;
            let base = args.swap_remove(0);
            return Ok(Expr::Pow(Box::new(base), exponent));
        }
        let func = Func::from_name(name)
            .ok_or_else(|| Self::err_at(name_tok, ParseErrorKind::UnknownIdentifier(name.to_string())))?;
        if args.len() != 1 {
            return Err(arity(1));
        }
        Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
    }
}

fn as_integer(e: &Expr) -> Option<i64> {
    match e {
        Expr::Const(c) if c.fract() == 0.0 && c.abs() < i32::MAX as f64 => Some(*c as i64),
        Expr::Neg(inner) => as_integer(inner).map(|v| -v),
        _ => None,
    }
}

fn as_rational(e: &Expr) -> Option<Rational> {
    match e {
        Expr::Binary(BinOp::Div, n, d) => Rational::new(as_integer(n)?, as_integer(d)?),
        Expr::Neg(inner) => as_rational(inner).and_then(|r| Rational::new(-r.num(), r.den() as i64)),
        _ => as_integer(e).map(Rational::integer),
    }
}

/// Parses an expression with optional dimension/parameter checking.
pub fn parse_expr_with(src: &str, ctx: ParseContext<'_>) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0, ctx };
    let e = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return Err(Parser::unexpected(&t, "operator or end of input"));
    }
    Ok(e)
}

/// Parses an expression; any free identifier is accepted as a parameter.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    parse_expr_with(src, ParseContext::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_norm_tree() {
        let e = parse_expr("sqrt(d0^2 + d1^2)").unwrap();
        let sq = |i| Box::new(Expr::Pow(Box::new(Expr::Diff(i)), Rational::integer(2)));
        assert_eq!(e, Expr::Call(Func::Sqrt, Box::new(Expr::Binary(BinOp::Add, sq(0), sq(1)))));
    }

    #[test]
    fn dangling_caret_reports_column_four() {
        let err = parse_expr("d0^").unwrap_err();
        assert_eq!((err.line, err.column), (1, 4));
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn unknown_function_and_arity() {
        let err = parse_expr("foo(d0)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        let err = parse_expr("sqrt(d0, d1)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { expected: 1, found: 2, .. }));
        let err = parse_expr("pow(d0)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { expected: 2, .. }));
    }

    #[test]
    fn unknown_parameter_with_context() {
        let known = ["m"];
        let ctx = ParseContext { dimension: Some(2), parameters: Some(&known) };
        let err = parse_expr_with("m*d0 + k*d1", ctx).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("k".into()));
        assert_eq!(err.column, 8);
        let err = parse_expr_with("d2", ctx).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::IndexOutOfRange { index: 2, dimension: 2 }));
    }

    #[test]
    fn rational_exponents() {
        let a = parse_expr("(d0^4 + d1^4)^(1/4)").unwrap();
        let b = parse_expr("pow(d0^4 + d1^4, 1/4)").unwrap();
        assert_eq!(a, b);
        assert!(parse_expr("d0^0.5").is_err());
        assert_eq!(parse_expr("d0^(-2)").unwrap(), parse_expr("pow(d0, -2)").unwrap());
    }

    #[test]
    fn locations_track_lines() {
        let err = parse_expr("d0 +\n  * d1").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn printing_preserves_grouping() {
        for src in [
            "x1 - (x2 - x3)",
            "d0 / (d1 * d2)",
            "-(d0 + d1)^2",
            "-d0^2",
            "(x1 * d2 - x2 * d1) + (x1^2 + x2^2) * d0",
            "m/2*(d1^2+d2^2+d3^2)/d0 - (k/2)*(x1^2+x2^2+x3^2)*d0",
            "((1 + x1^2) * d0^4 + d1^4)^(1/4)",
            "exp(-x0) * abs(d1) + 2.5e-3 * d0",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_expr(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }
}
