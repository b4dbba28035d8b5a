use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{BindError, EvalError, Expr};
use super::parser::{parse_expr_with, ParseContext, ParseError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("in {field}: {source}")]
    Parse {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error("invalid metric document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Failures of a single metric evaluation.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum MetricError {
    #[error("expected {expected} components, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("degenerate direction: dx is the zero vector")]
    ZeroDirection,
    #[error("point outside the admissible domain (guard value {0})")]
    GuardViolation(f64),
    #[error("domain violation: {0}")]
    Domain(#[from] EvalError),
}

/// JSON exchange format of a metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDocument {
    pub dimension: usize,
    pub expression: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub guard: Option<String>,
}

/// A Finsler metric `L(x, dx)` on a chart of dimension `n + 1`.
///
/// Parameters are bound at construction, so evaluation is a pure function of
/// `(x, dx)`. The optional guard expression must be strictly positive on the
/// admissible sub-bundle.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    dimension: usize,
    expr: Expr,
    parameters: BTreeMap<String, f64>,
    guard: Option<Expr>,
    bound: Expr,
    bound_guard: Option<Expr>,
}

impl MetricSpec {
    pub fn new(
        dimension: usize,
        expr: Expr,
        parameters: BTreeMap<String, f64>,
        guard: Option<Expr>,
    ) -> Result<MetricSpec, SpecError> {
        if dimension < 2 {
            return Err(SpecError::Dimension(dimension));
        }
        let bound = expr.bind(&parameters, dimension)?;
        let bound_guard = guard.as_ref().map(|g| g.bind(&parameters, dimension)).transpose()?;
        Ok(MetricSpec { dimension, expr, parameters, guard, bound, bound_guard })
    }

    /// Parses `expression` (and `guard`) against the given dimension and
    /// parameter set.
    pub fn parse(
        dimension: usize,
        expression: &str,
        parameters: BTreeMap<String, f64>,
        guard: Option<&str>,
    ) -> Result<MetricSpec, SpecError> {
        if dimension < 2 {
            return Err(SpecError::Dimension(dimension));
        }
        let names: Vec<&str> = parameters.keys().map(String::as_str).collect();
        let ctx = ParseContext { dimension: Some(dimension), parameters: Some(&names) };
        let expr =
            parse_expr_with(expression, ctx).map_err(|source| SpecError::Parse { field: "expression", source })?;
        let guard = guard
            .map(|g| parse_expr_with(g, ctx))
            .transpose()
            .map_err(|source| SpecError::Parse { field: "guard", source })?;
        MetricSpec::new(dimension, expr, parameters, guard)
    }

    pub fn from_document(doc: &MetricDocument) -> Result<MetricSpec, SpecError> {
        MetricSpec::parse(doc.dimension, &doc.expression, doc.parameters.clone(), doc.guard.as_deref())
    }

    pub fn from_json(text: &str) -> Result<MetricSpec, SpecError> {
        let doc: MetricDocument = serde_json::from_str(text)?;
        MetricSpec::from_document(&doc)
    }

    pub fn to_document(&self) -> MetricDocument {
        MetricDocument {
            dimension: self.dimension,
            expression: self.expr.to_string(),
            parameters: self.parameters.clone(),
            guard: self.guard.as_ref().map(Expr::to_string),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn guard(&self) -> Option<&Expr> {
        self.guard.as_ref()
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    /// Copy of this metric with some parameters replaced.
    pub fn with_parameters(&self, overrides: &[(&str, f64)]) -> Result<MetricSpec, SpecError> {
        let mut params = self.parameters.clone();
        for (k, v) in overrides {
            params.insert((*k).to_string(), *v);
        }
        MetricSpec::new(self.dimension, self.expr.clone(), params, self.guard.clone())
    }

    /// Checks arity, the zero section and the guard on plain reals.
    pub fn check_admissible(&self, x: &[f64], dx: &[f64]) -> Result<(), MetricError> {
        for v in [x, dx] {
            if v.len() != self.dimension {
                return Err(MetricError::Arity { expected: self.dimension, found: v.len() });
            }
        }
        if dx.iter().all(|d| *d == 0.0) {
            return Err(MetricError::ZeroDirection);
        }
        if let Some(g) = &self.bound_guard {
            let v = g.eval(x, dx)?;
            if !(v > 0.0) {
                return Err(MetricError::GuardViolation(v));
            }
        }
        Ok(())
    }

    /// Value of `L` in the scalar type of the inputs, after the admissibility
    /// check on their real parts.
    pub fn evaluate<S: Scalar>(&self, x: &[S], dx: &[S]) -> Result<S, MetricError> {
        let xr: Vec<f64> = x.iter().map(Scalar::value).collect();
        let dr: Vec<f64> = dx.iter().map(Scalar::value).collect();
        self.check_admissible(&xr, &dr)?;
        self.evaluate_unchecked(x, dx)
    }

    /// Evaluation without the guard check; still rejects function-domain
    /// violations.
    pub fn evaluate_unchecked<S: Scalar>(&self, x: &[S], dx: &[S]) -> Result<S, MetricError> {
        let v = self.bound.eval(x, dx)?;
        if !v.value().is_finite() {
            return Err(MetricError::Domain(EvalError {
                error: crate::scalar::DomainError::NonFinite,
                subexpr: self.expr.to_string(),
            }));
        }
        Ok(v)
    }

    pub fn eval_real(&self, x: &[f64], dx: &[f64]) -> Result<f64, MetricError> {
        self.evaluate(x, dx)
    }
}
