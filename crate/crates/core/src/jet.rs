//! Second-order jet of a metric at a tangent-bundle point, and homogeneity
//! validation.

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{MetricError, MetricSpec};
use crate::linalg::{ser_mat, ser_vec, Matrix, Vector};
use crate::taylor::Taylor2;

/// Relative tolerance of the jet identities.
pub const JET_IDENTITY_TOL: f64 = 1e-9;
const SCALE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentPoint {
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
}

impl TangentPoint {
    pub fn new(x: Vec<f64>, dx: Vec<f64>) -> TangentPoint {
        TangentPoint { x, dx }
    }

    pub fn scaled(&self, lambda: f64) -> TangentPoint {
        TangentPoint { x: self.x.clone(), dx: self.dx.iter().map(|d| d * lambda).collect() }
    }

    pub fn dx_vector(&self) -> Vector {
        Vector::from_column_slice(&self.dx)
    }
}

/// `L`, `∂L/∂x`, momenta `p = ∂L/∂dx`, the direction Hessian `L2` and the
/// mixed block `mixed[μ][ρ] = ∂²L/∂dx^μ∂x^ρ`.
#[derive(Clone, Debug, Serialize)]
pub struct Jet2 {
    #[serde(rename = "L")]
    pub value: f64,
    #[serde(serialize_with = "ser_vec")]
    pub dl_dx: Vector,
    #[serde(serialize_with = "ser_vec")]
    pub p: Vector,
    #[serde(rename = "L2", serialize_with = "ser_mat")]
    pub l2: Matrix,
    #[serde(serialize_with = "ser_mat")]
    pub mixed: Matrix,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum JetError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("homogeneity violation ({identity}): residual {residual:.3e} exceeds {tolerance:.3e}; the expression is not 1-homogeneous in dx")]
    Homogeneity { identity: &'static str, residual: f64, tolerance: f64 },
}

fn within(residual: f64, scale: f64, rel: f64) -> (bool, f64) {
    if scale < SCALE_FLOOR {
        (residual <= SCALE_FLOOR, SCALE_FLOOR)
    } else {
        (residual <= rel * scale, rel * scale)
    }
}

impl Jet2 {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Residuals of the three homogeneity identities paired with their
    /// tolerance: Euler `p·dx = L`, annihilation `L2·dx = 0` and the mixed
    /// contraction `dxᵀ·mixed = ∂L/∂x`.
    pub fn identity_residuals(&self, dx: &Vector) -> [(&'static str, f64, f64, bool); 3] {
        let euler = (self.p.dot(dx) - self.value).abs();
        let euler_scale = self.value.abs().max(self.p.norm() * dx.norm());
        let ann = (&self.l2 * dx).norm();
        let ann_scale = self.l2.norm() * dx.norm();
        let mix = (self.mixed.tr_mul(dx) - &self.dl_dx).norm();
        let mix_scale = self.mixed.norm() * dx.norm() + self.dl_dx.norm();
        let mut out = [("", 0.0, 0.0, true); 3];
        for (k, (name, r, s)) in
            [("euler", euler, euler_scale), ("annihilation", ann, ann_scale), ("mixed-contraction", mix, mix_scale)]
                .into_iter()
                .enumerate()
        {
            let (ok, tol) = within(r, s, JET_IDENTITY_TOL);
            out[k] = (name, r, tol, ok);
        }
        out
    }

    /// `M_μ = ½(−∂L/∂x^μ + dx^ρ ∂²L/∂dx^μ∂x^ρ)`.
    pub fn m_vector(&self, dx: &Vector) -> Vector {
        (&self.mixed * dx - &self.dl_dx) * 0.5
    }
}

/// Jet without the identity checks; used where the caller validates.
pub fn compute_jet_unchecked(spec: &MetricSpec, pt: &TangentPoint) -> Result<Jet2, MetricError> {
    spec.check_admissible(&pt.x, &pt.dx)?;
    let n1 = spec.dimension();

    // sweep over the differentials: L, p, L2
    let dx_seeded =
        |k: usize| -> Vec<Taylor2> { pt.dx.iter().enumerate().map(|(i, v)| Taylor2::lift(*v, Some(i), k)).collect() };
    let x_const: Vec<Taylor2> = pt.x.iter().map(|v| Taylor2::constant(*v)).collect();
    let l = spec.evaluate_unchecked(&x_const, &dx_seeded(n1))?;
    let value = l.value();
    let p = Vector::from_fn(n1, |i, _| l.grad(i));
    let l2 = Matrix::from_fn(n1, n1, |i, j| l.hess(i, j));

    // one sweep per coordinate for the mixed block
    let mut dl_dx = Vector::zeros(n1);
    let mut mixed = Matrix::zeros(n1, n1);
    let dx_wide = dx_seeded(n1 + 1);
    for rho in 0..n1 {
        let mut x = x_const.clone();
        x[rho] = Taylor2::lift(pt.x[rho], Some(n1), n1 + 1);
        let lr = spec.evaluate_unchecked(&x, &dx_wide)?;
        dl_dx[rho] = lr.grad(n1);
        for mu in 0..n1 {
            mixed[(mu, rho)] = lr.hess(mu, n1);
        }
    }
    Ok(Jet2 { value, dl_dx, p, l2, mixed })
}

/// Full jet; fails with [`JetError::Homogeneity`] when an identity implied by
/// 1-homogeneity does not hold.
pub fn compute_jet(spec: &MetricSpec, pt: &TangentPoint) -> Result<Jet2, JetError> {
    let jet = compute_jet_unchecked(spec, pt)?;
    for (identity, residual, tolerance, ok) in jet.identity_residuals(&pt.dx_vector()) {
        if !ok {
            return Err(JetError::Homogeneity { identity, residual, tolerance });
        }
    }
    Ok(jet)
}

#[derive(Clone, Debug, Serialize)]
pub struct HomogeneityReport {
    pub scales: Vec<f64>,
    /// Relative violation of `L(x, λdx) = λ L(x, dx)` per scale.
    pub violations: Vec<f64>,
    pub max_violation: f64,
}

impl HomogeneityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Relative violation of a degree-`degree` homogeneity relation.
pub fn homogeneity_violation(scaled: f64, base: f64, lambda: f64, degree: i32) -> f64 {
    let expect = lambda.powi(degree) * base;
    let denom = expect.abs().max(scaled.abs());
    if denom == 0.0 {
        0.0
    } else {
        (scaled - expect).abs() / denom
    }
}

pub fn check_homogeneity(
    spec: &MetricSpec,
    pt: &TangentPoint,
    scales: &[f64],
) -> Result<HomogeneityReport, MetricError> {
    let base = spec.eval_real(&pt.x, &pt.dx)?;
    let mut violations = Vec::with_capacity(scales.len());
    for &lambda in scales {
        assert!(lambda > 0.0, "homogeneity scales must be positive");
        let s = pt.scaled(lambda);
        let v = spec.eval_real(&s.x, &s.dx)?;
        violations.push(homogeneity_violation(v, base, lambda, 1));
    }
    let max_violation = violations.iter().copied().fold(0.0, f64::max);
    Ok(HomogeneityReport { scales: scales.to_vec(), violations, max_violation })
}
