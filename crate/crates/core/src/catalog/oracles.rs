//! Reference computations written directly from the textbook or closed-form
//! expressions. None of them calls into the jet, degeneracy or connection
//! code.

use thiserror::Error;

use crate::linalg::{Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("metric tensor is not positive definite at x = {0:?}")]
    NotPositiveDefinite(Vec<f64>),
}

const METRIC_FD_STEP: f64 = 1e-3;

fn offset(x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += h;
    y
}

/// `∂_ν g` by the five-point central stencil.
fn metric_derivatives(g: &dyn Fn(&[f64]) -> Matrix, x: &[f64]) -> Vec<Matrix> {
    let h = METRIC_FD_STEP;
    (0..x.len())
        .map(|nu| {
            (g(&offset(x, nu, -2.0 * h)) - g(&offset(x, nu, 2.0 * h))
                + (g(&offset(x, nu, h)) - g(&offset(x, nu, -h))) * 8.0)
                / (12.0 * h)
        })
        .collect()
}

/// Levi-Civita symbols `Γ^μ_{αβ}`, returned as one matrix per `μ`.
pub fn christoffel(g: &dyn Fn(&[f64]) -> Matrix, x: &[f64]) -> Result<Vec<Matrix>, OracleError> {
    let n = x.len();
    let gx = g(x);
    let ginv = gx.clone().cholesky().ok_or_else(|| OracleError::NotPositiveDefinite(x.to_vec()))?.inverse();
    let dg = metric_derivatives(g, x);
    // Γ_{ναβ} = ½(∂_β g_{να} + ∂_α g_{νβ} - ∂_ν g_{αβ})
    let lower = |nu: usize, a: usize, b: usize| 0.5 * (dg[b][(nu, a)] + dg[a][(nu, b)] - dg[nu][(a, b)]);
    Ok((0..n).map(|mu| Matrix::from_fn(n, n, |a, b| (0..n).map(|nu| ginv[(mu, nu)] * lower(nu, a, b)).sum())).collect())
}

/// `2G^μ = Γ^μ_{αβ} dx^α dx^β`.
pub fn christoffel_two_g(g: &dyn Fn(&[f64]) -> Matrix, x: &[f64], dx: &[f64]) -> Result<Vector, OracleError> {
    let gamma = christoffel(g, x)?;
    let v = Vector::from_column_slice(dx);
    Ok(Vector::from_iterator(gamma.len(), gamma.iter().map(|gm| v.dot(&(gm * &v)))))
}

/// Linear Levi-Civita transport `dZ^μ/dt = -Γ^μ_{αβ} Z^α ẋ^β` by RK4 along
/// `t ↦ (x(t), ẋ(t))`.
pub fn levi_civita_transport(
    g: &dyn Fn(&[f64]) -> Matrix,
    curve: &dyn Fn(f64) -> (Vec<f64>, Vec<f64>),
    t0: f64,
    t1: f64,
    steps: usize,
    z0: &[f64],
) -> Result<Vec<f64>, OracleError> {
    let h = (t1 - t0) / steps as f64;
    let rhs = |t: f64, z: &Vector| -> Result<Vector, OracleError> {
        let (x, xdot) = curve(t);
        let gamma = christoffel(g, &x)?;
        let xd = Vector::from_vec(xdot);
        Ok(Vector::from_iterator(gamma.len(), gamma.iter().map(|gm| -z.dot(&(gm * &xd)))))
    };
    let mut z = Vector::from_column_slice(z0);
    for i in 0..steps {
        let t = t0 + h * i as f64;
        let k1 = rhs(t, &z)?;
        let k2 = rhs(t + 0.5 * h, &(&z + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&z + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&z + &k3 * h))?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(z.iter().copied().collect())
}

/// Curvature of the unit sphere `g = diag(1, sin²θ)` contracted with the
/// direction: `R^μ_{βγ} = δ^μ_β g_{δγ}dx^δ - δ^μ_γ g_{δβ}dx^δ`, indexed
/// `[μ][β][γ]`.
pub fn sphere_curvature(theta: f64, dx: &[f64]) -> [[[f64; 2]; 2]; 2] {
    let g = [1.0, theta.sin().powi(2)];
    let low = [g[0] * dx[0], g[1] * dx[1]];
    let mut r = [[[0.0; 2]; 2]; 2];
    for (mu, rm) in r.iter_mut().enumerate() {
        for (b, rb) in rm.iter_mut().enumerate() {
            for (c, v) in rb.iter_mut().enumerate() {
                let db = if mu == b { low[c] } else { 0.0 };
                let dc = if mu == c { low[b] } else { 0.0 };
                *v = db - dc;
            }
        }
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorState {
    pub y: [f64; 2],
    pub x: [f64; 2],
}

impl OscillatorState {
    pub fn energy(&self) -> f64 {
        0.5 * (self.y[0] * self.y[0] + self.y[1] * self.y[1])
    }
}

/// Exact solution of `dy¹/dt = y²`, `dy²/dt = -y¹`, `dx^i/dt = y^i`.
pub fn oscillator(y0: [f64; 2], x0: [f64; 2], t: f64) -> OscillatorState {
    let (s, c) = t.sin_cos();
    OscillatorState {
        y: [y0[0] * c + y0[1] * s, -y0[0] * s + y0[1] * c],
        x: [x0[0] + y0[0] * s + y0[1] * (1.0 - c), x0[1] + y0[0] * (c - 1.0) + y0[1] * s],
    }
}

/// A member of the Frenkel solution family `x = (t, ξ¹(t), ξ²(t), 0)`.
/// Each `ξ` returns its value and first two derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct FrenkelState {
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
    pub accel: Vec<f64>,
}

pub fn frenkel_oracle(t: f64, xi1: &dyn Fn(f64) -> [f64; 3], xi2: &dyn Fn(f64) -> [f64; 3]) -> FrenkelState {
    let (a, b) = (xi1(t), xi2(t));
    FrenkelState { x: vec![t, a[0], b[0], 0.0], dx: vec![1.0, a[1], b[1], 0.0], accel: vec![0.0, a[2], b[2], 0.0] }
}

/// `L = (m/2)|dx^a|²/dx⁰ - V dx⁰` with `V = (k/2)|x^a|²`.
pub fn potential_lagrangian(m: f64, k: f64, x: &[f64], dx: &[f64]) -> f64 {
    let v = 0.5 * k * (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    0.5 * m * (dx[1] * dx[1] + dx[2] * dx[2] + dx[3] * dx[3]) / dx[0] - v * dx[0]
}

/// Closed-form spray of the potential system:
/// `2G⁰ = -2 ∂_bV (dx⁰)² dx^b / L`,
/// `2G^a = ∂_bV ((dx⁰)² δ^{ab}/m - 2 dx⁰ dx^a dx^b / L)`.
pub fn potential_two_g(m: f64, k: f64, x: &[f64], dx: &[f64]) -> Vector {
    let l = potential_lagrangian(m, k, x, dx);
    let dv = [k * x[1], k * x[2], k * x[3]];
    let d0 = dx[0];
    let dv_dx: f64 = (0..3).map(|b| dv[b] * dx[b + 1]).sum();
    let mut out = Vector::zeros(4);
    out[0] = -2.0 * dv_dx * d0 * d0 / l;
    for a in 0..3 {
        out[a + 1] = dv[a] * d0 * d0 / m - 2.0 * d0 * dx[a + 1] * dv_dx / l;
    }
    out
}

/// Residual of the fourth-root preservation identity
/// `∂_μF / (4L³) = (g_{αβγδ}dx^βdx^γdx^δ / L³) N^α_μ` for
/// `F = A d0⁴ + 2C d0²d1² + B d1⁴`.
pub fn quartic_identity_residual(x: &[f64], dx: &[f64], n: &Matrix) -> f64 {
    let (a, b, c) = (1.0 + x[1] * x[1] / 4.0, 1.5 + 0.5 * x[0].sin(), 0.5 + 0.25 * x[1].cos());
    let (d0, d1) = (dx[0], dx[1]);
    let f = a * d0.powi(4) + 2.0 * c * d0 * d0 * d1 * d1 + b * d1.powi(4);
    let l3 = f.powf(0.75);
    let df = [0.5 * x[0].cos() * d1.powi(4), 0.5 * x[1] * d0.powi(4) - 0.5 * x[1].sin() * d0 * d0 * d1 * d1];
    let g3 = Vector::from_column_slice(&[a * d0.powi(3) + c * d0 * d1 * d1, c * d0 * d0 * d1 + b * d1.powi(3)]);
    let lhs = Vector::from_fn(2, |mu, _| df[mu] / (4.0 * l3));
    let rhs = n.tr_mul(&g3) / l3;
    let scale = lhs.norm().max(g3.norm() * n.norm() / l3).max(1e-12);
    (lhs - rhs).norm() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quarter_rotation() {
        let s = oscillator([1.0, 0.0], [0.0, 0.0], FRAC_PI_2);
        assert!((s.y[0]).abs() < 1e-15 && (s.y[1] + 1.0).abs() < 1e-15);
        let t = 0.7;
        let s = oscillator([1.0, 0.0], [0.2, 0.0], t);
        assert!((s.x[0] - (0.2 + t.sin())).abs() < 1e-15);
        assert!((s.energy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sphere_christoffels_by_hand() {
        let g = |x: &[f64]| Matrix::from_diagonal(&nalgebra::dvector![1.0, x[0].sin().powi(2)]);
        let th: f64 = 0.8;
        let gam = christoffel(&g, &[th, 0.3]).unwrap();
        assert!((gam[0][(1, 1)] + th.sin() * th.cos()).abs() < 1e-11);
        assert!((gam[1][(0, 1)] - th.cos() / th.sin()).abs() < 1e-11);
        assert!((gam[1][(1, 0)] - th.cos() / th.sin()).abs() < 1e-11);
        assert!(gam[0][(0, 0)].abs() < 1e-12);
        let flat = |_: &[f64]| Matrix::identity(2, 2);
        assert_eq!(christoffel_two_g(&flat, &[0.1, 0.2], &[1.0, 2.0]).unwrap().norm(), 0.0);
    }

    #[test]
    fn indefinite_metric_rejected() {
        let g = |_: &[f64]| Matrix::from_diagonal(&nalgebra::dvector![1.0, -1.0]);
        assert!(christoffel(&g, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn static_frenkel_member() {
        let zero = |_: f64| [0.0; 3];
        let s = frenkel_oracle(2.0, &zero, &zero);
        assert_eq!(s.dx, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.accel, vec![0.0; 4]);
    }
}
