use crate::connection::{constraint_residuals, richardson};
use crate::degeneracy::{analyze_with_split, DegeneracyData, IndexSplit, DEFAULT_RANK_TOL};
use crate::dsl::MetricSpec;
use crate::jet::{compute_jet, Jet2, TangentPoint};
use crate::linalg::{Matrix, Vector};

use super::{FlowError, FreePolicy, GaugeChoice, GaugeKind};

#[derive(Clone, Debug)]
pub struct ResolveOptions {
    pub rank_tol: f64,
    /// Finite-difference step for constraint derivatives, relative to
    /// `max(1, ‖x‖, ‖dx‖)`.
    pub fd_step: f64,
    /// Singular values of the scaled consistency system below this fraction
    /// of the largest count as zero (first-class directions).
    pub classify_tol: f64,
    /// Least-squares residual above which the system is inconsistent.
    pub incompat_tol: f64,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions { rank_tol: DEFAULT_RANK_TOL, fd_step: 1e-3, classify_tol: 1e-8, incompat_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct Multipliers {
    pub accel: Vector,
    /// Coefficient of `dx` in the acceleration.
    pub kappa: f64,
    /// `λ^I`, one per gauge index of the split.
    pub lambda_i: Vec<f64>,
    pub lambda_a: Vector,
    /// `λ⁰ = p·(a + 2G)`.
    pub lambda0: f64,
    pub gauge_dim_free: usize,
    pub system_rank: usize,
    pub residual: f64,
    pub constraints: Vec<f64>,
}

/// Constraint residuals at `(x, dx)` with the index split held fixed.
pub fn constraints_fixed(
    spec: &MetricSpec,
    x: &[f64],
    dx: &[f64],
    split: &IndexSplit,
    rank_tol: f64,
) -> Result<Vector, FlowError> {
    let pt = TangentPoint::new(x.to_vec(), dx.to_vec());
    let jet = compute_jet(spec, &pt)?;
    let deg = analyze_with_split(&jet, rank_tol, &pt, split)?;
    let m = jet.m_vector(&pt.dx_vector());
    Ok(Vector::from_vec(constraint_residuals(&jet, &deg, &m)))
}

fn along(v: &[f64], dir: &Vector, s: f64) -> Vec<f64> {
    v.iter().zip(dir.iter()).map(|(a, d)| a + s * d).collect()
}

/// Derivative of the constraints along `(ξ, η)` in `(x, dx)`.
fn constraint_derivative(
    spec: &MetricSpec,
    pt: &TangentPoint,
    xi: &Vector,
    eta: &Vector,
    split: &IndexSplit,
    opts: &ResolveOptions,
) -> Result<Vector, FlowError> {
    let dir_norm = (xi.norm_squared() + eta.norm_squared()).sqrt();
    if dir_norm == 0.0 {
        return Ok(Vector::zeros(split.i_indices.len()));
    }
    let base = Vector::from_column_slice(&pt.x).norm().max(pt.dx_vector().norm()).max(1.0);
    let h = opts.fd_step * base / dir_norm;
    richardson(h, |s| constraints_fixed(spec, &along(&pt.x, xi, s), &along(&pt.dx, eta, s), split, opts.rank_tol))
}

/// Size of the constraint terms, used to classify consistency rows.
fn constraint_scale(jet: &Jet2, dx: &Vector) -> f64 {
    (jet.l2.norm() * dx.norm() + jet.p.norm() + jet.dl_dx.norm() + jet.mixed.norm() * dx.norm()).max(1e-300)
}

/// Solves the gauge condition and the constraint consistency conditions
/// for the acceleration at `pt`.
pub fn resolve_multipliers(
    spec: &MetricSpec,
    t: f64,
    pt: &TangentPoint,
    jet: &Jet2,
    deg: &DegeneracyData,
    gauge: &GaugeChoice,
    opts: &ResolveOptions,
) -> Result<Multipliers, FlowError> {
    let n1 = jet.dim();
    let d = deg.gauge_dim;
    let u = pt.dx_vector();
    let m = jet.m_vector(&u);
    let a_idx = &deg.split.a_indices;
    let lambda_a = {
        let ma = Vector::from_fn(a_idx.len(), |r, _| m[a_idx[r]]);
        &deg.lab_inv * ma
    };
    let mut a0 = Vector::zeros(n1);
    for (r, &a) in a_idx.iter().enumerate() {
        a0[a] = -2.0 * lambda_a[r];
    }
    let w = &deg.null_vectors;
    let constraints = constraint_residuals(jet, deg, &m);
    let lam_a_p: f64 = a_idx.iter().enumerate().map(|(r, &a)| lambda_a[r] * jet.p[a]).sum();

    let mut k = Matrix::zeros(1 + d, 1 + d);
    let mut rhs = Vector::zeros(1 + d);
    match &gauge.kind {
        GaugeKind::Time => {
            k[(0, 0)] = u[0];
            for j in 0..d {
                k[(0, 1 + j)] = w[j][0];
            }
            rhs[0] = -a0[0];
        }
        GaugeKind::ArcLength => {
            k[(0, 0)] = jet.p.dot(&u);
            for j in 0..d {
                k[(0, 1 + j)] = jet.p.dot(&w[j]);
            }
            rhs[0] = -(jet.dl_dx.dot(&u) + jet.p.dot(&a0));
        }
        GaugeKind::Custom(f) => {
            k[(0, 0)] = jet.value;
            for j in 0..d {
                k[(0, 1 + j)] = jet.p.dot(&w[j]);
            }
            rhs[0] = f(t, &pt.x, &pt.dx) - u.dot(&jet.dl_dx) + 2.0 * lam_a_p;
        }
    }
    let g_norm = k.row(0).norm();
    if g_norm > 0.0 {
        k.row_mut(0).scale_mut(1.0 / g_norm);
        rhs[0] /= g_norm;
    }

    if d > 0 {
        let s = constraint_scale(jet, &u);
        let zero = Vector::zeros(n1);
        let drift = constraint_derivative(spec, pt, &u, &a0, &deg.split, opts)?;
        let dw: Vec<Vector> = w
            .iter()
            .map(|wj| constraint_derivative(spec, pt, &zero, wj, &deg.split, opts))
            .collect::<Result<_, _>>()?;
        for i in 0..d {
            // d/ds C(x, dx + s dx) = C by homogeneity
            k[(1 + i, 0)] = constraints[i] / s;
            for j in 0..d {
                k[(1 + i, 1 + j)] = dw[j][i] / s;
            }
            rhs[1 + i] = -drift[i] / s;
        }
    }

    let svd = k.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let thr = opts.classify_tol * sigma_max;
    let system_rank = svd.singular_values.iter().filter(|s| **s > thr).count();
    let mut z = if sigma_max > 0.0 {
        svd.solve(&rhs, thr).map_err(|e| FlowError::Invalid(e.to_string()))?
    } else {
        Vector::zeros(1 + d)
    };
    let residual = (&k * &z - &rhs).norm();
    if residual > opts.incompat_tol * rhs.norm().max(1.0) {
        return Err(FlowError::ConstraintIncompatibility { residual });
    }
    let gauge_dim_free = (1 + d) - system_rank;
    if gauge_dim_free > 0 {
        if let FreePolicy::Function(f) = &gauge.free {
            let desired = f(t, &pt.x, &pt.dx);
            if desired.len() != d {
                return Err(FlowError::FreePolicyArity { expected: d, found: desired.len() });
            }
            let mut target = z.clone();
            for j in 0..d {
                target[1 + j] = desired[j];
            }
            let v_t = svd.v_t.as_ref().expect("requested V");
            let diff = &target - &z;
            for (r, sv) in svd.singular_values.iter().enumerate() {
                if *sv <= thr {
                    let nv = v_t.row(r).transpose();
                    z += &nv * nv.dot(&diff);
                }
            }
        }
    }

    let kappa = z[0];
    let lambda_i: Vec<f64> = z.iter().skip(1).copied().collect();
    let mut accel = a0 + &u * kappa;
    for (j, wj) in w.iter().enumerate() {
        accel += wj * lambda_i[j];
    }
    let lambda0 = kappa * jet.value + u.dot(&jet.dl_dx) - 2.0 * lam_a_p
        + w.iter().zip(&lambda_i).map(|(wj, l)| l * jet.p.dot(wj)).sum::<f64>();
    Ok(Multipliers { accel, kappa, lambda_i, lambda_a, lambda0, gauge_dim_free, system_rank, residual, constraints })
}
