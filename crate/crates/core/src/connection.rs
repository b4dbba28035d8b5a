//! The nonlinear connection: ℓ-basis, spray `G`, coefficients `N = ∂G/∂dx`,
//! constraint residuals, and the formal curvature and torsion operators.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::degeneracy::{analyze, analyze_with_split, DegeneracyData, DegeneracyError, IndexSplit, DEFAULT_RANK_TOL};
use crate::dsl::MetricSpec;
use crate::jet::{compute_jet, Jet2, JetError, TangentPoint};
use crate::linalg::{ser_mat, ser_vec, ser_vecs, Matrix, Vector};

const VANISHING_L_TOL: f64 = 1e-12;
const BASIS_DET_TOL: f64 = 1e-12;

/// Choice of the undetermined multipliers `λ^I` in the spray.
#[derive(Clone, Default)]
pub enum Gauge {
    #[default]
    Zero,
    Fixed(Vec<f64>),
    Function(Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>),
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gauge::Zero => write!(f, "Zero"),
            Gauge::Fixed(v) => f.debug_tuple("Fixed").field(v).finish(),
            Gauge::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Gauge {
    pub fn function(f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Gauge {
        Gauge::Function(Arc::new(f))
    }

    pub fn lambda_i(&self, pt: &TangentPoint, d: usize) -> Result<Vec<f64>, ConnectionError> {
        let v = match self {
            Gauge::Zero => vec![0.0; d],
            Gauge::Fixed(v) => v.clone(),
            Gauge::Function(f) => f(&pt.x, &pt.dx),
        };
        if v.len() != d {
            return Err(ConnectionError::GaugeArity { expected: d, found: v.len() });
        }
        Ok(v)
    }
}

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Degeneracy(#[from] DegeneracyError),
    #[error("L = {value:.3e} vanishes at a point with nonzero momenta; ℓ_0 = dx/L is singular")]
    VanishingL { value: f64 },
    #[error("ℓ-basis is degenerate (normalized determinant {det:.3e})")]
    DegenerateBasis { det: f64 },
    #[error("gauge supplies {found} multipliers, expected {expected}")]
    GaugeArity { expected: usize, found: usize },
    #[error("finite-difference stencil for {what} failed (singular-value gap ratio {gap_ratio:.3e} at the center): {source}")]
    Stencil {
        what: &'static str,
        gap_ratio: f64,
        #[source]
        source: Box<ConnectionError>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct EllBasis {
    #[serde(serialize_with = "ser_vec")]
    pub ell0: Vector,
    #[serde(rename = "ellI", serialize_with = "ser_vecs")]
    pub ell_i: Vec<Vector>,
    #[serde(serialize_with = "ser_vecs")]
    pub ella: Vec<Vector>,
    /// Determinant with every column scaled to unit length.
    pub det: f64,
    /// The null-momentum substitute (`ℓ_0 = dx/|dx|`, `ℓ_a = e_a`) is in use.
    pub null_momentum: bool,
}

impl EllBasis {
    pub fn matrix(&self) -> Matrix {
        let cols: Vec<Vector> = std::iter::once(self.ell0.clone())
            .chain(self.ell_i.iter().cloned())
            .chain(self.ella.iter().cloned())
            .collect();
        Matrix::from_columns(&cols)
    }
}

fn normalized_det(m: &Matrix) -> f64 {
    let mut m = m.clone();
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    m.determinant()
}

pub fn build_ell_basis(jet: &Jet2, deg: &DegeneracyData, pt: &TangentPoint) -> Result<EllBasis, ConnectionError> {
    let n1 = jet.dim();
    let dx = pt.dx_vector();
    let unit = |a: usize| {
        let mut e = Vector::zeros(n1);
        e[a] = 1.0;
        e
    };
    let basis = if deg.null_momentum {
        EllBasis {
            ell0: &dx / dx.norm(),
            ell_i: deg.v.clone(),
            ella: deg.split.a_indices.iter().map(|&a| unit(a)).collect(),
            det: 0.0,
            null_momentum: true,
        }
    } else {
        let l = jet.value;
        if l.abs() <= VANISHING_L_TOL * jet.p.norm() * dx.norm() {
            return Err(ConnectionError::VanishingL { value: l });
        }
        EllBasis {
            ell0: &dx / l,
            ell_i: deg.v.clone(),
            ella: deg.split.a_indices.iter().map(|&a| unit(a) - &dx * (jet.p[a] / l)).collect(),
            det: 0.0,
            null_momentum: false,
        }
    };
    let det = normalized_det(&basis.matrix());
    if det.abs() < BASIS_DET_TOL {
        return Err(ConnectionError::DegenerateBasis { det });
    }
    Ok(EllBasis { det, ..basis })
}

/// Spray `G` with its ingredients at one point.
#[derive(Clone, Debug, Serialize)]
pub struct Spray {
    #[serde(rename = "G", serialize_with = "ser_vec")]
    pub g: Vector,
    pub ell: EllBasis,
    #[serde(serialize_with = "ser_vec")]
    pub lambda_a: Vector,
    #[serde(rename = "M", serialize_with = "ser_vec")]
    pub m: Vector,
    /// Constraint residuals `C_I = M_I - L_{Ia} L^{ab} M_b`.
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    #[serde(rename = "gauge_lambdaI")]
    pub gauge_lambda_i: Vec<f64>,
}

/// Constraint residuals for a given split, in coordinate indices.
pub fn constraint_residuals(jet: &Jet2, deg: &DegeneracyData, m: &Vector) -> Vec<f64> {
    let a = &deg.split.a_indices;
    let lambda_a = block_solve(deg, m);
    deg.split
        .i_indices
        .iter()
        .map(|&i| {
            let corr: f64 = a.iter().enumerate().map(|(r, &ai)| jet.l2[(i, ai)] * lambda_a[r]).sum();
            m[i] - corr
        })
        .collect()
}

/// `λ^a = L^{ab} M_b`.
fn block_solve(deg: &DegeneracyData, m: &Vector) -> Vector {
    let a = &deg.split.a_indices;
    let ma = Vector::from_fn(a.len(), |r, _| m[a[r]]);
    &deg.lab_inv * ma
}

pub fn solve_g(
    jet: &Jet2,
    deg: &DegeneracyData,
    pt: &TangentPoint,
    gauge_lambda_i: &[f64],
) -> Result<Spray, ConnectionError> {
    if gauge_lambda_i.len() != deg.gauge_dim {
        return Err(ConnectionError::GaugeArity { expected: deg.gauge_dim, found: gauge_lambda_i.len() });
    }
    let ell = build_ell_basis(jet, deg, pt)?;
    let dx = pt.dx_vector();
    let m = jet.m_vector(&dx);
    let lambda_a = block_solve(deg, &m);
    let c = constraint_residuals(jet, deg, &m);
    let mut g = &ell.ell0 * if ell.null_momentum { 0.0 } else { 0.5 * dx.dot(&jet.dl_dx) };
    for (lam, v) in gauge_lambda_i.iter().zip(&ell.ell_i) {
        g += v * *lam;
    }
    for (lam, v) in lambda_a.iter().zip(&ell.ella) {
        g += v * *lam;
    }
    Ok(Spray { g, ell, lambda_a, m, c, gauge_lambda_i: gauge_lambda_i.to_vec() })
}

/// Numerical settings of the connection pipeline. Steps are relative to
/// `‖dx‖` (direction derivatives) or `max(1, ‖x‖)` (base derivatives).
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionOptions {
    pub rank_tol: f64,
    pub n_step: f64,
    pub n2_step: f64,
    pub x_step: f64,
}

impl Default for ConnectionOptions {
    fn default() -> Self {
        ConnectionOptions { rank_tol: DEFAULT_RANK_TOL, n_step: 1e-4, n2_step: 1e-3, x_step: 1e-3 }
    }
}

/// Jet, degeneracy and spray at a point, optionally with a prescribed split.
pub fn spray_at(
    spec: &MetricSpec,
    pt: &TangentPoint,
    split: Option<&IndexSplit>,
    gauge: &Gauge,
    rank_tol: f64,
) -> Result<(Jet2, DegeneracyData, Spray), ConnectionError> {
    let jet = compute_jet(spec, pt)?;
    let deg = match split {
        Some(s) => analyze_with_split(&jet, rank_tol, pt, s)?,
        None => analyze(&jet, rank_tol, pt)?,
    };
    let lam = gauge.lambda_i(pt, deg.gauge_dim)?;
    let spray = solve_g(&jet, &deg, pt, &lam).or_else(|e| match e {
        ConnectionError::DegenerateBasis { .. } => {
            let mut last = e;
            for alt in &deg.a_alternatives {
                let d2 = deg.repivot(&jet, pt, alt)?;
                match solve_g(&jet, &d2, pt, &lam) {
                    Ok(s) => {
                        log::info!("re-pivoted regular block to {:?}", alt);
                        return Ok(s);
                    }
                    Err(e2) => last = e2,
                }
            }
            Err(last)
        }
        e => Err(e),
    })?;
    Ok((jet, deg, spray))
}

/// Richardson-extrapolated central difference of a vector-valued function
/// along a unit parameter: `(4 D(h/2) - D(h)) / 3`.
pub(crate) fn richardson<F, E>(h: f64, mut f: F) -> Result<Vector, E>
where
    F: FnMut(f64) -> Result<Vector, E>,
{
    let d = |f: &mut F, h: f64| -> Result<Vector, E> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let dh = d(&mut f, h)?;
    let dh2 = d(&mut f, 0.5 * h)?;
    Ok((dh2 * 4.0 - dh) / 3.0)
}

fn offset(v: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut w = v.to_vec();
    w[k] += h;
    w
}

fn stencil_err(what: &'static str, gap_ratio: f64) -> impl Fn(ConnectionError) -> ConnectionError {
    move |e| ConnectionError::Stencil { what, gap_ratio, source: Box::new(e) }
}

/// `N^μ_α = ∂G^μ/∂dx^α` by central differences with the split held fixed.
pub fn coefficients_n(
    spec: &MetricSpec,
    pt: &TangentPoint,
    split: &IndexSplit,
    gauge: &Gauge,
    opts: &ConnectionOptions,
    gap_ratio: f64,
) -> Result<Matrix, ConnectionError> {
    let n1 = spec.dimension();
    let h = opts.n_step * pt.dx_vector().norm();
    let mut n = Matrix::zeros(n1, n1);
    for alpha in 0..n1 {
        let col = richardson(h, |s| {
            let p = TangentPoint::new(pt.x.clone(), offset(&pt.dx, alpha, s));
            spray_at(spec, &p, Some(split), gauge, opts.rank_tol).map(|(_, _, sp)| sp.g)
        })
        .map_err(stencil_err("N", gap_ratio))?;
        n.set_column(alpha, &col);
    }
    Ok(n)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionData {
    #[serde(flatten)]
    pub spray: Spray,
    #[serde(rename = "N", serialize_with = "ser_mat")]
    pub n: Matrix,
    /// Absolute finite-difference step used for `N`.
    pub n_step: f64,
}

/// Full connection data at a point.
pub fn connection(
    spec: &MetricSpec,
    pt: &TangentPoint,
    gauge: &Gauge,
    opts: &ConnectionOptions,
) -> Result<(Jet2, DegeneracyData, ConnectionData), ConnectionError> {
    let (jet, deg, spray) = spray_at(spec, pt, None, gauge, opts.rank_tol)?;
    let n = coefficients_n(spec, pt, &deg.split, gauge, opts, deg.gap_ratio)?;
    let n_step = opts.n_step * pt.dx_vector().norm();
    Ok((jet, deg, ConnectionData { spray, n, n_step }))
}

/// Relative residual of `∂L/∂x^μ = p_α N^α_μ`.
pub fn fpreserve_residual(jet: &Jet2, n: &Matrix) -> f64 {
    let lhs = n.tr_mul(&jet.p);
    let scale = jet.dl_dx.norm().max(jet.p.norm() * n.norm()).max(1e-12);
    (lhs - &jet.dl_dx).norm() / scale
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionHomogeneity {
    pub scales: Vec<f64>,
    pub g: f64,
    pub n: f64,
    pub c: f64,
}

fn vec_violation(scaled: &Vector, base: &Vector, lambda: f64, degree: i32, floor: f64) -> f64 {
    let expect = base * lambda.powi(degree);
    let denom = expect.norm().max(scaled.norm()).max(floor);
    if denom == 0.0 {
        0.0
    } else {
        (scaled - expect).norm() / denom
    }
}

/// Maximum relative violations of `G(λdx) = λ²G`, `N(λdx) = λN` and
/// `C(λdx) = λC`, with the split fixed at the base point.
pub fn check_connection_homogeneity(
    spec: &MetricSpec,
    pt: &TangentPoint,
    gauge: &Gauge,
    opts: &ConnectionOptions,
    scales: &[f64],
) -> Result<ConnectionHomogeneity, ConnectionError> {
    let (_, deg, base) = connection(spec, pt, gauge, opts)?;
    let base_n = Vector::from_column_slice(base.n.as_slice());
    let base_c = Vector::from_vec(base.spray.c.clone());
    let mut out = ConnectionHomogeneity { scales: scales.to_vec(), g: 0.0, n: 0.0, c: 0.0 };
    for &lambda in scales {
        let p = pt.scaled(lambda);
        let (_, _, sp) = spray_at(spec, &p, Some(&deg.split), gauge, opts.rank_tol)?;
        let n = coefficients_n(spec, &p, &deg.split, gauge, opts, deg.gap_ratio)?;
        let n = Vector::from_column_slice(n.as_slice());
        out.g = out.g.max(vec_violation(&sp.g, &base.spray.g, lambda, 2, 0.0));
        out.n = out.n.max(vec_violation(&n, &base_n, lambda, 1, 0.0));
        // constraints that vanish identically are compared on the scale of M
        let c_floor = 1e-3 * lambda * base.spray.m.norm();
        out.c = out.c.max(vec_violation(&Vector::from_vec(sp.c), &base_c, lambda, 1, c_floor));
    }
    Ok(out)
}

/// Rank-3 array indexed `[μ][β][γ]`, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Tensor3 {
        Tensor3 { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| (0..self.dim).map(|k| self.get(i, j, k)).collect()).collect())
            .collect()
    }
}

impl Serialize for Tensor3 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.nested().serialize(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureData {
    /// `R^μ_{βγ}`, antisymmetric in `(β, γ)`.
    #[serde(rename = "R")]
    pub r: Tensor3,
    /// `N^μ_{αβ} = ∂N^μ_α/∂dx^β`.
    #[serde(rename = "N2")]
    pub n2: Tensor3,
    /// Largest `|N^μ_{αβ} - N^μ_{βα}|` relative to `max |N^μ_{αβ}|`.
    pub n2_asymmetry: f64,
}

/// `N^μ_{αβ}` by central differences of `N` in `dx`.
pub fn berwald_n2(
    spec: &MetricSpec,
    pt: &TangentPoint,
    split: &IndexSplit,
    gauge: &Gauge,
    opts: &ConnectionOptions,
    gap_ratio: f64,
) -> Result<Tensor3, ConnectionError> {
    let n1 = spec.dimension();
    let h = opts.n2_step * pt.dx_vector().norm();
    let mut n2 = Tensor3::zeros(n1);
    for beta in 0..n1 {
        let d = richardson(h, |s| {
            let p = TangentPoint::new(pt.x.clone(), offset(&pt.dx, beta, s));
            coefficients_n(spec, &p, split, gauge, opts, gap_ratio).map(|m| Vector::from_column_slice(m.as_slice()))
        })
        .map_err(stencil_err("N2", gap_ratio))?;
        // column-major flattening: index μ + α·n1
        for mu in 0..n1 {
            for alpha in 0..n1 {
                n2.set(mu, alpha, beta, d[mu + alpha * n1]);
            }
        }
    }
    Ok(n2)
}

fn asymmetry(n2: &Tensor3) -> f64 {
    let n1 = n2.dim();
    let mut worst: f64 = 0.0;
    for mu in 0..n1 {
        for a in 0..n1 {
            for b in 0..n1 {
                worst = worst.max((n2.get(mu, a, b) - n2.get(mu, b, a)).abs());
            }
        }
    }
    worst / n2.max_abs().max(1e-300)
}

/// `R^μ_{βγ} = ∂_β N^μ_γ - ∂_γ N^μ_β + N^μ_{αβ} N^α_γ - N^μ_{αγ} N^α_β`.
pub fn curvature_torsion(
    spec: &MetricSpec,
    pt: &TangentPoint,
    gauge: &Gauge,
    opts: &ConnectionOptions,
) -> Result<CurvatureData, ConnectionError> {
    let n1 = spec.dimension();
    let (_, deg, conn) = connection(spec, pt, gauge, opts)?;
    let split = &deg.split;
    let n2 = berwald_n2(spec, pt, split, gauge, opts, deg.gap_ratio)?;
    let hx = opts.x_step * Vector::from_column_slice(&pt.x).norm().max(1.0);
    let mut t = Tensor3::zeros(n1);
    for beta in 0..n1 {
        let d = richardson(hx, |s| {
            let p = TangentPoint::new(offset(&pt.x, beta, s), pt.dx.clone());
            coefficients_n(spec, &p, split, gauge, opts, deg.gap_ratio).map(|m| Vector::from_column_slice(m.as_slice()))
        })
        .map_err(stencil_err("x-derivative of N", deg.gap_ratio))?;
        for mu in 0..n1 {
            for gamma in 0..n1 {
                let quad: f64 = (0..n1).map(|a| n2.get(mu, a, beta) * conn.n[(a, gamma)]).sum();
                t.set(mu, beta, gamma, d[mu + gamma * n1] + quad);
            }
        }
    }
    let mut r = Tensor3::zeros(n1);
    for mu in 0..n1 {
        for b in 0..n1 {
            for g in 0..n1 {
                r.set(mu, b, g, t.get(mu, b, g) - t.get(mu, g, b));
            }
        }
    }
    let n2_asymmetry = asymmetry(&n2);
    Ok(CurvatureData { r, n2, n2_asymmetry })
}

/// Formal torsion `T(X, Y)^μ = X^β Y^α (N^μ_{βα}(x, Y) - N^μ_{αβ}(x, X))`.
pub fn torsion(
    spec: &MetricSpec,
    x: &[f64],
    xv: &[f64],
    yv: &[f64],
    gauge: &Gauge,
    opts: &ConnectionOptions,
) -> Result<Vector, ConnectionError> {
    let n1 = spec.dimension();
    let n2_at = |dir: &[f64]| -> Result<Tensor3, ConnectionError> {
        let pt = TangentPoint::new(x.to_vec(), dir.to_vec());
        let jet = compute_jet(spec, &pt)?;
        let deg = analyze(&jet, opts.rank_tol, &pt)?;
        berwald_n2(spec, &pt, &deg.split, gauge, opts, deg.gap_ratio)
    };
    let ny = n2_at(yv)?;
    let nx = n2_at(xv)?;
    Ok(Vector::from_fn(n1, |mu, _| {
        let mut s = 0.0;
        for b in 0..n1 {
            for a in 0..n1 {
                s += xv[b] * yv[a] * (ny.get(mu, b, a) - nx.get(mu, a, b));
            }
        }
        s
    }))
}
