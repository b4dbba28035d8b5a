use serde::Serialize;

use crate::degeneracy::{analyze, DegeneracyData};
use crate::dsl::MetricSpec;
use crate::jet::{compute_jet, Jet2, TangentPoint};
use crate::linalg::{Matrix, Vector};

use super::resolve::{constraints_fixed, resolve_multipliers, Multipliers, ResolveOptions};
use super::{el_residual_from_jet, el_scale, FlowError, GaugeChoice, GaugeKind};

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub h: f64,
    pub steps: usize,
    /// Pull the state back onto `C = 0` when the drift exceeds ten times
    /// `enforce_tol`. Every projection is logged and recorded.
    pub project: bool,
    pub enforce_tol: f64,
    pub arc_tol: f64,
    pub resolve: ResolveOptions,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            h: 1e-3,
            steps: 1000,
            project: false,
            enforce_tol: 1e-10,
            arc_tol: 1e-10,
            resolve: ResolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Node {
    pub t: f64,
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
    pub accel: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub el_residual: Vec<f64>,
    /// `‖el_residual‖` relative to the size of its terms.
    pub el_norm: f64,
    pub lambda0: f64,
    pub kappa: f64,
    #[serde(rename = "lambdaI")]
    pub lambda_i: Vec<f64>,
    pub rank: usize,
    pub gauge_dim_free: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub gauge: String,
    pub h: f64,
    pub nodes: Vec<Node>,
    /// Reason the integration stopped early, if it did.
    pub halt: Option<String>,
    /// Node indices at which a constraint projection was applied.
    pub projections: Vec<usize>,
    /// `(node, old rank, new rank)`.
    pub rank_transitions: Vec<(usize, usize, usize)>,
}

impl Trajectory {
    pub fn last(&self) -> &Node {
        self.nodes.last().expect("trajectory has at least the initial node")
    }

    pub fn max_constraint(&self) -> f64 {
        self.nodes.iter().flat_map(|n| n.c.iter()).fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn l_drift(&self) -> f64 {
        let l0 = self.nodes[0].l;
        self.nodes.iter().fold(0.0, |m, n| m.max((n.l - l0).abs()))
    }

    pub fn max_abs_lambda0(&self) -> f64 {
        self.nodes.iter().fold(0.0, |m, n| m.max(n.lambda0.abs()))
    }
}

struct Eval {
    jet: Jet2,
    deg: DegeneracyData,
    mult: Multipliers,
}

fn evaluate(
    spec: &MetricSpec,
    t: f64,
    x: &Vector,
    u: &Vector,
    gauge: &GaugeChoice,
    opts: &ResolveOptions,
) -> Result<Eval, FlowError> {
    let pt = TangentPoint::new(x.iter().copied().collect(), u.iter().copied().collect());
    let jet = compute_jet(spec, &pt)?;
    let deg = analyze(&jet, opts.rank_tol, &pt)?;
    let mult = resolve_multipliers(spec, t, &pt, &jet, &deg, gauge, opts)?;
    Ok(Eval { jet, deg, mult })
}

fn node(t: f64, x: &Vector, u: &Vector, e: &Eval) -> Node {
    let r = el_residual_from_jet(&e.jet, u, &e.mult.accel);
    let scale = el_scale(&e.jet, u, &e.mult.accel);
    Node {
        t,
        x: x.iter().copied().collect(),
        dx: u.iter().copied().collect(),
        accel: e.mult.accel.iter().copied().collect(),
        l: e.jet.value,
        c: e.mult.constraints.clone(),
        el_norm: r.norm() / scale,
        el_residual: r.iter().copied().collect(),
        lambda0: e.mult.lambda0,
        kappa: e.mult.kappa,
        lambda_i: e.mult.lambda_i.clone(),
        rank: e.deg.rank,
        gauge_dim_free: e.mult.gauge_dim_free,
    }
}

/// Absolute constraint tolerance on the scale of `M` at the point.
fn constraint_tol(e: &Eval, u: &Vector, tol: f64) -> f64 {
    tol * e.jet.m_vector(u).norm().max(1.0)
}

/// Gauss-Newton pullback of `(x, dx)` onto `C = 0` with the split fixed.
fn project(
    spec: &MetricSpec,
    x: &mut Vector,
    u: &mut Vector,
    deg: &DegeneracyData,
    opts: &IntegrateOptions,
) -> Result<(), FlowError> {
    let n1 = x.len();
    let split = &deg.split;
    let c_at =
        |x: &Vector, u: &Vector| constraints_fixed(spec, x.as_slice(), u.as_slice(), split, opts.resolve.rank_tol);
    for _ in 0..4 {
        let c = c_at(x, u)?;
        if c.amax() <= opts.enforce_tol {
            break;
        }
        let mut jac = Matrix::zeros(c.len(), 2 * n1);
        for k in 0..2 * n1 {
            let h = 1e-6 * if k < n1 { x[k].abs().max(1.0) } else { u[k - n1].abs().max(1.0) };
            let (mut xp, mut up, mut xm, mut um) = (x.clone(), u.clone(), x.clone(), u.clone());
            if k < n1 {
                xp[k] += h;
                xm[k] -= h;
            } else {
                up[k - n1] += h;
                um[k - n1] -= h;
            }
            let col = (c_at(&xp, &up)? - c_at(&xm, &um)?) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let delta = jac.svd(true, true).solve(&(-c), 1e-12).map_err(|e| FlowError::Invalid(e.to_string()))?;
        for k in 0..n1 {
            x[k] += delta[k];
            u[k] += delta[n1 + k];
        }
    }
    Ok(())
}

/// Classical RK4 on `(x, dx)` with the multipliers resolved at every stage.
pub fn integrate(
    spec: &MetricSpec,
    x0: &[f64],
    dx0: &[f64],
    gauge: &GaugeChoice,
    opts: &IntegrateOptions,
) -> Result<Trajectory, FlowError> {
    if !(opts.h > 0.0) || opts.steps == 0 {
        return Err(FlowError::Invalid("need h > 0 and steps >= 1".into()));
    }
    let ro = &opts.resolve;
    let mut x = Vector::from_column_slice(x0);
    let mut u = Vector::from_column_slice(dx0);
    let mut t = 0.0;
    let e0 = evaluate(spec, t, &x, &u, gauge, ro)?;
    let c0 = e0.mult.constraints.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if c0 > constraint_tol(&e0, &u, opts.enforce_tol) {
        return Err(FlowError::InitialConstraints(c0));
    }
    if matches!(gauge.kind, GaugeKind::ArcLength) && (e0.jet.value - 1.0).abs() > opts.arc_tol {
        return Err(FlowError::InitialArcLength(e0.jet.value));
    }
    let mut traj = Trajectory {
        gauge: gauge.name().to_string(),
        h: opts.h,
        nodes: vec![node(t, &x, &u, &e0)],
        halt: None,
        projections: Vec::new(),
        rank_transitions: Vec::new(),
    };
    let mut cur = e0;
    let h = opts.h;
    for step in 1..=opts.steps {
        let stepped = (|| -> Result<(Vector, Vector, Eval, bool), FlowError> {
            let (k1x, k1u) = (u.clone(), cur.mult.accel.clone());
            let e2 = evaluate(spec, t + 0.5 * h, &(&x + &k1x * (0.5 * h)), &(&u + &k1u * (0.5 * h)), gauge, ro)?;
            let k2x = &u + &k1u * (0.5 * h);
            let k2u = e2.mult.accel;
            let e3 = evaluate(spec, t + 0.5 * h, &(&x + &k2x * (0.5 * h)), &(&u + &k2u * (0.5 * h)), gauge, ro)?;
            let k3x = &u + &k2u * (0.5 * h);
            let k3u = e3.mult.accel;
            let e4 = evaluate(spec, t + h, &(&x + &k3x * h), &(&u + &k3u * h), gauge, ro)?;
            let k4x = &u + &k3u * h;
            let k4u = e4.mult.accel;
            let mut xn = &x + (k1x + &k2x * 2.0 + &k3x * 2.0 + k4x) * (h / 6.0);
            let mut un = &u + (k1u + &k2u * 2.0 + &k3u * 2.0 + k4u) * (h / 6.0);
            let mut en = evaluate(spec, t + h, &xn, &un, gauge, ro)?;
            let drift = en.mult.constraints.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let projected = opts.project && drift > 10.0 * constraint_tol(&en, &un, opts.enforce_tol);
            if projected {
                log::info!("step {step}: projecting onto constraints (max |C| = {drift:.3e})");
                project(spec, &mut xn, &mut un, &en.deg, opts)?;
                en = evaluate(spec, t + h, &xn, &un, gauge, ro)?;
            }
            Ok((xn, un, en, projected))
        })();
        match stepped {
            Ok((xn, un, en, projected)) => {
                if projected {
                    traj.projections.push(step);
                }
                t = opts.h * step as f64;
                x = xn;
                u = un;
                let prev_rank = traj.last().rank;
                if en.deg.rank != prev_rank {
                    log::info!("node {step}: rank {} -> {}, re-analyzed", prev_rank, en.deg.rank);
                    traj.rank_transitions.push((step, prev_rank, en.deg.rank));
                }
                traj.nodes.push(node(t, &x, &u, &en));
                cur = en;
            }
            Err(e) => {
                log::warn!("trajectory halted at t = {t}: {e}");
                traj.halt = Some(e.to_string());
                break;
            }
        }
    }
    Ok(traj)
}

/// Relative Euler-Lagrange residual per node. With `from_samples` the
/// acceleration is a five-point difference of the recorded `dx`, so the
/// check sees the curve itself rather than the resolved multipliers; the
/// two nodes at each end are then skipped.
pub fn el_check(spec: &MetricSpec, traj: &Trajectory, from_samples: bool) -> Result<Vec<f64>, FlowError> {
    let nodes = &traj.nodes;
    let h = traj.h;
    let range = if from_samples { 2..nodes.len().saturating_sub(2) } else { 0..nodes.len() };
    let mut out = Vec::new();
    for i in range {
        let nd = &nodes[i];
        let u = Vector::from_column_slice(&nd.dx);
        let accel = if from_samples {
            let du = |k: usize| Vector::from_column_slice(&nodes[k].dx);
            (du(i - 2) - du(i - 1) * 8.0 + du(i + 1) * 8.0 - du(i + 2)) / (12.0 * h)
        } else {
            Vector::from_column_slice(&nd.accel)
        };
        let jet = compute_jet(spec, &TangentPoint::new(nd.x.clone(), nd.dx.clone()))?;
        let r = el_residual_from_jet(&jet, &u, &accel);
        out.push(r.norm() / el_scale(&jet, &u, &accel));
    }
    Ok(out)
}

/// Copy of a trajectory with a smooth bump of height `delta` added to
/// coordinate `k` (and its derivative to `dx^k`).
pub fn perturbed(traj: &Trajectory, k: usize, delta: f64) -> Trajectory {
    let mut out = traj.clone();
    let t0 = traj.nodes[0].t;
    let span = traj.last().t - t0;
    let w = std::f64::consts::PI / span;
    for nd in &mut out.nodes {
        let s = w * (nd.t - t0);
        nd.x[k] += delta * s.sin().powi(2);
        nd.dx[k] += delta * w * (2.0 * s).sin();
        nd.accel[k] += 2.0 * delta * w * w * (2.0 * s).cos();
    }
    out
}
