use serde::Serialize;

use crate::connection::{connection, ConnectionError, ConnectionOptions, Gauge};
use crate::dsl::MetricSpec;
use crate::jet::TangentPoint;
use crate::linalg::Vector;

use super::integrate::Trajectory;

#[derive(Clone, Debug, Serialize)]
pub struct Transport {
    pub t: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    /// `L(x(t), Z(t))`.
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    /// `max_t |L(x(t), Z(t)) - L(x(0), Z(0))|`.
    pub drift: f64,
}

/// Transports `z0` along a curve given as `t ↦ (x(t), ẋ(t))` by solving
/// `dZ^μ/dt = -N^μ_α(x, Z) ẋ^α` with RK4.
pub fn parallel_transport_along<C>(
    spec: &MetricSpec,
    curve: C,
    t0: f64,
    t1: f64,
    steps: usize,
    z0: &[f64],
    opts: &ConnectionOptions,
) -> Result<Transport, ConnectionError>
where
    C: Fn(f64) -> (Vec<f64>, Vec<f64>),
{
    let h = (t1 - t0) / steps as f64;
    let rhs = |t: f64, z: &Vector| -> Result<Vector, ConnectionError> {
        let (x, xdot) = curve(t);
        let pt = TangentPoint::new(x, z.iter().copied().collect());
        let (_, _, c) = connection(spec, &pt, &Gauge::Zero, opts)?;
        Ok(-(&c.n * Vector::from_vec(xdot)))
    };
    let value = |t: f64, z: &Vector| -> Result<f64, ConnectionError> {
        let (x, _) = curve(t);
        Ok(spec.eval_real(&x, z.as_slice()).map_err(crate::jet::JetError::from)?)
    };
    let mut z = Vector::from_column_slice(z0);
    let mut out = Transport { t: vec![t0], z: vec![z0.to_vec()], l: vec![value(t0, &z)?], drift: 0.0 };
    for i in 0..steps {
        let t = t0 + h * i as f64;
        let k1 = rhs(t, &z)?;
        let k2 = rhs(t + 0.5 * h, &(&z + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&z + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&z + &k3 * h))?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let tn = t0 + h * (i + 1) as f64;
        out.t.push(tn);
        out.z.push(z.iter().copied().collect());
        out.l.push(value(tn, &z)?);
    }
    let l0 = out.l[0];
    out.drift = out.l.iter().fold(0.0, |m, l| m.max((l - l0).abs()));
    Ok(out)
}

/// Transport along the nodes of an integrated trajectory, using the cubic
/// Hermite interpolant of `(x, dx)` between nodes.
pub fn parallel_transport(
    spec: &MetricSpec,
    curve: &Trajectory,
    z0: &[f64],
    opts: &ConnectionOptions,
) -> Result<Transport, ConnectionError> {
    let nodes = &curve.nodes;
    let steps = nodes.len() - 1;
    let t0 = nodes[0].t;
    let h = curve.h;
    let hermite = |t: f64| -> (Vec<f64>, Vec<f64>) {
        let i = (((t - t0) / h).floor() as usize).min(steps.saturating_sub(1));
        let (a, b) = (&nodes[i], &nodes[i + 1]);
        let s = (t - a.t) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
        let (d00, d10, d01, d11) =
            (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
        let n1 = a.x.len();
        let x = (0..n1).map(|k| h00 * a.x[k] + h10 * h * a.dx[k] + h01 * b.x[k] + h11 * h * b.dx[k]).collect();
        let xdot = (0..n1).map(|k| (d00 * a.x[k] + d01 * b.x[k]) / h + d10 * a.dx[k] + d11 * b.dx[k]).collect();
        (x, xdot)
    };
    parallel_transport_along(spec, hermite, t0, nodes[steps].t, steps, z0, opts)
}
