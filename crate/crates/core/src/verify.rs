//! Verification suites run against the catalog (or a user metric) and
//! collected into a deterministic pass/fail table.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::autoparallel::{el_check, integrate, parallel_transport_along, perturbed, GaugeChoice, IntegrateOptions};
use crate::catalog::oracles::{christoffel_two_g, frenkel_oracle, oscillator, quartic_identity_residual};
use crate::catalog::{catalog, sample_points, try_sample_points, CatalogEntry, Classification, OracleId, SampleDomain};
use crate::connection::{
    check_connection_homogeneity, connection, curvature_torsion, fpreserve_residual, solve_g, spray_at,
    ConnectionOptions, Gauge,
};
use crate::degeneracy::{analyze, detect_rank_drop, DEFAULT_RANK_TOL};
use crate::dsl::MetricSpec;
use crate::jet::{check_homogeneity, compute_jet, compute_jet_unchecked, TangentPoint};
use crate::linalg::{rel_err, Vector};

pub const HOMOGENEITY_SCALES: [f64; 3] = [0.5, 2.0, 10.0];
pub const HOMOGENEITY_TOL: f64 = 1e-9;
pub const CHRISTOFFEL_TOL: f64 = 1e-7;
pub const CLOSED_FORM_TOL: f64 = 1e-8;
pub const FPRESERVE_TOL: f64 = 1e-6;
pub const QUARTIC_TOL: f64 = 1e-6;
pub const SYMMETRY_TOL: f64 = 1e-6;
pub const UNIQUENESS_TOL: f64 = 1e-8;
pub const MIN_ORDER: f64 = 3.8;
pub const LAMBDA0_TOL: f64 = 1e-9;
pub const EL_TOL: f64 = 1e-6;
pub const TRAJECTORY_TOL: f64 = 1e-6;
pub const CONSTRAINT_DRIFT_TOL: f64 = 1e-8;
pub const FRENKEL_C_TOL: f64 = 1e-10;
pub const FRENKEL_X3_TOL: f64 = 1e-9;
/// Below this an L drift is rounding noise and carries no order information.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub entry: String,
    pub check: String,
    pub samples: usize,
    pub value: f64,
    pub bound: Bound,
    pub tol: f64,
    pub passed: bool,
    pub note: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed)
    }

    /// Fixed-width table; identical reports give identical text.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:<24} {:>5}  {:>11}  {:<13} {:<6} note",
            "entry", "check", "n", "value", "bound", "result"
        );
        for r in &self.rows {
            let op = match r.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            let _ = writeln!(
                out,
                "{:<18} {:<24} {:>5}  {:>11.3e}  {} {:<10.1e} {:<6} {}",
                r.entry,
                r.check,
                r.samples,
                r.value,
                op,
                r.tol,
                if r.passed { "PASS" } else { "FAIL" },
                r.note
            );
        }
        let failed = self.rows.iter().filter(|r| !r.passed).count();
        let _ = writeln!(out, "{} checks, {} failed", self.rows.len(), failed);
        out
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Restrict to these catalog entries; empty means all.
    pub only: Vec<String>,
    pub seed: u64,
    pub threads: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { only: Vec::new(), seed: 7, threads: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum VerifyError {
    #[error("unknown catalog entry {name:?}; known: {known}")]
    UnknownEntry { name: String, known: String },
}

struct Outcome {
    value: f64,
    samples: usize,
    note: String,
}

fn outcome(value: f64, samples: usize) -> Result<Outcome, String> {
    Ok(Outcome { value, samples, note: String::new() })
}

fn run_check(
    entry: &str,
    check: &str,
    bound: Bound,
    tol: f64,
    f: impl FnOnce() -> Result<Outcome, String>,
) -> CheckRow {
    let (value, samples, passed, note) = match f() {
        Ok(o) => {
            let ok = match bound {
                Bound::AtMost => o.value <= tol,
                Bound::AtLeast => o.value >= tol,
            };
            (o.value, o.samples, ok, o.note)
        }
        Err(e) => (f64::NAN, 0, false, e),
    };
    CheckRow { entry: entry.to_string(), check: check.to_string(), samples, value, bound, tol, passed, note }
}

/// Largest value of `f` over the points.
fn worst(points: &[TangentPoint], mut f: impl FnMut(&TangentPoint) -> Result<f64, String>) -> Result<Outcome, String> {
    let mut w: f64 = 0.0;
    for p in points {
        let v = f(p)?;
        if v.is_nan() {
            return Err(format!("NaN at x = {:?}, dx = {:?}", p.x, p.dx));
        }
        w = w.max(v);
    }
    outcome(w, points.len())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Convergence order from the two finest entries of an error ladder built
/// by step halving.
pub fn observed_order(errors: &[f64]) -> f64 {
    let n = errors.len();
    (errors[n - 2] / errors[n - 1]).log2()
}

fn order_outcome(errors: &[f64]) -> Result<Outcome, String> {
    let ladder = errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ");
    let finest = *errors.last().unwrap();
    if finest < ROUNDOFF_FLOOR {
        return Ok(Outcome {
            value: f64::INFINITY,
            samples: errors.len(),
            note: format!("conserved to rounding: {ladder}"),
        });
    }
    Ok(Outcome { value: observed_order(errors), samples: errors.len(), note: ladder })
}

fn gen_rows(name: &str, spec: &MetricSpec, points: &[TangentPoint], rows: &mut Vec<CheckRow>) {
    let copts = ConnectionOptions::default();
    rows.push(run_check(name, "jet-identities", Bound::AtMost, 1.0, || {
        worst(points, |p| {
            let jet = compute_jet_unchecked(spec, p).map_err(err)?;
            let res = jet.identity_residuals(&p.dx_vector());
            Ok(res.iter().map(|(_, r, tol, _)| r / tol.max(1e-300)).fold(0.0, f64::max))
        })
        .map(|mut o| {
            o.note = "residual / tolerance".into();
            o
        })
    }));
    rows.push(run_check(name, "L-homogeneity", Bound::AtMost, HOMOGENEITY_TOL, || {
        worst(points, |p| Ok(check_homogeneity(spec, p, &HOMOGENEITY_SCALES).map_err(err)?.max_violation))
    }));
    rows.push(run_check(name, "GNC-homogeneity", Bound::AtMost, HOMOGENEITY_TOL, || {
        worst(points, |p| {
            let h = check_connection_homogeneity(spec, p, &Gauge::Zero, &copts, &HOMOGENEITY_SCALES).map_err(err)?;
            Ok(h.g.max(h.n).max(h.c))
        })
    }));
    rows.push(run_check(name, "euler-N-dx", Bound::AtMost, UNIQUENESS_TOL, || {
        worst(points, |p| {
            let (_, _, c) = connection(spec, p, &Gauge::Zero, &copts).map_err(err)?;
            let two_g = &c.spray.g * 2.0;
            Ok(rel_err(&(&c.n * p.dx_vector()), &two_g, c.n.norm() * p.dx_vector().norm()))
        })
    }));
}

/// Checks that only make sense when `L2` has the maximal rank.
fn regular_rows(
    name: &str,
    spec: &MetricSpec,
    points: &[TangentPoint],
    many: &[TangentPoint],
    rows: &mut Vec<CheckRow>,
) {
    let copts = ConnectionOptions::default();
    rows.push(run_check(name, "fpreserve", Bound::AtMost, FPRESERVE_TOL, || {
        worst(many, |p| {
            let (jet, _, c) = connection(spec, p, &Gauge::Zero, &copts).map_err(err)?;
            Ok(fpreserve_residual(&jet, &c.n))
        })
    }));
    rows.push(run_check(name, "N2-symmetry", Bound::AtMost, SYMMETRY_TOL, || {
        worst(&points[..points.len().min(20)], |p| {
            Ok(curvature_torsion(spec, p, &Gauge::Zero, &copts).map_err(err)?.n2_asymmetry)
        })
    }));
    rows.push(run_check(name, "uniqueness", Bound::AtMost, UNIQUENESS_TOL, || {
        let mut alternatives = 0;
        let out = worst(points, |p| {
            let (jet, deg, base) = spray_at(spec, p, None, &Gauge::Zero, DEFAULT_RANK_TOL).map_err(err)?;
            let mut w: f64 = 0.0;
            for alt in deg.a_alternatives.iter().filter(|a| **a != deg.split.a_indices) {
                let Ok(d2) = deg.repivot(&jet, p, alt) else { continue };
                let Ok(sp) = solve_g(&jet, &d2, p, &[]) else { continue };
                alternatives += 1;
                w = w.max(rel_err(&sp.g, &base.g, jet.p.norm() * jet.dl_dx.norm().max(1e-300)));
            }
            Ok(w)
        });
        out.map(|mut o| {
            o.note = format!("{alternatives} alternative splits");
            o
        })
    }));
}

fn center(dom: &SampleDomain) -> Vec<f64> {
    dom.x_lo.iter().zip(&dom.x_hi).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Transport and arc-length geodesic orders, λ⁰, and the EL suite.
fn flow_rows(entry: &CatalogEntry, points: &[TangentPoint], rows: &mut Vec<CheckRow>) {
    let name = entry.name.as_str();
    let spec = &entry.spec;
    let copts = ConnectionOptions::default();
    let x0 = center(&entry.domain);
    let n1 = x0.len();
    let dir = points[0].dx_vector().normalize() * 0.25;
    let z0 = points[1].dx.clone();

    rows.push(run_check(name, "transport-order", Bound::AtLeast, MIN_ORDER, || {
        let curve = |t: f64| {
            let x: Vec<f64> = x0.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
            (x, dir.iter().copied().collect())
        };
        let mut drifts = Vec::new();
        for steps in [2, 4, 8] {
            drifts.push(parallel_transport_along(spec, curve, 0.0, 1.0, steps, &z0, &copts).map_err(err)?.drift);
        }
        order_outcome(&drifts)
    }));

    // the arc-length gauge needs L > 0 along the flow
    let positive = entry.facts.metric_tensor.is_some() || entry.oracle == OracleId::QuarticIdentity;
    if positive {
        let l0 = spec.eval_real(&x0, &points[0].dx).unwrap_or(f64::NAN);
        let u0: Vec<f64> = points[0].dx.iter().map(|v| v / l0).collect();
        let run = |steps: usize| {
            let opts = IntegrateOptions { h: 1.0 / steps as f64, steps, ..IntegrateOptions::default() };
            let traj = integrate(spec, &x0, &u0, &GaugeChoice::arc_length(), &opts).map_err(err)?;
            match &traj.halt {
                Some(h) => Err(format!("halted: {h}")),
                None => Ok(traj),
            }
        };
        let mut ladder = Vec::new();
        let mut lambda0: f64 = 0.0;
        let mut failure = None;
        for steps in [10, 20, 40] {
            match run(steps) {
                Ok(t) => {
                    ladder.push(t.l_drift());
                    lambda0 = lambda0.max(t.max_abs_lambda0());
                }
                Err(e) => failure = Some(e),
            }
        }
        rows.push(run_check(name, "arc-length-order", Bound::AtLeast, MIN_ORDER, || match &failure {
            Some(e) => Err(e.clone()),
            None => order_outcome(&ladder),
        }));
        rows.push(run_check(name, "lambda0", Bound::AtMost, LAMBDA0_TOL, || match &failure {
            Some(e) => Err(e.clone()),
            None => outcome(lambda0, 3),
        }));
        el_rows(name, spec, || run(100), n1 - 1, rows);
    }
}

fn el_rows(
    name: &str,
    spec: &MetricSpec,
    traj: impl FnOnce() -> Result<crate::autoparallel::Trajectory, String>,
    bump: usize,
    rows: &mut Vec<CheckRow>,
) {
    let traj = traj();
    rows.push(run_check(name, "EL-residual", Bound::AtMost, EL_TOL, || {
        let t = traj.as_ref().map_err(Clone::clone)?;
        let resolved = t.nodes.iter().fold(0.0, |m: f64, n| m.max(n.el_norm));
        let sampled = el_check(spec, t, true).map_err(err)?;
        outcome(sampled.into_iter().fold(resolved, f64::max), t.nodes.len())
    }));
    rows.push(run_check(name, "EL-negative-control", Bound::AtLeast, EL_TOL, || {
        let t = traj.as_ref().map_err(Clone::clone)?;
        let bad = perturbed(t, bump, 1e-3);
        let sampled = el_check(spec, &bad, true).map_err(err)?;
        Ok(Outcome {
            value: sampled.into_iter().fold(0.0, f64::max),
            samples: bad.nodes.len(),
            note: "perturbed curve must fail".into(),
        })
    }));
}

fn potential_rows(entry: &CatalogEntry, many: &[TangentPoint], rows: &mut Vec<CheckRow>) {
    let name = entry.name.as_str();
    let spec = &entry.spec;
    let two_g = entry.facts.two_g.expect("potential entry has a closed form");
    rows.push(run_check(name, "closed-form-2G", Bound::AtMost, CLOSED_FORM_TOL, || {
        worst(&many[..200], |p| {
            let (_, _, sp) = spray_at(spec, p, None, &Gauge::Zero, DEFAULT_RANK_TOL).map_err(err)?;
            let expect = Vector::from_vec(two_g(&p.x, &p.dx));
            Ok(rel_err(&(&sp.g * 2.0), &expect, 0.0))
        })
    }));
    let (x0, v0) = ([0.5, -0.2, 0.3], [0.1, 0.4, -0.6]);
    let run = |h: f64| -> Result<(f64, crate::autoparallel::Trajectory), String> {
        let opts = IntegrateOptions { h, steps: (1.0 / h).round() as usize, ..IntegrateOptions::default() };
        let traj =
            integrate(spec, &[0.0, x0[0], x0[1], x0[2]], &[1.0, v0[0], v0[1], v0[2]], &GaugeChoice::time(), &opts)
                .map_err(err)?;
        if let Some(h) = &traj.halt {
            return Err(format!("halted: {h}"));
        }
        let mut e: f64 = 0.0;
        for nd in &traj.nodes {
            let t = nd.x[0];
            for a in 0..3 {
                e = e.max((nd.x[a + 1] - (x0[a] * t.cos() + v0[a] * t.sin())).abs());
            }
        }
        Ok((e, traj))
    };
    let fine = run(1e-3);
    rows.push(run_check(name, "oscillator", Bound::AtMost, TRAJECTORY_TOL, || {
        fine.as_ref().map_err(Clone::clone).and_then(|(e, t)| outcome(*e, t.nodes.len()))
    }));
    rows.push(run_check(name, "oscillator-order", Bound::AtLeast, MIN_ORDER, || {
        let mut errs = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            errs.push(run(h)?.0);
        }
        order_outcome(&errs)
    }));
    el_rows(name, spec, || fine.clone().map(|(_, t)| t), 3, rows);
}

fn christoffel_rows(entry: &CatalogEntry, many: &[TangentPoint], rows: &mut Vec<CheckRow>) {
    let g = entry.facts.metric_tensor.clone().expect("Riemannian entry has a tensor");
    rows.push(run_check(&entry.name, "christoffel", Bound::AtMost, CHRISTOFFEL_TOL, || {
        worst(&many[..200], |p| {
            let (_, _, sp) = spray_at(&entry.spec, p, None, &Gauge::Zero, DEFAULT_RANK_TOL).map_err(err)?;
            let expect = christoffel_two_g(&*g, &p.x, &p.dx).map_err(err)?;
            // Γ dx dx is O(|dx|²) even where it nearly cancels
            Ok(rel_err(&(&sp.g * 2.0), &expect, 1e-3 * p.dx_vector().norm_squared()))
        })
    }));
}

fn constraint_rows(entry: &CatalogEntry, many: &[TangentPoint], tol: f64, rows: &mut Vec<CheckRow>) {
    let facts = entry.facts.constraints.clone().expect("singular entry lists its constraints");
    rows.push(run_check(&entry.name, "constraint-formula", Bound::AtMost, tol, || {
        worst(&many[..200], |p| {
            let (_, _, sp) =
                spray_at(&entry.spec, p, Some(&facts.split), &Gauge::Zero, DEFAULT_RANK_TOL).map_err(err)?;
            let expect = (facts.formula)(&p.x, &p.dx);
            let diff = sp.c.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            Ok(diff / scale)
        })
    }));
}

fn second_class_rows(entry: &CatalogEntry, rows: &mut Vec<CheckRow>) {
    let name = entry.name.as_str();
    let steps = 628;
    let opts = IntegrateOptions { h: TAU / steps as f64, steps, ..IntegrateOptions::default() };
    let traj = integrate(&entry.spec, &[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0], &GaugeChoice::time(), &opts)
        .map_err(err)
        .and_then(|t| match &t.halt {
            Some(h) => Err(format!("halted: {h}")),
            None => Ok(t),
        });
    let with = |f: &dyn Fn(&crate::autoparallel::Trajectory) -> f64| {
        traj.as_ref().map_err(Clone::clone).and_then(|t| outcome(f(t), t.nodes.len()))
    };
    rows.push(run_check(name, "oscillator-orbit", Bound::AtMost, TRAJECTORY_TOL, || {
        with(&|t| {
            t.nodes.iter().fold(0.0, |m: f64, n| {
                let o = oscillator([1.0, 0.0], [0.0, 1.0], n.t);
                m.max((n.x[1] - o.x[0]).abs()).max((n.x[2] - o.x[1]).abs())
            })
        })
    }));
    rows.push(run_check(name, "constraint-drift", Bound::AtMost, CONSTRAINT_DRIFT_TOL, || {
        with(&|t| t.max_constraint())
    }));
    rows.push(run_check(name, "energy-drift", Bound::AtMost, CONSTRAINT_DRIFT_TOL, || {
        with(&|t| {
            let e = |n: &crate::autoparallel::Node| 0.5 * (n.dx[1].powi(2) + n.dx[2].powi(2)) / n.dx[0].powi(2);
            let e0 = e(&t.nodes[0]);
            t.nodes.iter().fold(0.0, |m: f64, n| m.max((e(n) - e0).abs()))
        })
    }));
}

fn frenkel_rows(entry: &CatalogEntry, rows: &mut Vec<CheckRow>) {
    let name = entry.name.as_str();
    let spec = &entry.spec;
    rows.push(run_check(name, "rank-drop", Bound::AtMost, 0.0, || {
        let approach: Vec<TangentPoint> = (1..=8)
            .map(|k| {
                let e = 10f64.powi(-k);
                TangentPoint::new(vec![0.0, 0.3, 0.2, e], vec![1.0, 0.5, 0.8, e])
            })
            .collect();
        let r = detect_rank_drop(spec, &approach, DEFAULT_RANK_TOL).map_err(err)?;
        let ok = r.ranks.first() == Some(&2)
            && r.ranks.last() == Some(&1)
            && r.transitions.iter().any(|t| t.from == 2 && t.to == 1);
        Ok(Outcome { value: if ok { 0.0 } else { 1.0 }, samples: r.ranks.len(), note: format!("ranks {:?}", r.ranks) })
    }));

    let xi1 = |t: f64| [t, 1.0, 0.0];
    let xi2 = |t: f64| [2.0 * t + 0.5 * t.sin(), 2.0 + 0.5 * t.cos(), -0.5 * t.sin()];
    let start = frenkel_oracle(0.0, &xi1, &xi2);
    let gauge = GaugeChoice::time().with_free(|t, _, _| vec![0.0, -0.5 * t.sin()]);
    let opts = IntegrateOptions { h: 1e-2, steps: 300, ..IntegrateOptions::default() };
    let traj = integrate(spec, &start.x, &start.dx, &gauge, &opts).map_err(err).and_then(|t| match &t.halt {
        Some(h) => Err(format!("halted: {h}")),
        None => Ok(t),
    });
    let with = |f: &dyn Fn(&crate::autoparallel::Trajectory) -> f64| {
        traj.as_ref().map_err(Clone::clone).and_then(|t| outcome(f(t), t.nodes.len()))
    };
    rows.push(run_check(name, "free-multipliers", Bound::AtMost, 0.0, || {
        with(&|t| t.nodes.iter().filter(|n| n.rank != 1 || n.gauge_dim_free != 2).count() as f64).map(|mut o| {
            o.note = "nodes without rank 1 and 2 free directions".into();
            o
        })
    }));
    rows.push(run_check(name, "x3-stays-zero", Bound::AtMost, FRENKEL_X3_TOL, || {
        with(&|t| t.nodes.iter().fold(0.0, |m: f64, n| m.max(n.x[3].abs())))
    }));
    rows.push(run_check(name, "family-member", Bound::AtMost, TRAJECTORY_TOL, || {
        with(&|t| {
            t.nodes.iter().fold(0.0, |m: f64, n| {
                let o = frenkel_oracle(n.t, &xi1, &xi2);
                (0..4).fold(m, |m, k| m.max((n.x[k] - o.x[k]).abs()))
            })
        })
    }));
}

/// Every suite that applies to one catalog entry.
pub fn verify_entry(entry: &CatalogEntry, seed: u64) -> Vec<CheckRow> {
    let name = entry.name.as_str();
    let spec = &entry.spec;
    let points = sample_points(entry, 50, seed);
    let many = sample_points(entry, 500, seed.wrapping_add(1));
    let mut rows = Vec::new();

    rows.push(run_check(name, "rank", Bound::AtMost, 0.0, || {
        let mut bad = 0usize;
        for p in &points {
            let jet = compute_jet(spec, p).map_err(err)?;
            let deg = analyze(&jet, DEFAULT_RANK_TOL, p).map_err(err)?;
            if (deg.rank, deg.gauge_dim) != (entry.facts.rank, entry.facts.gauge_dim) {
                bad += 1;
            }
        }
        Ok(Outcome {
            value: bad as f64,
            samples: points.len(),
            note: format!("expect rank {} D {}", entry.facts.rank, entry.facts.gauge_dim),
        })
    }));
    gen_rows(name, spec, &points, &mut rows);
    if entry.facts.g_vanishes {
        rows.push(run_check(name, "G-vanishes", Bound::AtMost, 0.0, || {
            worst(&points, |p| {
                let (_, _, sp) = spray_at(spec, p, None, &Gauge::Zero, DEFAULT_RANK_TOL).map_err(err)?;
                Ok(sp.g.amax())
            })
        }));
    }
    if entry.is_regular() {
        regular_rows(name, spec, &points, &many, &mut rows);
    }
    match entry.oracle {
        OracleId::Christoffel => christoffel_rows(entry, &many, &mut rows),
        OracleId::QuarticIdentity => {
            let copts = ConnectionOptions::default();
            rows.push(run_check(name, "quartic-identity", Bound::AtMost, QUARTIC_TOL, || {
                worst(&many, |p| {
                    let (_, _, c) = connection(spec, p, &Gauge::Zero, &copts).map_err(err)?;
                    Ok(quartic_identity_residual(&p.x, &p.dx, &c.n))
                })
            }));
        }
        OracleId::PotentialClosedForm => potential_rows(entry, &many, &mut rows),
        OracleId::SecondClassConstraints => {
            // C is a bilinear expression; anything above rounding is wrong
            constraint_rows(entry, &many, 1e-14, &mut rows);
            second_class_rows(entry, &mut rows);
        }
        OracleId::FrenkelConstraint => {
            constraint_rows(entry, &many, FRENKEL_C_TOL, &mut rows);
            frenkel_rows(entry, &mut rows);
        }
        OracleId::Flat => {}
    }
    if entry.is_regular() && entry.oracle != OracleId::PotentialClosedForm {
        flow_rows(entry, &points, &mut rows);
    } else if entry.oracle == OracleId::PotentialClosedForm {
        // transport order only; the flow is covered by the oscillator
        let mut tmp = Vec::new();
        flow_rows(entry, &points, &mut tmp);
        rows.extend(tmp.into_iter().filter(|r| r.check == "transport-order"));
    }
    rows
}

/// Suites for a metric that has no known facts: identities, homogeneity,
/// and the regular-case checks when the sampled rank is maximal.
pub fn verify_metric(name: &str, spec: &MetricSpec, seed: u64) -> Vec<CheckRow> {
    let n1 = spec.dimension();
    let entry = CatalogEntry {
        name: name.to_string(),
        spec: spec.clone(),
        classification: Classification::Regular,
        facts: crate::catalog::KnownFacts {
            rank: n1 - 1,
            gauge_dim: 0,
            g_vanishes: false,
            constraints: None,
            two_g: None,
            metric_tensor: None,
        },
        oracle: OracleId::Flat,
        domain: SampleDomain::boxed(n1, 1.0, 1.0),
    };
    let Some(points) = try_sample_points(&entry, 50, seed) else {
        return vec![run_check(name, "sampling", Bound::AtMost, 0.0, || {
            Err("no admissible points in [-1, 1] for x and dx".into())
        })];
    };
    let mut rows = Vec::new();
    gen_rows(name, spec, &points, &mut rows);
    let regular = points.iter().all(|p| {
        compute_jet(spec, p).ok().and_then(|j| analyze(&j, DEFAULT_RANK_TOL, p).ok()).is_some_and(|d| d.is_regular())
    });
    if regular {
        let many = sample_points(&entry, 500, seed.wrapping_add(1));
        regular_rows(name, spec, &points, &many, &mut rows);
    }
    rows
}

/// Runs the catalog suites, entries in parallel, rows in catalog order.
pub fn verify_catalog(opts: &VerifyOptions) -> Result<VerifyReport, VerifyError> {
    let all = catalog();
    for name in &opts.only {
        if !all.iter().any(|e| &e.name == name) {
            return Err(VerifyError::UnknownEntry {
                name: name.clone(),
                known: all.iter().map(|e| e.name.as_str()).collect::<Vec<_>>().join(", "),
            });
        }
    }
    let selected: Vec<&CatalogEntry> =
        all.iter().filter(|e| opts.only.is_empty() || opts.only.contains(&e.name)).collect();
    let threads = opts.threads.max(1);
    let mut results: Vec<Vec<CheckRow>> = vec![Vec::new(); selected.len()];
    std::thread::scope(|s| {
        for (chunk_idx, chunk) in results.chunks_mut(selected.len().div_ceil(threads).max(1)).enumerate() {
            let base = chunk_idx * selected.len().div_ceil(threads).max(1);
            let selected = &selected;
            let seed = opts.seed;
            s.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let e = selected[base + k];
                    log::info!("verifying {}", e.name);
                    *slot = verify_entry(e, seed);
                }
            });
        }
    });
    Ok(VerifyReport { rows: results.into_iter().flatten().collect() })
}
