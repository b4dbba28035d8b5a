//! Frenkel model: rank drop on the constraint surface, two free multipliers,
//! and a chosen member of the solution family reproduced by supplying them.

use finsler::autoparallel::{integrate, GaugeChoice, IntegrateOptions};
use finsler::catalog::{lookup, oracles::frenkel_oracle};
use finsler::degeneracy::{detect_rank_drop, DEFAULT_RANK_TOL};
use finsler::jet::TangentPoint;

fn main() {
    let entry = lookup("frenkel").unwrap();
    let spec = &entry.spec;

    let approach: Vec<TangentPoint> = (1..=8)
        .map(|k| {
            let e = 10f64.powi(-k);
            TangentPoint::new(vec![0.0, 0.3, 0.2, e], vec![1.0, 0.5, 0.8, e])
        })
        .collect();
    let report = detect_rank_drop(spec, &approach, DEFAULT_RANK_TOL).unwrap();
    println!("rank along x³ = dx³ = 10^-k, k = 1..8: {:?}", report.ranks);
    for tr in &report.transitions {
        println!("  transition {} -> {} at k = {}", tr.from, tr.to, tr.index + 1);
    }

    // ξ¹ = t, ξ² = 2t + sin(t)/2, so λ¹ = 0 and λ² = -sin(t)/2
    let xi1 = |t: f64| [t, 1.0, 0.0];
    let xi2 = |t: f64| [2.0 * t + 0.5 * t.sin(), 2.0 + 0.5 * t.cos(), -0.5 * t.sin()];
    let gauge = GaugeChoice::time().with_free(|t, _, _| vec![0.0, -0.5 * t.sin()]);
    let start = frenkel_oracle(0.0, &xi1, &xi2);
    let opts = IntegrateOptions { h: 1e-2, steps: 300, ..IntegrateOptions::default() };
    let traj = integrate(spec, &start.x, &start.dx, &gauge, &opts).unwrap();
    let mut worst: f64 = 0.0;
    let mut x3: f64 = 0.0;
    for nd in &traj.nodes {
        let o = frenkel_oracle(nd.t, &xi1, &xi2);
        for k in 0..4 {
            worst = worst.max((nd.x[k] - o.x[k]).abs());
        }
        x3 = x3.max(nd.x[3].abs());
    }
    let first = &traj.nodes[0];
    println!("on-surface rank {} with {} free multiplier directions", first.rank, first.gauge_dim_free);
    println!("max |x - family member| = {worst:.3e}, max |x³| = {x3:.3e}");
}
