//! Second-class constrained system: the constraints are maintained by
//! consistency-resolved multipliers and the motion is a harmonic rotation.

use finsler::autoparallel::{integrate, GaugeChoice, IntegrateOptions};
use finsler::catalog::{lookup, oracles::oscillator};

fn main() {
    let entry = lookup("second-class").unwrap();
    let steps = 628;
    let h = std::f64::consts::TAU / steps as f64;
    let opts = IntegrateOptions { h, steps, ..IntegrateOptions::default() };
    // on the constraint surface: dx¹ = x², dx² = -x¹
    let traj = integrate(&entry.spec, &[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0], &GaugeChoice::time(), &opts).unwrap();
    if let Some(reason) = &traj.halt {
        println!("halted: {reason}");
    }
    let mut worst: f64 = 0.0;
    for nd in &traj.nodes {
        let o = oscillator([1.0, 0.0], [0.0, 1.0], nd.t);
        worst = worst.max((nd.x[1] - o.x[0]).abs()).max((nd.x[2] - o.x[1]).abs());
    }
    let last = traj.last();
    println!("t = {:.6}, x = {:?}", last.t, last.x);
    println!("max |x - oscillator| = {worst:.3e}");
    println!("max |C| = {:.3e}", traj.max_constraint());
    println!("free multiplier directions = {}", last.gauge_dim_free);
    println!("λ^I at the end = {:?}", last.lambda_i);
}
