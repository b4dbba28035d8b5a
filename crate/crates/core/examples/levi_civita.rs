//! For √(g dx dx) the spray reduces to the Levi-Civita one,
//! 2G = Γ dx dx; compared here against Christoffel symbols built directly
//! from g on the round sphere and a random 3D metric.

use finsler::catalog::{lookup, oracles::christoffel_two_g, sample_points};
use finsler::connection::{spray_at, Gauge};
use finsler::degeneracy::DEFAULT_RANK_TOL;
use finsler::linalg::rel_err;

fn main() {
    for name in ["riemann-2d-curved", "riemann-3d"] {
        let e = lookup(name).unwrap();
        let g = e.facts.metric_tensor.clone().unwrap();
        let mut worst: f64 = 0.0;
        for p in sample_points(&e, 200, 1) {
            let (_, _, sp) = spray_at(&e.spec, &p, None, &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
            let expect = christoffel_two_g(&*g, &p.x, &p.dx).unwrap();
            worst = worst.max(rel_err(&(&sp.g * 2.0), &expect, 0.0));
        }
        println!("{name}: max relative difference over 200 points {worst:.2e}");
    }
}
