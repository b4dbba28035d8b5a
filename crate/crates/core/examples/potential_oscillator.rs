//! Particle in a harmonic well: the closed-form spray and the time-gauge
//! trajectory compared with x(t) = x₀cos t + v₀sin t.

use finsler::autoparallel::{integrate, GaugeChoice, IntegrateOptions};
use finsler::catalog::{lookup, oracles::potential_two_g, POTENTIAL_K, POTENTIAL_M};
use finsler::connection::{spray_at, Gauge};
use finsler::degeneracy::DEFAULT_RANK_TOL;
use finsler::jet::TangentPoint;

fn main() {
    let entry = lookup("potential-system").unwrap();
    let spec = &entry.spec;

    let pt = TangentPoint::new(vec![0.0, 0.4, -0.3, 0.8], vec![1.2, 0.3, -0.2, 0.5]);
    let (_, _, spray) = spray_at(spec, &pt, None, &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
    let closed = potential_two_g(POTENTIAL_M, POTENTIAL_K, &pt.x, &pt.dx);
    println!("2G computed    = {:?}", (spray.g * 2.0).as_slice());
    println!("2G closed form = {:?}", closed.as_slice());

    let (x0, v0) = ([0.5, -0.2, 0.3], [0.1, 0.4, -0.6]);
    for h in [4e-3, 2e-3, 1e-3] {
        let opts = IntegrateOptions { h, steps: (1.0 / h).round() as usize, ..IntegrateOptions::default() };
        let traj =
            integrate(spec, &[0.0, x0[0], x0[1], x0[2]], &[1.0, v0[0], v0[1], v0[2]], &GaugeChoice::time(), &opts)
                .unwrap();
        let last = traj.last();
        let err =
            (0..3).map(|a| (last.x[a + 1] - (x0[a] * last.t.cos() + v0[a] * last.t.sin())).abs()).fold(0.0, f64::max);
        println!("h = {h:.0e}: t = {:.3}, max error {err:.3e}", last.t);
    }
}
