//! Norm conservation: transport a direction around a circle of latitude on
//! the 2-sphere, watch L(x, Z) stay constant, and compare Z with the
//! Levi-Civita transport of the same vector. Then integrate an arc-length
//! geodesic and check that L stays at 1.

use finsler::autoparallel::{integrate, parallel_transport_along, GaugeChoice, IntegrateOptions};
use finsler::catalog::{lookup, oracles::levi_civita_transport};
use finsler::connection::ConnectionOptions;

fn main() {
    let entry = lookup("riemann-2d-curved").unwrap();
    let spec = &entry.spec;
    let metric = entry.facts.metric_tensor.clone().unwrap();
    let theta = 1.0;
    let curve = move |t: f64| (vec![theta, t], vec![0.0, 1.0]);
    let z0 = [0.6, 0.9];
    let opts = ConnectionOptions::default();

    let mut prev: Option<f64> = None;
    for steps in [10, 20, 40, 80] {
        let tr = parallel_transport_along(spec, curve, 0.0, 3.0, steps, &z0, &opts).unwrap();
        let order = prev.map(|p| (p / tr.drift).log2());
        println!(
            "steps {steps:3}: L drift {:.3e}  order {}",
            tr.drift,
            order.map_or("-".into(), |o| format!("{o:.2}"))
        );
        prev = Some(tr.drift);
        if steps == 80 {
            let lc = levi_civita_transport(&*metric, &curve, 0.0, 3.0, steps, &z0).unwrap();
            let z = tr.z.last().unwrap();
            println!("  Z = {z:?}, Levi-Civita = {lc:?}");
        }
    }

    // unit-speed start at θ = 1 heading partly north
    let dx0 = [0.5, (0.75f64).sqrt() / theta.sin()];
    let mut prev: Option<f64> = None;
    for steps in [10, 20, 40, 80] {
        let h = 2.0 / steps as f64;
        let traj = integrate(
            spec,
            &[theta, 0.0],
            &dx0,
            &GaugeChoice::arc_length(),
            &IntegrateOptions { h, steps, ..IntegrateOptions::default() },
        )
        .unwrap();
        let drift = traj.l_drift();
        let order = prev.map(|p| (p / drift).log2());
        println!(
            "arc-length h = {h:.4}: max |L - 1| {drift:.3e}  max |λ⁰| {:.1e}  order {}",
            traj.max_abs_lambda0(),
            order.map_or("-".into(), |o| format!("{o:.2}"))
        );
        prev = Some(drift);
    }
}
