//! Integrate an arc-length geodesic on a quartic Finsler metric and write
//! the trajectory as CSV and JSON.

use finsler::autoparallel::{el_check, integrate, trajectory_csv, trajectory_json, GaugeChoice, IntegrateOptions};
use finsler::catalog::lookup;

fn main() {
    let e = lookup("quartic-root").unwrap();
    let x0 = [0.2, -0.1];
    let dir = [0.8, 0.6];
    let l = e.spec.eval_real(&x0, &dir).unwrap();
    let dx0: Vec<f64> = dir.iter().map(|d| d / l).collect();
    let opts = IntegrateOptions { h: 0.01, steps: 200, ..IntegrateOptions::default() };
    let traj = integrate(&e.spec, &x0, &dx0, &GaugeChoice::arc_length(), &opts).unwrap();
    println!(
        "{} nodes, max |L - 1| = {:.1e}, max |λ⁰| = {:.1e}",
        traj.nodes.len(),
        traj.l_drift(),
        traj.max_abs_lambda0()
    );
    let el = el_check(&e.spec, &traj, true).unwrap();
    println!("max EL residual from sampled curve {:.1e}", el.iter().fold(0.0f64, |m, v| m.max(*v)));

    let dir = std::env::temp_dir();
    let csv = dir.join("quartic_geodesic.csv");
    let json = dir.join("quartic_geodesic.json");
    std::fs::write(&csv, trajectory_csv(&traj)).unwrap();
    std::fs::write(&json, trajectory_json(&traj)).unwrap();
    println!("wrote {} and {}", csv.display(), json.display());
    print!("{}", trajectory_csv(&traj).lines().take(3).collect::<Vec<_>>().join("\n"));
    println!();
}
