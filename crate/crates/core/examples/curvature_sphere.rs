//! Berwald-type second derivatives N2 and the curvature R of the round
//! sphere, compared with R^μ_{βγ} = δ^μ_β (g dx)_γ - δ^μ_γ (g dx)_β.

use finsler::catalog::{lookup, oracles::sphere_curvature};
use finsler::connection::{curvature_torsion, torsion, ConnectionOptions, Gauge};
use finsler::jet::TangentPoint;

fn main() {
    let e = lookup("riemann-2d-curved").unwrap();
    let opts = ConnectionOptions::default();
    let pt = TangentPoint::new(vec![1.1, 0.4], vec![0.7, -0.5]);
    let cd = curvature_torsion(&e.spec, &pt, &Gauge::Zero, &opts).unwrap();
    let exact = sphere_curvature(pt.x[0], &pt.dx);
    let mut worst: f64 = 0.0;
    for (mu, em) in exact.iter().enumerate() {
        for (b, eb) in em.iter().enumerate() {
            for (g, v) in eb.iter().enumerate() {
                worst = worst.max((cd.r.get(mu, b, g) - v).abs());
            }
        }
    }
    println!("R = {:?}", cd.r.nested());
    println!("max |R - exact| = {worst:.2e}");
    println!("N2 asymmetry = {:.2e}", cd.n2_asymmetry);
    let t = torsion(&e.spec, &pt.x, &[1.0, 0.2], &[0.3, 0.9], &Gauge::Zero, &opts).unwrap();
    println!("torsion T(X, Y) = {:?}", t.as_slice());
}
