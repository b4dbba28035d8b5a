//! Rank of the direction Hessian, the induced index split, null vectors,
//! and the constraints they produce, for a regular and two singular metrics.

use finsler::catalog::lookup;
use finsler::connection::{spray_at, Gauge};
use finsler::degeneracy::{analyze, DEFAULT_RANK_TOL};
use finsler::jet::{compute_jet, TangentPoint};

fn show(name: &str, x: &[f64], dx: &[f64]) {
    let e = lookup(name).unwrap();
    let pt = TangentPoint::new(x.to_vec(), dx.to_vec());
    let jet = compute_jet(&e.spec, &pt).unwrap();
    let deg = analyze(&jet, DEFAULT_RANK_TOL, &pt).unwrap();
    println!("{name}: L = {}", e.spec.expr());
    println!(
        "  rank {} D {}  time index {}  I = {:?}  A = {:?}  gap ratio {:.1e}",
        deg.rank, deg.gauge_dim, deg.split.time_index, deg.split.i_indices, deg.split.a_indices, deg.gap_ratio
    );
    for (w, v) in deg.null_vectors.iter().zip(&deg.v) {
        println!("  null vector w = {:?}, normalized v = {:?}", w.as_slice(), v.as_slice());
    }
    let (_, _, spray) = spray_at(&e.spec, &pt, None, &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
    if !spray.c.is_empty() {
        println!("  constraints C = {:?}", spray.c);
    }
}

fn main() {
    show("riemann-2d-curved", &[1.0, 0.0], &[0.3, 0.8]);
    show("second-class", &[0.0, 0.2, 0.5], &[1.0, 0.3, -0.4]);
    show("frenkel", &[0.0, 0.3, 0.2, 0.4], &[1.0, 0.5, 0.8, 0.3]);
    // on x³ = dx³ = 0 the Frenkel Hessian loses another rank
    show("frenkel", &[0.0, 0.3, 0.2, 0.0], &[1.0, 0.5, 0.8, 0.0]);
}
