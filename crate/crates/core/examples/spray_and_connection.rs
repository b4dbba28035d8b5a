//! Spray G, the adapted frame, and the nonlinear connection N for a
//! non-Riemannian metric; then the gauge freedom of G for a singular one.

use std::collections::BTreeMap;

use finsler::catalog::lookup;
use finsler::connection::{build_ell_basis, connection, fpreserve_residual, spray_at, ConnectionOptions, Gauge};
use finsler::degeneracy::DEFAULT_RANK_TOL;
use finsler::dsl::MetricSpec;
use finsler::jet::TangentPoint;

fn main() {
    let spec = MetricSpec::parse(2, "(d0^4 + (1 + x0^2)*d1^4)^(1/4) + 0.1*x1*d0", BTreeMap::new(), None).unwrap();
    let pt = TangentPoint::new(vec![0.5, 0.2], vec![1.0, 0.6]);
    let (jet, deg, conn) = connection(&spec, &pt, &Gauge::Zero, &ConnectionOptions::default()).unwrap();
    let ell = build_ell_basis(&jet, &deg, &pt).unwrap();
    println!("ℓ0 = {:?}, ℓa = {:?}", ell.ell0.as_slice(), ell.ella.iter().map(|v| v.as_slice()).collect::<Vec<_>>());
    println!("G = {:?}", conn.spray.g.as_slice());
    println!("N = {}", conn.n);
    println!("metric preservation residual {:.1e}", fpreserve_residual(&jet, &conn.n));
    println!("|N·dx - 2G| = {:.1e}", (&conn.n * pt.dx_vector() - &conn.spray.g * 2.0).norm());

    // for a singular metric G is fixed only up to λ^I ℓ_I
    let e = lookup("second-class").unwrap();
    let pt = TangentPoint::new(vec![0.0, 0.2, 0.5], vec![1.0, 0.3, -0.4]);
    for lam in [vec![0.0, 0.0], vec![0.5, -1.0]] {
        let (_, _, sp) = spray_at(&e.spec, &pt, None, &Gauge::Fixed(lam.clone()), DEFAULT_RANK_TOL).unwrap();
        println!("second-class, λ^I = {lam:?}: G = {:?}", sp.g.as_slice());
    }
}
