//! The metric language: parse an expression with parameters and a guard,
//! evaluate it, take its second-order jet and check 1-homogeneity.

use std::collections::BTreeMap;

use finsler::dsl::MetricSpec;
use finsler::jet::{check_homogeneity, compute_jet, TangentPoint};

fn main() {
    // a Randers metric: Riemannian length plus a one-form
    let spec = MetricSpec::parse(
        2,
        "sqrt(d0^2 + (1 + a*x0^2)*d1^2) + b*x1*d0",
        BTreeMap::from([("a".to_string(), 0.5), ("b".to_string(), 0.2)]),
        None,
    )
    .unwrap();
    println!("L = {}", spec.expr());

    let pt = TangentPoint::new(vec![0.4, -0.3], vec![1.0, 0.7]);
    println!("L(x, dx) = {:.12}", spec.eval_real(&pt.x, &pt.dx).unwrap());

    let jet = compute_jet(&spec, &pt).unwrap();
    println!("p      = {:?}", jet.p.as_slice());
    println!("dL/dx  = {:?}", jet.dl_dx.as_slice());
    println!("p·dx - L = {:.1e}", jet.p.dot(&pt.dx_vector()) - jet.value);
    println!("|L2·dx|  = {:.1e}", (&jet.l2 * pt.dx_vector()).norm());

    let h = check_homogeneity(&spec, &pt, &[0.5, 2.0, 10.0]).unwrap();
    println!("max homogeneity violation {:.1e}", h.max_violation);

    let stiff = spec.with_parameters(&[("b", 0.0)]).unwrap();
    println!("with b = 0: L = {:.12}", stiff.eval_real(&pt.x, &pt.dx).unwrap());

    let doc = serde_json::to_string(&spec.to_document()).unwrap();
    println!("document: {doc}");
    let again = MetricSpec::from_json(&doc).unwrap();
    assert_eq!(again.expr(), spec.expr());

    // not 1-homogeneous: the jet refuses it
    let broken = MetricSpec::parse(2, "d0^2 + d1^2", BTreeMap::new(), None).unwrap();
    println!("quadratic form: {}", compute_jet(&broken, &pt).unwrap_err());
}
