use std::collections::BTreeMap;

use finsler::connection::{connection, fpreserve_residual, spray_at, ConnectionOptions, Gauge};
use finsler::degeneracy::{analyze, DEFAULT_RANK_TOL};
use finsler::dsl::{parse_expr, BinOp, Expr, Func, MetricSpec};
use finsler::jet::{compute_jet, TangentPoint};
use finsler::json::fmt_f64;
use finsler::scalar::Rational;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..400).prop_map(|k| Expr::Const(k as f64 / 8.0)),
        (0usize..3).prop_map(Expr::Coord),
        (0usize..3).prop_map(Expr::Diff),
        prop::sample::select(vec!["m", "k"]).prop_map(|s| Expr::Param(s.to_string())),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
            (inner.clone(), -3i64..4, 1i64..4)
                .prop_map(|(e, n, d)| Expr::Pow(Box::new(e), Rational::new(n, d).unwrap())),
            (prop::sample::select(vec![Func::Sqrt, Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Abs]), inner)
                .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

/// `sqrt(dxᵀ A(x) dx) + β(x)·dx` in three coordinates with `A` close to the
/// identity and `β` small, so `L > 0` away from `dx = 0`.
fn randers(a: &[f64; 6], b: &[f64; 3], w: f64) -> MetricSpec {
    let idx = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let mut quad = Vec::new();
    for (k, (i, j)) in idx.iter().enumerate() {
        let diag = if i == j { 1.0 } else { 0.0 };
        let c = diag + a[k];
        let f = if i == j { 1.0 } else { 2.0 };
        quad.push(format!("{}*({c} + 0.05*sin({w}*x{}))*d{i}*d{j}", f, (k + 1) % 3));
    }
    let beta: Vec<String> = (0..3).map(|i| format!("({} + 0.05*cos(x{i}))*d{i}", b[i])).collect();
    let src = format!("sqrt({}) + {}", quad.join(" + "), beta.join(" + "));
    MetricSpec::parse(3, &src, BTreeMap::new(), None).unwrap()
}

fn randers_args() -> impl Strategy<Value = ([f64; 6], [f64; 3], f64, [f64; 3], [f64; 3])> {
    (
        prop::array::uniform6(-0.1f64..0.1),
        prop::array::uniform3(-0.15f64..0.15),
        0.5f64..2.0,
        prop::array::uniform3(-2.0f64..2.0),
        prop::array::uniform3(-1.0f64..1.0)
            .prop_filter("dx away from zero", |d| d.iter().map(|v| v * v).sum::<f64>() > 0.05),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_is_idempotent(e in expr()) {
        let printed = e.to_string();
        let again = parse_expr(&printed).unwrap();
        prop_assert_eq!(again.to_string(), printed);
        let x = [0.3, -0.7, 1.1];
        let dx = [0.9, 0.4, -0.2];
        let params = BTreeMap::from([("m".to_string(), 1.3), ("k".to_string(), 0.6)]);
        let (a, b) = (e.bind(&params, 3).unwrap(), again.bind(&params, 3).unwrap());
        match (a.eval(&x, &dx), b.eval(&x, &dx)) {
            (Ok(u), Ok(v)) => prop_assert!(u == v || (u.is_nan() && v.is_nan()), "{} vs {}", u, v),
            (Err(_), Err(_)) => {}
            (u, v) => prop_assert!(false, "{:?} vs {:?}", u, v),
        }
    }

    #[test]
    fn float_text_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn randers_jet_identities((a, b, w, x, dx) in randers_args()) {
        let spec = randers(&a, &b, w);
        let pt = TangentPoint::new(x.to_vec(), dx.to_vec());
        let jet = compute_jet(&spec, &pt).unwrap();
        let u = pt.dx_vector();
        prop_assert!((jet.p.dot(&u) - jet.value).abs() <= 1e-13 * jet.value.abs().max(1.0));
        prop_assert!((&jet.l2 * &u).norm() <= 1e-12 * jet.l2.norm().max(1.0));
        prop_assert!(jet.m_vector(&u).dot(&u).abs() <= 1e-12 * jet.mixed.norm().max(1.0));
        // forward-mode derivatives against central differences
        let h = 1e-6;
        for k in 0..3 {
            let mut up = dx.to_vec();
            let mut dn = dx.to_vec();
            up[k] += h;
            dn[k] -= h;
            let fd = (spec.eval_real(&x, &up).unwrap() - spec.eval_real(&x, &dn).unwrap()) / (2.0 * h);
            prop_assert!((fd - jet.p[k]).abs() < 1e-7, "p[{}] {} vs {}", k, jet.p[k], fd);
        }
    }

    #[test]
    fn randers_homogeneity((a, b, w, x, dx) in randers_args(), lambda in 0.1f64..10.0) {
        let spec = randers(&a, &b, w);
        let pt = TangentPoint::new(x.to_vec(), dx.to_vec());
        let l = spec.eval_real(&pt.x, &pt.dx).unwrap();
        let s = pt.scaled(lambda);
        let ls = spec.eval_real(&s.x, &s.dx).unwrap();
        prop_assert!((ls - lambda * l).abs() <= 1e-13 * ls.abs());
        let (_, deg, g) = spray_at(&spec, &pt, None, &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(deg.is_regular());
        let (_, _, gs) = spray_at(&spec, &s, Some(&deg.split), &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
        let expect = &g.g * (lambda * lambda);
        prop_assert!((&gs.g - &expect).norm() <= 1e-9 * expect.norm().max(1e-12));
    }

    #[test]
    fn randers_preserves_metric((a, b, w, x, dx) in randers_args()) {
        let spec = randers(&a, &b, w);
        let pt = TangentPoint::new(x.to_vec(), dx.to_vec());
        let (jet, deg, conn) = connection(&spec, &pt, &Gauge::Zero, &ConnectionOptions::default()).unwrap();
        prop_assert_eq!(deg.rank, 2);
        prop_assert!(fpreserve_residual(&jet, &conn.n) <= 1e-6);
        let two_g = &conn.spray.g * 2.0;
        prop_assert!((&conn.n * pt.dx_vector() - &two_g).norm() <= 1e-8 * conn.n.norm() * pt.dx_vector().norm());
    }

    #[test]
    fn linear_coordinates_stay_flat(m in prop::array::uniform4(-0.4f64..0.4), dx in prop::array::uniform2(0.2f64..1.0)) {
        // Euclidean length in skewed linear coordinates: constant metric, G = 0
        let (a, b, c) = (1.0 + m[0], m[1], 1.0 + m[2]);
        let src = format!("sqrt(({a}*d0 + {b}*d1)^2 + ({}*d0 + {c}*d1)^2)", m[3]);
        let spec = MetricSpec::parse(2, &src, BTreeMap::new(), None).unwrap();
        let pt = TangentPoint::new(vec![0.4, -0.3], dx.to_vec());
        let jet = compute_jet(&spec, &pt).unwrap();
        let deg = analyze(&jet, DEFAULT_RANK_TOL, &pt).unwrap();
        prop_assert_eq!(deg.rank, 1);
        let (_, _, sp) = spray_at(&spec, &pt, None, &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(sp.g.norm() <= 1e-14);
    }
}
