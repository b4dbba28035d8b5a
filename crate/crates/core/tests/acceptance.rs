//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) and exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use finsler::autoparallel::{integrate, parallel_transport_along, GaugeChoice, IntegrateOptions, Trajectory};
use finsler::catalog::oracles::{christoffel_two_g, frenkel_oracle, oscillator, potential_two_g};
use finsler::catalog::{lookup, sample_points, POTENTIAL_K, POTENTIAL_M};
use finsler::connection::{spray_at, ConnectionOptions, Gauge};
use finsler::degeneracy::{analyze, detect_rank_drop, DEFAULT_RANK_TOL};
use finsler::jet::{compute_jet, TangentPoint};
use finsler::linalg::rel_err;
use finsler::verify::{observed_order, verify_catalog, VerifyOptions, VerifyReport};

type Verdict = (bool, String);

fn check(ok: bool, msg: String, failures: &mut Vec<String>) {
    if !ok {
        failures.push(msg);
    }
}

fn verdict(failures: Vec<String>, summary: String) -> Verdict {
    if failures.is_empty() {
        (true, summary)
    } else {
        (false, failures.join("; "))
    }
}

fn ladder_str(v: &[f64]) -> String {
    v.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")
}

fn run_clean(traj: Result<Trajectory, impl std::fmt::Display>) -> Trajectory {
    let t = traj.unwrap_or_else(|e| panic!("integration failed: {e}"));
    assert!(t.halt.is_none(), "integration halted: {:?}", t.halt);
    t
}

fn levi_civita_recovery() -> Verdict {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for name in ["riemann-2d-curved", "riemann-3d"] {
        let e = lookup(name).unwrap();
        let g = e.facts.metric_tensor.clone().unwrap();
        for p in sample_points(&e, 200, 101) {
            let (_, _, sp) = spray_at(&e.spec, &p, None, &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
            let expect = christoffel_two_g(&*g, &p.x, &p.dx).unwrap();
            let r = rel_err(&(&sp.g * 2.0), &expect, 0.0);
            worst = worst.max(r);
            check(r <= 1e-7, format!("{name}: rel err {r:.2e} at {:?}", p.x), &mut fails);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("runtime {secs:.1} s"), &mut fails);
    verdict(fails, format!("max rel err {worst:.2e} over 400 points in {secs:.2} s"))
}

fn potential_system() -> Verdict {
    let e = lookup("potential-system").unwrap();
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for p in sample_points(&e, 200, 102) {
        let (_, _, sp) = spray_at(&e.spec, &p, None, &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
        let r = rel_err(&(&sp.g * 2.0), &potential_two_g(POTENTIAL_M, POTENTIAL_K, &p.x, &p.dx), 0.0);
        worst = worst.max(r);
    }
    check(worst <= 1e-8, format!("closed form rel err {worst:.2e}"), &mut fails);

    let (x0, v0) = ([0.5, -0.2, 0.3], [0.1, 0.4, -0.6]);
    let final_err = |h: f64| {
        let opts = IntegrateOptions { h, steps: (1.0 / h).round() as usize, ..IntegrateOptions::default() };
        let t = run_clean(integrate(
            &e.spec,
            &[0.0, x0[0], x0[1], x0[2]],
            &[1.0, v0[0], v0[1], v0[2]],
            &GaugeChoice::time(),
            &opts,
        ));
        let n = t.last();
        assert!((n.x[0] - 1.0).abs() < 1e-12, "time gauge keeps x0 = t");
        (0..3).map(|a| (n.x[a + 1] - (x0[a] * n.x[0].cos() + v0[a] * n.x[0].sin())).abs()).fold(0.0, f64::max)
    };
    let at_1e3 = final_err(1e-3);
    check(at_1e3 <= 1e-6, format!("oscillator error {at_1e3:.2e} at h = 1e-3"), &mut fails);
    // h = 1e-3 sits at rounding level, so the order is read off a coarser ladder
    let ladder: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|h| final_err(*h)).collect();
    let order = observed_order(&ladder);
    check(order >= 3.8, format!("order {order:.2} from {}", ladder_str(&ladder)), &mut fails);
    verdict(fails, format!("2G rel err {worst:.2e}; error {at_1e3:.2e} at h = 1e-3; order {order:.2}"))
}

fn second_class() -> Verdict {
    let e = lookup("second-class").unwrap();
    let facts = e.facts.constraints.clone().unwrap();
    let mut fails = Vec::new();
    let mut c_err: f64 = 0.0;
    for p in sample_points(&e, 200, 103) {
        let jet = compute_jet(&e.spec, &p).unwrap();
        let deg = analyze(&jet, DEFAULT_RANK_TOL, &p).unwrap();
        check(deg.rank == 0 && deg.gauge_dim == 2, format!("rank {} D {}", deg.rank, deg.gauge_dim), &mut fails);
        let (_, _, sp) = spray_at(&e.spec, &p, Some(&facts.split), &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
        let expect = (facts.formula)(&p.x, &p.dx);
        // C₁ is printed with the opposite overall sign
        let printed = [-expect[0], expect[1]];
        assert_eq!(printed[0], p.dx[2] + p.x[1] * p.dx[0]);
        let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..2 {
            c_err = c_err.max((sp.c[i] - expect[i]).abs() / scale);
        }
    }
    check(c_err <= 1e-14, format!("constraint error {c_err:.2e}"), &mut fails);

    let steps = 628;
    let opts = IntegrateOptions { h: std::f64::consts::TAU / steps as f64, steps, ..IntegrateOptions::default() };
    let t = run_clean(integrate(&e.spec, &[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0], &GaugeChoice::time(), &opts));
    let mut orbit: f64 = 0.0;
    let mut energy: f64 = 0.0;
    let e0 = 0.5 * (t.nodes[0].dx[1].powi(2) + t.nodes[0].dx[2].powi(2));
    for n in &t.nodes {
        let o = oscillator([1.0, 0.0], [0.0, 1.0], n.t);
        orbit = orbit.max((n.x[1] - o.x[0]).abs()).max((n.x[2] - o.x[1]).abs());
        let y = [n.dx[1] / n.dx[0], n.dx[2] / n.dx[0]];
        energy = energy.max((0.5 * (y[0] * y[0] + y[1] * y[1]) - e0).abs());
    }
    let cmax = t.max_constraint();
    check(orbit <= 1e-6, format!("orbit error {orbit:.2e}"), &mut fails);
    check(cmax <= 1e-8, format!("max |C| {cmax:.2e}"), &mut fails);
    check(energy <= 1e-8, format!("energy drift {energy:.2e}"), &mut fails);
    verdict(fails, format!("C err {c_err:.1e}; orbit {orbit:.2e}; max |C| {cmax:.1e}; energy drift {energy:.1e}"))
}

fn frenkel() -> Verdict {
    let e = lookup("frenkel").unwrap();
    let facts = e.facts.constraints.clone().unwrap();
    let mut fails = Vec::new();
    let mut c_err: f64 = 0.0;
    for p in sample_points(&e, 200, 104) {
        let jet = compute_jet(&e.spec, &p).unwrap();
        let deg = analyze(&jet, DEFAULT_RANK_TOL, &p).unwrap();
        check(deg.rank == 2, format!("off-surface rank {}", deg.rank), &mut fails);
        let (_, _, sp) = spray_at(&e.spec, &p, Some(&facts.split), &Gauge::Zero, DEFAULT_RANK_TOL).unwrap();
        let expect = 0.25 * p.x[3] * p.x[3] * p.dx[0];
        c_err = c_err.max((sp.c[0] - expect).abs());
    }
    check(c_err <= 1e-10, format!("constraint error {c_err:.2e}"), &mut fails);

    let approach: Vec<TangentPoint> = (1..=8)
        .map(|k| {
            let s = 10f64.powi(-k);
            TangentPoint::new(vec![0.0, 0.3, 0.2, s], vec![1.0, 0.5, 0.8, s])
        })
        .collect();
    let drop = detect_rank_drop(&e.spec, &approach, DEFAULT_RANK_TOL).unwrap();
    check(
        drop.transitions.iter().any(|t| t.from == 2 && t.to == 1) && drop.ranks.last() == Some(&1),
        format!("rank sequence {:?}", drop.ranks),
        &mut fails,
    );

    type Xi = fn(f64) -> [f64; 3];
    let families: [(Xi, Xi, fn(f64) -> f64); 2] = [
        (|t| [t, 1.0, 0.0], |t| [2.0 * t + 0.5 * t.sin(), 2.0 + 0.5 * t.cos(), -0.5 * t.sin()], |t| -0.5 * t.sin()),
        (|t| [t, 1.0, 0.0], |t| [0.3 + 0.5 * t, 0.5, 0.0], |_| 0.0),
    ];
    let mut fam_err: f64 = 0.0;
    let mut x3: f64 = 0.0;
    for (xi1, xi2, lam2) in families {
        let start = frenkel_oracle(0.0, &xi1, &xi2);
        let gauge = GaugeChoice::time().with_free(move |t, _, _| vec![0.0, lam2(t)]);
        let opts = IntegrateOptions { h: 1e-2, steps: 300, ..IntegrateOptions::default() };
        let t = run_clean(integrate(&e.spec, &start.x, &start.dx, &gauge, &opts));
        for n in &t.nodes {
            check(
                n.rank == 1 && n.gauge_dim_free == 2,
                format!("on-surface rank {} free {}", n.rank, n.gauge_dim_free),
                &mut fails,
            );
            let o = frenkel_oracle(n.t, &xi1, &xi2);
            fam_err = (0..4).fold(fam_err, |m, k| m.max((n.x[k] - o.x[k]).abs()));
            x3 = x3.max(n.x[3].abs());
        }
    }
    fails.dedup();
    check(x3 <= 1e-9, format!("max |x3| {x3:.2e}"), &mut fails);
    check(fam_err <= 1e-6, format!("family error {fam_err:.2e}"), &mut fails);
    verdict(
        fails,
        format!(
            "C err {c_err:.1e}; ranks {:?}; gauge_dim_free 2; max |x3| {x3:.1e}; family err {fam_err:.1e}",
            drop.ranks
        ),
    )
}

fn rows_verdict(report: &VerifyReport, checks: &[&str], regular_only: bool) -> Verdict {
    let rows: Vec<_> = report
        .rows
        .iter()
        .filter(|r| checks.contains(&r.check.as_str()))
        .filter(|r| !regular_only || lookup(&r.entry).is_some_and(|e| e.is_regular()))
        .collect();
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} {} = {:.2e} {}", r.entry, r.check, r.value, r.note))
        .collect();
    let entries: std::collections::BTreeSet<_> = rows.iter().map(|r| r.entry.as_str()).collect();
    let mut summary = format!("{} rows over {} entries;", rows.len(), entries.len());
    for c in checks {
        let w = rows.iter().filter(|r| r.check == *c).map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        summary.push_str(&format!(" worst {c} {w:.2e};"));
    }
    if rows.is_empty() {
        return (false, "no rows".into());
    }
    verdict(bad, summary.trim_end_matches(';').to_string())
}

fn norm_conservation() -> Verdict {
    let mut fails = Vec::new();
    let sphere = lookup("riemann-2d-curved").unwrap();
    let opts = ConnectionOptions::default();
    let curve = |t: f64| (vec![1.0, t], vec![0.0, 1.0]);
    let drifts: Vec<f64> = [10, 20, 40, 80]
        .iter()
        .map(|s| parallel_transport_along(&sphere.spec, curve, 0.0, 3.0, *s, &[0.6, 0.9], &opts).unwrap().drift)
        .collect();
    let t_order = observed_order(&drifts);
    check(t_order >= 3.8, format!("transport order {t_order:.2} from {}", ladder_str(&drifts)), &mut fails);

    let quartic = lookup("quartic-root").unwrap();
    let qcurve = |t: f64| (vec![0.2 + 0.4 * t, -0.1 + 0.3 * t], vec![0.4, 0.3]);
    let qdrifts: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|s| parallel_transport_along(&quartic.spec, qcurve, 0.0, 2.0, *s, &[0.7, -0.4], &opts).unwrap().drift)
        .collect();
    let q_order = observed_order(&qdrifts);
    check(q_order >= 3.8, format!("quartic transport order {q_order:.2} from {}", ladder_str(&qdrifts)), &mut fails);

    let mut arc_orders = Vec::new();
    let mut lambda0: f64 = 0.0;
    for (name, x0, dir) in
        [("riemann-2d-curved", vec![1.0, 0.0], vec![0.5, 1.0]), ("quartic-root", vec![0.2, -0.1], vec![0.8, 0.6])]
    {
        let e = lookup(name).unwrap();
        let l = e.spec.eval_real(&x0, &dir).unwrap();
        let u0: Vec<f64> = dir.iter().map(|d| d / l).collect();
        let ladder: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&steps| {
                let t = run_clean(integrate(
                    &e.spec,
                    &x0,
                    &u0,
                    &GaugeChoice::arc_length(),
                    &IntegrateOptions { h: 2.0 / steps as f64, steps, ..IntegrateOptions::default() },
                ));
                lambda0 = lambda0.max(t.max_abs_lambda0());
                t.l_drift()
            })
            .collect();
        let o = observed_order(&ladder);
        check(o >= 3.8, format!("{name} arc-length order {o:.2} from {}", ladder_str(&ladder)), &mut fails);
        arc_orders.push(o);
    }
    check(lambda0 < 1e-9, format!("max |λ⁰| {lambda0:.2e}"), &mut fails);
    verdict(
        fails,
        format!(
            "transport orders {t_order:.2}, {q_order:.2}; arc-length orders {:.2}, {:.2}; max |λ⁰| {lambda0:.1e}",
            arc_orders[0], arc_orders[1]
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_finsler");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("report{k}.txt"));
        let status = Command::new(bin).args(["verify", "--out"]).arg(&path).status().unwrap();
        outputs.push((status.code(), std::fs::read(&path).unwrap()));
    }
    let same = outputs[0].1 == outputs[1].1;
    let mut fails = Vec::new();
    check(same, "reports differ".into(), &mut fails);
    check(outputs[0].0 == Some(0), format!("verify exit code {:?}", outputs[0].0), &mut fails);
    let in_process = verify_catalog(&VerifyOptions::default()).unwrap().table();
    check(in_process.as_bytes() == outputs[0].1.as_slice(), "CLI and library reports differ".into(), &mut fails);
    verdict(fails, format!("two CLI runs byte-identical ({} bytes)", outputs[0].1.len()))
}

fn main() {
    let report = verify_catalog(&VerifyOptions::default()).expect("catalog verification runs");
    let r = &report;
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("Levi-Civita recovery", Box::new(levi_civita_recovery)),
        ("potential-system closed form and oscillator", Box::new(potential_system)),
        ("second-class constraints and oscillator", Box::new(second_class)),
        ("Frenkel rank drop and gauge family", Box::new(frenkel)),
        ("metric preservation", Box::new(move || rows_verdict(r, &["fpreserve"], true))),
        ("homogeneity of L, G, N, C", Box::new(move || rows_verdict(r, &["L-homogeneity", "GNC-homogeneity"], false))),
        ("norm conservation", Box::new(norm_conservation)),
        ("N2 symmetry and uniqueness of G", Box::new(move || rows_verdict(r, &["N2-symmetry", "uniqueness"], true))),
        (
            "Euler-Lagrange equivalence",
            Box::new(move || rows_verdict(r, &["EL-residual", "EL-negative-control"], true)),
        ),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(v) => v,
            Err(p) => {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !ok {
            failed += 1;
        }
        println!("{} criterion {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
