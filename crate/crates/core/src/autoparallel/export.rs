use crate::json::{fmt_f64, to_string};

use super::integrate::Trajectory;

/// One row per node: `t, x…, dx…, L, C…, el_norm, lambda0, kappa, lambdaI…,
/// rank`. Constraint and multiplier columns are padded to the largest gauge
/// dimension met along the run.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n1 = traj.nodes.first().map_or(0, |n| n.x.len());
    let d = traj.nodes.iter().map(|n| n.c.len()).max().unwrap_or(0);
    let mut head = vec!["t".to_string()];
    head.extend((0..n1).map(|k| format!("x{k}")));
    head.extend((0..n1).map(|k| format!("dx{k}")));
    head.push("L".into());
    head.extend((1..=d).map(|i| format!("C{i}")));
    head.extend(["el_norm", "lambda0", "kappa"].map(String::from));
    head.extend((1..=d).map(|i| format!("lambdaI{i}")));
    head.push("rank".into());
    let mut out = head.join(",");
    out.push('\n');
    let pad = |v: &[f64]| -> Vec<String> { (0..d).map(|i| v.get(i).map_or(String::new(), |x| fmt_f64(*x))).collect() };
    for nd in &traj.nodes {
        let mut row = vec![fmt_f64(nd.t)];
        row.extend(nd.x.iter().chain(&nd.dx).map(|v| fmt_f64(*v)));
        row.push(fmt_f64(nd.l));
        row.extend(pad(&nd.c));
        row.extend([nd.el_norm, nd.lambda0, nd.kappa].map(fmt_f64));
        row.extend(pad(&nd.lambda_i));
        row.push(nd.rank.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn trajectory_json(traj: &Trajectory) -> String {
    to_string(traj)
}
