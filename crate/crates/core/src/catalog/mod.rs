//! Built-in metrics with their known structural facts, and the independent
//! oracles used to check the pipeline against them.

pub mod oracles;
mod sample;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::degeneracy::IndexSplit;
use crate::dsl::MetricSpec;
use crate::linalg::Matrix;

pub use sample::{sample_points, try_sample_points, SampleDomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Regular,
    SingularSecondClass,
    SingularFirstClass,
}

/// Independent reference against which an entry is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleId {
    Flat,
    Christoffel,
    QuarticIdentity,
    PotentialClosedForm,
    SecondClassConstraints,
    FrenkelConstraint,
}

pub type MetricTensor = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;
pub type PointFn = fn(&[f64], &[f64]) -> Vec<f64>;

/// Closed-form constraints, valid for the index split they were derived in.
#[derive(Clone, Debug)]
pub struct ConstraintFacts {
    pub split: IndexSplit,
    pub formula: PointFn,
}

#[derive(Clone)]
pub struct KnownFacts {
    /// Rank of `L2` at generic sampled points.
    pub rank: usize,
    pub gauge_dim: usize,
    pub g_vanishes: bool,
    /// Expected constraint residuals `C_I(x, dx)`.
    pub constraints: Option<ConstraintFacts>,
    /// Closed-form `2G(x, dx)`.
    pub two_g: Option<PointFn>,
    /// Riemannian metric tensor `g(x)` for metrics of the form `√(g dx dx)`.
    pub metric_tensor: Option<MetricTensor>,
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub spec: MetricSpec,
    pub classification: Classification,
    pub facts: KnownFacts,
    pub oracle: OracleId,
    pub domain: SampleDomain,
}

impl CatalogEntry {
    pub fn is_regular(&self) -> bool {
        self.classification == Classification::Regular
    }
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("expression", &self.spec.expr().to_string())
            .field("classification", &self.classification)
            .finish()
    }
}

fn parse(dim: usize, expr: &str, params: &[(&str, f64)], guard: Option<&str>) -> MetricSpec {
    let params: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    MetricSpec::parse(dim, expr, params, guard).expect("catalog expressions are valid")
}

fn euclidean(n1: usize) -> CatalogEntry {
    let terms: Vec<String> = (0..n1).map(|k| format!("d{k}^2")).collect();
    CatalogEntry {
        name: format!("euclidean-{n1}"),
        spec: parse(n1, &format!("sqrt({})", terms.join(" + ")), &[], None),
        classification: Classification::Regular,
        facts: KnownFacts {
            rank: n1 - 1,
            gauge_dim: 0,
            g_vanishes: true,
            constraints: None,
            two_g: None,
            metric_tensor: Some(Arc::new(move |_| Matrix::identity(n1, n1))),
        },
        oracle: OracleId::Flat,
        domain: SampleDomain::boxed(n1, 2.0, 1.0),
    }
}

fn sphere() -> CatalogEntry {
    CatalogEntry {
        name: "riemann-2d-curved".into(),
        spec: parse(2, "sqrt(d0^2 + sin(x0)^2*d1^2)", &[], Some("sin(x0)")),
        classification: Classification::Regular,
        facts: KnownFacts {
            rank: 1,
            gauge_dim: 0,
            g_vanishes: false,
            constraints: None,
            two_g: None,
            metric_tensor: Some(Arc::new(|x| Matrix::from_diagonal(&nalgebra::dvector![1.0, x[0].sin().powi(2)]))),
        },
        oracle: OracleId::Christoffel,
        domain: SampleDomain {
            x_lo: vec![0.3, -3.0],
            x_hi: vec![std::f64::consts::PI - 0.3, 3.0],
            ..SampleDomain::boxed(2, 3.0, 1.0)
        },
    }
}

/// Coefficients of `g_ij(x) = c_ij + e_ij sin(w_ij x^{k_ij} + φ_ij)`.
#[derive(Clone, Debug)]
struct RandomMetric {
    c: [[f64; 3]; 3],
    e: [[f64; 3]; 3],
    w: [[f64; 3]; 3],
    k: [[usize; 3]; 3],
    phi: [[f64; 3]; 3],
}

impl RandomMetric {
    fn new(seed: u64) -> RandomMetric {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m =
            RandomMetric { c: [[0.0; 3]; 3], e: [[0.0; 3]; 3], w: [[0.0; 3]; 3], k: [[0; 3]; 3], phi: [[0.0; 3]; 3] };
        // Gershgorin keeps the smallest eigenvalue above 0.6 everywhere
        for i in 0..3 {
            for j in i..3 {
                let base = if i == j { 2.0 } else { 0.0 };
                let c = base + 0.3 * rng.gen_range(-1.0..1.0);
                let e = 0.15 * rng.gen_range(-1.0..1.0);
                let w = rng.gen_range(0.5..1.5);
                let k = rng.gen_range(0..3);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                for (a, b) in [(i, j), (j, i)] {
                    m.c[a][b] = c;
                    m.e[a][b] = e;
                    m.w[a][b] = w;
                    m.k[a][b] = k;
                    m.phi[a][b] = phi;
                }
            }
        }
        m
    }

    fn g(&self, x: &[f64]) -> Matrix {
        Matrix::from_fn(3, 3, |i, j| {
            self.c[i][j] + self.e[i][j] * (self.w[i][j] * x[self.k[i][j]] + self.phi[i][j]).sin()
        })
    }

    fn expression(&self) -> String {
        let mut s = String::from("sqrt(");
        for i in 0..3 {
            for j in i..3 {
                let factor = if i == j { format!("d{i}^2") } else { format!("2*d{i}*d{j}") };
                let sep = if i == 0 && j == 0 { "" } else { " + " };
                write!(
                    s,
                    "{sep}({} + {}*sin({}*x{} + {}))*{factor}",
                    self.c[i][j], self.e[i][j], self.w[i][j], self.k[i][j], self.phi[i][j]
                )
                .unwrap();
            }
        }
        s.push(')');
        s
    }
}

/// Seed of the shipped random 3D Riemannian entry.
pub const RIEMANN_3D_SEED: u64 = 20_240_917;

/// Random Riemannian metric in three dimensions, given both as a metric
/// expression and as the raw tensor `g(x)`.
pub fn random_riemannian_3d(seed: u64) -> CatalogEntry {
    let rm = RandomMetric::new(seed);
    let expr = rm.expression();
    CatalogEntry {
        name: "riemann-3d".into(),
        spec: parse(3, &expr, &[], None),
        classification: Classification::Regular,
        facts: KnownFacts {
            rank: 2,
            gauge_dim: 0,
            g_vanishes: false,
            constraints: None,
            two_g: None,
            metric_tensor: Some(Arc::new(move |x| rm.g(x))),
        },
        oracle: OracleId::Christoffel,
        domain: SampleDomain::boxed(3, 3.0, 1.0),
    }
}

fn quartic() -> CatalogEntry {
    CatalogEntry {
        name: "quartic-root".into(),
        spec: parse(
            2,
            "((1 + x1^2/4)*d0^4 + 2*(0.5 + 0.25*cos(x1))*d0^2*d1^2 + (1.5 + 0.5*sin(x0))*d1^4)^(1/4)",
            &[],
            None,
        ),
        classification: Classification::Regular,
        facts: KnownFacts {
            rank: 1,
            gauge_dim: 0,
            g_vanishes: false,
            constraints: None,
            two_g: None,
            metric_tensor: None,
        },
        oracle: OracleId::QuarticIdentity,
        domain: SampleDomain::boxed(2, 2.0, 1.0),
    }
}

/// Mass and spring constant of the shipped potential-system entry.
pub const POTENTIAL_M: f64 = 1.0;
pub const POTENTIAL_K: f64 = 1.0;

fn potential_two_g(x: &[f64], dx: &[f64]) -> Vec<f64> {
    oracles::potential_two_g(POTENTIAL_M, POTENTIAL_K, x, dx).iter().copied().collect()
}

fn potential() -> CatalogEntry {
    CatalogEntry {
        name: "potential-system".into(),
        spec: parse(
            4,
            "m/2*(d1^2+d2^2+d3^2)/d0 - (k/2)*(x1^2+x2^2+x3^2)*d0",
            &[("m", POTENTIAL_M), ("k", POTENTIAL_K)],
            Some("d0"),
        ),
        classification: Classification::Regular,
        facts: KnownFacts {
            rank: 3,
            gauge_dim: 0,
            g_vanishes: false,
            constraints: None,
            two_g: Some(potential_two_g),
            metric_tensor: None,
        },
        oracle: OracleId::PotentialClosedForm,
        domain: SampleDomain {
            x_lo: vec![-1.0; 4],
            x_hi: vec![1.0; 4],
            dx_lo: vec![0.5, -1.0, -1.0, -1.0],
            dx_hi: vec![1.5, 1.0, 1.0, 1.0],
            ..SampleDomain::default()
        },
    }
}

fn second_class_constraints(x: &[f64], dx: &[f64]) -> Vec<f64> {
    vec![-(dx[2] + x[1] * dx[0]), dx[1] - x[2] * dx[0]]
}

fn second_class() -> CatalogEntry {
    CatalogEntry {
        name: "second-class".into(),
        spec: parse(3, "x1*d2 - x2*d1 + (x1^2 + x2^2)*d0", &[], None),
        classification: Classification::SingularSecondClass,
        facts: KnownFacts {
            rank: 0,
            gauge_dim: 2,
            g_vanishes: false,
            constraints: Some(ConstraintFacts {
                split: IndexSplit { time_index: 0, i_indices: vec![1, 2], a_indices: vec![] },
                formula: second_class_constraints,
            }),
            two_g: None,
            metric_tensor: None,
        },
        oracle: OracleId::SecondClassConstraints,
        domain: SampleDomain::boxed(3, 1.0, 1.0),
    }
}

fn frenkel_constraint(x: &[f64], dx: &[f64]) -> Vec<f64> {
    vec![0.25 * x[3] * x[3] * dx[0]]
}

fn frenkel() -> CatalogEntry {
    CatalogEntry {
        name: "frenkel".into(),
        spec: parse(4, "d2*d3^2/d0^2 - 0.5*x1*x3^2*d0", &[], Some("d0")),
        classification: Classification::SingularFirstClass,
        facts: KnownFacts {
            rank: 2,
            gauge_dim: 1,
            g_vanishes: false,
            constraints: Some(ConstraintFacts {
                split: IndexSplit { time_index: 0, i_indices: vec![1], a_indices: vec![2, 3] },
                formula: frenkel_constraint,
            }),
            two_g: None,
            metric_tensor: None,
        },
        oracle: OracleId::FrenkelConstraint,
        domain: SampleDomain {
            x_lo: vec![-1.0; 4],
            x_hi: vec![1.0; 4],
            dx_lo: vec![0.5, -1.0, -1.0, -1.0],
            dx_hi: vec![1.5, 1.0, 1.0, 1.0],
            // off the constraint surface, where the rank is 2
            min_abs_x: vec![(3, 0.1)],
            min_abs_dx: vec![(2, 0.2), (3, 0.2)],
        },
    }
}

/// All shipped entries, in a fixed order.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        euclidean(2),
        euclidean(3),
        euclidean(4),
        sphere(),
        random_riemannian_3d(RIEMANN_3D_SEED),
        quartic(),
        potential(),
        second_class(),
        frenkel(),
    ]
}

pub fn lookup(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

pub fn names() -> Vec<String> {
    catalog().into_iter().map(|e| e.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degeneracy::{analyze, DEFAULT_RANK_TOL};
    use crate::jet::compute_jet;

    #[test]
    fn names_are_unique_and_parse_round_trips() {
        let entries = catalog();
        let mut names: Vec<_> = entries.iter().map(|e| e.name.clone()).collect();
        names.dedup();
        assert_eq!(names.len(), entries.len());
        for e in &entries {
            let doc = e.spec.to_document();
            let again = MetricSpec::from_document(&doc).unwrap();
            assert_eq!(again.expr(), e.spec.expr(), "{}", e.name);
        }
    }

    #[test]
    fn random_metric_expression_matches_tensor() {
        let e = random_riemannian_3d(RIEMANN_3D_SEED);
        let g = e.facts.metric_tensor.clone().unwrap();
        for pt in sample_points(&e, 20, 3) {
            let gm = g(&pt.x);
            let dx = pt.dx_vector();
            let expect = dx.dot(&(&gm * &dx)).sqrt();
            let got = e.spec.eval_real(&pt.x, &pt.dx).unwrap();
            assert!((got - expect).abs() < 1e-14 * expect);
            assert!(gm.symmetric_eigenvalues().min() > 0.6);
        }
    }

    #[test]
    fn sampled_ranks_match_facts() {
        for e in catalog() {
            for pt in sample_points(&e, 10, 11) {
                let jet = compute_jet(&e.spec, &pt).unwrap();
                let deg = analyze(&jet, DEFAULT_RANK_TOL, &pt).unwrap();
                assert_eq!((deg.rank, deg.gauge_dim), (e.facts.rank, e.facts.gauge_dim), "{}", e.name);
            }
        }
    }
}
