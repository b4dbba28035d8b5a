//! Degeneracy structure of the direction Hessian `L2`.
//!
//! The coordinates are split into a time-like index, `D` gauge indices and
//! `rank` regular indices (`a_indices`) on which the principal block of `L2`
//! is invertible. Null vectors are parameterized by their values on the
//! complement of `a_indices`: `w_j` is the null vector equal to `e_j` there.
//! The corrected zero eigenvectors are `v_I = w_I - (p·w_I) dx / L`.

use serde::Serialize;
use thiserror::Error;

use crate::dsl::MetricSpec;
use crate::jet::{compute_jet, Jet2, JetError, TangentPoint};
use crate::linalg::{binomial, combinations, principal_det, ser_mat, ser_vecs, submatrix, Matrix, Vector};

pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Singular-value gap ratio below which the rank decision is flagged.
pub const AMBIGUOUS_GAP_RATIO: f64 = 10.0;
const MAX_EXHAUSTIVE_SUBSETS: usize = 4096;
const TIE_TOL: f64 = 1e-9;
const NULL_MOMENTUM_TOL: f64 = 1e-12;
/// A time index candidate needs at least this share of the largest
/// complement component of `dx`.
const TIME_INDEX_SHARE: f64 = 0.1;

/// Partition of `0..=n` into the time index, gauge indices and regular
/// indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexSplit {
    pub time_index: usize,
    pub i_indices: Vec<usize>,
    pub a_indices: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyData {
    pub rank: usize,
    /// Gauge degeneracy `D = n - rank`.
    #[serde(rename = "D")]
    pub gauge_dim: usize,
    pub split: IndexSplit,
    /// Null vectors `w_I`, one per gauge index.
    #[serde(serialize_with = "ser_vecs")]
    pub null_vectors: Vec<Vector>,
    /// Corrected zero eigenvectors `v_I` with `p·v_I = 0`; equal to `w_I`
    /// when the correction is unavailable (`L = 0`).
    #[serde(serialize_with = "ser_vecs")]
    pub v: Vec<Vector>,
    pub corrected: bool,
    #[serde(rename = "Lab_inv", serialize_with = "ser_mat")]
    pub lab_inv: Matrix,
    pub sing_values: Vec<f64>,
    pub rank_threshold: f64,
    pub gap_ratio: f64,
    pub rank_ambiguous: bool,
    /// Momenta vanish identically at this point (`p = 0`, hence `L = 0`).
    pub null_momentum: bool,
    /// Other admissible regular index sets, best conditioned first.
    #[serde(skip)]
    pub a_alternatives: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DegeneracyError {
    #[error("no invertible principal block of rank {rank}")]
    NoValidASet { rank: usize },
    #[error("L2 has full rank {0}; dx is not a null direction")]
    FullRank(usize),
    #[error("forced split is singular on its regular block")]
    SingularSplit,
}

fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Principal index sets of size `rank` ordered by `|det|`, best first with
/// lexicographic tie breaking.
fn rank_a_sets(l2: &Matrix, rank: usize) -> Vec<(Vec<usize>, f64)> {
    let n1 = l2.nrows();
    if binomial(n1, rank) <= MAX_EXHAUSTIVE_SUBSETS {
        let mut sets: Vec<(Vec<usize>, f64)> = combinations(n1, rank)
            .into_iter()
            .map(|s| {
                let d = principal_det(l2, &s).abs();
                (s, d)
            })
            .collect();
        let best = sets.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        // stable sort keeps lexicographic order among near-ties
        sets.sort_by(|a, b| {
            let ta = a.1 >= (1.0 - TIE_TOL) * best;
            let tb = b.1 >= (1.0 - TIE_TOL) * best;
            tb.cmp(&ta).then(b.1.partial_cmp(&a.1).unwrap())
        });
        return sets;
    }
    // greedy growth for large dimensions
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..rank {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n1 {
            if chosen.contains(&j) {
                continue;
            }
            let mut s = chosen.clone();
            s.push(j);
            s.sort_unstable();
            let d = principal_det(l2, &s).abs();
            if best.map_or(true, |(_, b)| d > b) {
                best = Some((j, d));
            }
        }
        chosen.push(best.unwrap().0);
        chosen.sort_unstable();
    }
    let d = principal_det(l2, &chosen).abs();
    vec![(chosen, d)]
}

fn choose_time_index(complement: &[usize], dx: &[f64]) -> usize {
    let max = complement.iter().map(|&k| dx[k].abs()).fold(0.0, f64::max);
    *complement.iter().find(|&&k| dx[k].abs() >= TIME_INDEX_SHARE * max && dx[k] != 0.0).unwrap_or(&complement[0])
}

fn complement(n1: usize, a: &[usize]) -> Vec<usize> {
    (0..n1).filter(|k| !a.contains(k)).collect()
}

/// Null vector equal to `e_j` on the complement of the regular block.
fn null_vector(l2: &Matrix, lab_inv: &Matrix, a: &[usize], j: usize) -> Vector {
    let n1 = l2.nrows();
    let mut w = Vector::zeros(n1);
    w[j] = 1.0;
    if !a.is_empty() {
        let col = Vector::from_fn(a.len(), |r, _| l2[(a[r], j)]);
        let wa = -(lab_inv * col);
        for (r, &k) in a.iter().enumerate() {
            w[k] = wa[r];
        }
    }
    w
}

fn momentum_is_null(jet: &Jet2, dx: &Vector) -> bool {
    jet.p.norm() <= NULL_MOMENTUM_TOL * (jet.l2.norm() * dx.norm()).max(1.0)
}

/// Assembles the data for a given split; `rank` is taken as `|a_indices|`.
fn assemble(
    jet: &Jet2,
    pt: &TangentPoint,
    split: IndexSplit,
    sing_values: Vec<f64>,
    rank_threshold: f64,
    a_alternatives: Vec<Vec<usize>>,
) -> Result<DegeneracyData, DegeneracyError> {
    let n1 = jet.dim();
    let a = &split.a_indices;
    let rank = a.len();
    let lab = submatrix(&jet.l2, a, a);
    let lab_inv =
        if a.is_empty() { Matrix::zeros(0, 0) } else { lab.try_inverse().ok_or(DegeneracyError::SingularSplit)? };
    let dx = pt.dx_vector();
    let null_momentum = momentum_is_null(jet, &dx);
    let null_vectors: Vec<Vector> = split.i_indices.iter().map(|&j| null_vector(&jet.l2, &lab_inv, a, j)).collect();
    let l = jet.value;
    let corrected = !null_momentum && l.abs() > 1e-14 * jet.p.norm() * dx.norm();
    let v = if corrected {
        null_vectors.iter().map(|w| w - &dx * (jet.p.dot(w) / l)).collect()
    } else {
        null_vectors.clone()
    };
    let gap_ratio = match (rank.checked_sub(1).and_then(|r| sing_values.get(r)), sing_values.get(rank)) {
        (Some(kept), Some(dropped)) if *dropped > 0.0 => kept / dropped,
        _ => f64::INFINITY,
    };
    Ok(DegeneracyData {
        rank,
        gauge_dim: n1 - 1 - rank,
        split,
        null_vectors,
        v,
        corrected,
        lab_inv,
        sing_values,
        rank_threshold,
        gap_ratio,
        rank_ambiguous: gap_ratio < AMBIGUOUS_GAP_RATIO,
        null_momentum,
        a_alternatives,
    })
}

/// Numerical rank, index split, null vectors and regular-block inverse.
pub fn analyze(jet: &Jet2, rank_tol: f64, pt: &TangentPoint) -> Result<DegeneracyData, DegeneracyError> {
    let n1 = jet.dim();
    let sing = singular_values(&jet.l2);
    let dx_norm = pt.dx_vector().norm();
    let reference = sing[0].max(jet.p.norm() / dx_norm);
    let threshold = rank_tol * reference;
    let rank = sing.iter().filter(|s| **s > threshold).count();
    if rank >= n1 {
        return Err(DegeneracyError::FullRank(rank));
    }
    let sets = rank_a_sets(&jet.l2, rank);
    let top: f64 = sing[..rank].iter().product();
    let usable: Vec<Vec<usize>> =
        sets.iter().filter(|(_, d)| rank == 0 || *d > 1e-12 * top).map(|(s, _)| s.clone()).collect();
    let Some(a) = usable.first().cloned() else {
        return Err(DegeneracyError::NoValidASet { rank });
    };
    let comp = complement(n1, &a);
    let time_index = choose_time_index(&comp, &pt.dx);
    let split =
        IndexSplit { time_index, i_indices: comp.into_iter().filter(|k| *k != time_index).collect(), a_indices: a };
    let alternatives = usable.into_iter().skip(1).take(8).collect();
    let data = assemble(jet, pt, split, sing, threshold, alternatives)?;
    if data.rank_ambiguous {
        log::debug!("rank decision ambiguous: gap ratio {:.3e} at rank {}", data.gap_ratio, data.rank);
    }
    Ok(data)
}

/// Re-analysis with a prescribed split, used for finite-difference stencils
/// around a point whose structure is already known.
pub fn analyze_with_split(
    jet: &Jet2,
    rank_tol: f64,
    pt: &TangentPoint,
    split: &IndexSplit,
) -> Result<DegeneracyData, DegeneracyError> {
    let sing = singular_values(&jet.l2);
    let threshold = rank_tol * sing[0].max(jet.p.norm() / pt.dx_vector().norm());
    assemble(jet, pt, split.clone(), sing, threshold, Vec::new())
}

impl DegeneracyData {
    pub fn is_regular(&self) -> bool {
        self.gauge_dim == 0
    }

    /// Same split with `a_indices` replaced; the complement is re-divided.
    pub fn repivot(&self, jet: &Jet2, pt: &TangentPoint, a: &[usize]) -> Result<DegeneracyData, DegeneracyError> {
        let comp = complement(jet.dim(), a);
        let time_index = choose_time_index(&comp, &pt.dx);
        let split = IndexSplit {
            time_index,
            i_indices: comp.into_iter().filter(|k| *k != time_index).collect(),
            a_indices: a.to_vec(),
        };
        assemble(jet, pt, split, self.sing_values.clone(), self.rank_threshold, Vec::new())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RankTransition {
    pub index: usize,
    pub from: usize,
    pub to: usize,
    pub gap_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankDropReport {
    pub ranks: Vec<usize>,
    pub sing_values: Vec<Vec<f64>>,
    pub transitions: Vec<RankTransition>,
}

#[derive(Debug, Error)]
pub enum RankScanError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Degeneracy(#[from] DegeneracyError),
}

/// Rank of `L2` along a sequence of points, with the transitions flagged.
pub fn detect_rank_drop(
    spec: &MetricSpec,
    points: &[TangentPoint],
    rank_tol: f64,
) -> Result<RankDropReport, RankScanError> {
    let mut ranks = Vec::with_capacity(points.len());
    let mut sing_values = Vec::with_capacity(points.len());
    let mut transitions = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        let jet = compute_jet(spec, pt)?;
        let deg = analyze(&jet, rank_tol, pt)?;
        if let Some(&prev) = ranks.last() {
            if prev != deg.rank {
                transitions.push(RankTransition { index: i, from: prev, to: deg.rank, gap_ratio: deg.gap_ratio });
            }
        }
        ranks.push(deg.rank);
        sing_values.push(deg.sing_values);
    }
    Ok(RankDropReport { ranks, sing_values, transitions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::compute_jet;
    use std::collections::BTreeMap;

    fn spec(dim: usize, src: &str) -> MetricSpec {
        MetricSpec::parse(dim, src, BTreeMap::new(), None).unwrap()
    }

    fn run(s: &MetricSpec, x: &[f64], dx: &[f64]) -> (Jet2, DegeneracyData) {
        let pt = TangentPoint::new(x.to_vec(), dx.to_vec());
        let jet = compute_jet(s, &pt).unwrap();
        let deg = analyze(&jet, DEFAULT_RANK_TOL, &pt).unwrap();
        (jet, deg)
    }

    #[test]
    fn euclidean_is_regular() {
        let s = spec(2, "sqrt(d0^2 + d1^2)");
        let (_, deg) = run(&s, &[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!((deg.rank, deg.gauge_dim), (1, 0));
        // |L2_00| = 0.128 beats |L2_11| = 0.072
        assert_eq!(deg.split.a_indices, vec![0]);
        assert_eq!(deg.split.time_index, 1);
        assert!((deg.lab_inv[(0, 0)] - 5.0 / 0.64).abs() < 1e-12);
    }

    #[test]
    fn second_class_null_vectors() {
        let s = spec(3, "x1*d2 - x2*d1 + (x1^2 + x2^2)*d0");
        let (x, dx) = ([0.0, 1.0, 0.0], [1.0, 0.5, 0.5]);
        let (jet, deg) = run(&s, &x, &dx);
        assert_eq!((deg.rank, deg.gauge_dim), (0, 2));
        assert_eq!(deg.split.time_index, 0);
        assert_eq!(deg.split.i_indices, vec![1, 2]);
        assert!(deg.corrected);
        let dxv = Vector::from_column_slice(&dx);
        for (k, v) in deg.v.iter().enumerate() {
            let mut e = Vector::zeros(3);
            e[k + 1] = 1.0;
            let expect = &e - &dxv * (jet.p[k + 1] / jet.value);
            assert!((v - expect).norm() < 1e-15);
            assert!(jet.p.dot(v).abs() < 1e-15);
        }
    }

    #[test]
    fn frenkel_off_surface() {
        let s = spec(4, "d2*d3^2/d0^2 - 0.5*x1*x3^2*d0");
        let (jet, deg) = run(&s, &[0.1, 0.4, -0.3, 0.5], &[1.0, 0.2, 0.7, -0.6]);
        assert_eq!((deg.rank, deg.gauge_dim), (2, 1));
        assert_eq!(deg.split.i_indices, vec![1]);
        let e1 = Vector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]);
        assert!((&deg.v[0] - e1).norm() < 1e-14);
        assert!((&jet.l2 * &deg.v[0]).norm() < 1e-14);
    }

    #[test]
    fn frenkel_on_surface_and_null_momentum() {
        let s = spec(4, "d2*d3^2/d0^2 - 0.5*x1*x3^2*d0");
        let (_, deg) = run(&s, &[0.1, 0.4, -0.3, 0.0], &[1.0, 0.2, 0.7, 0.0]);
        assert_eq!((deg.rank, deg.gauge_dim), (1, 2));
        assert!(deg.null_momentum);
        assert_eq!(deg.split.a_indices, vec![3]);
        assert_eq!(deg.split.i_indices, vec![1, 2]);
    }

    #[test]
    fn rank_drop_on_approach() {
        let s = spec(4, "d2*d3^2/d0^2 - 0.5*x1*x3^2*d0");
        let pts: Vec<TangentPoint> = (1..=8)
            .map(|k| {
                let e = 10f64.powi(-k);
                TangentPoint::new(vec![0.0, 0.3, 0.2, e], vec![1.0, 0.5, 0.8, e])
            })
            .collect();
        let r = detect_rank_drop(&s, &pts, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.ranks[0], 2);
        assert_eq!(*r.ranks.last().unwrap(), 1);
        assert_eq!(r.transitions.len(), 1);
    }
}
