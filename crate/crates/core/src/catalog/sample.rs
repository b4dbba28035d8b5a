use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jet::TangentPoint;

use super::CatalogEntry;

/// Box from which random tangent points are drawn, with exclusions.
#[derive(Clone, Debug, Default)]
pub struct SampleDomain {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub dx_lo: Vec<f64>,
    pub dx_hi: Vec<f64>,
    /// `(index, m)`: reject points with `|x^index| < m`.
    pub min_abs_x: Vec<(usize, f64)>,
    pub min_abs_dx: Vec<(usize, f64)>,
}

impl SampleDomain {
    pub fn boxed(n1: usize, x_range: f64, dx_range: f64) -> SampleDomain {
        SampleDomain {
            x_lo: vec![-x_range; n1],
            x_hi: vec![x_range; n1],
            dx_lo: vec![-dx_range; n1],
            dx_hi: vec![dx_range; n1],
            ..SampleDomain::default()
        }
    }
}

/// Smallest accepted `|L|` and `‖dx‖`; keeps samples away from `L = 0`,
/// where the spray is undefined.
const MIN_ABS_L: f64 = 0.05;
const MIN_DX_NORM: f64 = 0.2;

/// Deterministic admissible sample points of an entry. Panics when the
/// domain rejects nearly everything; see [`try_sample_points`].
pub fn sample_points(entry: &CatalogEntry, count: usize, seed: u64) -> Vec<TangentPoint> {
    try_sample_points(entry, count, seed).unwrap_or_else(|| panic!("sampling domain of {} too restrictive", entry.name))
}

/// `None` when fewer than one draw in a thousand is admissible.
pub fn try_sample_points(entry: &CatalogEntry, count: usize, seed: u64) -> Option<Vec<TangentPoint>> {
    let dom = &entry.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count + 1000 {
            return None;
        }
        let draw = |rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]| -> Vec<f64> {
            lo.iter().zip(hi).map(|(l, h)| rng.gen_range(*l..*h)).collect()
        };
        let x = draw(&mut rng, &dom.x_lo, &dom.x_hi);
        let dx = draw(&mut rng, &dom.dx_lo, &dom.dx_hi);
        if dom.min_abs_x.iter().any(|(k, m)| x[*k].abs() < *m)
            || dom.min_abs_dx.iter().any(|(k, m)| dx[*k].abs() < *m)
            || dx.iter().map(|v| v * v).sum::<f64>().sqrt() < MIN_DX_NORM
        {
            continue;
        }
        match entry.spec.eval_real(&x, &dx) {
            Ok(l) if l.abs() >= MIN_ABS_L => out.push(TangentPoint::new(x, dx)),
            _ => continue,
        }
    }
    Some(out)
}
