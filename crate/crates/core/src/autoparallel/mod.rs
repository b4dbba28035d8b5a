//! Auto-parallel curves `d²x + 2G = λ⁰ℓ_0 + λ^I ℓ_I`, multiplier resolution
//! from constraint consistency, and nonlinear parallel transport.
//!
//! The flow is integrated in a form that never divides by `L`: the
//! acceleration is `a = -2λ^a e_a + κ dx + λ^J w_J`, which solves the
//! Euler-Lagrange equation `L2·a = -2M` whenever the constraints hold. The
//! unknowns `(κ, λ^J)` come from one gauge row and the consistency rows
//! `d C_I / dτ = 0`.

mod export;
mod integrate;
mod resolve;
mod transport;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::degeneracy::DegeneracyError;
use crate::dsl::MetricSpec;
use crate::jet::{compute_jet, Jet2, JetError, TangentPoint};
use crate::linalg::Vector;

pub use export::{trajectory_csv, trajectory_json};
pub use integrate::{el_check, integrate, perturbed, IntegrateOptions, Node, Trajectory};
pub use resolve::{constraints_fixed, resolve_multipliers, Multipliers, ResolveOptions};
pub use transport::{parallel_transport, parallel_transport_along, Transport};

/// Parameterization of the curve.
#[derive(Clone)]
pub enum GaugeKind {
    /// `t = x^0`, so `d²x^0 = 0`.
    Time,
    /// Finsler arc length: `L` is conserved and `λ⁰ = 0`.
    ArcLength,
    /// Prescribed `λ⁰(t, x, dx)`.
    Custom(Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>),
}

/// Fills the multiplier directions left undetermined by consistency.
#[derive(Clone, Default)]
pub enum FreePolicy {
    #[default]
    Zero,
    /// Desired `λ^I(t, x, dx)`, projected onto the free directions.
    Function(Arc<dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync>),
}

#[derive(Clone)]
pub struct GaugeChoice {
    pub kind: GaugeKind,
    pub free: FreePolicy,
}

impl GaugeChoice {
    pub fn time() -> GaugeChoice {
        GaugeChoice { kind: GaugeKind::Time, free: FreePolicy::Zero }
    }

    pub fn arc_length() -> GaugeChoice {
        GaugeChoice { kind: GaugeKind::ArcLength, free: FreePolicy::Zero }
    }

    pub fn custom(lambda0: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static) -> GaugeChoice {
        GaugeChoice { kind: GaugeKind::Custom(Arc::new(lambda0)), free: FreePolicy::Zero }
    }

    pub fn with_free(mut self, f: impl Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> GaugeChoice {
        self.free = FreePolicy::Function(Arc::new(f));
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GaugeKind::Time => "time",
            GaugeKind::ArcLength => "arclength",
            GaugeKind::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for GaugeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let free = match self.free {
            FreePolicy::Zero => "zero",
            FreePolicy::Function(_) => "function",
        };
        write!(f, "GaugeChoice({}, free = {})", self.name(), free)
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Degeneracy(#[from] DegeneracyError),
    #[error("constraint incompatibility: consistency system residual {residual:.3e}")]
    ConstraintIncompatibility { residual: f64 },
    #[error("free-multiplier policy returned {found} values, expected {expected}")]
    FreePolicyArity { expected: usize, found: usize },
    #[error("initial constraints violated: max |C| = {0:.3e}")]
    InitialConstraints(f64),
    #[error("arc-length gauge needs L = 1 initially, got {0}")]
    InitialArcLength(f64),
    #[error("{0}")]
    Invalid(String),
}

/// `∂L/∂x - (∂²L/∂x∂dx)·dx - L2·accel`; the Euler-Lagrange residual of a
/// curve through `pt` with second derivative `accel`.
pub fn el_residual_from_jet(jet: &Jet2, dx: &Vector, accel: &Vector) -> Vector {
    &jet.dl_dx - &jet.mixed * dx - &jet.l2 * accel
}

pub fn el_residual(spec: &MetricSpec, pt: &TangentPoint, accel: &[f64]) -> Result<Vector, JetError> {
    let jet = compute_jet(spec, pt)?;
    Ok(el_residual_from_jet(&jet, &pt.dx_vector(), &Vector::from_column_slice(accel)))
}

/// Natural magnitude of the terms in the residual, for relative checks.
/// The last term is the inertial term at unit coordinate curvature, so a
/// force-free straight line is not judged against zero.
pub fn el_scale(jet: &Jet2, dx: &Vector, accel: &Vector) -> f64 {
    let inertial = jet.l2.norm() * (accel.norm() + dx.norm_squared());
    (jet.dl_dx.norm() + jet.mixed.norm() * dx.norm() + inertial).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn potential() -> MetricSpec {
        MetricSpec::parse(
            4,
            "m/2*(d1^2+d2^2+d3^2)/d0 - (k/2)*(x1^2+x2^2+x3^2)*d0",
            BTreeMap::from([("m".to_string(), 1.0), ("k".to_string(), 1.0)]),
            Some("d0"),
        )
        .unwrap()
    }

    #[test]
    fn free_particle_straight_line() {
        let s = potential().with_parameters(&[("k", 0.0)]).unwrap();
        let pt = TangentPoint::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.3, -0.2, 0.5]);
        let r = el_residual(&s, &pt, &[0.0; 4]).unwrap();
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn harmonic_equation_of_motion() {
        let s = potential();
        let x = [0.0, 0.4, -0.3, 0.8];
        let pt = TangentPoint::new(x.to_vec(), vec![1.0, 0.3, -0.2, 0.5]);
        let accel = [0.0, -x[1], -x[2], -x[3]];
        assert!(el_residual(&s, &pt, &accel).unwrap().norm() < 1e-10);
        // shifting by a multiple of dx leaves the residual unchanged
        let shifted: Vec<f64> = accel.iter().zip(&pt.dx).map(|(a, d)| a + 0.7 * d).collect();
        assert!(el_residual(&s, &pt, &shifted).unwrap().norm() < 1e-10);
    }
}
