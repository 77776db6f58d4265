//! Shared fixtures for the benchmarks.

use magflow::boundary::{BoundaryCurve, DomainSpec};
use magflow::flow::PhasePoint;
use magflow::{ChartMetric, MagneticSystem, Vec2};

pub fn flat(b: f64) -> MagneticSystem {
    MagneticSystem::constant(ChartMetric::euclidean(), b)
}

/// Round sphere with a variable field, so every step evaluates the
/// expression and the conformal factor.
pub fn curved() -> MagneticSystem {
    MagneticSystem::expression(ChartMetric::spherical(1.0).unwrap(), "1 + 0.5*x - 0.2*y").unwrap()
}

pub fn start(sys: &MagneticSystem) -> PhasePoint {
    PhasePoint::from_angle(sys.chart(), Vec2::new(0.1, 0.05), 0.4).unwrap()
}

pub fn disk(r: f64) -> DomainSpec {
    DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), r).unwrap(), &ChartMetric::euclidean()).unwrap()
}

pub fn gaussian_field() -> MagneticSystem {
    MagneticSystem::expression(ChartMetric::euclidean(), "3*exp(-(x^2+y^2)/0.5)").unwrap()
}
