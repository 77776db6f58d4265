use std::f64::consts::PI;

use magflow::flow::{flow_to, integrate, PhasePoint, StepControl};
use magflow::{Bump, ChartMetric, MagneticSystem, Vec2};
use proptest::prelude::*;

fn systems() -> Vec<(MagneticSystem, Vec2)> {
    vec![
        (MagneticSystem::constant(ChartMetric::euclidean(), 1.0), Vec2::zeros()),
        (MagneticSystem::constant(ChartMetric::spherical(1.0).unwrap(), 0.5), Vec2::new(0.2, -0.1)),
        (
            MagneticSystem::expression(ChartMetric::hyperbolic(-1.0).unwrap(), "1.5 + 0.5*x*y").unwrap(),
            Vec2::new(-0.1, 0.1),
        ),
        (
            MagneticSystem::constant(
                ChartMetric::euclidean().with_bump(Bump::new(Vec2::new(0.5, 0.5), 0.4, 0.2).unwrap()).unwrap(),
                1.0,
            ),
            Vec2::zeros(),
        ),
    ]
}

/// Forward for time T, then the reversed system from the flipped endpoint,
/// compared at every sample against the forward trajectory.
#[test]
fn reversal_retraces_whole_trajectory() {
    for (sys, x) in systems() {
        let ctrl = StepControl::default();
        let start = PhasePoint::from_angle(sys.chart(), x, 0.4).unwrap();
        let total = 2.5;
        let fwd = integrate(&sys, start, total, &ctrl).unwrap();
        let back = integrate(&sys.reverse(), fwd.end().flipped(), total, &ctrl).unwrap();
        let end = back.end();
        assert!((end.position - start.position).norm() < 1e-8);
        assert!((end.velocity + start.velocity).norm() < 1e-8);
        for s in back.samples().iter().step_by(50) {
            let f = fwd.state_at(total - s.t);
            assert!((s.state.position - f.position).norm() < 1e-8);
            assert!((s.state.velocity + f.velocity).norm() < 1e-8);
        }
    }
}

#[test]
fn orbits_have_geodesic_curvature_b() {
    // unit-speed orbits: acceleration beyond the geodesic part equals b rot90(v)
    for (sys, x) in systems() {
        let start = PhasePoint::from_angle(sys.chart(), x, 1.1).unwrap();
        let traj = integrate(&sys, start, 1.0, &StepControl::default()).unwrap();
        for s in traj.samples().iter().step_by(100) {
            let jet = sys.chart().metric_jet(s.state.position).unwrap();
            let gamma = magflow::geometry::christoffels(&jet).contract(s.state.velocity, s.state.velocity);
            let covariant = s.acceleration + gamma;
            let normal = magflow::geometry::rot90(&jet, s.state.velocity);
            let kg = jet.inner(covariant, normal);
            let b = sys.field_strength(s.state.position).unwrap();
            assert!((kg - b).abs() < 1e-12);
            assert!(jet.inner(covariant, s.state.velocity).abs() < 1e-12);
        }
    }
}

#[test]
fn circle_of_radius_one_over_b() {
    for b in [0.5, 2.0, -3.0] {
        let sys = MagneticSystem::constant(ChartMetric::euclidean(), b);
        let start = PhasePoint::new(Vec2::zeros(), Vec2::new(1.0, 0.0));
        let traj = integrate(&sys, start, 1.7, &StepControl::default()).unwrap();
        let centre = Vec2::new(0.0, 1.0 / b);
        for s in traj.samples().iter().step_by(37) {
            let exact = centre + Vec2::new((b * s.t).sin(), -(b * s.t).cos()) / b;
            assert!((s.state.position - exact).norm() < 1e-10);
        }
    }
}

#[test]
fn halving_step_gains_at_least_eightfold() {
    let sys = MagneticSystem::constant(ChartMetric::euclidean(), 1.0);
    let start = PhasePoint::new(Vec2::zeros(), Vec2::new(1.0, 0.0));
    let mut errors = Vec::new();
    for n in [25.0, 50.0, 100.0] {
        let end = flow_to(&sys, start, 2.0 * PI, &StepControl::fixed(2.0 * PI / n)).unwrap();
        errors.push((end.position - start.position).norm());
    }
    assert!(errors[0] / errors[1] >= 8.0);
    assert!(errors[1] / errors[2] >= 8.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_speed_is_preserved(angle in 0.0..std::f64::consts::TAU, b in -2.0..2.0f64, px in -0.3..0.3f64, py in -0.3..0.3f64) {
        let sys = MagneticSystem::constant(ChartMetric::spherical(1.0).unwrap(), b);
        let start = PhasePoint::from_angle(sys.chart(), Vec2::new(px, py), angle).unwrap();
        let traj = integrate(&sys, start, 1.0, &StepControl::default()).unwrap();
        prop_assert!(traj.speed_drift_rate() <= 1e-9);
        for s in traj.samples() {
            prop_assert!((s.state.speed(sys.chart()).unwrap() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn lorentz_is_skew(px in -0.8..0.8f64, py in -0.8..0.8f64, vx in -1.0..1.0f64, vy in -1.0..1.0f64) {
        let sys = MagneticSystem::expression(ChartMetric::hyperbolic(-0.7).unwrap(), "sin(x) + y*y").unwrap();
        let p = Vec2::new(px, py) * 0.9;
        prop_assume!(sys.chart().contains(p));
        let v = Vec2::new(vx, vy);
        let jet = sys.chart().metric_jet(p).unwrap();
        prop_assert!(jet.inner(sys.lorentz(p, v).unwrap(), v).abs() <= 1e-12);
    }

    #[test]
    fn dense_output_hits_samples(angle in 0.0..std::f64::consts::TAU) {
        let sys = MagneticSystem::constant(ChartMetric::hyperbolic(-1.0).unwrap(), 1.3);
        let start = PhasePoint::from_angle(sys.chart(), Vec2::new(0.1, 0.0), angle).unwrap();
        let traj = integrate(&sys, start, 0.5, &StepControl::fixed(0.01)).unwrap();
        for s in traj.samples() {
            prop_assert_eq!(traj.state_at(s.t), s.state);
        }
    }
}
