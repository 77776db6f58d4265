use std::f64::consts::PI;

use magflow::boundary::{BoundaryCurve, DomainSpec};
use magflow::closure::{closure_census, closure_gap, pass_count, ClosureSettings};
use magflow::flow::{PhasePoint, StepControl};
use magflow::scattering::ScatterGrid;
use magflow::{Bump, ChartMetric, Error, MagneticSystem, Vec2};

fn sphere(b: f64) -> MagneticSystem {
    MagneticSystem::constant(ChartMetric::spherical(1.0).unwrap(), b)
}

fn cap(chart: &ChartMetric) -> DomainSpec {
    // geodesic radius 0.2 about the origin
    DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), 0.1f64.tan()).unwrap(), chart).unwrap()
}

fn bumped(b: f64) -> MagneticSystem {
    let chart = ChartMetric::spherical(1.0)
        .unwrap()
        .with_bump(Bump::new(Vec2::zeros(), 0.08, 0.05).unwrap())
        .unwrap();
    MagneticSystem::constant(chart, b)
}

#[test]
fn constant_curvature_periods() {
    let s = ClosureSettings::default();
    // magnetic circles: cot(rho) = b on the sphere, coth(rho) = b on the plane
    let sys = sphere(1.0);
    let start = PhasePoint::from_angle(sys.chart(), Vec2::new(0.3, -0.2), 0.8).unwrap();
    let r = closure_gap(&sys, start, 10.0, &s).unwrap();
    assert!((r.period - PI * 2f64.sqrt()).abs() < 1e-6);
    assert!(r.gap <= 1e-8 && r.closed());
    let hyp = MagneticSystem::constant(ChartMetric::hyperbolic(-1.0).unwrap(), 2.0);
    let start = PhasePoint::from_angle(hyp.chart(), Vec2::new(0.1, 0.1), 2.0).unwrap();
    let r = closure_gap(&hyp, start, 10.0, &s).unwrap();
    assert!((r.period - 2.0 * PI / 3f64.sqrt()).abs() < 1e-6);
    assert!(r.gap <= 1e-8);
    // b below the horocycle threshold never closes
    let weak = MagneticSystem::constant(ChartMetric::hyperbolic(-1.0).unwrap(), 0.5);
    let start = PhasePoint::from_angle(weak.chart(), Vec2::zeros(), 0.0).unwrap();
    assert!(matches!(closure_gap(&weak, start, 2.0, &s), Err(Error::Contract { .. }) | Err(Error::LeftChart { .. })));
}

#[test]
fn metric_bump_opens_orbits_through_it() {
    let sys = bumped(1.0);
    for h in [1e-3, 5e-4] {
        let s = ClosureSettings {
            step: StepControl::fixed(h),
            ..Default::default()
        };
        let start = PhasePoint::from_angle(sys.chart(), Vec2::new(0.0, -0.05), 0.0).unwrap();
        let r = closure_gap(&sys, start, 10.0, &s).unwrap();
        assert!(r.gap > 1e-3, "h={h}: gap {}", r.gap);
        assert!(!r.closed());
    }
    // an orbit that stays clear of the support still closes
    let start = PhasePoint::from_angle(sys.chart(), Vec2::new(0.5, 0.5), 0.0).unwrap();
    let far = closure_gap(&sys, start, 10.0, &ClosureSettings::default()).unwrap();
    assert!(far.closed());
}

#[test]
fn pass_counts_are_step_independent() {
    let sys = sphere(1.0);
    let dom = cap(sys.chart());
    let grid = ScatterGrid::new(6, 4).unwrap();
    for i in 0..grid.n_boundary {
        for j in 0..grid.n_angle {
            let start = ScatterGrid::phase_point(&sys, &dom, grid.arclength(&dom, i), grid.angle(j)).unwrap();
            let counts: Vec<usize> = [2e-3, 1e-3, 5e-4]
                .iter()
                .map(|h| {
                    let s = ClosureSettings {
                        step: StepControl::fixed(*h),
                        ..Default::default()
                    };
                    pass_count(&sys, start, &dom, PI * 2f64.sqrt(), &s).unwrap()
                })
                .collect();
            assert_eq!(counts, vec![1, 1, 1]);
        }
    }
}

#[test]
fn census_smoke() {
    let base = sphere(1.0);
    let dom = cap(base.chart());
    let grid = ScatterGrid::new(8, 4).unwrap();
    let s = ClosureSettings::default();
    let plain = closure_census(&base, &dom, grid, 10.0, Some(&base), &s).unwrap();
    assert_eq!(plain.failures, 0);
    assert_eq!(plain.closed, grid.len());
    assert!(plain.pass_counts.keys().all(|m| *m <= 1));
    assert!(plain.comparison.unwrap().max_sup() <= 1e-6);
    assert_eq!(plain.implication_holds, Some(true));

    let pert = bumped(1.0);
    let r = closure_census(&pert, &dom, grid, 10.0, Some(&base), &s).unwrap();
    assert!(r.worst_gap > 1e-3, "{}", r.worst_gap);
    assert!(r.comparison.unwrap().max_sup() > 1e-3);
    assert!(!r.all_closed_single_pass);
    assert_eq!(r.scattering_changed, Some(true));
    assert_eq!(r.implication_holds, Some(true));
}

#[test]
fn census_rejects_non_convex_regions() {
    let sys = MagneticSystem::constant(ChartMetric::euclidean(), 1.0);
    let dom = DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), 2.0).unwrap(), sys.chart()).unwrap();
    let r = closure_census(&sys, &dom, ScatterGrid::new(4, 2).unwrap(), 10.0, None, &ClosureSettings::default());
    assert!(matches!(r, Err(Error::Contract { .. })));
}
