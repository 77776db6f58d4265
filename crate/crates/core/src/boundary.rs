//! Domains bounded by a smooth closed curve in the chart.
//!
//! Curves are parameterized counterclockwise by `σ ∈ [0, 2π)`. Arc length is
//! the intrinsic `g`-length; the inward normal is `ν = rot90(T)` for the unit
//! tangent `T`, and the geodesic curvature of the boundary in a conformal
//! chart is `κ = (κ_E − ∂_N log λ) / λ` with `N` the Euclidean inward normal.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{rot90, ChartMetric};
use crate::magnetic::MagneticSystem;
use crate::quadrature::GaussRule;
use crate::Vec2;

type CurveFn = Arc<dyn Fn(f64) -> [Vec2; 3] + Send + Sync>;

/// A closed counterclockwise curve with two derivatives.
#[derive(Clone)]
pub enum BoundaryCurve {
    Circle { center: Vec2, radius: f64 },
    Ellipse { center: Vec2, semi_axes: (f64, f64), rotation: f64 },
    /// `σ ↦ [c(σ), c'(σ), c''(σ)]`, `2π`-periodic.
    Parametric { name: String, eval: CurveFn },
}

impl fmt::Debug for BoundaryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCurve::Circle { center, radius } => write!(f, "Circle {{ center: ({}, {}), radius: {radius} }}", center.x, center.y),
            BoundaryCurve::Ellipse { center, semi_axes, rotation } => write!(
                f,
                "Ellipse {{ center: ({}, {}), semi_axes: {semi_axes:?}, rotation: {rotation} }}",
                center.x, center.y
            ),
            BoundaryCurve::Parametric { name, .. } => write!(f, "Parametric({name})"),
        }
    }
}

impl BoundaryCurve {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("domain.radius", format!("must be positive, got {radius}")));
        }
        Ok(BoundaryCurve::Circle { center, radius })
    }

    pub fn ellipse(center: Vec2, semi_axes: (f64, f64), rotation: f64) -> Result<Self> {
        if !(semi_axes.0 > 0.0 && semi_axes.1 > 0.0 && semi_axes.0.is_finite() && semi_axes.1.is_finite()) {
            return Err(Error::invalid("domain.semi_axes", format!("must be positive, got {semi_axes:?}")));
        }
        Ok(BoundaryCurve::Ellipse { center, semi_axes, rotation })
    }

    /// `c(σ)`, `c'(σ)`, `c''(σ)`.
    pub fn jet(&self, sigma: f64) -> [Vec2; 3] {
        match self {
            BoundaryCurve::Circle { center, radius } => {
                let (s, c) = sigma.sin_cos();
                [
                    center + Vec2::new(c, s) * *radius,
                    Vec2::new(-s, c) * *radius,
                    Vec2::new(-c, -s) * *radius,
                ]
            }
            BoundaryCurve::Ellipse { center, semi_axes, rotation } => {
                let (s, c) = sigma.sin_cos();
                let (rs, rc) = rotation.sin_cos();
                let rot = |v: Vec2| Vec2::new(rc * v.x - rs * v.y, rs * v.x + rc * v.y);
                let (a, b) = *semi_axes;
                [
                    center + rot(Vec2::new(a * c, b * s)),
                    rot(Vec2::new(-a * s, b * c)),
                    rot(Vec2::new(-a * c, -b * s)),
                ]
            }
            BoundaryCurve::Parametric { eval, .. } => eval(sigma),
        }
    }

    pub fn point(&self, sigma: f64) -> Vec2 {
        self.jet(sigma)[0]
    }

    /// Parameter of the closest boundary point to `p`.
    pub fn closest_parameter(&self, p: Vec2) -> f64 {
        if let BoundaryCurve::Circle { center, .. } = self {
            let d = p - center;
            return d.y.atan2(d.x).rem_euclid(TAU);
        }
        let samples = 128;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..samples {
            let s = TAU * i as f64 / samples as f64;
            let d = (self.point(s) - p).norm_squared();
            if d < best.0 {
                best = (d, s);
            }
        }
        let mut s = best.1;
        for _ in 0..50 {
            let [c, d1, d2] = self.jet(s);
            let g = (c - p).dot(&d1);
            let dg = d1.norm_squared() + (c - p).dot(&d2);
            let step = if dg > 0.0 { g / dg } else { g / d1.norm_squared() };
            s -= step.clamp(-0.5, 0.5);
            if step.abs() < 1e-15 {
                break;
            }
        }
        s.rem_euclid(TAU)
    }

    /// Signed chart distance to the curve, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        if let BoundaryCurve::Circle { center, radius } = self {
            return (p - center).norm() - radius;
        }
        let s = self.closest_parameter(p);
        let [c, d1, _] = self.jet(s);
        let inward = Vec2::new(-d1.y, d1.x);
        let dist = (p - c).norm();
        if (p - c).dot(&inward) > 0.0 {
            -dist
        } else {
            dist
        }
    }

    /// Euclidean curvature `(x'y'' − y'x'') / |c'|³`.
    pub fn euclidean_curvature(&self, sigma: f64) -> f64 {
        if let BoundaryCurve::Circle { radius, .. } = self {
            return 1.0 / radius;
        }
        let [_, d1, d2] = self.jet(sigma);
        (d1.x * d2.y - d1.y * d2.x) / d1.norm().powi(3)
    }
}

/// Boundary point with its intrinsic frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryFrame {
    pub sigma: f64,
    pub arclength: f64,
    pub position: Vec2,
    /// Unit tangent, counterclockwise.
    pub tangent: Vec2,
    /// Unit inward normal.
    pub normal: Vec2,
    pub curvature: f64,
}

const ARC_PANELS: usize = 512;

/// A domain together with the chart used for its intrinsic quantities.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    curve: BoundaryCurve,
    chart: ChartMetric,
    /// Cumulative arc length at panel boundaries.
    cumulative: Vec<f64>,
    rule: GaussRule,
}

impl DomainSpec {
    pub fn new(curve: BoundaryCurve, chart: &ChartMetric) -> Result<Self> {
        let rule = GaussRule::new(8);
        let mut dom = DomainSpec {
            curve,
            chart: chart.clone(),
            cumulative: vec![0.0; ARC_PANELS + 1],
            rule,
        };
        // orientation and validity
        let mut area = 0.0;
        for i in 0..ARC_PANELS {
            let s = TAU * i as f64 / ARC_PANELS as f64;
            let [c, d1, _] = dom.curve.jet(s);
            if !chart.contains(c) {
                return Err(Error::contract(
                    "domain",
                    format!("boundary point ({}, {}) lies outside the {} chart", c.x, c.y, chart.name()),
                ));
            }
            area += 0.5 * (c.x * d1.y - c.y * d1.x) * TAU / ARC_PANELS as f64;
        }
        if !(area > 0.0) {
            return Err(Error::contract(
                "domain",
                format!("boundary must be a counterclockwise simple curve with positive area, got signed area {area}"),
            ));
        }
        for i in 0..ARC_PANELS {
            let a = TAU * i as f64 / ARC_PANELS as f64;
            let b = TAU * (i + 1) as f64 / ARC_PANELS as f64;
            let piece = dom.speed_integral(a, b)?;
            dom.cumulative[i + 1] = dom.cumulative[i] + piece;
        }
        if !(dom.length() > 0.0 && dom.length().is_finite()) {
            return Err(Error::contract("domain", "boundary has zero length"));
        }
        for i in 0..64 {
            let f = dom.frame_at_sigma(TAU * i as f64 / 64.0)?;
            let scale = dom.length() * 1e-6;
            let n_e = f.normal / f.normal.norm();
            if !dom.inside(f.position + n_e * scale) {
                return Err(Error::contract("domain", "inward normal does not point into the domain"));
            }
        }
        Ok(dom)
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn chart(&self) -> &ChartMetric {
        &self.chart
    }

    fn speed(&self, sigma: f64) -> Result<f64> {
        let [c, d1, _] = self.curve.jet(sigma);
        Ok(self.chart.metric_jet(c)?.lambda * d1.norm())
    }

    fn speed_integral(&self, a: f64, b: f64) -> Result<f64> {
        let mut total = 0.0;
        for (s, w) in self.rule.on(a, b) {
            total += w * self.speed(s)?;
        }
        Ok(total)
    }

    /// Intrinsic perimeter.
    pub fn length(&self) -> f64 {
        self.cumulative[ARC_PANELS]
    }

    /// Arc length from `σ = 0` to `σ`.
    pub fn arclength(&self, sigma: f64) -> Result<f64> {
        let sigma = sigma.rem_euclid(TAU);
        let width = TAU / ARC_PANELS as f64;
        let k = ((sigma / width) as usize).min(ARC_PANELS - 1);
        let a = k as f64 * width;
        Ok(self.cumulative[k] + self.speed_integral(a, sigma)?)
    }

    /// Parameter `σ` with the given arc length (taken modulo the perimeter).
    pub fn sigma_at(&self, s: f64) -> Result<f64> {
        let total = self.length();
        let s = s.rem_euclid(total);
        let k = match self.cumulative.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => return Ok(TAU * i.min(ARC_PANELS) as f64 / ARC_PANELS as f64 % TAU),
            Err(i) => i - 1,
        };
        let width = TAU / ARC_PANELS as f64;
        let (lo, hi) = (k as f64 * width, (k + 1) as f64 * width);
        let frac = (s - self.cumulative[k]) / (self.cumulative[k + 1] - self.cumulative[k]);
        let mut sigma = lo + frac * width;
        for _ in 0..30 {
            let err = self.cumulative[k] + self.speed_integral(lo, sigma)? - s;
            let step = err / self.speed(sigma)?;
            sigma = (sigma - step).clamp(lo, hi);
            if step.abs() < 1e-15 {
                break;
            }
        }
        Ok(sigma)
    }

    /// Signed boundary function, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.curve.signed_distance(p)
    }

    pub fn inside(&self, p: Vec2) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Geodesic curvature of the boundary at `σ`.
    pub fn geodesic_curvature(&self, sigma: f64) -> Result<f64> {
        let [c, d1, _] = self.curve.jet(sigma);
        let jet = self.chart.metric_jet(c)?;
        let n = Vec2::new(-d1.y, d1.x) / d1.norm();
        Ok((self.curve.euclidean_curvature(sigma) - jet.grad_log.dot(&n)) / jet.lambda)
    }

    /// Geodesic curvature from central differences of the Euclidean tangent
    /// angle; an independent check of [`Self::geodesic_curvature`].
    pub fn geodesic_curvature_fd(&self, sigma: f64, h: f64) -> Result<f64> {
        let angle = |s: f64| {
            let d = self.curve.jet(s)[1];
            d.y.atan2(d.x)
        };
        let mut dtheta = angle(sigma + h) - angle(sigma - h);
        if dtheta > std::f64::consts::PI {
            dtheta -= TAU;
        } else if dtheta < -std::f64::consts::PI {
            dtheta += TAU;
        }
        let [c, d1, _] = self.curve.jet(sigma);
        let jet = self.chart.metric_jet(c)?;
        let speed = d1.norm();
        let n = Vec2::new(-d1.y, d1.x) / speed;
        Ok((dtheta / (2.0 * h) / speed - jet.grad_log.dot(&n)) / jet.lambda)
    }

    pub fn frame_at_sigma(&self, sigma: f64) -> Result<BoundaryFrame> {
        let [c, d1, _] = self.curve.jet(sigma);
        let jet = self.chart.metric_jet(c)?;
        let tangent = jet.normalize(d1);
        Ok(BoundaryFrame {
            sigma,
            arclength: self.arclength(sigma)?,
            position: c,
            tangent,
            normal: rot90(&jet, tangent),
            curvature: self.geodesic_curvature(sigma)?,
        })
    }

    pub fn frame_at_arclength(&self, s: f64) -> Result<BoundaryFrame> {
        let sigma = self.sigma_at(s)?;
        let mut f = self.frame_at_sigma(sigma)?;
        f.arclength = s.rem_euclid(self.length());
        Ok(f)
    }

    /// Frame at the boundary point closest to `p`.
    pub fn frame_near(&self, p: Vec2) -> Result<BoundaryFrame> {
        self.frame_at_sigma(self.curve.closest_parameter(p))
    }

    /// Arc-length coordinate of the boundary point closest to `p`.
    pub fn arclength_of(&self, p: Vec2) -> Result<f64> {
        self.arclength(self.curve.closest_parameter(p))
    }

    /// Periodic distance between two arc-length coordinates.
    pub fn arclength_distance(&self, a: f64, b: f64) -> f64 {
        let total = self.length();
        let d = (a - b).rem_euclid(total);
        d.min(total - d)
    }

    /// Half the perimeter; bounds the intrinsic diameter of a convex domain.
    pub fn diameter_estimate(&self) -> f64 {
        0.5 * self.length()
    }
}

/// Where the convexity margin is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryWitness {
    pub arclength: f64,
    pub position: Vec2,
    pub direction: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityReport {
    /// `min (κ − ⟨Y(ξ), ν⟩)` over samples and both unit tangents.
    pub margin: f64,
    pub witness: BoundaryWitness,
    pub samples: usize,
}

impl ConvexityReport {
    pub fn strictly_convex(&self) -> bool {
        self.margin > 0.0
    }
}

/// Strict magnetic convexity margin at `n` boundary points equally spaced in
/// arc length.
pub fn convexity_margin(sys: &MagneticSystem, dom: &DomainSpec, n: usize) -> Result<ConvexityReport> {
    if n < 8 {
        return Err(Error::invalid("n_samples", format!("need at least 8 samples, got {n}")));
    }
    let mut best: Option<(f64, BoundaryWitness)> = None;
    for i in 0..n {
        let f = dom.frame_at_arclength(dom.length() * i as f64 / n as f64)?;
        for dir in [f.tangent, -f.tangent] {
            let jet = sys.chart().metric_jet(f.position)?;
            let y = sys.lorentz(f.position, dir)?;
            let margin = f.curvature - jet.inner(y, f.normal);
            if best.is_none_or(|(m, _)| margin < m) {
                best = Some((
                    margin,
                    BoundaryWitness {
                        arclength: f.arclength,
                        position: f.position,
                        direction: dir,
                    },
                ));
            }
        }
    }
    let (margin, witness) = best.expect("at least eight samples");
    Ok(ConvexityReport {
        margin,
        witness,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn disk(r: f64) -> DomainSpec {
        DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), r).unwrap(), &ChartMetric::euclidean()).unwrap()
    }

    #[test]
    fn flat_disk_margins() {
        for r in [0.5, 1.0, 2.0] {
            for b in [0.0, 1.0] {
                let sys = MagneticSystem::constant(ChartMetric::euclidean(), b);
                let m = convexity_margin(&sys, &disk(r), 32).unwrap();
                assert_relative_eq!(m.margin, 1.0 / r - b, epsilon = 1e-12);
            }
        }
        let sys = MagneticSystem::constant(ChartMetric::euclidean(), 1.0);
        assert!(convexity_margin(&sys, &disk(1.0), 4).is_err());
    }

    #[test]
    fn arclength_round_trip() {
        let chart = ChartMetric::spherical(1.0).unwrap();
        let curve = BoundaryCurve::ellipse(Vec2::new(0.1, -0.05), (0.4, 0.25), 0.3).unwrap();
        let dom = DomainSpec::new(curve, &chart).unwrap();
        for s in [0.0, 0.13, 0.9, 1.7] {
            let sigma = dom.sigma_at(s).unwrap();
            assert_relative_eq!(dom.arclength(sigma).unwrap(), s, epsilon = 1e-12);
        }
        let r = 0.3f64;
        let circ = DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), r).unwrap(), &chart).unwrap();
        assert_relative_eq!(circ.length(), TAU * 2.0 * r / (1.0 + r * r), epsilon = 1e-12);
    }

    #[test]
    fn curvature_two_ways() {
        let chart = ChartMetric::hyperbolic(-1.0).unwrap();
        let curve = BoundaryCurve::ellipse(Vec2::new(0.1, 0.0), (0.5, 0.3), 0.4).unwrap();
        let dom = DomainSpec::new(curve, &chart).unwrap();
        for i in 0..16 {
            let s = TAU * i as f64 / 16.0;
            let a = dom.geodesic_curvature(s).unwrap();
            let b = dom.geodesic_curvature_fd(s, 1e-4).unwrap();
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        let sphere = ChartMetric::spherical(1.0).unwrap();
        let r = 0.4;
        let dom = DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), r).unwrap(), &sphere).unwrap();
        assert_relative_eq!(dom.geodesic_curvature(1.0).unwrap(), (1.0 - r * r) / (2.0 * r), epsilon = 1e-12);
    }

    #[test]
    fn signed_distance_and_frames() {
        let curve = BoundaryCurve::ellipse(Vec2::zeros(), (2.0, 1.0), 0.0).unwrap();
        assert_relative_eq!(curve.signed_distance(Vec2::new(0.0, 0.5)), -0.5, epsilon = 1e-12);
        assert_relative_eq!(curve.signed_distance(Vec2::new(3.0, 0.0)), 1.0, epsilon = 1e-12);
        let dom = disk(1.0);
        let f = dom.frame_at_arclength(0.0).unwrap();
        assert_relative_eq!(f.position.x, 1.0);
        assert_relative_eq!(f.normal.x, -1.0);
        assert_relative_eq!(dom.arclength_distance(0.1, dom.length() - 0.1), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn rejects_clockwise_and_out_of_chart() {
        let cw = BoundaryCurve::Parametric {
            name: "cw".into(),
            eval: Arc::new(|s: f64| {
                let (sn, c) = s.sin_cos();
                [Vec2::new(c, -sn), Vec2::new(-sn, -c), Vec2::new(-c, sn)]
            }),
        };
        assert!(DomainSpec::new(cw, &ChartMetric::euclidean()).is_err());
        let big = BoundaryCurve::circle(Vec2::zeros(), 1.5).unwrap();
        assert!(DomainSpec::new(big, &ChartMetric::hyperbolic(-1.0).unwrap()).is_err());
    }
}
