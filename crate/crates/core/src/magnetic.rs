//! Magnetic fields on a surface: `Ω = b dA`, so the Lorentz operator is
//! `Y(ξ) = b · rot90(ξ)` and unit-speed orbits have geodesic curvature `b`.

use crate::bump::Bump;
use crate::error::Result;
use crate::expr::ExprField;
use crate::geometry::{rot90, ChartMetric, MetricJet};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Constant(f64),
    Expression { field: ExprField, negated: bool },
}

/// A chart together with the scalar field strength `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticSystem {
    chart: ChartMetric,
    source: FieldSource,
    bump: Option<Bump>,
}

/// Field strength and its gradient at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub value: f64,
    pub grad: Vec2,
}

impl MagneticSystem {
    pub fn new(chart: ChartMetric, source: FieldSource) -> Self {
        MagneticSystem {
            chart,
            source,
            bump: None,
        }
    }

    pub fn constant(chart: ChartMetric, b: f64) -> Self {
        Self::new(chart, FieldSource::Constant(b))
    }

    pub fn expression(chart: ChartMetric, src: &str) -> Result<Self> {
        Ok(Self::new(
            chart,
            FieldSource::Expression {
                field: ExprField::parse(src)?,
                negated: false,
            },
        ))
    }

    /// Add a compactly supported bump to `b`.
    pub fn with_field_bump(mut self, bump: Bump) -> Self {
        self.bump = Some(bump);
        self
    }

    pub fn with_chart(mut self, chart: ChartMetric) -> Self {
        self.chart = chart;
        self
    }

    pub fn chart(&self) -> &ChartMetric {
        &self.chart
    }

    pub fn source(&self) -> &FieldSource {
        &self.source
    }

    pub fn field_bump(&self) -> Option<&Bump> {
        self.bump.as_ref()
    }

    /// `sup |b|` when it is known in closed form.
    pub fn field_bound(&self) -> Option<f64> {
        let extra = self.bump.map_or(0.0, |b| b.amplitude.abs());
        match &self.source {
            FieldSource::Constant(c) => Some(c.abs() + extra),
            FieldSource::Expression { .. } => None,
        }
    }

    /// `b` and `∇b` at `p`; checks the chart's validity region.
    pub fn field_jet(&self, p: Vec2) -> Result<FieldJet> {
        if !self.chart.contains(p) {
            // reuse the chart's error
            self.chart.metric_jet(p)?;
        }
        Ok(self.field_jet_unchecked(p))
    }

    pub(crate) fn field_jet_unchecked(&self, p: Vec2) -> FieldJet {
        let mut jet = match &self.source {
            FieldSource::Constant(c) => FieldJet {
                value: *c,
                grad: Vec2::zeros(),
            },
            FieldSource::Expression { field, negated } => {
                let (v, g) = (field.value(p), field.gradient(p));
                if *negated {
                    FieldJet { value: -v, grad: -g }
                } else {
                    FieldJet { value: v, grad: g }
                }
            }
        };
        if let Some(b) = self.bump.as_ref().and_then(|b| b.jet(p)) {
            jet.value += b.value;
            jet.grad += b.grad;
        }
        jet
    }

    pub fn field_strength(&self, p: Vec2) -> Result<f64> {
        Ok(self.field_jet(p)?.value)
    }

    /// `Y(ξ)` at `p`.
    pub fn lorentz(&self, p: Vec2, xi: Vec2) -> Result<Vec2> {
        let jet = self.chart.metric_jet(p)?;
        Ok(self.lorentz_with(&jet, p, xi))
    }

    pub(crate) fn lorentz_with(&self, jet: &MetricJet, p: Vec2, xi: Vec2) -> Vec2 {
        rot90(jet, xi) * self.field_jet_unchecked(p).value
    }

    /// `Ω(ξ, ν) = b λ² det[ξ ν]`, evaluated from the area form.
    pub fn two_form(&self, p: Vec2, xi: Vec2, nu: Vec2) -> Result<f64> {
        let jet = self.chart.metric_jet(p)?;
        let b = self.field_jet_unchecked(p).value;
        Ok(b * jet.lambda * jet.lambda * (xi.x * nu.y - xi.y * nu.x))
    }

    /// The same chart with `Ω` replaced by `−Ω`.
    pub fn reverse(&self) -> MagneticSystem {
        let source = match &self.source {
            FieldSource::Constant(c) => FieldSource::Constant(-c),
            FieldSource::Expression { field, negated } => FieldSource::Expression {
                field: field.clone(),
                negated: !negated,
            },
        };
        MagneticSystem {
            chart: self.chart.clone(),
            source,
            bump: self.bump.map(|b| b.negated()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn systems() -> Vec<MagneticSystem> {
        vec![
            MagneticSystem::constant(ChartMetric::euclidean(), 1.0),
            MagneticSystem::constant(ChartMetric::spherical(1.0).unwrap(), 0.5),
            MagneticSystem::expression(ChartMetric::hyperbolic(-1.0).unwrap(), "1 + x*y").unwrap(),
            MagneticSystem::expression(ChartMetric::euclidean(), "2*exp(-(x^2+y^2)/0.5)")
                .unwrap()
                .with_field_bump(Bump::new(Vec2::new(0.1, 0.0), 0.4, 0.3).unwrap()),
        ]
    }

    #[test]
    fn lorentz_examples() {
        let zero = MagneticSystem::constant(ChartMetric::euclidean(), 0.0);
        assert_eq!(zero.lorentz(Vec2::new(1.0, 2.0), Vec2::new(0.3, -0.2)).unwrap(), Vec2::zeros());
        let unit = MagneticSystem::constant(ChartMetric::euclidean(), 1.0);
        assert_eq!(unit.lorentz(Vec2::new(5.0, -3.0), Vec2::new(1.0, 0.0)).unwrap(), Vec2::new(0.0, 1.0));
    }

    #[test]
    fn lorentz_is_skew_and_matches_two_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for sys in systems() {
            for _ in 0..100 {
                let p = Vec2::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
                let xi = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let nu = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let jet = sys.chart().metric_jet(p).unwrap();
                let y = sys.lorentz(p, xi).unwrap();
                assert!(jet.inner(y, xi).abs() <= 1e-12);
                let omega = sys.two_form(p, xi, nu).unwrap();
                assert!((omega - jet.inner(y, nu)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reverse_is_an_involution_and_preserves_magnitude() {
        for sys in systems() {
            let rev = sys.reverse();
            assert_eq!(rev.reverse(), sys);
            assert_eq!(rev.chart(), sys.chart());
            for p in [Vec2::new(0.1, 0.2), Vec2::new(-0.3, 0.05), Vec2::zeros()] {
                let b = sys.field_strength(p).unwrap();
                let rb = rev.field_strength(p).unwrap();
                assert_eq!(rb, -b);
                assert_eq!(rb.abs(), b.abs());
            }
        }
        let one = MagneticSystem::constant(ChartMetric::euclidean(), 1.0);
        assert_eq!(one.reverse(), MagneticSystem::constant(ChartMetric::euclidean(), -1.0));
    }

    #[test]
    fn outside_validity_region_is_an_error() {
        let sys = MagneticSystem::constant(ChartMetric::hyperbolic(-1.0).unwrap(), 1.0);
        assert!(matches!(
            sys.lorentz(Vec2::new(1.5, 0.0), Vec2::new(1.0, 0.0)),
            Err(Error::OutsideChart { .. })
        ));
        assert!(sys.field_jet(Vec2::new(0.0, 2.0)).is_err());
    }
}
