//! Surfaces in a single conformal chart, `g = λ² (dx² + dy²)`.
//!
//! Everything the flow needs is expressed through `log λ`: with
//! `φ = log λ`, the Christoffel symbols are
//! `Γᵏᵢⱼ = δᵏᵢ ∂ⱼφ + δᵏⱼ ∂ᵢφ − δᵢⱼ ∂ₖφ` and the Gauss curvature is
//! `K = −Δφ / λ²`.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;

use crate::bump::Bump;
use crate::error::{Error, Result};
use crate::expr::{ExprField, ScalarJet};
use crate::Vec2;

/// `λ` and the first two derivatives of `log λ` at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub lambda: f64,
    pub grad_log: Vec2,
    pub hess_log: Matrix2<f64>,
}

impl MetricJet {
    pub fn flat() -> Self {
        MetricJet {
            lambda: 1.0,
            grad_log: Vec2::zeros(),
            hess_log: Matrix2::zeros(),
        }
    }

    pub fn inner(&self, a: Vec2, b: Vec2) -> f64 {
        self.lambda * self.lambda * a.dot(&b)
    }

    pub fn norm(&self, a: Vec2) -> f64 {
        self.lambda * a.norm()
    }

    pub fn gauss_curvature(&self) -> f64 {
        -self.hess_log.trace() / (self.lambda * self.lambda)
    }

    /// Scale `v` to unit g-length.
    pub fn normalize(&self, v: Vec2) -> Vec2 {
        v / self.norm(v)
    }
}

/// Christoffel symbols, indexed `[k][i][j]` for `Γᵏᵢⱼ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffels(pub [[[f64; 2]; 2]; 2]);

impl Christoffels {
    /// `Γᵏᵢⱼ aⁱ bʲ`.
    pub fn contract(&self, a: Vec2, b: Vec2) -> Vec2 {
        let mut out = Vec2::zeros();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[k] += self.0[k][i][j] * a[i] * b[j];
                }
            }
        }
        out
    }
}

pub fn christoffels(jet: &MetricJet) -> Christoffels {
    let d = jet.grad_log;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut g = [[[0.0; 2]; 2]; 2];
    for (k, gk) in g.iter_mut().enumerate() {
        for (i, gki) in gk.iter_mut().enumerate() {
            for (j, v) in gki.iter_mut().enumerate() {
                *v = delta(k, i) * d[j] + delta(k, j) * d[i] - delta(i, j) * d[k];
            }
        }
    }
    Christoffels(g)
}

/// Metric rotation by +90°. In a conformal chart this is the coordinate
/// rotation; the jet is accepted so the signature survives non-conformal
/// extensions.
pub fn rot90(_jet: &MetricJet, v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// A conformal factor defined by a closure, differentiated by central
/// differences.
#[derive(Clone)]
pub struct SampledFactor {
    pub name: String,
    pub eval: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>,
    /// Difference step for the central-difference derivatives.
    pub step: f64,
}

impl fmt::Debug for SampledFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFactor")
            .field("name", &self.name)
            .field("step", &self.step)
            .finish()
    }
}

impl PartialEq for SampledFactor {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.step == other.step && Arc::ptr_eq(&self.eval, &other.eval)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConformalFactor {
    /// Analytic derivatives from the expression grammar.
    Expression(ExprField),
    /// Central-difference derivatives; flagged through
    /// [`ChartMetric::numeric_derivatives`].
    Sampled(SampledFactor),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChartKind {
    Euclidean,
    /// Stereographic chart, `λ = 2 / (1 + K r²)`, `K > 0`.
    SphericalStereographic { curvature: f64 },
    /// Poincaré disk, `λ = 2 / (1 + K r²)`, `K < 0`, valid for `r < 1/√|K|`.
    HyperbolicPoincare { curvature: f64 },
    ConformalCustom(ConformalFactor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartMetric {
    kind: ChartKind,
    perturbation: Option<Bump>,
}

impl ChartMetric {
    pub fn euclidean() -> Self {
        ChartMetric {
            kind: ChartKind::Euclidean,
            perturbation: None,
        }
    }

    pub fn spherical(curvature: f64) -> Result<Self> {
        if !(curvature.is_finite() && curvature > 0.0) {
            return Err(Error::invalid("chart.curvature", format!("spherical chart needs K > 0, got {curvature}")));
        }
        Ok(ChartMetric {
            kind: ChartKind::SphericalStereographic { curvature },
            perturbation: None,
        })
    }

    pub fn hyperbolic(curvature: f64) -> Result<Self> {
        if !(curvature.is_finite() && curvature < 0.0) {
            return Err(Error::invalid("chart.curvature", format!("hyperbolic chart needs K < 0, got {curvature}")));
        }
        Ok(ChartMetric {
            kind: ChartKind::HyperbolicPoincare { curvature },
            perturbation: None,
        })
    }

    pub fn custom_expression(src: &str) -> Result<Self> {
        Ok(ChartMetric {
            kind: ChartKind::ConformalCustom(ConformalFactor::Expression(ExprField::parse(src)?)),
            perturbation: None,
        })
    }

    pub fn custom_sampled(
        name: impl Into<String>,
        step: f64,
        eval: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("chart.step", "difference step must be positive"));
        }
        Ok(ChartMetric {
            kind: ChartKind::ConformalCustom(ConformalFactor::Sampled(SampledFactor {
                name: name.into(),
                eval: Arc::new(eval),
                step,
            })),
            perturbation: None,
        })
    }

    /// Multiply `λ` by `1 + bump`.
    pub fn with_bump(mut self, bump: Bump) -> Result<Self> {
        if bump.amplitude <= -1.0 {
            return Err(Error::invalid("chart.bump.amplitude", "must exceed -1 to keep λ positive"));
        }
        self.perturbation = Some(bump);
        Ok(self)
    }

    pub fn kind(&self) -> &ChartKind {
        &self.kind
    }

    pub fn perturbation(&self) -> Option<&Bump> {
        self.perturbation.as_ref()
    }

    /// Same chart with the bump removed.
    pub fn unperturbed(&self) -> Self {
        ChartMetric {
            kind: self.kind.clone(),
            perturbation: None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ChartKind::Euclidean => "euclidean",
            ChartKind::SphericalStereographic { .. } => "spherical",
            ChartKind::HyperbolicPoincare { .. } => "hyperbolic",
            ChartKind::ConformalCustom(_) => "custom",
        }
    }

    /// Constant curvature of the unperturbed built-in model.
    pub fn nominal_curvature(&self) -> Option<f64> {
        match self.kind {
            ChartKind::Euclidean => Some(0.0),
            ChartKind::SphericalStereographic { curvature } | ChartKind::HyperbolicPoincare { curvature } => {
                Some(curvature)
            }
            ChartKind::ConformalCustom(_) => None,
        }
    }

    /// True when `log λ` derivatives come from central differences.
    pub fn numeric_derivatives(&self) -> bool {
        matches!(self.kind, ChartKind::ConformalCustom(ConformalFactor::Sampled(_)))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return false;
        }
        match self.kind {
            ChartKind::HyperbolicPoincare { curvature } => 1.0 + curvature * p.norm_squared() > 0.0,
            _ => true,
        }
    }

    pub fn metric_jet(&self, p: Vec2) -> Result<MetricJet> {
        if !self.contains(p) {
            return Err(Error::OutsideChart {
                chart: self.name(),
                x: p.x,
                y: p.y,
            });
        }
        let mut jet = match &self.kind {
            ChartKind::Euclidean => MetricJet::flat(),
            ChartKind::SphericalStereographic { curvature } | ChartKind::HyperbolicPoincare { curvature } => {
                model_jet(*curvature, p)
            }
            ChartKind::ConformalCustom(ConformalFactor::Expression(field)) => {
                let j = field.jet(p);
                self.check_factor(j.value, p)?;
                log_jet(&j)
            }
            ChartKind::ConformalCustom(ConformalFactor::Sampled(s)) => sampled_jet(self, s, p)?,
        };
        if let Some(bump) = &self.perturbation {
            if let Some(b) = bump.jet(p) {
                let factor = ScalarJet {
                    value: 1.0 + b.value,
                    ..b
                };
                let l = log_jet(&factor);
                jet.lambda *= factor.value;
                jet.grad_log += l.grad_log;
                jet.hess_log += l.hess_log;
            }
        }
        Ok(jet)
    }

    pub fn gauss_curvature(&self, p: Vec2) -> Result<f64> {
        Ok(self.metric_jet(p)?.gauss_curvature())
    }

    fn check_factor(&self, value: f64, p: Vec2) -> Result<()> {
        if value.is_finite() && value > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveFactor {
                chart: self.name(),
                value,
                x: p.x,
                y: p.y,
            })
        }
    }
}

/// `λ = 2 / (1 + K r²)`.
fn model_jet(k: f64, p: Vec2) -> MetricJet {
    let r2 = p.norm_squared();
    let q = 1.0 + k * r2;
    let grad_log = p * (-2.0 * k / q);
    let hess_log = (p * p.transpose()) * (4.0 * k * k / (q * q)) - Matrix2::identity() * (2.0 * k / q);
    MetricJet {
        lambda: 2.0 / q,
        grad_log,
        hess_log,
    }
}

/// Convert a jet of `λ` into a jet of `log λ`.
fn log_jet(j: &ScalarJet) -> MetricJet {
    let g = j.grad / j.value;
    MetricJet {
        lambda: j.value,
        grad_log: g,
        hess_log: j.hess / j.value - g * g.transpose(),
    }
}

fn sampled_jet(chart: &ChartMetric, s: &SampledFactor, p: Vec2) -> Result<MetricJet> {
    let h = s.step;
    let log_at = |q: Vec2| -> Result<f64> {
        let v = (s.eval)(q);
        chart.check_factor(v, q)?;
        Ok(v.ln())
    };
    let lambda = (s.eval)(p);
    chart.check_factor(lambda, p)?;
    let c = lambda.ln();
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let (xp, xm, yp, ym) = (log_at(p + ex)?, log_at(p - ex)?, log_at(p + ey)?, log_at(p - ey)?);
    let xy = (log_at(p + ex + ey)? - log_at(p + ex - ey)? - log_at(p - ex + ey)? + log_at(p - ex - ey)?)
        / (4.0 * h * h);
    Ok(MetricJet {
        lambda,
        grad_log: Vec2::new((xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h)),
        hess_log: Matrix2::new(
            (xp - 2.0 * c + xm) / (h * h),
            xy,
            xy,
            (yp - 2.0 * c + ym) / (h * h),
        ),
    })
}
