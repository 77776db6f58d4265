//! Magnetic Jacobi fields in the adapted frame `e₁ = γ'`, `e₂ = rot90(γ')`.
//!
//! Writing `J = f₁e₁ + f₂e₂`, the frame satisfies `e₁' = b e₂`, `e₂' = −b e₁`
//! and the Jacobi equation becomes
//!
//! ```text
//! f₁'' =  b f₂' + b₁ f₂
//! f₂'' = −b f₁' − (K − b₂) f₂
//! ```
//!
//! with `b₁ = db(e₁)`, `b₂ = db(e₂)`. This is the general coefficient system
//! `f″ⱼ + Σᵢ f′ᵢ yᵢⱼ + Σᵢ fᵢ aᵢⱼ = 0` with `y₁₂ = −y₂₁ = b`, `a₁₁ = a₁₂ = 0`,
//! `a₂₁ = −b₁`, `a₂₂ = K − b₂`. The quantity `⟨J', γ'⟩ = f₁' − b f₂` is a first
//! integral.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{acceleration, hermite_vec, integrate, locate, renormalize, rk4, PhasePoint, StepControl, Trajectory};
use crate::geometry::{rot90, MetricJet};
use crate::magnetic::MagneticSystem;
use crate::Vec2;

/// Orthonormal frame along a magnetic geodesic at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptedFrame {
    pub e1: Vec2,
    pub e2: Vec2,
    pub b: f64,
}

impl AdaptedFrame {
    pub fn at(sys: &MagneticSystem, state: &PhasePoint) -> Result<Self> {
        let jet = sys.chart().metric_jet(state.position)?;
        Ok(Self::with_jet(sys, &jet, state))
    }

    fn with_jet(sys: &MagneticSystem, jet: &MetricJet, state: &PhasePoint) -> Self {
        AdaptedFrame {
            e1: state.velocity,
            e2: rot90(jet, state.velocity),
            b: sys.field_jet_unchecked(state.position).value,
        }
    }

    /// Coordinate vector with frame components `c`.
    pub fn vector(&self, c: [f64; 2]) -> Vec2 {
        self.e1 * c[0] + self.e2 * c[1]
    }
}

/// Coefficients `yᵢⱼ = ⟨Y(eᵢ), eⱼ⟩` and `aᵢⱼ` of the frame Jacobi system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameCoefficients {
    pub y: [[f64; 2]; 2],
    pub a: [[f64; 2]; 2],
}

pub fn frame_coefficients(sys: &MagneticSystem, state: &PhasePoint) -> Result<FrameCoefficients> {
    let jet = sys.chart().metric_jet(state.position)?;
    let field = sys.field_jet_unchecked(state.position);
    let k = jet.gauss_curvature();
    let e2 = rot90(&jet, state.velocity);
    let b1 = field.grad.dot(&state.velocity);
    let b2 = field.grad.dot(&e2);
    let b = field.value;
    Ok(FrameCoefficients {
        y: [[0.0, b], [-b, 0.0]],
        a: [[0.0, 0.0], [-b1, k - b2]],
    })
}

fn jacobi_rhs(sys: &MagneticSystem, y: &[f64; 8]) -> Result<[f64; 8]> {
    let p = Vec2::new(y[0], y[1]);
    let v = Vec2::new(y[2], y[3]);
    let jet = sys.chart().metric_jet(p)?;
    let acc = acceleration(sys, &jet, p, v);
    let field = sys.field_jet_unchecked(p);
    let k = jet.gauss_curvature();
    let b = field.value;
    let b1 = field.grad.dot(&v);
    let b2 = field.grad.dot(&rot90(&jet, v));
    let (f2, g1, g2) = (y[5], y[6], y[7]);
    Ok([
        v.x,
        v.y,
        acc.x,
        acc.y,
        g1,
        g2,
        b * g2 + b1 * f2,
        -b * g1 - (k - b2) * f2,
    ])
}

/// Advance the combined base/Jacobi state by `h`, renormalizing the base
/// velocity exactly as the plain integrator does.
fn jacobi_step(sys: &MagneticSystem, y: &[f64; 8], h: f64) -> Result<[f64; 8]> {
    if h == 0.0 {
        return Ok(*y);
    }
    let mut out = rk4(y, h, |s| jacobi_rhs(sys, s))?;
    renormalize(sys.chart(), &mut out[..4])?;
    Ok(out)
}

/// Identifies the trajectory a Jacobi state was propagated along.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryTag {
    pub start: PhasePoint,
    pub end: PhasePoint,
    pub duration: f64,
    pub samples: usize,
}

impl TrajectoryTag {
    pub fn of(traj: &Trajectory) -> Self {
        TrajectoryTag {
            start: traj.start(),
            end: traj.end(),
            duration: traj.duration(),
            samples: traj.samples().len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiSample {
    pub t: f64,
    pub base: PhasePoint,
    pub base_acceleration: Vec2,
    pub b: f64,
    pub f: [f64; 2],
    pub df: [f64; 2],
    pub ddf: [f64; 2],
}

impl JacobiSample {
    fn from_state(sys: &MagneticSystem, t: f64, y: &[f64; 8]) -> Result<Self> {
        let d = jacobi_rhs(sys, y)?;
        Ok(JacobiSample {
            t,
            base: PhasePoint::from_slice(&y[..4]),
            base_acceleration: Vec2::new(d[2], d[3]),
            b: sys.field_jet_unchecked(Vec2::new(y[0], y[1])).value,
            f: [y[4], y[5]],
            df: [y[6], y[7]],
            ddf: [d[6], d[7]],
        })
    }

    /// `⟨J', γ'⟩`.
    pub fn parallel_derivative(&self) -> f64 {
        self.df[0] - self.b * self.f[1]
    }

    /// Frame components `(P, Q)` of the covariant derivative `J'`.
    pub fn derivative_components(&self) -> [f64; 2] {
        [self.df[0] - self.b * self.f[1], self.df[1] + self.b * self.f[0]]
    }
}

/// A magnetic Jacobi field sampled on its trajectory's step grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiState {
    samples: Vec<JacobiSample>,
    tag: TrajectoryTag,
}

/// `J` and its covariant derivative `J'` at one time, as coordinate vectors,
/// together with the frame components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiValue {
    pub t: f64,
    pub base: PhasePoint,
    pub f: [f64; 2],
    pub df: [f64; 2],
    pub j: Vec2,
    pub dj: Vec2,
}

impl JacobiState {
    pub fn samples(&self) -> &[JacobiSample] {
        &self.samples
    }

    pub fn tag(&self) -> &TrajectoryTag {
        &self.tag
    }

    pub fn duration(&self) -> f64 {
        self.tag.duration
    }

    /// Frame components `(f, f')` at `t` (cubic Hermite between samples).
    pub fn components_at(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let t = t.clamp(0.0, self.duration());
        let k = locate(|i| self.samples[i].t, self.samples.len(), t);
        let a = &self.samples[k];
        if a.t == t || self.samples.len() == 1 {
            return (a.f, a.df);
        }
        let b = &self.samples[k + 1];
        let (f, _) = hermite_vec(a.t, b.t, Vec2::from(a.f), Vec2::from(a.df), Vec2::from(b.f), Vec2::from(b.df), t);
        let (df, _) = hermite_vec(a.t, b.t, Vec2::from(a.df), Vec2::from(a.ddf), Vec2::from(b.df), Vec2::from(b.ddf), t);
        ([f.x, f.y], [df.x, df.y])
    }

    fn base_at(&self, t: f64) -> PhasePoint {
        let k = locate(|i| self.samples[i].t, self.samples.len(), t);
        let a = &self.samples[k];
        if a.t == t || self.samples.len() == 1 {
            return a.base;
        }
        let b = &self.samples[k + 1];
        let (position, _) = hermite_vec(a.t, b.t, a.base.position, a.base.velocity, b.base.position, b.base.velocity, t);
        let (velocity, _) = hermite_vec(a.t, b.t, a.base.velocity, a.base_acceleration, b.base.velocity, b.base_acceleration, t);
        PhasePoint { position, velocity }
    }

    /// `J(t)` and `J'(t)` as coordinate vectors.
    pub fn value_at(&self, sys: &MagneticSystem, t: f64) -> Result<JacobiValue> {
        let t = t.clamp(0.0, self.duration());
        let base = self.base_at(t);
        let (f, df) = self.components_at(t);
        let frame = AdaptedFrame::at(sys, &base)?;
        let dj = frame.vector([df[0] - frame.b * f[1], df[1] + frame.b * f[0]]);
        Ok(JacobiValue {
            t,
            base,
            f,
            df,
            j: frame.vector(f),
            dj,
        })
    }

    /// Largest deviation of `⟨J', γ'⟩` from its initial value over the samples.
    pub fn side_condition_drift(&self) -> f64 {
        let p0 = self.samples[0].parallel_derivative();
        self.samples
            .iter()
            .map(|s| (s.parallel_derivative() - p0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|⟨J', γ'⟩|` over the samples.
    pub fn side_condition_max(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.parallel_derivative().abs())
            .fold(0.0, f64::max)
    }
}

/// Frame initial data `(f(0), f'(0))` for `J(0) = j0`, `J'(0) = j0p`.
fn initial_components(sys: &MagneticSystem, start: &PhasePoint, j0: Vec2, j0p: Vec2) -> Result<[f64; 4]> {
    let jet = sys.chart().metric_jet(start.position)?;
    let frame = AdaptedFrame::with_jet(sys, &jet, start);
    let f1 = jet.inner(j0, frame.e1);
    let f2 = jet.inner(j0, frame.e2);
    let g1 = jet.inner(j0p, frame.e1) + frame.b * f2;
    let g2 = jet.inner(j0p, frame.e2) - frame.b * f1;
    Ok([f1, f2, g1, g2])
}

/// Propagate the Jacobi field with `J(0) = j0`, `J'(0) = j0p` along `traj`.
///
/// The base geodesic is re-integrated on the trajectory's own step grid
/// together with the frame components, so it coincides with `traj`.
pub fn propagate_jacobi(sys: &MagneticSystem, traj: &Trajectory, j0: Vec2, j0p: Vec2) -> Result<JacobiState> {
    let start = traj.start();
    let jet = sys.chart().metric_jet(start.position)?;
    let side = jet.inner(j0p, start.velocity);
    if side.abs() > 1e-8 * jet.norm(j0p).max(1.0) {
        return Err(Error::contract(
            "propagate_jacobi",
            format!("initial derivative is not perpendicular to the velocity: <J'(0), gamma'(0)> = {side:e}"),
        ));
    }
    let f = initial_components(sys, &start, j0, j0p)?;
    let s = start.to_array();
    let mut y = [s[0], s[1], s[2], s[3], f[0], f[1], f[2], f[3]];
    let mut t = 0.0;
    let mut samples = vec![JacobiSample::from_state(sys, 0.0, &y)?];
    for (h, sample) in traj.steps().zip(traj.samples().iter().skip(1)) {
        y = jacobi_step(sys, &y, h)?;
        t = sample.t;
        samples.push(JacobiSample::from_state(sys, t, &y)?);
    }
    debug_assert_eq!(t, traj.duration());
    Ok(JacobiState {
        samples,
        tag: TrajectoryTag::of(traj),
    })
}

/// `⟨J_v, J_w'⟩ − ⟨J_v', J_w⟩ + ⟨Y(J_v), J_w⟩` at time `t`.
pub fn symplectic_pairing(jv: &JacobiState, jw: &JacobiState, sys: &MagneticSystem, traj: &Trajectory, t: f64) -> Result<f64> {
    let tag = TrajectoryTag::of(traj);
    if jv.tag != tag || jw.tag != tag {
        return Err(Error::contract(
            "symplectic_pairing",
            "Jacobi states were propagated along different trajectories",
        ));
    }
    if !(0.0..=traj.duration()).contains(&t) {
        return Err(Error::contract(
            "symplectic_pairing",
            format!("time {t} outside [0, {}]", traj.duration()),
        ));
    }
    let v = jv.value_at(sys, t)?;
    let w = jw.value_at(sys, t)?;
    let b = sys.field_strength(v.base.position)?;
    let (a, c) = (v.f, w.f);
    let pv = [v.df[0] - b * a[1], v.df[1] + b * a[0]];
    let pw = [w.df[0] - b * c[1], w.df[1] + b * c[0]];
    let jv_dw = a[0] * pw[0] + a[1] * pw[1];
    let dv_jw = pv[0] * c[0] + pv[1] * c[1];
    let y_term = b * (a[0] * c[1] - a[1] * c[0]);
    Ok(jv_dw - dv_jw + y_term)
}

/// Relative discrepancy between `J_v(t)` (with `J(0) = 0`, `J'(0) = v`) and
/// the central difference of `s ↦ exp_x(t ξ(s))`, `ξ(s) = cos s ξ + sin s v`.
pub fn variational_consistency(
    sys: &MagneticSystem,
    x: Vec2,
    xi: Vec2,
    v: Vec2,
    t: f64,
    h: f64,
    ctrl: &StepControl,
) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("h", format!("must be positive, got {h}")));
    }
    let jet = sys.chart().metric_jet(x)?;
    if (jet.norm(v) - 1.0).abs() > 1e-8 || jet.inner(v, xi).abs() > 1e-8 {
        return Err(Error::contract(
            "variational_consistency",
            format!(
                "v must be a unit vector orthogonal to xi: |v| = {}, <v, xi> = {:e}",
                jet.norm(v),
                jet.inner(v, xi)
            ),
        ));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let traj = integrate(sys, PhasePoint::new(x, xi), t, ctrl)?;
    let jac = propagate_jacobi(sys, &traj, Vec2::zeros(), v)?;
    let j = jac.value_at(sys, t)?;
    let dir = |s: f64| xi * s.cos() + v * s.sin();
    let plus = crate::flow::magnetic_exp(sys, x, dir(h), t, ctrl)?;
    let minus = crate::flow::magnetic_exp(sys, x, dir(-h), t, ctrl)?;
    let fd = (plus - minus) / (2.0 * h);
    let end_jet = sys.chart().metric_jet(j.base.position)?;
    let scale = end_jet.norm(j.j);
    let diff = end_jet.norm(fd - j.j);
    if scale == 0.0 {
        Ok(diff)
    } else {
        Ok(diff / scale)
    }
}

/// First zero of the perpendicular component of the Jacobi field vanishing at
/// the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugatePoint {
    pub time: f64,
    pub position: Vec2,
    /// Always 1 on a surface.
    pub multiplicity: u32,
    /// Tangential zero: `|f₂|` fell below threshold without changing sign.
    pub marginal: bool,
}

const CONJUGATE_TIME_TOL: f64 = 1e-9;
const MARGINAL_THRESHOLD: f64 = 1e-12;

/// First conjugate point along the geodesic from `(x, ξ)` in `(0, tmax]`.
pub fn first_conjugate(sys: &MagneticSystem, x: Vec2, xi: Vec2, tmax: f64, ctrl: &StepControl) -> Result<Option<ConjugatePoint>> {
    if !(tmax.is_finite() && tmax > 0.0) {
        return Err(Error::invalid("tmax", format!("must be positive, got {tmax}")));
    }
    let start = PhasePoint::new(x, xi);
    let traj = integrate(sys, start, tmax, ctrl)?;
    first_conjugate_along(sys, &traj)
}

/// As [`first_conjugate`], along an existing trajectory.
pub fn first_conjugate_along(sys: &MagneticSystem, traj: &Trajectory) -> Result<Option<ConjugatePoint>> {
    let start = traj.start();
    let jet = sys.chart().metric_jet(start.position)?;
    let e2 = rot90(&jet, start.velocity);
    let f = initial_components(sys, &start, Vec2::zeros(), e2)?;
    let s = start.to_array();
    let mut y = [s[0], s[1], s[2], s[3], f[0], f[1], f[2], f[3]];
    let mut t = 0.0;
    // previous two samples for tangential-zero detection
    let mut hist: Vec<(f64, [f64; 8])> = Vec::with_capacity(3);
    for (h, sample) in traj.steps().zip(traj.samples().iter().skip(1)) {
        let next = jacobi_step(sys, &y, h)?;
        let (u0, u1) = (y[5], next[5]);
        if t > 0.0 && u0 != 0.0 && u0 * u1 <= 0.0 {
            let root = bisect_zero(sys, &y, t, sample.t)?;
            return Ok(Some(root));
        }
        if u1.abs() < MARGINAL_THRESHOLD && t > 0.0 {
            return Ok(Some(ConjugatePoint {
                time: sample.t,
                position: Vec2::new(next[0], next[1]),
                multiplicity: 1,
                marginal: u0 * u1 > 0.0,
            }));
        }
        hist.push((t, y));
        if hist.len() > 2 {
            hist.remove(0);
        }
        if hist.len() == 2 && hist[0].0 > 0.0 {
            let (ua, ub) = (hist[0].1[5].abs(), hist[1].1[5].abs());
            if ub < ua && ub < u1.abs() {
                if let Some(c) = tangential_zero(sys, &hist[0].1, hist[0].0, sample.t)? {
                    return Ok(Some(c));
                }
            }
        }
        y = next;
        t = sample.t;
    }
    Ok(None)
}

fn bisect_zero(sys: &MagneticSystem, y0: &[f64; 8], t0: f64, t1: f64) -> Result<ConjugatePoint> {
    let sign0 = y0[5].signum();
    let (mut lo, mut hi) = (0.0, t1 - t0);
    while hi - lo > 0.25 * CONJUGATE_TIME_TOL {
        let mid = 0.5 * (lo + hi);
        let y = jacobi_step(sys, y0, mid)?;
        if y[5] * sign0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dt = 0.5 * (lo + hi);
    let y = jacobi_step(sys, y0, dt)?;
    Ok(ConjugatePoint {
        time: t0 + dt,
        position: Vec2::new(y[0], y[1]),
        multiplicity: 1,
        marginal: false,
    })
}

/// Golden-section minimization of `|f₂|` on `[t0, t1]` starting from `y0` at `t0`.
fn tangential_zero(sys: &MagneticSystem, y0: &[f64; 8], t0: f64, t1: f64) -> Result<Option<ConjugatePoint>> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |dt: f64| -> Result<f64> { Ok(jacobi_step(sys, y0, dt)?[5].abs()) };
    let (mut a, mut b) = (0.0, t1 - t0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > CONJUGATE_TIME_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let dt = 0.5 * (a + b);
    let y = jacobi_step(sys, y0, dt)?;
    if y[5].abs() < MARGINAL_THRESHOLD {
        Ok(Some(ConjugatePoint {
            time: t0 + dt,
            position: Vec2::new(y[0], y[1]),
            multiplicity: 1,
            marginal: true,
        }))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartMetric;
    use std::f64::consts::PI;

    fn flat(b: f64) -> MagneticSystem {
        MagneticSystem::constant(ChartMetric::euclidean(), b)
    }

    fn east() -> PhasePoint {
        PhasePoint::new(Vec2::zeros(), Vec2::new(1.0, 0.0))
    }

    #[test]
    fn coefficient_system_matches_general_form() {
        let sys = MagneticSystem::expression(ChartMetric::spherical(1.0).unwrap(), "1 + 0.3*x - 0.2*y*y").unwrap();
        let state = PhasePoint::from_angle(sys.chart(), Vec2::new(0.2, -0.1), 0.4).unwrap();
        let c = frame_coefficients(&sys, &state).unwrap();
        let s = state.to_array();
        let y = [s[0], s[1], s[2], s[3], 0.3, -0.7, 1.1, 0.4];
        let d = jacobi_rhs(&sys, &y).unwrap();
        for j in 0..2 {
            let mut expect = 0.0;
            for i in 0..2 {
                expect -= y[6 + i] * c.y[i][j] + y[4 + i] * c.a[i][j];
            }
            assert!((d[6 + j] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn velocity_is_a_jacobi_field() {
        let sys = MagneticSystem::expression(ChartMetric::hyperbolic(-1.0).unwrap(), "0.5 + x").unwrap();
        let start = PhasePoint::from_angle(sys.chart(), Vec2::new(0.1, 0.2), 1.0).unwrap();
        let traj = integrate(&sys, start, 2.0, &StepControl::default()).unwrap();
        let y0 = sys.lorentz(start.position, start.velocity).unwrap();
        let jac = propagate_jacobi(&sys, &traj, start.velocity, y0).unwrap();
        for s in jac.samples() {
            let v = jac.value_at(&sys, s.t).unwrap();
            assert!((v.j - s.base.velocity).norm() < 1e-8);
        }
    }

    #[test]
    fn flat_unit_field_perpendicular_component_is_sine() {
        let sys = flat(1.0);
        let traj = integrate(&sys, east(), 6.0, &StepControl::default()).unwrap();
        let jac = propagate_jacobi(&sys, &traj, Vec2::zeros(), Vec2::new(0.0, 1.0)).unwrap();
        for s in jac.samples().iter().step_by(97) {
            assert!((s.f[1].abs() - s.t.sin().abs()).abs() < 1e-6);
        }
    }

    #[test]
    fn flat_straight_line_field() {
        let sys = flat(0.0);
        let traj = integrate(&sys, east(), 3.0, &StepControl::default()).unwrap();
        let jac = propagate_jacobi(&sys, &traj, Vec2::zeros(), Vec2::new(0.0, 1.0)).unwrap();
        for t in [0.5, 1.234, 3.0] {
            let v = jac.value_at(&sys, t).unwrap();
            assert!((v.j - Vec2::new(0.0, t)).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_perpendicular_derivative() {
        let sys = flat(1.0);
        let traj = integrate(&sys, east(), 1.0, &StepControl::default()).unwrap();
        let err = propagate_jacobi(&sys, &traj, Vec2::zeros(), Vec2::new(0.5, 1.0)).unwrap_err();
        assert!(err.to_string().contains("5e-1"), "{err}");
    }

    #[test]
    fn conjugate_anchors() {
        let ctrl = StepControl::default();
        let c = first_conjugate(&flat(1.0), Vec2::zeros(), Vec2::new(1.0, 0.0), 5.0, &ctrl).unwrap().unwrap();
        assert!((c.time - PI).abs() < 1e-6, "{}", c.time);
        assert_eq!(c.multiplicity, 1);
        assert!(!c.marginal);
        assert!(first_conjugate(&flat(0.0), Vec2::zeros(), Vec2::new(1.0, 0.0), 10.0, &ctrl).unwrap().is_none());
        let short = first_conjugate(&flat(1.0), Vec2::zeros(), Vec2::new(1.0, 0.0), 3.0, &ctrl).unwrap();
        assert!(short.is_none());
    }

    #[test]
    fn pairing_requires_same_trajectory() {
        let sys = flat(1.0);
        let a = integrate(&sys, east(), 1.0, &StepControl::default()).unwrap();
        let b = integrate(&sys, east(), 1.5, &StepControl::default()).unwrap();
        let ja = propagate_jacobi(&sys, &a, Vec2::zeros(), Vec2::new(0.0, 1.0)).unwrap();
        let jb = propagate_jacobi(&sys, &b, Vec2::zeros(), Vec2::new(0.0, 1.0)).unwrap();
        assert!(matches!(symplectic_pairing(&ja, &jb, &sys, &a, 0.5), Err(Error::Contract { .. })));
    }

    #[test]
    fn variational_consistency_at_zero_time() {
        let sys = flat(1.0);
        let e = variational_consistency(&sys, Vec2::zeros(), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), 0.0, 1e-4, &StepControl::default());
        assert_eq!(e.unwrap(), 0.0);
    }
}
