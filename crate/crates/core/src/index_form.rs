//! The index form along a magnetic geodesic.
//!
//! For a perpendicular field `Z = u e₂` the integrand reduces to
//! `u'² − q u²` with `q = K + b² − db(e₂)`, whose Euler–Lagrange equation is
//! the perpendicular Jacobi equation `u'' + q u = 0`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{integrate, StepControl, Trajectory};
use crate::geometry::rot90;
use crate::jacobi::{first_conjugate_along, propagate_jacobi, JacobiState};
use crate::magnetic::MagneticSystem;
use crate::quadrature::GaussRule;
use crate::Vec2;

/// Widest quadrature panel used by the composite rules.
const PANEL: f64 = 0.05;
const GAUSS_POINTS: usize = 8;

pub type Profile = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Coefficient `u` of `Z = u e₂` on one interval, evaluated at global time.
#[derive(Clone)]
pub enum Coefficient {
    Zero,
    /// `u(t) = start_value + slope · (t − tᵢ)` on `[tᵢ, tᵢ₊₁]`.
    Affine { start_value: f64, slope: f64 },
    /// Returns `(u(t), u'(t))`.
    Smooth(Profile),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Zero => write!(f, "Zero"),
            Coefficient::Affine { start_value, slope } => {
                write!(f, "Affine {{ start_value: {start_value}, slope: {slope} }}")
            }
            Coefficient::Smooth(_) => write!(f, "Smooth(..)"),
        }
    }
}

/// Piecewise smooth perpendicular field `Z = u(t) e₂(t)` along a geodesic.
#[derive(Debug, Clone)]
pub struct FieldOnGeodesic {
    breakpoints: Vec<f64>,
    pieces: Vec<Coefficient>,
    vanishes_at_start: bool,
    vanishes_at_end: bool,
}

impl FieldOnGeodesic {
    /// Pieces on `[tᵢ, tᵢ₊₁]`; `breakpoints` must start at 0 and increase.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Coefficient>) -> Result<Self> {
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::contract(
                "field_on_geodesic",
                format!("{} breakpoints for {} pieces", breakpoints.len(), pieces.len()),
            ));
        }
        if breakpoints[0] != 0.0 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::contract(
                "field_on_geodesic",
                "breakpoints must start at 0 and be strictly increasing",
            ));
        }
        let mut z = FieldOnGeodesic {
            breakpoints,
            pieces,
            vanishes_at_start: false,
            vanishes_at_end: false,
        };
        z.vanishes_at_start = z.eval(0.0).0 == 0.0;
        z.vanishes_at_end = z.eval(z.end()).0 == 0.0;
        Ok(z)
    }

    /// One smooth piece on `[0, duration]`.
    pub fn smooth(duration: f64, profile: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Result<Self> {
        Self::new(vec![0.0, duration], vec![Coefficient::Smooth(Arc::new(profile))])
    }

    pub fn zero(duration: f64) -> Result<Self> {
        Self::new(vec![0.0, duration], vec![Coefficient::Zero])
    }

    /// Continuous piecewise-linear field through `(tᵢ, uᵢ)`.
    pub fn piecewise_linear(knots: &[(f64, f64)]) -> Result<Self> {
        let breakpoints = knots.iter().map(|k| k.0).collect();
        let pieces = knots
            .windows(2)
            .map(|w| Coefficient::Affine {
                start_value: w[0].1,
                slope: (w[1].1 - w[0].1) / (w[1].0 - w[0].0),
            })
            .collect();
        Self::new(breakpoints, pieces)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Coefficient] {
        &self.pieces
    }

    pub fn vanishes_at_start(&self) -> bool {
        self.vanishes_at_start
    }

    pub fn vanishes_at_end(&self) -> bool {
        self.vanishes_at_end
    }

    pub fn end(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    fn piece_eval(&self, i: usize, t: f64) -> (f64, f64) {
        match &self.pieces[i] {
            Coefficient::Zero => (0.0, 0.0),
            Coefficient::Affine { start_value, slope } => (start_value + slope * (t - self.breakpoints[i]), *slope),
            Coefficient::Smooth(f) => f(t),
        }
    }

    fn piece_index(&self, t: f64) -> usize {
        let n = self.pieces.len();
        (0..n).find(|&i| t < self.breakpoints[i + 1]).unwrap_or(n - 1)
    }

    /// `(u, u')` at `t`, right-continuous at interior breakpoints.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        self.piece_eval(self.piece_index(t), t)
    }

    /// Add a smooth profile to every piece.
    pub fn plus(&self, extra: Profile) -> FieldOnGeodesic {
        let pieces = (0..self.pieces.len())
            .map(|i| {
                let base = self.clone();
                let extra = extra.clone();
                Coefficient::Smooth(Arc::new(move |t| {
                    let (u, du) = base.piece_eval(i, t);
                    let (v, dv) = extra(t);
                    (u + v, du + dv)
                }))
            })
            .collect();
        FieldOnGeodesic::new(self.breakpoints.clone(), pieces).expect("breakpoints already validated")
    }

    /// Scale the field by `c`.
    pub fn scaled(&self, c: f64) -> FieldOnGeodesic {
        let pieces = (0..self.pieces.len())
            .map(|i| {
                let base = self.clone();
                Coefficient::Smooth(Arc::new(move |t| {
                    let (u, du) = base.piece_eval(i, t);
                    (c * u, c * du)
                }))
            })
            .collect();
        FieldOnGeodesic::new(self.breakpoints.clone(), pieces).expect("breakpoints already validated")
    }

    /// The same geometric field seen along the reversed geodesic
    /// `γ̃(s) = γ(T − s)` of the reversed system, whose frame has
    /// `ẽ₂ = −e₂`: coefficient `w(s) = −u(T − s)`.
    pub fn reflected(&self) -> FieldOnGeodesic {
        let total = self.end();
        let n = self.pieces.len();
        let breakpoints = self.breakpoints.iter().rev().map(|b| total - b).collect::<Vec<_>>();
        let pieces = (0..n)
            .map(|j| {
                let i = n - 1 - j;
                let base = self.clone();
                Coefficient::Smooth(Arc::new(move |s| {
                    let (u, du) = base.piece_eval(i, total - s);
                    (-u, du)
                }))
            })
            .collect();
        let mut breakpoints = breakpoints;
        breakpoints[0] = 0.0;
        FieldOnGeodesic::new(breakpoints, pieces).expect("reflection of a valid field")
    }
}

/// `q(t) = K + b² − db(e₂)` at `γ(t)`.
pub fn potential(sys: &MagneticSystem, traj: &Trajectory, t: f64) -> Result<f64> {
    let state = traj.state_at(t);
    let jet = sys.chart().metric_jet(state.position)?;
    let field = sys.field_jet_unchecked(state.position);
    let e2 = rot90(&jet, state.velocity);
    Ok(jet.gauss_curvature() + field.value * field.value - field.grad.dot(&e2))
}

fn check_span(z_end: f64, traj: &Trajectory) -> Result<()> {
    let d = traj.duration();
    if (z_end - d).abs() > 1e-12 * d.max(1.0) {
        return Err(Error::contract(
            "index_evaluate",
            format!("field is defined on [0, {z_end}] but the trajectory has duration {d}"),
        ));
    }
    Ok(())
}

/// `Ind_γ(Z)` for a perpendicular field.
pub fn index_evaluate(sys: &MagneticSystem, traj: &Trajectory, z: &FieldOnGeodesic) -> Result<f64> {
    index_evaluate_with(sys, traj, z, GAUSS_POINTS)
}

/// As [`index_evaluate`] with an explicit number of Gauss points per panel.
pub fn index_evaluate_with(sys: &MagneticSystem, traj: &Trajectory, z: &FieldOnGeodesic, points: usize) -> Result<f64> {
    check_span(z.end(), traj)?;
    let rule = GaussRule::new(points);
    let mut total = 0.0;
    for (i, w) in z.breakpoints.windows(2).enumerate() {
        if matches!(z.pieces[i], Coefficient::Zero) {
            continue;
        }
        let panels = (((w[1] - w[0]) / PANEL).ceil() as usize).max(1);
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let lo = w[0] + k as f64 * h;
            let hi = if k + 1 == panels { w[1] } else { lo + h };
            for (t, wt) in rule.on(lo, hi) {
                let (u, du) = z.piece_eval(i, t);
                total += wt * (du * du - potential(sys, traj, t)? * u * u);
            }
        }
    }
    Ok(total)
}

/// A general field `Z = z₁e₁ + z₂e₂` given by frame components and their
/// derivatives.
#[derive(Clone)]
pub struct FramedField {
    pub duration: f64,
    pub components: Arc<dyn Fn(f64) -> ([f64; 2], [f64; 2]) + Send + Sync>,
}

/// Index form on a field that need not be perpendicular to `γ'`.
///
/// Integrand `|Z'|² − ⟨C(Z), Z⟩ − ⟨Y(γ'), Z⟩²` with
/// `C(Z) = R(γ', Z)γ' − Y(Z') − (∇_Z Y)(γ')`.
pub fn index_evaluate_framed(sys: &MagneticSystem, traj: &Trajectory, z: &FramedField) -> Result<f64> {
    check_span(z.duration, traj)?;
    let rule = GaussRule::new(GAUSS_POINTS);
    let panels = ((z.duration / PANEL).ceil() as usize).max(1);
    let h = z.duration / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = k as f64 * h;
        let hi = if k + 1 == panels { z.duration } else { lo + h };
        for (t, wt) in rule.on(lo, hi) {
            let state = traj.state_at(t);
            let jet = sys.chart().metric_jet(state.position)?;
            let field = sys.field_jet_unchecked(state.position);
            let kk = jet.gauss_curvature();
            let b = field.value;
            let b1 = field.grad.dot(&state.velocity);
            let b2 = field.grad.dot(&rot90(&jet, state.velocity));
            let (c, dc) = (z.components)(t);
            let p = dc[0] - b * c[1];
            let q = dc[1] + b * c[0];
            let cz = kk * c[1] * c[1] + b * q * c[0] - b * p * c[1] - (c[0] * b1 + c[1] * b2) * c[1];
            total += wt * (p * p + q * q - cz - b * b * c[1] * c[1]);
        }
    }
    Ok(total)
}

/// Tridiagonal matrix of the index form on the hat-function basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramMatrix {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl GramMatrix {
    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diagonal.len() {
            let coupling = if i == 0 { 0.0 } else { self.off_diagonal[i - 1].powi(2) / q };
            q = self.diagonal[i] - x - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (self.diagonal[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diagonal.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off_diagonal[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off_diagonal[i].abs();
            }
            lo = lo.min(self.diagonal[i] - r);
            hi = hi.max(self.diagonal[i] + r);
        }
        (lo, hi)
    }

    /// Smallest eigenvalue by bisection on the Sturm count.
    pub fn smallest_eigenvalue(&self) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Assemble the index form on the `n − 1` interior hat functions of a
/// uniform partition of `[0, T]`.
pub fn gram_matrix(sys: &MagneticSystem, traj: &Trajectory, n: usize) -> Result<GramMatrix> {
    if n < 4 {
        return Err(Error::invalid("n", format!("need at least 4 segments, got {n}")));
    }
    let total = traj.duration();
    let h = total / n as f64;
    let rule = GaussRule::new(GAUSS_POINTS);
    // per segment: [left-left, left-right, right-right] contributions
    let local: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|k| -> Result<[f64; 3]> {
            let a = k as f64 * h;
            let b = if k + 1 == n { total } else { a + h };
            let panels = (((b - a) / PANEL).ceil() as usize).max(1);
            let ph = (b - a) / panels as f64;
            let mut m = [0.0; 3];
            for p in 0..panels {
                let lo = a + p as f64 * ph;
                let hi = if p + 1 == panels { b } else { lo + ph };
                for (t, w) in rule.on(lo, hi) {
                    let q = potential(sys, traj, t)?;
                    let s = (t - a) / (b - a);
                    let (l, r) = (1.0 - s, s);
                    let d = 1.0 / (b - a);
                    m[0] += w * (d * d - q * l * l);
                    m[1] += w * (-d * d - q * l * r);
                    m[2] += w * (d * d - q * r * r);
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let dim = n - 1;
    let mut diagonal = vec![0.0; dim];
    let mut off_diagonal = vec![0.0; dim.saturating_sub(1)];
    for (k, m) in local.iter().enumerate() {
        // segment k couples hats k (left end) and k+1 (right end); hat i has index i-1
        if k >= 1 {
            diagonal[k - 1] += m[0];
        }
        if k + 1 <= dim {
            diagonal[k] += m[2];
        }
        if k >= 1 && k < dim {
            off_diagonal[k - 1] += m[1];
        }
    }
    Ok(GramMatrix { diagonal, off_diagonal })
}

/// Sign summary of the discretized index form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramSpectrum {
    pub dimension: usize,
    pub smallest: f64,
    pub negative_count: usize,
    pub kernel_tolerance: f64,
    pub kernel_detected: bool,
}

impl GramSpectrum {
    pub fn positive_definite(&self) -> bool {
        self.smallest > self.kernel_tolerance
    }
}

pub const DEFAULT_KERNEL_CONSTANT: f64 = 10.0;

pub fn index_gram(sys: &MagneticSystem, traj: &Trajectory, n: usize) -> Result<GramSpectrum> {
    index_gram_with(sys, traj, n, DEFAULT_KERNEL_CONSTANT)
}

/// As [`index_gram`] with kernel tolerance `c / n²`.
pub fn index_gram_with(sys: &MagneticSystem, traj: &Trajectory, n: usize, c: f64) -> Result<GramSpectrum> {
    let m = gram_matrix(sys, traj, n)?;
    let smallest = m.smallest_eigenvalue();
    let kernel_tolerance = c / (n as f64 * n as f64);
    Ok(GramSpectrum {
        dimension: m.dimension(),
        smallest,
        negative_count: m.count_below(0.0),
        kernel_tolerance,
        kernel_detected: smallest.abs() <= kernel_tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub duration: f64,
    pub spectrum: GramSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// First parameter where the smallest eigenvalue reaches zero, linearly
    /// interpolated between grid values.
    pub first_crossing: Option<f64>,
}

/// Gram spectrum along a family of trajectories `γ_s`, each discretized with
/// `n` segments on its own `[0, T_s]`.
pub fn gram_sweep(
    sys: &MagneticSystem,
    params: &[f64],
    n: usize,
    family: impl Fn(f64) -> Result<Trajectory> + Sync,
) -> Result<SweepReport> {
    let rows = params
        .par_iter()
        .map(|&s| {
            let traj = family(s)?;
            Ok(SweepRow {
                s,
                duration: traj.duration(),
                spectrum: index_gram(sys, &traj, n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut first_crossing = None;
    for (i, row) in rows.iter().enumerate() {
        if row.spectrum.smallest <= 0.0 {
            first_crossing = Some(if i == 0 {
                row.s
            } else {
                let prev = &rows[i - 1];
                let (a, b) = (prev.spectrum.smallest, row.spectrum.smallest);
                prev.s + (row.s - prev.s) * a / (a - b)
            });
            break;
        }
    }
    Ok(SweepReport { rows, first_crossing })
}

fn perpendicular_profile(jac: Arc<JacobiState>, scale: f64) -> Profile {
    Arc::new(move |t| {
        let (f, df) = jac.components_at(t);
        (scale * f[1], scale * df[1])
    })
}

/// Perpendicular component of the Jacobi field with `J(0) = 0`, `J'(0) = e₂`.
pub fn vanishing_jacobi(sys: &MagneticSystem, traj: &Trajectory) -> Result<Arc<JacobiState>> {
    let start = traj.start();
    let jet = sys.chart().metric_jet(start.position)?;
    Ok(Arc::new(propagate_jacobi(sys, traj, Vec2::zeros(), rot90(&jet, start.velocity))?))
}

fn validate_corner(traj: &Trajectory, t0: f64) -> Result<()> {
    let total = traj.duration();
    if !(t0 > 0.0 && t0 < total) {
        return Err(Error::contract(
            "cut_corner",
            format!("no conjugate point strictly inside (0, {total}); got t0 = {t0}"),
        ));
    }
    Ok(())
}

/// `J⊥` of the vanishing Jacobi field on `[0, t₀]`, zero on `[t₀, T]`.
pub fn corner_field(sys: &MagneticSystem, traj: &Trajectory, t0: f64) -> Result<FieldOnGeodesic> {
    validate_corner(traj, t0)?;
    let jac = vanishing_jacobi(sys, traj)?;
    FieldOnGeodesic::new(
        vec![0.0, t0, traj.duration()],
        vec![Coefficient::Smooth(perpendicular_profile(jac, 1.0)), Coefficient::Zero],
    )
}

/// The corner field with the window `[t₀ − ε, t₀ + ε]` replaced by the
/// Jacobi bridge matching both ends; its index is negative.
pub fn cut_corner(sys: &MagneticSystem, traj: &Trajectory, t0: f64, eps: f64, ctrl: &StepControl) -> Result<FieldOnGeodesic> {
    validate_corner(traj, t0)?;
    let total = traj.duration();
    if !(eps > 0.0 && eps < t0.min(total - t0)) {
        return Err(Error::contract(
            "cut_corner",
            format!("need 0 < eps < min(t0, T - t0) = {}, got {eps}", t0.min(total - t0)),
        ));
    }
    let jac = vanishing_jacobi(sys, traj)?;
    let a = t0 - eps;
    let (u_a, _) = {
        let (f, df) = jac.components_at(a);
        (f[1], df[1])
    };
    // fundamental solutions of u'' + q u = 0 from t0 - eps
    let start = traj.refined_state_at(sys, a)?;
    let sub = integrate(sys, start, 2.0 * eps, ctrl)?;
    let jet = sys.chart().metric_jet(start.position)?;
    let e2 = rot90(&jet, start.velocity);
    let ya = Arc::new(propagate_jacobi(sys, &sub, e2, Vec2::zeros())?);
    let yb = Arc::new(propagate_jacobi(sys, &sub, Vec2::zeros(), e2)?);
    let (fa, _) = ya.components_at(2.0 * eps);
    let (fb, _) = yb.components_at(2.0 * eps);
    if fb[1].abs() < 1e-12 {
        return Err(Error::contract(
            "cut_corner",
            "the bridge window itself contains a conjugate pair; reduce eps",
        ));
    }
    let cb = -fa[1] / fb[1];
    let bridge: Profile = Arc::new(move |t| {
        let s = t - a;
        let (f, df) = ya.components_at(s);
        let (g, dg) = yb.components_at(s);
        (u_a * (f[1] + cb * g[1]), u_a * (df[1] + cb * dg[1]))
    });
    FieldOnGeodesic::new(
        vec![0.0, a, t0 + eps, total],
        vec![
            Coefficient::Smooth(perpendicular_profile(jac, 1.0)),
            Coefficient::Smooth(bridge),
            Coefficient::Zero,
        ],
    )
}

/// Outcome of sampling the Index Lemma and its reversed variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexLemmaReport {
    pub trials: usize,
    pub jacobi_index: f64,
    pub field_index: f64,
    /// L² distance between `Z` and `J⊥`.
    pub distance: f64,
    /// Equality of indices happens only together with field equality.
    pub equality_consistent: bool,
    /// `min (Ind(Z) − Ind(J⊥))` over the base field and all trials.
    pub min_margin: f64,
    pub violations: usize,
    pub reversed_min_margin: f64,
    pub reversed_violations: usize,
    /// `max |Ind_γ(Z) − Ind_γ̃(Z̃)|` over all evaluated fields.
    pub reversal_error: f64,
}

const VIOLATION_TOL: f64 = 1e-9;
const MODES: usize = 5;

fn l2_distance(a: &FieldOnGeodesic, b: &FieldOnGeodesic) -> f64 {
    let rule = GaussRule::new(GAUSS_POINTS);
    rule.composite(0.0, a.end(), PANEL, |t| (a.eval(t).0 - b.eval(t).0).powi(2)).sqrt()
}

fn random_modes(rng: &mut ChaCha8Rng, total: f64) -> Profile {
    let amps: Vec<f64> = (1..=MODES).map(|k| rng.random_range(-0.3..0.3) / k as f64).collect();
    Arc::new(move |t| {
        let mut u = 0.0;
        let mut du = 0.0;
        for (k, a) in amps.iter().enumerate() {
            let w = (k + 1) as f64 * std::f64::consts::PI / total;
            u += a * (w * t).sin();
            du += a * w * (w * t).cos();
        }
        (u, du)
    })
}

/// Check `Ind(J⊥) ≤ Ind(Z)` for `Z` and random perturbations with matched
/// endpoints, and the reversed-endpoint variant through `reverse(sys)`.
pub fn index_lemma_check(
    sys: &MagneticSystem,
    traj: &Trajectory,
    z: &FieldOnGeodesic,
    trials: usize,
    seed: u64,
    ctrl: &StepControl,
) -> Result<IndexLemmaReport> {
    check_span(z.end(), traj)?;
    if let Some(c) = first_conjugate_along(sys, traj)? {
        return Err(Error::contract(
            "index_lemma_check",
            format!("trajectory has a conjugate point at t = {}", c.time),
        ));
    }
    if !z.vanishes_at_start() {
        return Err(Error::contract("index_lemma_check", "the field must vanish at t = 0"));
    }
    let total = traj.duration();
    let jac = vanishing_jacobi(sys, traj)?;
    let end_value = jac.components_at(total).0[1];
    let jperp = FieldOnGeodesic::smooth(total, {
        let p = perpendicular_profile(jac.clone(), z.eval(total).0 / end_value);
        move |t| p(t)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jacobi_index = index_evaluate(sys, traj, &jperp)?;
    let field_index = index_evaluate(sys, traj, z)?;
    let distance = l2_distance(z, &jperp);
    let equality_consistent = (field_index - jacobi_index).abs() > 1e-8 || distance < 1e-6;

    let fields: Vec<FieldOnGeodesic> = std::iter::once(z.clone())
        .chain((0..trials).map(|_| z.plus(random_modes(&mut rng, total))))
        .collect();
    let margins = fields
        .par_iter()
        .map(|f| Ok(index_evaluate(sys, traj, f)? - jacobi_index))
        .collect::<Result<Vec<f64>>>()?;

    // reversed variant: fields vanishing at T with prescribed value at 0,
    // evaluated along the reversed geodesic of the reversed system
    let rsys = sys.reverse();
    let rtraj = integrate(&rsys, traj.end().flipped(), total, ctrl)?;
    if let Some(c) = first_conjugate_along(&rsys, &rtraj)? {
        return Err(Error::contract(
            "index_lemma_check",
            format!("reversed trajectory has a conjugate point at s = {}", c.time),
        ));
    }
    let mirrored: Vec<FieldOnGeodesic> = fields.iter().map(mirror_in_time).collect::<Result<_>>()?;
    let rjac = vanishing_jacobi(&rsys, &rtraj)?;
    let rend = rjac.components_at(total).0[1];
    let target = mirrored[0].reflected().eval(total).0;
    let rjperp = FieldOnGeodesic::smooth(total, {
        let p = perpendicular_profile(rjac, target / rend);
        move |t| p(t)
    })?;
    let rjacobi_index = index_evaluate(&rsys, &rtraj, &rjperp)?;
    let rows = mirrored
        .par_iter()
        .map(|m| {
            let forward = index_evaluate(sys, traj, m)?;
            let backward = index_evaluate(&rsys, &rtraj, &m.reflected())?;
            Ok((backward - rjacobi_index, (forward - backward).abs()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let mut reversal_error = (index_evaluate(sys, traj, &jperp)?
        - index_evaluate(&rsys, &rtraj, &jperp.reflected())?)
    .abs();
    reversal_error = rows.iter().map(|r| r.1).fold(reversal_error, f64::max);

    Ok(IndexLemmaReport {
        trials,
        jacobi_index,
        field_index,
        distance,
        equality_consistent,
        min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        violations: margins.iter().filter(|m| **m < -VIOLATION_TOL).count(),
        reversed_min_margin: rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        reversed_violations: rows.iter().filter(|r| r.0 < -VIOLATION_TOL).count(),
        reversal_error,
    })
}

/// `t ↦ u(T − t)`: turns a field vanishing at 0 into one vanishing at `T`.
fn mirror_in_time(z: &FieldOnGeodesic) -> Result<FieldOnGeodesic> {
    let total = z.end();
    let base = z.clone();
    FieldOnGeodesic::smooth(total, move |t| {
        let (u, du) = base.eval(total - t);
        (u, -du)
    })
}
