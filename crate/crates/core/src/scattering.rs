//! Exit events, the scattering relation and boundary-data verdicts.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{convexity_margin, BoundaryWitness, ConvexityReport, DomainSpec};
use crate::error::{Error, Result};
use crate::flow::{advance, PhasePoint, StepControl, Stepper};
use crate::geometry::rot90;
use crate::magnetic::MagneticSystem;
use crate::Vec2;

/// Margins at or below this value count as not strictly convex.
pub const CONVEXITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterSettings {
    /// Entries with `⟨ν, ξ⟩` below this are candidates for grazing.
    pub graze: f64,
    /// Time tolerance of the exit bisection.
    pub time_tol: f64,
    /// Allowed distance of an entry point from the boundary; also the
    /// outside threshold that confirms a crossing.
    pub boundary_tol: f64,
    /// Trapping cutoff; `None` selects [`default_tmax`].
    pub tmax: Option<f64>,
    pub step: StepControl,
}

impl Default for ScatterSettings {
    fn default() -> Self {
        ScatterSettings {
            graze: 1e-6,
            time_tol: 1e-10,
            boundary_tol: 1e-9,
            tmax: None,
            step: StepControl::default(),
        }
    }
}

/// `50 · (L/2 + 2π / max|b|)`, dropping the orbit term when `b` vanishes on
/// the boundary samples and no global bound is known.
pub fn default_tmax(sys: &MagneticSystem, dom: &DomainSpec) -> Result<f64> {
    let b_max = match sys.field_bound() {
        Some(b) => b,
        None => {
            let mut m: f64 = 0.0;
            for i in 0..64 {
                let f = dom.frame_at_arclength(dom.length() * i as f64 / 64.0)?;
                m = m.max(sys.field_strength(f.position)?.abs());
            }
            m
        }
    };
    let orbit = if b_max > 1e-12 { TAU / b_max } else { 0.0 };
    Ok(50.0 * (dom.diameter_estimate() + orbit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Exited,
    Grazing,
    Trapped { tmax: f64 },
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Exited => "exited",
            Status::Grazing => "grazing",
            Status::Trapped { .. } => "trapped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitEvent {
    pub travel_time: f64,
    pub exit: PhasePoint,
    pub status: Status,
}

/// `⟨ν, ξ⟩` at the boundary point nearest to `state.position`.
pub fn normal_component(sys: &MagneticSystem, dom: &DomainSpec, state: &PhasePoint) -> Result<f64> {
    let frame = dom.frame_near(state.position)?;
    let jet = sys.chart().metric_jet(state.position)?;
    Ok(jet.inner(frame.normal, state.velocity))
}

/// Time until the orbit from an inward boundary phase point leaves the domain.
pub fn exit_event(sys: &MagneticSystem, dom: &DomainSpec, entry: &PhasePoint, settings: &ScatterSettings) -> Result<ExitEvent> {
    let d = dom.signed_distance(entry.position);
    if d.abs() > settings.boundary_tol {
        return Err(Error::contract(
            "exit_event",
            format!("entry point is at distance {d:e} from the boundary (tolerance {:e})", settings.boundary_tol),
        ));
    }
    let n = normal_component(sys, dom, entry)?;
    if n < -settings.graze {
        return Err(Error::contract(
            "exit_event",
            format!("entry direction points outward: <nu, xi> = {n:e}"),
        ));
    }
    let tmax = match settings.tmax {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::invalid("tmax", format!("must be positive, got {t}"))),
        None => default_tmax(sys, dom)?,
    };
    if n < settings.graze {
        let h = settings.step.resolve_step(sys, entry)?;
        let probe = advance(sys, entry, h)?;
        if dom.signed_distance(probe.position) > 0.0 {
            return Ok(ExitEvent {
                travel_time: 0.0,
                exit: *entry,
                status: Status::Grazing,
            });
        }
    }
    first_crossing(sys, dom, entry, tmax, settings)
}

/// Integrate from `start` until the signed boundary function becomes
/// positive, then bisect the crossing.
fn first_crossing(sys: &MagneticSystem, dom: &DomainSpec, start: &PhasePoint, tmax: f64, settings: &ScatterSettings) -> Result<ExitEvent> {
    let mut stepper = Stepper::new(sys, &settings.step, *start)?;
    let mut last_inside = (0.0, *start);
    while stepper.t < tmax {
        stepper.step(Some(tmax))?;
        let f = dom.signed_distance(stepper.state.position);
        if f <= 0.0 {
            last_inside = (stepper.t, stepper.state);
        } else if f > settings.boundary_tol {
            let (t0, s0) = last_inside;
            let (mut lo, mut hi) = (0.0, stepper.t - t0);
            while hi - lo > settings.time_tol {
                let mid = 0.5 * (lo + hi);
                let s = advance(sys, &s0, mid)?;
                if dom.signed_distance(s.position) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let dt = 0.5 * (lo + hi);
            return Ok(ExitEvent {
                travel_time: t0 + dt,
                exit: advance(sys, &s0, dt)?,
                status: Status::Exited,
            });
        }
    }
    Ok(ExitEvent {
        travel_time: tmax,
        exit: stepper.state,
        status: Status::Trapped { tmax },
    })
}

/// `l⁻(x, ξ) ≤ 0`: the backward exit time, computed as the forward exit of
/// `(x, −ξ)` under the reversed system. Boundary points whose reversed
/// direction points outward give 0.
pub fn backward_exit(sys: &MagneticSystem, dom: &DomainSpec, state: &PhasePoint, settings: &ScatterSettings) -> Result<ExitEvent> {
    let rsys = sys.reverse();
    let rstate = state.flipped();
    let on_boundary = dom.signed_distance(state.position).abs() <= settings.boundary_tol;
    if on_boundary && normal_component(&rsys, dom, &rstate)? < settings.graze {
        return Ok(ExitEvent {
            travel_time: 0.0,
            exit: *state,
            status: Status::Grazing,
        });
    }
    let tmax = match settings.tmax {
        Some(t) => t,
        None => default_tmax(sys, dom)?,
    };
    let ev = first_crossing(&rsys, dom, &rstate, tmax, settings)?;
    Ok(ExitEvent {
        travel_time: -ev.travel_time,
        exit: ev.exit.flipped(),
        status: ev.status,
    })
}

/// One entry of the scattering relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringRecord {
    pub entry: PhasePoint,
    pub exit: PhasePoint,
    pub arclength_in: f64,
    /// Angle of the entry direction from the boundary tangent, in `[0, π]`.
    pub angle_in: f64,
    pub arclength_out: f64,
    /// Angle of the exit direction from the boundary tangent, in `[−π, 0]`.
    pub angle_out: f64,
    pub travel_time: f64,
    pub backward_time: f64,
    /// `⟨ν, ξ⟩` at entry.
    pub normal_in: f64,
    /// `⟨ν, ξ⟩` at exit.
    pub normal_out: f64,
    pub status: Status,
}

fn boundary_angle(sys: &MagneticSystem, dom: &DomainSpec, state: &PhasePoint) -> Result<(f64, f64, f64)> {
    let frame = dom.frame_near(state.position)?;
    let jet = sys.chart().metric_jet(state.position)?;
    let t = jet.inner(frame.tangent, state.velocity);
    let n = jet.inner(frame.normal, state.velocity);
    Ok((frame.arclength, n.atan2(t), n))
}

/// The scattering relation at one inward boundary phase point.
pub fn scattering(sys: &MagneticSystem, dom: &DomainSpec, entry: &PhasePoint, settings: &ScatterSettings) -> Result<ScatteringRecord> {
    let ev = exit_event(sys, dom, entry, settings)?;
    let back = backward_exit(sys, dom, entry, settings)?;
    let (arclength_in, angle_in, normal_in) = boundary_angle(sys, dom, entry)?;
    let (arclength_out, angle_out, normal_out) = match ev.status {
        Status::Exited | Status::Grazing => boundary_angle(sys, dom, &ev.exit)?,
        Status::Trapped { .. } => (f64::NAN, f64::NAN, f64::NAN),
    };
    Ok(ScatteringRecord {
        entry: *entry,
        exit: ev.exit,
        arclength_in,
        angle_in,
        arclength_out,
        angle_out,
        travel_time: ev.travel_time,
        backward_time: back.travel_time,
        normal_in,
        normal_out,
        status: ev.status,
    })
}

/// Entry grid: arc lengths `sᵢ = i L / n_b` and angles `θⱼ = (j + ½) π / n_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScatterGrid {
    pub n_boundary: usize,
    pub n_angle: usize,
}

impl ScatterGrid {
    pub fn new(n_boundary: usize, n_angle: usize) -> Result<Self> {
        if n_boundary == 0 || n_angle == 0 {
            return Err(Error::invalid("grid", "both grid sizes must be positive"));
        }
        Ok(ScatterGrid { n_boundary, n_angle })
    }

    pub fn len(&self) -> usize {
        self.n_boundary * self.n_angle
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn arclength(&self, dom: &DomainSpec, i: usize) -> f64 {
        i as f64 * dom.length() / self.n_boundary as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * PI / self.n_angle as f64
    }

    /// Unit inward phase point at arc length `s` with angle `θ` from the
    /// tangent.
    pub fn phase_point(sys: &MagneticSystem, dom: &DomainSpec, s: f64, theta: f64) -> Result<PhasePoint> {
        let f = dom.frame_at_arclength(s)?;
        let dir = f.tangent * theta.cos() + f.normal * theta.sin();
        PhasePoint::unit(sys.chart(), f.position, dir)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RecordOutcome {
    Record(ScatteringRecord),
    Failed { kind: &'static str, message: String },
}

impl RecordOutcome {
    pub fn record(&self) -> Option<&ScatteringRecord> {
        match self {
            RecordOutcome::Record(r) => Some(r),
            RecordOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub i: usize,
    pub j: usize,
    pub arclength_in: f64,
    pub angle_in: f64,
    pub outcome: RecordOutcome,
}

/// Scattering records over a grid, arc-length major and angle minor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringTable {
    pub grid: ScatterGrid,
    pub perimeter: f64,
    pub entries: Vec<TableEntry>,
}

impl ScatteringTable {
    pub fn records(&self) -> impl Iterator<Item = &ScatteringRecord> {
        self.entries.iter().filter_map(|e| e.outcome.record())
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome.record().is_none()).count()
    }

    /// `sup l / ⟨ν, ξ⟩` over exited records.
    pub fn exit_time_ratio_bound(&self) -> f64 {
        self.records()
            .filter(|r| r.status == Status::Exited && r.normal_in > 0.0)
            .map(|r| r.travel_time / r.normal_in)
            .fold(0.0, f64::max)
    }
}

fn outcome<T>(r: Result<T>, f: impl FnOnce(T) -> RecordOutcome) -> RecordOutcome {
    match r {
        Ok(v) => f(v),
        Err(e) => RecordOutcome::Failed {
            kind: e.kind(),
            message: e.to_string(),
        },
    }
}

pub fn scattering_table(sys: &MagneticSystem, dom: &DomainSpec, grid: ScatterGrid, settings: &ScatterSettings) -> Result<ScatteringTable> {
    let settings = ScatterSettings {
        tmax: Some(match settings.tmax {
            Some(t) => t,
            None => default_tmax(sys, dom)?,
        }),
        ..*settings
    };
    let entries = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / grid.n_angle, k % grid.n_angle);
            let s = grid.arclength(dom, i);
            let theta = grid.angle(j);
            let rec = ScatterGrid::phase_point(sys, dom, s, theta).and_then(|e| scattering(sys, dom, &e, &settings));
            TableEntry {
                i,
                j,
                arclength_in: s,
                angle_in: theta,
                outcome: outcome(rec, RecordOutcome::Record),
            }
        })
        .collect();
    Ok(ScatteringTable {
        grid,
        perimeter: dom.length(),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterComparison {
    /// Periodic boundary arc-length distance between exit points.
    pub position_sup: f64,
    /// Wrapped angle between exit directions.
    pub direction_sup: f64,
    pub time_sup: f64,
    pub status_mismatches: usize,
    pub failures: usize,
    pub compared: usize,
}

impl ScatterComparison {
    pub fn max_sup(&self) -> f64 {
        self.position_sup.max(self.direction_sup).max(self.time_sup)
    }

    /// Whether the two tables differ beyond `threshold`.
    pub fn differs(&self, threshold: f64) -> bool {
        self.max_sup() > threshold || self.status_mismatches > 0
    }
}

fn wrapped(a: f64) -> f64 {
    let d = a.rem_euclid(TAU);
    d.min(TAU - d)
}

pub fn compare_scattering(a: &ScatteringTable, b: &ScatteringTable) -> Result<ScatterComparison> {
    if a.grid != b.grid || a.entries.len() != b.entries.len() {
        return Err(Error::contract(
            "compare_scattering",
            format!("grids differ: {:?} vs {:?}", a.grid, b.grid),
        ));
    }
    let mut cmp = ScatterComparison {
        position_sup: 0.0,
        direction_sup: 0.0,
        time_sup: 0.0,
        status_mismatches: 0,
        failures: 0,
        compared: 0,
    };
    for (x, y) in a.entries.iter().zip(b.entries.iter()) {
        let scale = a.perimeter.max(b.perimeter).max(1.0);
        if (x.arclength_in - y.arclength_in).abs() > 1e-9 * scale || (x.angle_in - y.angle_in).abs() > 1e-12 {
            return Err(Error::contract(
                "compare_scattering",
                format!("entry ({}, {}) differs between tables", x.i, x.j),
            ));
        }
        let (r, s) = match (x.outcome.record(), y.outcome.record()) {
            (Some(r), Some(s)) => (r, s),
            _ => {
                cmp.failures += 1;
                continue;
            }
        };
        cmp.compared += 1;
        match (r.status, s.status) {
            (Status::Exited, Status::Exited) => {
                let total = 0.5 * (a.perimeter + b.perimeter);
                let d = (r.arclength_out - s.arclength_out).rem_euclid(total);
                cmp.position_sup = cmp.position_sup.max(d.min(total - d));
                cmp.direction_sup = cmp.direction_sup.max(wrapped(r.angle_out - s.angle_out));
                cmp.time_sup = cmp.time_sup.max((r.travel_time - s.travel_time).abs());
            }
            (p, q) if p.label() == q.label() => {}
            _ => cmp.status_mismatches += 1,
        }
    }
    Ok(cmp)
}

/// An entry whose exit-point curve indicates a boundary-conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugateFlag {
    pub i: usize,
    pub j: usize,
    pub arclength_in: f64,
    pub angle_in: f64,
    pub travel_time: f64,
    /// Component of `dc/dθ` along `rot90` of the exit velocity.
    pub perpendicular: f64,
    pub derivative_norm: f64,
}

/// Outcome of the scan at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub i: usize,
    pub j: usize,
    pub arclength_in: f64,
    pub angle_in: f64,
    pub travel_time: f64,
    pub perpendicular: f64,
    pub derivative_norm: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateScan {
    pub points: Vec<ScanPoint>,
    /// Entries skipped because the center or a neighbor did not exit.
    pub skipped: Vec<(usize, usize)>,
    pub failures: Vec<(usize, usize, String)>,
}

impl ConjugateScan {
    pub fn flags(&self) -> Vec<ConjugateFlag> {
        self.points
            .iter()
            .filter(|p| p.flagged)
            .map(|p| ConjugateFlag {
                i: p.i,
                j: p.j,
                arclength_in: p.arclength_in,
                angle_in: p.angle_in,
                travel_time: p.travel_time,
                perpendicular: p.perpendicular,
                derivative_norm: p.derivative_norm,
            })
            .collect()
    }
}

pub const CONJUGATE_EPS: f64 = 1e-6;

/// Differentiate the exit point `c(θ)` of the family of entries through each
/// grid point and flag entries where `dc/dθ` has non-positive component along
/// `rot90` of the exit velocity.
///
/// For the variation of entry angle, `dc/dθ = J(l) + l'(θ) γ'(l)` with `J`
/// the Jacobi field vanishing at the entry and `J'(0) = rot90(ξ)`. Its
/// perpendicular component is `f₂(l)`, positive until the first conjugate
/// point.
pub fn boundary_conjugate_scan(
    sys: &MagneticSystem,
    dom: &DomainSpec,
    grid: ScatterGrid,
    h: f64,
    settings: &ScatterSettings,
) -> Result<ConjugateScan> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", format!("must be positive, got {h}")));
    }
    if h >= 0.5 * PI / grid.n_angle as f64 {
        return Err(Error::invalid("h", "must be smaller than half the angular grid spacing"));
    }
    let conv = convexity_margin(sys, dom, grid.n_boundary.max(64))?;
    if conv.margin <= CONVEXITY_TOL {
        return Err(Error::contract(
            "boundary_conjugate_scan",
            format!("domain is not strictly magnetically convex (margin {})", conv.margin),
        ));
    }
    let settings = ScatterSettings {
        tmax: Some(match settings.tmax {
            Some(t) => t,
            None => default_tmax(sys, dom)?,
        }),
        ..*settings
    };
    enum Item {
        Point(ScanPoint),
        Skipped,
        Failed(String),
    }
    let items: Vec<(usize, usize, Item)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / grid.n_angle, k % grid.n_angle);
            let s = grid.arclength(dom, i);
            let theta = grid.angle(j);
            let run = || -> Result<Option<ScanPoint>> {
                let exit = |th: f64| -> Result<ExitEvent> {
                    let e = ScatterGrid::phase_point(sys, dom, s, th)?;
                    exit_event(sys, dom, &e, &settings)
                };
                let centre = exit(theta)?;
                let plus = exit(theta + h)?;
                let minus = exit(theta - h)?;
                if [centre.status, plus.status, minus.status].iter().any(|s| *s != Status::Exited) {
                    return Ok(None);
                }
                let dc = (plus.exit.position - minus.exit.position) / (2.0 * h);
                let jet = sys.chart().metric_jet(centre.exit.position)?;
                let perp_dir = rot90(&jet, centre.exit.velocity);
                let perpendicular = jet.inner(dc, perp_dir);
                let norm = jet.norm(dc);
                Ok(Some(ScanPoint {
                    i,
                    j,
                    arclength_in: s,
                    angle_in: theta,
                    travel_time: centre.travel_time,
                    perpendicular,
                    derivative_norm: norm,
                    flagged: perpendicular <= CONJUGATE_EPS * norm,
                }))
            };
            let item = match run() {
                Ok(Some(p)) => Item::Point(p),
                Ok(None) => Item::Skipped,
                Err(e) => Item::Failed(e.to_string()),
            };
            (i, j, item)
        })
        .collect();
    let mut scan = ConjugateScan {
        points: Vec::new(),
        skipped: Vec::new(),
        failures: Vec::new(),
    };
    for (i, j, item) in items {
        match item {
            Item::Point(p) => scan.points.push(p),
            Item::Skipped => scan.skipped.push((i, j)),
            Item::Failed(m) => scan.failures.push((i, j, m)),
        }
    }
    Ok(scan)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Simple,
    NotStrictlyConvex { witness: BoundaryWitness, margin: f64 },
    Trapped { witness: PhasePoint, arclength_in: f64, angle_in: f64 },
    BoundaryConjugate { witness: ConjugateFlag },
    /// A sub-computation failed, so no verdict can be certified.
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Simple => "simple",
            Verdict::NotStrictlyConvex { .. } => "not_strictly_convex",
            Verdict::Trapped { .. } => "trapped",
            Verdict::BoundaryConjugate { .. } => "boundary_conjugate",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplicityReport {
    pub verdict: Verdict,
    pub convexity: Option<ConvexityReport>,
    pub records: usize,
    pub flags: usize,
}

/// Convexity, then trapping, then boundary-conjugate pairs; simple otherwise.
pub fn simplicity_verdict(
    sys: &MagneticSystem,
    dom: &DomainSpec,
    grid: ScatterGrid,
    h: f64,
    settings: &ScatterSettings,
) -> SimplicityReport {
    let inconclusive = |e: Error, convexity| SimplicityReport {
        verdict: Verdict::Inconclusive { reason: e.to_string() },
        convexity,
        records: 0,
        flags: 0,
    };
    let conv = match convexity_margin(sys, dom, grid.n_boundary.max(64)) {
        Ok(c) => c,
        Err(e) => return inconclusive(e, None),
    };
    if conv.margin <= CONVEXITY_TOL {
        return SimplicityReport {
            verdict: Verdict::NotStrictlyConvex {
                witness: conv.witness,
                margin: conv.margin,
            },
            convexity: Some(conv),
            records: 0,
            flags: 0,
        };
    }
    let table = match scattering_table(sys, dom, grid, settings) {
        Ok(t) => t,
        Err(e) => return inconclusive(e, Some(conv)),
    };
    if let Some(r) = table.records().find(|r| matches!(r.status, Status::Trapped { .. })) {
        return SimplicityReport {
            verdict: Verdict::Trapped {
                witness: r.entry,
                arclength_in: r.arclength_in,
                angle_in: r.angle_in,
            },
            convexity: Some(conv),
            records: table.entries.len(),
            flags: 0,
        };
    }
    if let Some(e) = table.entries.iter().find(|e| e.outcome.record().is_none()) {
        let reason = match &e.outcome {
            RecordOutcome::Failed { message, .. } => format!("scattering failed at entry ({}, {}): {message}", e.i, e.j),
            RecordOutcome::Record(_) => unreachable!(),
        };
        return SimplicityReport {
            verdict: Verdict::Inconclusive { reason },
            convexity: Some(conv),
            records: table.entries.len(),
            flags: 0,
        };
    }
    let scan = match boundary_conjugate_scan(sys, dom, grid, h, settings) {
        Ok(s) => s,
        Err(e) => return inconclusive(e, Some(conv)),
    };
    let flags = scan.flags();
    let verdict = if let Some(f) = flags.first() {
        Verdict::BoundaryConjugate { witness: *f }
    } else if let Some((i, j, m)) = scan.failures.first() {
        Verdict::Inconclusive {
            reason: format!("conjugate scan failed at entry ({i}, {j}): {m}"),
        }
    } else {
        Verdict::Simple
    };
    SimplicityReport {
        verdict,
        convexity: Some(conv),
        records: table.entries.len(),
        flags: flags.len(),
    }
}

/// The restricted relation: exit position only.
pub fn restricted(record: &ScatteringRecord) -> Option<Vec2> {
    match record.status {
        Status::Exited | Status::Grazing => Some(record.exit.position),
        Status::Trapped { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryCurve;
    use crate::geometry::ChartMetric;

    fn setup(r: f64, b: f64) -> (MagneticSystem, DomainSpec) {
        let chart = ChartMetric::euclidean();
        let dom = DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), r).unwrap(), &chart).unwrap();
        (MagneticSystem::constant(chart, b), dom)
    }

    #[test]
    fn diameter_chord() {
        let (sys, dom) = setup(1.0, 0.0);
        let entry = PhasePoint::new(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
        let ev = exit_event(&sys, &dom, &entry, &ScatterSettings::default()).unwrap();
        assert!((ev.travel_time - 2.0).abs() < 1e-9);
        assert!((ev.exit.position - Vec2::new(1.0, 0.0)).norm() < 1e-9);
        assert_eq!(ev.status, Status::Exited);
    }

    #[test]
    fn quarter_arc_exit() {
        let (sys, dom) = setup(1.0, 1.0);
        let entry = PhasePoint::new(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
        let ev = exit_event(&sys, &dom, &entry, &ScatterSettings::default()).unwrap();
        assert!((ev.travel_time - PI / 2.0).abs() < 1e-7);
        assert!((ev.exit.position - Vec2::new(0.0, 1.0)).norm() < 1e-7);
        assert!((ev.exit.velocity - Vec2::new(0.0, 1.0)).norm() < 1e-7);
    }

    #[test]
    fn grazing_and_contract_errors() {
        let (sys, dom) = setup(1.0, 0.5);
        let tangent = PhasePoint::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        let ev = exit_event(&sys, &dom, &tangent, &ScatterSettings::default()).unwrap();
        assert_eq!(ev.status, Status::Grazing);
        assert_eq!(ev.travel_time, 0.0);
        let off = PhasePoint::new(Vec2::new(0.5, 0.0), Vec2::new(0.0, 1.0));
        assert!(matches!(exit_event(&sys, &dom, &off, &ScatterSettings::default()), Err(Error::Contract { .. })));
        let outward = PhasePoint::new(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0));
        assert!(matches!(exit_event(&sys, &dom, &outward, &ScatterSettings::default()), Err(Error::Contract { .. })));
    }

    #[test]
    fn internally_tangent_orbit_is_trapped() {
        let (sys, dom) = setup(1.5, 1.0);
        // orbit circle of radius 1 centred at (-0.5, 0) stays inside the disk
        let entry = PhasePoint::new(Vec2::new(-1.5, 0.0), Vec2::new(0.0, -1.0));
        let settings = ScatterSettings {
            tmax: Some(20.0),
            ..Default::default()
        };
        let ev = exit_event(&sys, &dom, &entry, &settings).unwrap();
        assert_eq!(ev.status, Status::Trapped { tmax: 20.0 });
    }

    #[test]
    fn backward_time_is_zero_on_inward_boundary_points() {
        let (sys, dom) = setup(1.0, 1.0);
        let entry = PhasePoint::new(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
        let rec = scattering(&sys, &dom, &entry, &ScatterSettings::default()).unwrap();
        assert_eq!(rec.backward_time, 0.0);
        let inner = PhasePoint::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0));
        let back = backward_exit(&sys, &dom, &inner, &ScatterSettings::default()).unwrap();
        assert!(back.travel_time < 0.0);
        assert!(dom.signed_distance(back.exit.position).abs() < 1e-8);
    }

    #[test]
    fn verdict_ordering() {
        let grid = ScatterGrid::new(8, 6).unwrap();
        let s = ScatterSettings::default();
        let (sys, dom) = setup(2.0, 1.0);
        assert_eq!(simplicity_verdict(&sys, &dom, grid, 1e-4, &s).verdict.label(), "not_strictly_convex");
        let (sys, dom) = setup(1.0, 1.0);
        assert_eq!(simplicity_verdict(&sys, &dom, grid, 1e-4, &s).verdict.label(), "not_strictly_convex");
        let (sys, dom) = setup(0.5, 1.0);
        assert_eq!(simplicity_verdict(&sys, &dom, grid, 1e-4, &s).verdict.label(), "simple");
    }

    #[test]
    fn comparison_rejects_grid_mismatch() {
        let (sys, dom) = setup(0.5, 1.0);
        let s = ScatterSettings::default();
        let a = scattering_table(&sys, &dom, ScatterGrid::new(4, 4).unwrap(), &s).unwrap();
        let b = scattering_table(&sys, &dom, ScatterGrid::new(4, 5).unwrap(), &s).unwrap();
        assert!(compare_scattering(&a, &b).is_err());
        let c = compare_scattering(&a, &a).unwrap();
        assert_eq!(c.max_sup(), 0.0);
        assert_eq!(c.compared, 16);
    }
}
