//! Closed-orbit detection, the pass count `m` and closure censuses.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{convexity_margin, DomainSpec};
use crate::error::{Error, Result};
use crate::flow::{advance, PhasePoint, StepControl, Stepper};
use crate::magnetic::MagneticSystem;
use crate::scattering::{compare_scattering, scattering_table, ScatterComparison, ScatterGrid, ScatterSettings, CONVEXITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosureSettings {
    pub position_weight: f64,
    pub angle_weight: f64,
    pub closure_tol: f64,
    /// The phase distance must exceed this before a return is sought.
    pub escape: f64,
    /// Boundary contact closer than this counts as a tangential touch.
    pub touch_tol: f64,
    /// Scattering sups above this count as a change of scattering data.
    pub detection_threshold: f64,
    pub step: StepControl,
}

impl Default for ClosureSettings {
    fn default() -> Self {
        ClosureSettings {
            position_weight: 1.0,
            angle_weight: 1.0,
            closure_tol: 1e-6,
            escape: 0.05,
            touch_tol: 1e-9,
            detection_threshold: 1e-3,
            step: StepControl::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitStatus {
    Closed { tol: f64 },
    Open { gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub start: PhasePoint,
    /// Candidate period `T*`.
    pub period: f64,
    pub gap: f64,
    pub pass_count: Option<usize>,
    pub status: OrbitStatus,
}

impl OrbitRecord {
    pub fn closed(&self) -> bool {
        matches!(self.status, OrbitStatus::Closed { .. })
    }
}

/// Euclidean angle between chart vectors; the chart is conformal, so this is
/// the Riemannian angle.
fn angle_between(a: crate::Vec2, b: crate::Vec2) -> f64 {
    let cross = a.x * b.y - a.y * b.x;
    cross.atan2(a.dot(&b)).abs()
}

fn phase_distance(s: &ClosureSettings, a: &PhasePoint, b: &PhasePoint) -> f64 {
    s.position_weight * (a.position - b.position).norm() + s.angle_weight * angle_between(a.velocity, b.velocity)
}

fn golden_min(lo: f64, hi: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
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
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// First near-return of the orbit to its start in phase space.
///
/// The first local minimum of the phase distance below `escape` is refined
/// and reported. Orbits that never come that close are reported open, at
/// their closest local return before `tmax`.
pub fn closure_gap(sys: &MagneticSystem, start: PhasePoint, tmax: f64, settings: &ClosureSettings) -> Result<OrbitRecord> {
    if !(tmax > 0.0 && tmax.is_finite()) {
        return Err(Error::invalid("tmax", format!("must be positive, got {tmax}")));
    }
    let mut stepper = Stepper::new(sys, &settings.step, start)?;
    let mut escaped = false;
    // (t, state, distance) of the two previous samples
    let mut prev: Option<(f64, PhasePoint, f64)> = None;
    let mut prev2: Option<(f64, PhasePoint, f64)> = None;
    // closest local return seen so far: (distance, bracket start, bracket end)
    let mut best: Option<(f64, (f64, PhasePoint), f64)> = None;
    let refine = |t0: f64, s0: PhasePoint, t1: f64| -> Result<OrbitRecord> {
        let (dt, gap) = golden_min(0.0, t1 - t0, 1e-12, |dt| Ok(phase_distance(settings, &advance(sys, &s0, dt)?, &start)))?;
        let status = if gap <= settings.closure_tol {
            OrbitStatus::Closed { tol: settings.closure_tol }
        } else {
            OrbitStatus::Open { gap }
        };
        Ok(OrbitRecord {
            start,
            period: t0 + dt,
            gap,
            pass_count: None,
            status,
        })
    };
    while stepper.t < tmax {
        stepper.step(Some(tmax))?;
        let d = phase_distance(settings, &stepper.state, &start);
        if !escaped {
            escaped = d > settings.escape;
        } else if let (Some(p1), Some(p2)) = (prev, prev2) {
            if p1.2 <= p2.2 && p1.2 <= d {
                if p1.2 < settings.escape {
                    return refine(p2.0, p2.1, stepper.t);
                }
                if best.is_none_or(|b| p1.2 < b.0) {
                    best = Some((p1.2, (p2.0, p2.1), stepper.t));
                }
            }
        }
        prev2 = prev;
        prev = Some((stepper.t, stepper.state, d));
    }
    match best {
        Some((_, (t0, s0), t1)) => refine(t0, s0, t1),
        None => Err(Error::contract(
            "closure_gap",
            format!("the orbit does not return towards its start before t = {tmax}"),
        )),
    }
}

/// Number of passes of the orbit through `dom` over `[0, period)`.
///
/// Maximal intervals where the position is inside count once each, with the
/// interval through `t = 0` merged with the one through `t = period`; a
/// boundary contact without entry counts as one pass.
pub fn pass_count(sys: &MagneticSystem, start: PhasePoint, dom: &DomainSpec, period: f64, settings: &ClosureSettings) -> Result<usize> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid("period", format!("must be positive, got {period}")));
    }
    let mut stepper = Stepper::new(sys, &settings.step, start)?;
    let mut samples = vec![(0.0, start, dom.signed_distance(start.position))];
    while stepper.t < period {
        stepper.step(Some(period))?;
        if stepper.t < period {
            samples.push((stepper.t, stepper.state, dom.signed_distance(stepper.state.position)));
        }
    }
    let inside: Vec<bool> = samples.iter().map(|s| s.2 < 0.0).collect();
    let mut intervals = 0usize;
    for k in 0..inside.len() {
        if inside[k] && (k == 0 || !inside[k - 1]) {
            intervals += 1;
        }
    }
    let all_inside = inside.iter().all(|x| *x);
    if !all_inside && intervals >= 2 && inside[0] && inside[inside.len() - 1] {
        intervals -= 1;
    }
    let mut touches = 0usize;
    for k in 1..samples.len().saturating_sub(1) {
        let (a, b, c) = (samples[k - 1].2, samples[k].2, samples[k + 1].2);
        if a > 0.0 && b > 0.0 && c > 0.0 && b <= a && b <= c {
            let s0 = samples[k - 1].1;
            let (_, fmin) = golden_min(0.0, samples[k + 1].0 - samples[k - 1].0, 1e-12, |dt| {
                Ok(dom.signed_distance(advance(sys, &s0, dt)?.position))
            })?;
            if fmin <= settings.touch_tol {
                touches += 1;
            }
        }
    }
    Ok(intervals + touches)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusEntry {
    pub i: usize,
    pub j: usize,
    pub record: Option<OrbitRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusReport {
    pub orbits: usize,
    pub closed: usize,
    pub fraction_closed: f64,
    pub worst_gap: f64,
    pub worst_witness: Option<PhasePoint>,
    /// Histogram of pass counts.
    pub pass_counts: BTreeMap<usize, usize>,
    pub failures: usize,
    pub comparison: Option<ScatterComparison>,
    /// Every orbit closed and passes at most once.
    pub all_closed_single_pass: bool,
    /// Scattering sups (or statuses) differ from the baseline beyond the
    /// detection threshold.
    pub scattering_changed: Option<bool>,
    /// `all closed ∧ single pass ⇒ scattering unchanged`.
    pub implication_holds: Option<bool>,
    pub entries: Vec<CensusEntry>,
}

/// Closure and pass-count census over inward boundary starts of `dom`,
/// optionally comparing scattering data against `baseline`.
pub fn closure_census(
    sys: &MagneticSystem,
    dom: &DomainSpec,
    grid: ScatterGrid,
    tmax: f64,
    baseline: Option<&MagneticSystem>,
    settings: &ClosureSettings,
) -> Result<CensusReport> {
    let plain = MagneticSystem::new(sys.chart().unperturbed(), sys.source().clone());
    let conv = convexity_margin(&plain, dom, grid.n_boundary.max(64))?;
    if conv.margin <= CONVEXITY_TOL {
        return Err(Error::contract(
            "closure_census",
            format!("region is not strictly magnetically convex for the unperturbed system (margin {})", conv.margin),
        ));
    }
    let entries: Vec<CensusEntry> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / grid.n_angle, k % grid.n_angle);
            let run = || -> Result<OrbitRecord> {
                let start = ScatterGrid::phase_point(sys, dom, grid.arclength(dom, i), grid.angle(j))?;
                let mut rec = closure_gap(sys, start, tmax, settings)?;
                rec.pass_count = Some(pass_count(sys, start, dom, rec.period, settings)?);
                Ok(rec)
            };
            match run() {
                Ok(r) => CensusEntry {
                    i,
                    j,
                    record: Some(r),
                    error: None,
                },
                Err(e) => CensusEntry {
                    i,
                    j,
                    record: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut closed = 0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_witness = None;
    let mut pass_counts = BTreeMap::new();
    let mut failures = 0;
    for e in &entries {
        match &e.record {
            Some(r) => {
                if r.closed() {
                    closed += 1;
                }
                if r.gap > worst_gap || worst_witness.is_none() {
                    worst_gap = worst_gap.max(r.gap);
                    worst_witness = Some(r.start);
                }
                *pass_counts.entry(r.pass_count.unwrap_or(0)).or_insert(0) += 1;
            }
            None => failures += 1,
        }
    }
    let all_closed_single_pass =
        failures == 0 && closed == entries.len() && pass_counts.keys().all(|m| *m <= 1);
    let comparison = match baseline {
        Some(base) => {
            let scatter = ScatterSettings {
                step: settings.step,
                ..Default::default()
            };
            let a = scattering_table(sys, dom, grid, &scatter)?;
            let b = scattering_table(base, dom, grid, &scatter)?;
            Some(compare_scattering(&a, &b)?)
        }
        None => None,
    };
    let scattering_changed = comparison.map(|c| c.differs(settings.detection_threshold) || c.failures > 0);
    let implication_holds = scattering_changed.map(|changed| !(all_closed_single_pass && changed));
    Ok(CensusReport {
        orbits: entries.len(),
        closed,
        fraction_closed: closed as f64 / entries.len() as f64,
        worst_gap,
        worst_witness,
        pass_counts,
        failures,
        comparison,
        all_closed_single_pass,
        scattering_changed,
        implication_holds,
        entries,
    })
}
