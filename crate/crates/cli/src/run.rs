//! One function per experiment: compute, then lay results out as tables.

use std::f64::consts::PI;

use magflow::boundary::convexity_margin;
use magflow::closure::closure_census;
use magflow::flow::{integrate, PhasePoint, Trajectory};
use magflow::geometry::rot90;
use magflow::index_form::{gram_sweep, index_gram_with, index_lemma_check, FieldOnGeodesic};
use magflow::scattering::{
    compare_scattering, scattering, scattering_table, simplicity_verdict, RecordOutcome, ScatterGrid, ScatteringTable,
    Status, Verdict,
};
use magflow::{cut_corner, first_conjugate, index_evaluate, propagate_jacobi, MagneticSystem, Vec2};
use serde_json::json;

use crate::config::{Experiment, Prepared};
use crate::error::CliError;
use crate::output::{Artifacts, Table};
use crate::row;

type Out = Result<Artifacts, CliError>;

pub fn dispatch(p: &Prepared, experiment: Experiment) -> Out {
    match experiment {
        Experiment::Trace => trace(p),
        Experiment::Exit => exit(p),
        Experiment::Scatter => scatter(p),
        Experiment::Jacobi => jacobi(p),
        Experiment::Conjugates => conjugates(p),
        Experiment::Index => index(p),
        Experiment::Convexity => convexity(p),
        Experiment::Simplicity => simplicity(p),
        Experiment::Closure => closure(p),
        Experiment::CompareScatter => compare(p),
    }
}

fn v2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn orbit(p: &Prepared, module: &'static str, position: [f64; 2], angle: f64, duration: f64) -> Result<Trajectory, CliError> {
    let start = PhasePoint::from_angle(p.system.chart(), v2(position), angle).map_err(CliError::runtime(module))?;
    integrate(&p.system, start, duration, &p.step).map_err(CliError::runtime(module))
}

fn trace(p: &Prepared) -> Out {
    let c = p.config.trace.as_ref().expect("validated");
    let traj = orbit(p, "flow", c.position, c.angle, c.duration)?;
    let mut t = Table::new("trace", &["t", "x", "y", "vx", "vy"]);
    for s in traj.samples() {
        let (x, v) = (s.state.position, s.state.velocity);
        t.push(row![s.t, x.x, x.y, v.x, v.y]);
    }
    let end = traj.end();
    Ok(Artifacts {
        experiment: "trace",
        summary_line: format!(
            "trace: {} samples to t = {}, end ({:.12}, {:.12}), speed drift rate {:.3e}",
            traj.samples().len(),
            traj.duration(),
            end.position.x,
            end.position.y,
            traj.speed_drift_rate()
        ),
        summary: json!({ "meta": traj.meta(), "end": end, "speed_drift_rate": traj.speed_drift_rate() }),
        tables: vec![t],
    })
}

fn exit(p: &Prepared) -> Out {
    let c = p.config.exit.as_ref().expect("validated");
    let dom = p.domain.as_ref().expect("validated");
    let entry = ScatterGrid::phase_point(&p.system, dom, c.arclength, c.angle).map_err(CliError::runtime("boundary_scattering"))?;
    let r = scattering(&p.system, dom, &entry, &p.scatter).map_err(CliError::runtime("boundary_scattering"))?;
    let mut t = Table::new("exit", &["arclen_in", "angle_in", "arclen_out", "angle_out", "l", "status", "x", "y", "vx", "vy"]);
    t.push(row![
        r.arclength_in,
        r.angle_in,
        r.arclength_out,
        r.angle_out,
        r.travel_time,
        r.status.label(),
        r.exit.position.x,
        r.exit.position.y,
        r.exit.velocity.x,
        r.exit.velocity.y
    ]);
    Ok(Artifacts {
        experiment: "exit",
        summary_line: format!(
            "{}: l = {:.12}, exit ({:.12}, {:.12})",
            r.status.label(),
            r.travel_time,
            r.exit.position.x,
            r.exit.position.y
        ),
        summary: json!({ "record": r }),
        tables: vec![t],
    })
}

fn scatter_rows(name: &str, table: &ScatteringTable) -> Table {
    let mut t = Table::new(name, &["arclen_in", "angle_in", "arclen_out", "angle_out", "l", "status"]);
    for e in &table.entries {
        match &e.outcome {
            RecordOutcome::Record(r) => t.push(row![r.arclength_in, r.angle_in, r.arclength_out, r.angle_out, r.travel_time, r.status.label()]),
            RecordOutcome::Failed { kind, .. } => {
                t.push(row![e.arclength_in, e.angle_in, f64::NAN, f64::NAN, f64::NAN, format!("failed:{kind}")])
            }
        }
    }
    t
}

fn status_counts(table: &ScatteringTable) -> serde_json::Value {
    let count = |label: &str| table.records().filter(|r| r.status.label() == label).count();
    json!({
        "exited": count("exited"),
        "grazing": count("grazing"),
        "trapped": count("trapped"),
        "failed": table.failures(),
    })
}

fn scatter(p: &Prepared) -> Out {
    let dom = p.domain.as_ref().expect("validated");
    let table = scattering_table(&p.system, dom, p.grid, &p.scatter).map_err(CliError::runtime("boundary_scattering"))?;
    let ratio = table.exit_time_ratio_bound();
    let failures: Vec<_> = table
        .entries
        .iter()
        .filter_map(|e| match &e.outcome {
            RecordOutcome::Failed { message, .. } => Some(json!({ "i": e.i, "j": e.j, "message": message })),
            _ => None,
        })
        .collect();
    Ok(Artifacts {
        experiment: "scatter",
        summary_line: format!(
            "scatter: {} entries, {} failed, sup l/<nu,xi> = {:.9}",
            table.entries.len(),
            table.failures(),
            ratio
        ),
        summary: json!({
            "grid": table.grid,
            "perimeter": table.perimeter,
            "statuses": status_counts(&table),
            "exit_time_ratio_bound": ratio,
            "failures": failures,
        }),
        tables: vec![scatter_rows("scatter", &table)],
    })
}

fn jacobi(p: &Prepared) -> Out {
    let c = p.config.jacobi.as_ref().expect("validated");
    let traj = orbit(p, "jacobi", c.position, c.angle, c.duration)?;
    let start = traj.start();
    let jet = p.system.chart().metric_jet(start.position).map_err(CliError::runtime("jacobi"))?;
    let e2 = rot90(&jet, start.velocity);
    let j0 = start.velocity * c.value[0] + e2 * c.value[1];
    let jac = propagate_jacobi(&p.system, &traj, j0, e2 * c.derivative).map_err(CliError::runtime("jacobi"))?;
    let mut t = Table::new("jacobi", &["t", "f1", "f2", "df1", "df2"]);
    for s in jac.samples() {
        t.push(row![s.t, s.f[0], s.f[1], s.df[0], s.df[1]]);
    }
    Ok(Artifacts {
        experiment: "jacobi",
        summary_line: format!(
            "jacobi: {} samples, side-condition drift {:.3e}",
            jac.samples().len(),
            jac.side_condition_drift()
        ),
        summary: json!({
            "side_condition_max": jac.side_condition_max(),
            "side_condition_drift": jac.side_condition_drift(),
            "meta": traj.meta(),
        }),
        tables: vec![t],
    })
}

fn conjugates(p: &Prepared) -> Out {
    let c = p.config.conjugates.as_ref().expect("validated");
    let x = v2(c.position);
    let chart = p.system.chart();
    let found = c
        .angles
        .iter()
        .map(|a| {
            let start = PhasePoint::from_angle(chart, x, *a)?;
            first_conjugate(&p.system, x, start.velocity, c.tmax, &p.step)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::runtime("jacobi"))?;
    let mut t = Table::new("conjugates", &["angle", "found", "time", "x", "y", "multiplicity", "marginal"]);
    for (a, f) in c.angles.iter().zip(&found) {
        match f {
            Some(cp) => t.push(row![*a, true, cp.time, cp.position.x, cp.position.y, cp.multiplicity, cp.marginal]),
            None => t.push(row![*a, false, f64::NAN, f64::NAN, f64::NAN, 0usize, false]),
        }
    }
    let n = found.iter().filter(|f| f.is_some()).count();
    let first = found.iter().flatten().map(|c| c.time).fold(f64::INFINITY, f64::min);
    Ok(Artifacts {
        experiment: "conjugates",
        summary_line: if n > 0 {
            format!("conjugates: {n} of {} directions, earliest t = {first:.12}", c.angles.len())
        } else {
            format!("conjugates: none before t = {}", c.tmax)
        },
        summary: json!({ "found": n, "earliest": if n > 0 { Some(first) } else { None } }),
        tables: vec![t],
    })
}

fn index(p: &Prepared) -> Out {
    let c = p.config.index.as_ref().expect("validated");
    let rt = CliError::runtime("index_form");
    let traj = orbit(p, "index_form", c.position, c.angle, c.duration)?;
    let total = c.duration;
    let (z, t0) = match c.field.as_str() {
        "cut_corner" => {
            let start = traj.start();
            let cp = first_conjugate(&p.system, start.position, start.velocity, total, &p.step)
                .map_err(CliError::runtime("index_form"))?
                .ok_or_else(|| {
                    rt(magflow::Error::Contract {
                        operation: "cut_corner",
                        detail: format!("no conjugate point before T = {total}"),
                    })
                })?;
            let z = cut_corner(&p.system, &traj, cp.time, c.eps.expect("validated"), &p.step)
                .map_err(CliError::runtime("index_form"))?;
            (z, Some(cp.time))
        }
        _ => {
            let w = PI / total;
            let z = FieldOnGeodesic::smooth(total, move |t| ((w * t).sin(), w * (w * t).cos())).map_err(CliError::runtime("index_form"))?;
            (z, None)
        }
    };
    let value = index_evaluate(&p.system, &traj, &z).map_err(CliError::runtime("index_form"))?;
    let spectrum = index_gram_with(&p.system, &traj, c.n, c.kernel_c).map_err(CliError::runtime("index_form"))?;
    let mut table = Table::new("index", &["duration", "smallest", "negative_count", "kernel_tolerance", "kernel_detected"]);
    let mut crossing = None;
    if c.sweep.is_empty() {
        table.push(row![total, spectrum.smallest, spectrum.negative_count, spectrum.kernel_tolerance, spectrum.kernel_detected]);
    } else {
        let start = traj.start();
        let report = gram_sweep(&p.system, &c.sweep, c.n, |s| integrate(&p.system, start, s, &p.step))
            .map_err(CliError::runtime("index_form"))?;
        for r in &report.rows {
            let s = &r.spectrum;
            table.push(row![r.duration, s.smallest, s.negative_count, s.kernel_tolerance, s.kernel_detected]);
        }
        crossing = report.first_crossing;
    }
    let lemma = if c.trials > 0 {
        let zl = FieldOnGeodesic::smooth(total, move |t| {
            let w = 0.5 * PI / total;
            ((w * t).sin(), w * (w * t).cos())
        })
        .map_err(CliError::runtime("index_form"))?;
        Some(
            index_lemma_check(&p.system, &traj, &zl, c.trials, p.config.seed.expect("validated"), &p.step)
                .map_err(CliError::runtime("index_form"))?,
        )
    } else {
        None
    };
    Ok(Artifacts {
        experiment: "index",
        summary_line: format!(
            "index: I = {value:.12e}, lambda_min = {:.6e}, negative eigenvalues {}",
            spectrum.smallest, spectrum.negative_count
        ),
        summary: json!({
            "field": c.field,
            "corner_time": t0,
            "value": value,
            "spectrum": spectrum,
            "first_crossing": crossing,
            "lemma": lemma,
        }),
        tables: vec![table],
    })
}

fn convexity(p: &Prepared) -> Out {
    let dom = p.domain.as_ref().expect("validated");
    let n = p.config.convexity.as_ref().map_or(256, |c| c.samples);
    let rt = CliError::runtime("boundary_scattering");
    let report = convexity_margin(&p.system, dom, n).map_err(rt)?;
    let mut t = Table::new("convexity", &["arclength", "x", "y", "curvature", "margin_forward", "margin_backward"]);
    for i in 0..n {
        let row = || -> magflow::Result<_> {
            let f = dom.frame_at_arclength(dom.length() * i as f64 / n as f64)?;
            let jet = p.system.chart().metric_jet(f.position)?;
            let m = |d: Vec2| -> magflow::Result<f64> { Ok(f.curvature - jet.inner(p.system.lorentz(f.position, d)?, f.normal)) };
            Ok(row![f.arclength, f.position.x, f.position.y, f.curvature, m(f.tangent)?, m(-f.tangent)?])
        };
        t.push(row().map_err(CliError::runtime("boundary_scattering"))?);
    }
    Ok(Artifacts {
        experiment: "convexity",
        summary_line: format!(
            "margin = {:.12} ({})",
            report.margin,
            if report.margin > magflow::scattering::CONVEXITY_TOL { "strictly convex" } else { "not strictly convex" }
        ),
        summary: json!({ "report": report, "length": dom.length() }),
        tables: vec![t],
    })
}

fn simplicity(p: &Prepared) -> Out {
    let dom = p.domain.as_ref().expect("validated");
    let h = p.config.simplicity.as_ref().map_or(1e-5, |s| s.h);
    let report = simplicity_verdict(&p.system, dom, p.grid, h, &p.scatter);
    let mut t = Table::new("simplicity", &["verdict", "margin", "records", "flags", "witness_arclen", "witness_angle"]);
    let margin = report.convexity.map_or(f64::NAN, |c| c.margin);
    let (ws, wa) = match &report.verdict {
        Verdict::NotStrictlyConvex { witness, .. } => (witness.arclength, f64::NAN),
        Verdict::Trapped { arclength_in, angle_in, .. } => (*arclength_in, *angle_in),
        Verdict::BoundaryConjugate { witness } => (witness.arclength_in, witness.angle_in),
        _ => (f64::NAN, f64::NAN),
    };
    t.push(row![report.verdict.label(), margin, report.records, report.flags, ws, wa]);
    let line = match &report.verdict {
        Verdict::Simple => "simple".to_string(),
        Verdict::Inconclusive { reason } => format!("inconclusive: {reason}"),
        v => format!("{} (witness arclen_in = {ws:.9}, angle_in = {wa:.9})", v.label()),
    };
    Ok(Artifacts {
        experiment: "simplicity",
        summary_line: line,
        summary: json!({ "report": report }),
        tables: vec![t],
    })
}

fn closure(p: &Prepared) -> Out {
    let dom = p.domain.as_ref().expect("validated");
    let c = p.config.closure.as_ref().expect("validated");
    let settings = p.closure_settings();
    let baseline = MagneticSystem::new(p.system.chart().unperturbed(), p.system.source().clone());
    let report = closure_census(&p.system, dom, p.grid, c.tmax, c.baseline.then_some(&baseline), &settings)
        .map_err(CliError::runtime("closure"))?;
    let mut t = Table::new(
        "closure",
        &["i", "j", "arclen_in", "angle_in", "period", "gap", "pass_count", "status"],
    );
    for e in &report.entries {
        let s = p.grid.arclength(dom, e.i);
        let a = p.grid.angle(e.j);
        match &e.record {
            Some(r) => t.push(row![
                e.i,
                e.j,
                s,
                a,
                r.period,
                r.gap,
                r.pass_count.unwrap_or(0),
                if r.closed() { "closed" } else { "open" }
            ]),
            None => t.push(row![e.i, e.j, s, a, f64::NAN, f64::NAN, 0usize, "failed"]),
        }
    }
    let hist: Vec<String> = report.pass_counts.iter().map(|(m, n)| format!("m={m}:{n}")).collect();
    let mut line = format!(
        "closure: {}/{} closed, worst gap {:.3e}, {}",
        report.closed,
        report.orbits,
        report.worst_gap,
        hist.join(" ")
    );
    if let Some(cmp) = &report.comparison {
        line += &format!(", scattering sup {:.3e}", cmp.max_sup());
    }
    if let Some(h) = report.implication_holds {
        line += &format!(", implication {}", if h { "holds" } else { "fails" });
    }
    let errors: Vec<_> = report
        .entries
        .iter()
        .filter_map(|e| e.error.as_ref().map(|m| json!({ "i": e.i, "j": e.j, "message": m })))
        .collect();
    let mut summary = serde_json::to_value(&report).expect("report serializes");
    let obj = summary.as_object_mut().expect("object");
    obj.remove("entries");
    obj.insert("errors".into(), json!(errors));
    Ok(Artifacts {
        experiment: "closure",
        summary_line: line,
        summary,
        tables: vec![t],
    })
}

fn compare(p: &Prepared) -> Out {
    let dom = p.domain.as_ref().expect("validated");
    let other = p.other_system();
    let threshold = p.config.compare_scatter.as_ref().map_or(1e-3, |c| c.threshold);
    let rt = CliError::runtime("boundary_scattering");
    let a = scattering_table(&p.system, dom, p.grid, &p.scatter).map_err(CliError::runtime("boundary_scattering"))?;
    let b = scattering_table(&other, dom, p.grid, &p.scatter).map_err(CliError::runtime("boundary_scattering"))?;
    let cmp = compare_scattering(&a, &b).map_err(rt)?;
    let mut t = Table::new(
        "compare-scatter",
        &["arclen_in", "angle_in", "d_arclen_out", "d_angle_out", "d_l", "status_a", "status_b"],
    );
    let total = 0.5 * (a.perimeter + b.perimeter);
    let label = |o: &RecordOutcome| match o {
        RecordOutcome::Record(r) => r.status.label().to_string(),
        RecordOutcome::Failed { kind, .. } => format!("failed:{kind}"),
    };
    for (x, y) in a.entries.iter().zip(&b.entries) {
        let (ds, da, dl) = match (x.outcome.record(), y.outcome.record()) {
            (Some(r), Some(s)) if r.status == Status::Exited && s.status == Status::Exited => {
                let d = (r.arclength_out - s.arclength_out).rem_euclid(total);
                let w = (r.angle_out - s.angle_out).rem_euclid(2.0 * PI);
                (d.min(total - d), w.min(2.0 * PI - w), (r.travel_time - s.travel_time).abs())
            }
            _ => (f64::NAN, f64::NAN, f64::NAN),
        };
        t.push(row![x.arclength_in, x.angle_in, ds, da, dl, label(&x.outcome), label(&y.outcome)]);
    }
    Ok(Artifacts {
        experiment: "compare-scatter",
        summary_line: format!(
            "sups: position {:.3e}, direction {:.3e}, time {:.3e}; status mismatches {}; {}",
            cmp.position_sup,
            cmp.direction_sup,
            cmp.time_sup,
            cmp.status_mismatches,
            if cmp.differs(threshold) { "differs" } else { "agrees" }
        ),
        summary: json!({ "comparison": cmp, "threshold": threshold, "differs": cmp.differs(threshold) }),
        tables: vec![t],
    })
}
