//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use magflow::boundary::{convexity_margin, BoundaryCurve, DomainSpec};
use magflow::closure::{closure_census, closure_gap, ClosureSettings};
use magflow::flow::{integrate, PhasePoint, StepControl};
use magflow::geometry::rot90;
use magflow::index_form::{index_lemma_check, FieldOnGeodesic};
use magflow::scattering::{
    boundary_conjugate_scan, compare_scattering, scattering, scattering_table, simplicity_verdict, ScatterGrid,
    ScatterSettings, Verdict,
};
use magflow::{
    cut_corner, first_conjugate, index_evaluate, index_gram, propagate_jacobi, symplectic_pairing,
    variational_consistency, Bump, ChartMetric, MagneticSystem, Vec2,
};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn flat(b: f64) -> MagneticSystem {
    MagneticSystem::constant(ChartMetric::euclidean(), b)
}

fn sphere(b: f64) -> MagneticSystem {
    MagneticSystem::constant(ChartMetric::spherical(1.0).unwrap(), b)
}

fn disk(r: f64) -> DomainSpec {
    DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), r).unwrap(), &ChartMetric::euclidean()).unwrap()
}

fn east() -> PhasePoint {
    PhasePoint::new(Vec2::zeros(), Vec2::new(1.0, 0.0))
}

fn flat_circle_closure() -> Check {
    let clock = Instant::now();
    let r = closure_gap(&flat(1.0), east(), 10.0, &ClosureSettings::default()).map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    ensure(
        (r.period - 2.0 * PI).abs() <= 1e-6 && r.gap <= 1e-8 && secs < 1.0,
        format!("period error {:.2e}, gap {:.2e}, {secs:.3} s", (r.period - 2.0 * PI).abs(), r.gap),
    )
}

fn conservation() -> Check {
    let ctrl = StepControl::default();
    let systems = [
        (flat(1.0), Vec2::zeros()),
        (sphere(0.5), Vec2::new(0.2, 0.1)),
        (
            MagneticSystem::expression(ChartMetric::hyperbolic(-1.0).unwrap(), "1 + 0.5*x - 0.3*y").map_err(err)?,
            Vec2::new(0.05, 0.0),
        ),
    ];
    let (mut drift, mut side, mut pairing): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (sys, x) in &systems {
        let start = PhasePoint::from_angle(sys.chart(), *x, 0.3).map_err(err)?;
        let traj = integrate(sys, start, 10.0, &ctrl).map_err(err)?;
        drift = drift.max(traj.speed_drift_rate());
        let jet = sys.chart().metric_jet(start.position).map_err(err)?;
        let e2 = rot90(&jet, start.velocity);
        let jac = propagate_jacobi(sys, &traj, e2 * 0.3, e2 * 0.7).map_err(err)?;
        side = side.max(jac.side_condition_drift());
        let jv = propagate_jacobi(sys, &traj, Vec2::zeros(), e2).map_err(err)?;
        let jw = propagate_jacobi(sys, &traj, Vec2::zeros(), e2 * -2.5).map_err(err)?;
        for k in 1..=10 {
            pairing = pairing.max(symplectic_pairing(&jv, &jw, sys, &traj, k as f64).map_err(err)?.abs());
        }
    }
    ensure(
        drift <= 1e-9 && side <= 1e-8 && pairing <= 1e-8,
        format!("speed drift {drift:.2e}/unit time, <J',g'> drift {side:.2e}, pairing {pairing:.2e}"),
    )
}

fn variational() -> Check {
    let ctrl = StepControl::default();
    let a = variational_consistency(&flat(1.0), Vec2::zeros(), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), 1.0, 1e-4, &ctrl)
        .map_err(err)?;
    let s = sphere(0.5);
    let x = Vec2::new(0.1, 0.0);
    let jet = s.chart().metric_jet(x).map_err(err)?;
    let xi = jet.normalize(Vec2::new(1.0, 1.0));
    let b = variational_consistency(&s, x, xi, rot90(&jet, xi), 1.0, 1e-4, &ctrl).map_err(err)?;
    ensure(a <= 1e-3 && b <= 1e-3, format!("relative error flat {a:.2e}, sphere {b:.2e}"))
}

fn conjugate_anchors() -> Check {
    let ctrl = StepControl::default();
    let a = first_conjugate(&flat(1.0), Vec2::zeros(), Vec2::new(1.0, 0.0), 10.0, &ctrl).map_err(err)?;
    let s = sphere(0.0);
    let x = Vec2::new(0.5, 0.0);
    let jet = s.chart().metric_jet(x).map_err(err)?;
    let b = first_conjugate(&s, x, jet.normalize(Vec2::new(0.0, 1.0)), 5.0, &ctrl).map_err(err)?;
    let c = first_conjugate(&flat(0.0), Vec2::zeros(), Vec2::new(1.0, 0.0), 100.0, &ctrl).map_err(err)?;
    let (ta, tb) = (a.map_or(f64::NAN, |c| c.time), b.map_or(f64::NAN, |c| c.time));
    ensure(
        (ta - PI).abs() <= 1e-6 && (tb - PI).abs() <= 1e-5 && c.is_none(),
        format!("flat b=1 {:.2e} off, sphere b=0 {:.2e} off, flat b=0 none: {}", (ta - PI).abs(), (tb - PI).abs(), c.is_none()),
    )
}

fn index_sign_law() -> Check {
    let sys = flat(1.0);
    let ctrl = StepControl::default();
    let gram = |t: f64| -> Result<f64, String> {
        let traj = integrate(&sys, east(), t, &ctrl).map_err(err)?;
        Ok(index_gram(&sys, &traj, 256).map_err(err)?.smallest)
    };
    let (a, b, c) = (gram(PI / 2.0)?, gram(PI)?, gram(1.5 * PI)?);
    let traj = integrate(&sys, east(), 1.5 * PI, &ctrl).map_err(err)?;
    let z = cut_corner(&sys, &traj, PI, 0.2, &ctrl).map_err(err)?;
    let cut = index_evaluate(&sys, &traj, &z).map_err(err)?;
    ensure(
        a > 0.0 && b.abs() <= 1e-3 && c < 0.0 && cut < 0.0,
        format!("lambda_min {a:.3e} | {b:.3e} | {c:.3e}; cut corner index {cut:.6}"),
    )
}

fn index_lemma() -> Check {
    let ctrl = StepControl::default();
    let sys = MagneticSystem::expression(ChartMetric::spherical(1.0).unwrap(), "0.8 + 0.3*x*y").map_err(err)?;
    let start = PhasePoint::from_angle(sys.chart(), Vec2::new(0.2, 0.1), 1.0).map_err(err)?;
    let traj = integrate(&sys, start, 1.5, &ctrl).map_err(err)?;
    let z = FieldOnGeodesic::piecewise_linear(&[(0.0, 0.0), (0.5, 0.7), (1.5, 0.2)]).map_err(err)?;
    let r = index_lemma_check(&sys, &traj, &z, 100, 20240601, &ctrl).map_err(err)?;
    ensure(
        r.violations == 0 && r.reversed_violations == 0 && r.reversal_error <= 1e-8,
        format!(
            "min margin {:.3e}, reversed min margin {:.3e}, reversal error {:.2e}",
            r.min_margin, r.reversed_min_margin, r.reversal_error
        ),
    )
}

fn convexity() -> Check {
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        for b in [0.0, 1.0] {
            let m = convexity_margin(&flat(b), &disk(r), 256).map_err(err)?.margin;
            worst = worst.max((m - (1.0 / r - b)).abs());
        }
    }
    ensure(worst <= 1e-8, format!("max |margin - (1/R - b)| = {worst:.2e}"))
}

fn scattering_anchor() -> Check {
    let s = ScatterSettings::default();
    let entry = PhasePoint::new(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
    let r = scattering(&flat(1.0), &disk(1.0), &entry, &s).map_err(err)?;
    let el = (r.travel_time - PI / 2.0).abs();
    let ex = (r.exit.position - Vec2::new(0.0, 1.0)).norm().max((r.exit.velocity - Vec2::new(0.0, 1.0)).norm());
    let mut chord: f64 = 0.0;
    for radius in [0.5, 1.0] {
        let table = scattering_table(&flat(0.0), &disk(radius), ScatterGrid::new(16, 16).map_err(err)?, &s).map_err(err)?;
        if table.failures() > 0 {
            return Err(format!("{} chord entries failed", table.failures()));
        }
        for rec in table.records() {
            chord = chord.max((rec.travel_time - 2.0 * radius * rec.angle_in.sin()).abs());
        }
    }
    ensure(
        el <= 1e-7 && ex <= 1e-7 && chord <= 1e-7,
        format!("|l - pi/2| {el:.2e}, exit error {ex:.2e}, chord table {chord:.2e}"),
    )
}

fn ratio_stability() -> Check {
    let s = ScatterSettings::default();
    let mut detail = Vec::new();
    let mut ok = true;
    for (r, b) in [(0.5, 1.0), (1.0, 0.0)] {
        let bound = |n: usize| -> Result<f64, String> {
            let t = scattering_table(&flat(b), &disk(r), ScatterGrid::new(n, n).map_err(err)?, &s).map_err(err)?;
            Ok(t.exit_time_ratio_bound())
        };
        let (a, c) = (bound(16)?, bound(32)?);
        let change = (a - c).abs() / c;
        ok &= a.is_finite() && change <= 0.05;
        detail.push(format!("R={r} b={b}: {a:.6} -> {c:.6} ({:.2}%)", 100.0 * change));
    }
    ensure(ok, detail.join("; "))
}

fn verdicts() -> Check {
    let s = ScatterSettings::default();
    let grid = ScatterGrid::new(16, 16).map_err(err)?;
    let v = |r: f64| simplicity_verdict(&flat(1.0), &disk(r), grid, 1e-5, &s).verdict;
    let (a, b, c) = (v(0.5), v(2.0), v(1.0));
    let sys = MagneticSystem::expression(ChartMetric::euclidean(), "3*exp(-(x^2+y^2)/0.5)").map_err(err)?;
    let dom = disk(0.9);
    let scan = boundary_conjugate_scan(&sys, &dom, grid, 1e-5, &s).map_err(err)?;
    let ctrl = StepControl::default();
    let mut disagree = scan.failures.len() + scan.skipped.len();
    let mut flagged = 0;
    for p in &scan.points {
        let e = ScatterGrid::phase_point(&sys, &dom, p.arclength_in, p.angle_in).map_err(err)?;
        let oracle = first_conjugate(&sys, e.position, e.velocity, p.travel_time, &ctrl)
            .map_err(err)?
            .is_some_and(|c| c.time < p.travel_time);
        disagree += (oracle != p.flagged) as usize;
        flagged += p.flagged as usize;
    }
    ensure(
        a == Verdict::Simple && b.label() == "not_strictly_convex" && c.label() == "not_strictly_convex" && disagree == 0,
        format!(
            "R=0.5 {}, R=2 {}, R=1 {}; variable-b scan {flagged}/{} flagged, {disagree} disagreements with first_conjugate",
            a.label(),
            b.label(),
            c.label(),
            scan.points.len()
        ),
    )
}

fn rigidity() -> Check {
    let clock = Instant::now();
    let round = sphere(1.0);
    // geodesic cap of radius 0.2 around the origin
    let dom = DomainSpec::new(BoundaryCurve::circle(Vec2::zeros(), 0.1f64.tan()).unwrap(), round.chart()).map_err(err)?;
    let grid = ScatterGrid::new(32, 16).map_err(err)?;
    let s = ClosureSettings::default();
    let plain = closure_census(&round, &dom, grid, 10.0, Some(&round), &s).map_err(err)?;
    // independent baseline: the same system at half the step
    let h = magflow::flow::default_step(&round, Vec2::zeros()).map_err(err)?;
    let half = ScatterSettings {
        step: StepControl::fixed(h / 2.0),
        ..Default::default()
    };
    let a = scattering_table(&round, &dom, grid, &ScatterSettings::default()).map_err(err)?;
    let b = scattering_table(&round, &dom, grid, &half).map_err(err)?;
    let base_sup = compare_scattering(&a, &b).map_err(err)?.max_sup();
    let bumped = MagneticSystem::constant(
        ChartMetric::spherical(1.0).unwrap().with_bump(Bump::new(Vec2::zeros(), 0.08, 0.05).unwrap()).map_err(err)?,
        1.0,
    );
    let pert = closure_census(&bumped, &dom, grid, 10.0, Some(&round), &s).map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    let plain_sup = plain.comparison.map_or(f64::NAN, |c| c.max_sup());
    let pert_sup = pert.comparison.map_or(f64::NAN, |c| c.max_sup());
    let m_ok = plain.pass_counts.keys().all(|m| *m <= 1);
    ensure(
        plain.closed == plain.orbits
            && plain.failures == 0
            && m_ok
            && plain_sup <= 1e-6
            && base_sup <= 1e-6
            && pert.worst_gap > 1e-3
            && pert_sup > 1e-3
            && secs <= 120.0,
        format!(
            "unperturbed {}/{} closed, m {:?}, sup {plain_sup:.1e} (half-step {base_sup:.1e}); bumped worst gap {:.3e}, sup {pert_sup:.3e}; {secs:.1} s",
            plain.closed,
            plain.orbits,
            plain.pass_counts.keys().collect::<Vec<_>>(),
            pert.worst_gap
        ),
    )
}

fn determinism() -> Check {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let runs: &[(&str, &[&str])] = &[
        (
            "flat_disk.toml",
            &["trace", "exit", "scatter", "jacobi", "conjugates", "index", "convexity", "simplicity", "compare-scatter"],
        ),
        ("variable_field.toml", &["simplicity", "compare-scatter"]),
        ("sphere_census.toml", &["closure"]),
    ];
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut compared = 0;
    for (cfg, experiments) in runs {
        for e in *experiments {
            let mut outputs = Vec::new();
            for k in 0..2 {
                let dir = tmp.path().join(format!("{e}-{k}"));
                let out = Command::new(env!("CARGO_BIN_EXE_magflow"))
                    .arg(e)
                    .arg("--config")
                    .arg(root.join(cfg))
                    .arg("--out")
                    .arg(&dir)
                    .output()
                    .map_err(err)?;
                if !out.status.success() {
                    return Err(format!("{e} on {cfg} failed: {}", String::from_utf8_lossy(&out.stderr)));
                }
                let mut files: Vec<_> = std::fs::read_dir(&dir)
                    .map_err(err)?
                    .filter_map(|f| f.ok())
                    .map(|f| f.path())
                    .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                    .collect();
                files.sort();
                let bytes: Vec<(String, Vec<u8>)> = files
                    .iter()
                    .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
                    .collect();
                outputs.push(bytes);
            }
            if outputs[0].is_empty() || outputs[0] != outputs[1] {
                return Err(format!("{e} on {cfg}: CSV artifacts differ between runs"));
            }
            compared += outputs[0].len();
        }
    }
    Ok(format!("{compared} CSV artifacts byte-identical across reruns"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("flat-circle closure", flat_circle_closure),
        ("conservation suite", conservation),
        ("variational consistency", variational),
        ("conjugate anchors", conjugate_anchors),
        ("index sign law", index_sign_law),
        ("index lemma sampling", index_lemma),
        ("convexity margin", convexity),
        ("scattering anchor", scattering_anchor),
        ("exit-time ratio stability", ratio_stability),
        ("simplicity verdicts", verdicts),
        ("rigidity smoke test", rigidity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
