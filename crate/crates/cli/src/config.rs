//! Run configuration: TOML schema, key checking and range validation.

use std::collections::BTreeSet;

use magflow::boundary::{BoundaryCurve, DomainSpec};
use magflow::closure::ClosureSettings;
use magflow::flow::{AdaptiveControl, StepControl};
use magflow::scattering::{ScatterGrid, ScatterSettings};
use magflow::{Bump, ChartMetric, MagneticSystem, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::Violation;

pub const SCHEMA: &str = "magflow/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpConfig {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    /// `euclidean`, `spherical`, `hyperbolic` or `custom`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    /// Conformal factor `λ(x, y)` for custom charts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump: Option<BumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump: Option<BumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    /// `circle` or `ellipse`.
    pub kind: String,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_speed_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graze: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_boundary: usize,
    pub n_angle: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_boundary: 16,
            n_angle: 16,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub position: [f64; 2],
    /// Direction angle of the initial velocity in the chart.
    pub angle: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitConfig {
    pub arclength: f64,
    /// Angle from the boundary tangent, in `(0, π)`.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiConfig {
    pub position: [f64; 2],
    pub angle: f64,
    pub duration: f64,
    /// `J(0)` in the adapted frame `(e₁, e₂)`.
    #[serde(default)]
    pub value: [f64; 2],
    /// `J'(0) = derivative · e₂`.
    #[serde(default = "one")]
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatesConfig {
    pub position: [f64; 2],
    pub angles: Vec<f64>,
    pub tmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub position: [f64; 2],
    pub angle: f64,
    pub duration: f64,
    /// `sine` for `sin(πt/T)`, or `cut_corner`.
    #[serde(default = "sine")]
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default = "gram_n")]
    pub n: usize,
    #[serde(default = "kernel_c")]
    pub kernel_c: f64,
    /// Durations for the Gram sweep along the same orbit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<f64>,
    /// Random fields for the Index Lemma check; 0 skips it.
    #[serde(default)]
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityConfig {
    #[serde(default = "samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplicityConfig {
    /// Angular difference step of the conjugate scan.
    #[serde(default = "scan_h")]
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureConfig {
    pub tmax: f64,
    /// Compare scattering against the unperturbed system.
    #[serde(default = "yes")]
    pub baseline: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub touch_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareScatterConfig {
    /// Second system; missing parts are taken from the main one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<SystemConfig>,
    #[serde(default = "threshold")]
    pub threshold: f64,
}

fn one() -> f64 {
    1.0
}
fn sine() -> String {
    "sine".into()
}
fn gram_n() -> usize {
    256
}
fn kernel_c() -> f64 {
    10.0
}
fn samples() -> usize {
    256
}
fn scan_h() -> f64 {
    1e-5
}
fn yes() -> bool {
    true
}
fn threshold() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub chart: ChartConfig,
    pub field: FieldConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<ExitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobi: Option<JacobiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugates: Option<ConjugatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convexity: Option<ConvexityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplicity: Option<SimplicityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_scatter: Option<CompareScatterConfig>,
}

/// Experiments selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Trace,
    Exit,
    Scatter,
    Jacobi,
    Conjugates,
    Index,
    Convexity,
    Simplicity,
    Closure,
    CompareScatter,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Trace => "trace",
            Experiment::Exit => "exit",
            Experiment::Scatter => "scatter",
            Experiment::Jacobi => "jacobi",
            Experiment::Conjugates => "conjugates",
            Experiment::Index => "index",
            Experiment::Convexity => "convexity",
            Experiment::Simplicity => "simplicity",
            Experiment::Closure => "closure",
            Experiment::CompareScatter => "compare-scatter",
        }
    }

    fn needs_domain(&self) -> bool {
        !matches!(self, Experiment::Trace | Experiment::Jacobi | Experiment::Conjugates | Experiment::Index)
    }
}

fn bump_template() -> BumpConfig {
    BumpConfig {
        center: [0.0, 0.0],
        radius: 1.0,
        amplitude: 0.0,
    }
}

fn chart_template() -> ChartConfig {
    ChartConfig {
        kind: String::new(),
        curvature: Some(0.0),
        lambda: Some(String::new()),
        bump: Some(bump_template()),
    }
}

fn field_template() -> FieldConfig {
    FieldConfig {
        constant: Some(0.0),
        expression: Some(String::new()),
        bump: Some(bump_template()),
    }
}

/// A config with every optional key present; its key tree is the schema.
fn template() -> RunConfig {
    RunConfig {
        schema: String::new(),
        seed: Some(0),
        chart: chart_template(),
        field: field_template(),
        domain: Some(DomainConfig {
            kind: String::new(),
            center: [0.0; 2],
            radius: Some(0.0),
            semi_axes: Some([0.0; 2]),
            rotation: Some(0.0),
        }),
        integrator: IntegratorConfig {
            step: Some(0.0),
            adaptive: Some(false),
            tolerance: Some(0.0),
            unit_speed_tol: Some(0.0),
            max_steps: Some(0),
        },
        detection: DetectionConfig {
            graze: Some(0.0),
            time_tol: Some(0.0),
            boundary_tol: Some(0.0),
            tmax: Some(0.0),
        },
        grid: GridConfig::default(),
        output: OutputConfig { dir: Some(String::new()) },
        trace: Some(TraceConfig {
            position: [0.0; 2],
            angle: 0.0,
            duration: 0.0,
        }),
        exit: Some(ExitConfig { arclength: 0.0, angle: 0.0 }),
        jacobi: Some(JacobiConfig {
            position: [0.0; 2],
            angle: 0.0,
            duration: 0.0,
            value: [0.0; 2],
            derivative: 0.0,
        }),
        conjugates: Some(ConjugatesConfig {
            position: [0.0; 2],
            angles: vec![0.0],
            tmax: 0.0,
        }),
        index: Some(IndexConfig {
            position: [0.0; 2],
            angle: 0.0,
            duration: 0.0,
            field: String::new(),
            eps: Some(0.0),
            n: 0,
            kernel_c: 0.0,
            sweep: vec![0.0],
            trials: 0,
        }),
        convexity: Some(ConvexityConfig { samples: 0 }),
        simplicity: Some(SimplicityConfig { h: 0.0 }),
        closure: Some(ClosureConfig {
            tmax: 0.0,
            baseline: true,
            closure_tol: Some(0.0),
            escape: Some(0.0),
            touch_tol: Some(0.0),
            detection_threshold: Some(0.0),
            position_weight: Some(0.0),
            angle_weight: Some(0.0),
        }),
        compare_scatter: Some(CompareScatterConfig {
            other: Some(SystemConfig {
                chart: Some(chart_template()),
                field: Some(field_template()),
            }),
            threshold: 0.0,
        }),
    }
}

fn collect_paths(value: &toml::Value, prefix: &str, out: &mut BTreeSet<String>) {
    if let toml::Value::Table(t) = value {
        for (k, v) in t {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            collect_paths(v, &path, out);
            out.insert(path);
        }
    }
}

/// Keys of `input` that are not part of the schema.
fn unknown_keys(input: &toml::Value) -> Vec<String> {
    let known = toml::Value::try_from(template()).expect("template serializes");
    let mut known_paths = BTreeSet::new();
    collect_paths(&known, "", &mut known_paths);
    let mut given = BTreeSet::new();
    collect_paths(input, "", &mut given);
    given.into_iter().filter(|p| !known_paths.contains(p)).collect()
}

/// Everything an experiment needs, built from a validated config.
#[derive(Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub system: MagneticSystem,
    pub domain: Option<DomainSpec>,
    pub step: StepControl,
    pub scatter: ScatterSettings,
    pub grid: ScatterGrid,
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            key: key.into(),
            message: message.into(),
        });
    }

    fn finite(&mut self, key: &str, v: f64) -> bool {
        if !v.is_finite() {
            self.fail(key, format!("must be finite, got {v}"));
            return false;
        }
        true
    }

    fn positive(&mut self, key: &str, v: f64) {
        if self.finite(key, v) && v <= 0.0 {
            self.fail(key, format!("must be positive, got {v}"));
        }
    }

    fn positive_opt(&mut self, key: &str, v: Option<f64>) {
        if let Some(v) = v {
            self.positive(key, v);
        }
    }

    fn point(&mut self, key: &str, p: [f64; 2]) {
        for v in p {
            if !self.finite(key, v) {
                return;
            }
        }
    }

    fn at_least(&mut self, key: &str, v: usize, min: usize) {
        if v < min {
            self.fail(key, format!("must be at least {min}, got {v}"));
        }
    }

    fn bump(&mut self, key: &str, b: &BumpConfig) -> Option<Bump> {
        self.point(&format!("{key}.center"), b.center);
        self.positive(&format!("{key}.radius"), b.radius);
        self.finite(&format!("{key}.amplitude"), b.amplitude);
        Bump::new(Vec2::new(b.center[0], b.center[1]), b.radius, b.amplitude).ok()
    }

    fn chart(&mut self, key: &str, c: &ChartConfig) -> Option<ChartMetric> {
        let curvature = |s: &mut Self| match c.curvature {
            Some(k) if k.is_finite() => Some(k),
            Some(k) => {
                s.fail(format!("{key}.curvature"), format!("must be finite, got {k}"));
                None
            }
            None => {
                s.fail(format!("{key}.curvature"), format!("required for a {} chart", c.kind));
                None
            }
        };
        let base = match c.kind.as_str() {
            "euclidean" => Some(ChartMetric::euclidean()),
            "spherical" => curvature(self).and_then(|k| match ChartMetric::spherical(k) {
                Ok(m) => Some(m),
                Err(_) => {
                    self.fail(format!("{key}.curvature"), format!("spherical chart needs K > 0, got {k}"));
                    None
                }
            }),
            "hyperbolic" => curvature(self).and_then(|k| match ChartMetric::hyperbolic(k) {
                Ok(m) => Some(m),
                Err(_) => {
                    self.fail(format!("{key}.curvature"), format!("hyperbolic chart needs K < 0, got {k}"));
                    None
                }
            }),
            "custom" => match &c.lambda {
                Some(src) => match ChartMetric::custom_expression(src) {
                    Ok(m) => Some(m),
                    Err(e) => {
                        self.fail(format!("{key}.lambda"), e.to_string());
                        None
                    }
                },
                None => {
                    self.fail(format!("{key}.lambda"), "required for a custom chart");
                    None
                }
            },
            other => {
                self.fail(
                    format!("{key}.kind"),
                    format!("unknown chart kind `{other}`; expected euclidean, spherical, hyperbolic or custom"),
                );
                None
            }
        };
        let bump = c.bump.as_ref().map(|b| (self.bump(&format!("{key}.bump"), b), b.amplitude));
        let chart = base?;
        match bump {
            None => Some(chart),
            Some((Some(b), _)) => match chart.with_bump(b) {
                Ok(c) => Some(c),
                Err(e) => {
                    self.fail(format!("{key}.bump.amplitude"), e.to_string());
                    None
                }
            },
            Some((None, _)) => None,
        }
    }

    fn system(&mut self, key_chart: &str, key_field: &str, chart: &ChartConfig, field: &FieldConfig) -> Option<MagneticSystem> {
        let chart = self.chart(key_chart, chart);
        let bump = field.bump.as_ref().map(|b| self.bump(&format!("{key_field}.bump"), b));
        let sys = match (field.constant, &field.expression) {
            (Some(_), Some(_)) => {
                self.fail(key_field, "give either `constant` or `expression`, not both");
                None
            }
            (None, None) => {
                self.fail(key_field, "one of `constant` or `expression` is required");
                None
            }
            (Some(b), None) => {
                self.finite(&format!("{key_field}.constant"), b);
                chart.map(|c| MagneticSystem::constant(c, b))
            }
            (None, Some(src)) => match MagneticSystem::expression(ChartMetric::euclidean(), src) {
                Ok(s) => chart.map(|c| s.with_chart(c)),
                Err(e) => {
                    self.fail(format!("{key_field}.expression"), e.to_string());
                    None
                }
            },
        }?;
        match bump {
            None => Some(sys),
            Some(Some(b)) => Some(sys.with_field_bump(b)),
            Some(None) => None,
        }
    }

    fn domain(&mut self, d: &DomainConfig, chart: Option<&ChartMetric>) -> Option<DomainSpec> {
        self.point("domain.center", d.center);
        let center = Vec2::new(d.center[0], d.center[1]);
        let curve = match d.kind.as_str() {
            "circle" => match d.radius {
                Some(r) if r.is_finite() && r > 0.0 => BoundaryCurve::circle(center, r).ok(),
                Some(r) => {
                    self.fail("domain.radius", format!("must be positive, got {r}"));
                    None
                }
                None => {
                    self.fail("domain.radius", "required for a circle");
                    None
                }
            },
            "ellipse" => {
                let rot = d.rotation.unwrap_or(0.0);
                self.finite("domain.rotation", rot);
                match d.semi_axes {
                    Some([a, b]) if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 => {
                        BoundaryCurve::ellipse(center, (a, b), rot).ok()
                    }
                    Some(ax) => {
                        self.fail("domain.semi_axes", format!("must be positive, got {ax:?}"));
                        None
                    }
                    None => {
                        self.fail("domain.semi_axes", "required for an ellipse");
                        None
                    }
                }
            }
            other => {
                self.fail("domain.kind", format!("unknown domain kind `{other}`; expected circle or ellipse"));
                None
            }
        };
        match DomainSpec::new(curve?, chart?) {
            Ok(d) => Some(d),
            Err(e) => {
                self.fail("domain", e.to_string());
                None
            }
        }
    }
}

fn angle_in_open_half_turn(c: &mut Checker, key: &str, a: f64) {
    if c.finite(key, a) && !(a > 0.0 && a < std::f64::consts::PI) {
        c.fail(key, format!("must lie in (0, π), got {a}"));
    }
}

/// Parse, check keys, range-check and build the experiment inputs. Every
/// violation found is reported together.
pub fn load(text: &str, experiment: Experiment, seed: Option<u64>) -> Result<Prepared, Vec<Violation>> {
    let mut c = Checker { violations: Vec::new() };
    let raw: toml::Value = match text.parse::<toml::Table>() {
        Ok(t) => toml::Value::Table(t),
        Err(e) => {
            c.fail("<file>", format!("not valid TOML: {}", e.message()));
            return Err(c.violations);
        }
    };
    match raw.get("schema") {
        Some(toml::Value::String(s)) if s == SCHEMA => {}
        Some(toml::Value::String(s)) => c.fail(
            "schema",
            format!("config declares schema `{s}` but this build reads `{SCHEMA}`; migrate the file (see README, Configuration) and set schema = \"{SCHEMA}\""),
        ),
        Some(_) => c.fail("schema", "must be a string"),
        None => c.fail("schema", format!("missing; add schema = \"{SCHEMA}\" at the top of the file")),
    }
    for k in unknown_keys(&raw) {
        c.fail(k, "unknown key");
    }
    let mut config: RunConfig = match raw.try_into() {
        Ok(cfg) => cfg,
        Err(e) => {
            c.fail("<file>", e.message().to_string());
            return Err(c.violations);
        }
    };
    if seed.is_some() {
        config.seed = seed;
    }

    let system = c.system("chart", "field", &config.chart, &config.field);
    let domain = match (&config.domain, experiment.needs_domain()) {
        (Some(d), _) => c.domain(d, system.as_ref().map(|s| s.chart())),
        (None, true) => {
            c.fail("domain", format!("the {} experiment needs a [domain] section", experiment.name()));
            None
        }
        (None, false) => None,
    };

    let i = &config.integrator;
    c.positive_opt("integrator.step", i.step);
    c.positive_opt("integrator.tolerance", i.tolerance);
    c.positive_opt("integrator.unit_speed_tol", i.unit_speed_tol);
    if i.max_steps == Some(0) {
        c.fail("integrator.max_steps", "must be positive");
    }
    if i.adaptive == Some(true) && i.step.is_some() {
        c.fail("integrator.step", "a fixed step cannot be combined with adaptive = true");
    }
    let mut step = match i.adaptive {
        Some(true) => StepControl::adaptive(AdaptiveControl {
            tolerance: i.tolerance.unwrap_or(AdaptiveControl::default().tolerance),
            ..Default::default()
        }),
        _ => match i.step {
            Some(h) => StepControl::fixed(h),
            None => StepControl::default(),
        },
    };
    if let Some(t) = i.unit_speed_tol {
        step.unit_speed_tol = t;
    }
    if let Some(m) = i.max_steps {
        step.max_steps = m;
    }

    let d = &config.detection;
    c.positive_opt("detection.graze", d.graze);
    c.positive_opt("detection.time_tol", d.time_tol);
    c.positive_opt("detection.boundary_tol", d.boundary_tol);
    c.positive_opt("detection.tmax", d.tmax);
    let defaults = ScatterSettings::default();
    let scatter = ScatterSettings {
        graze: d.graze.unwrap_or(defaults.graze),
        time_tol: d.time_tol.unwrap_or(defaults.time_tol),
        boundary_tol: d.boundary_tol.unwrap_or(defaults.boundary_tol),
        tmax: d.tmax,
        step,
    };

    c.at_least("grid.n_boundary", config.grid.n_boundary, 1);
    c.at_least("grid.n_angle", config.grid.n_angle, 1);
    let grid = ScatterGrid {
        n_boundary: config.grid.n_boundary,
        n_angle: config.grid.n_angle,
    };

    let missing = |c: &mut Checker, section: &str| c.fail(section, format!("the {} experiment needs a [{section}] section", experiment.name()));
    match experiment {
        Experiment::Trace => match &config.trace {
            Some(t) => {
                c.point("trace.position", t.position);
                c.finite("trace.angle", t.angle);
                c.positive("trace.duration", t.duration);
            }
            None => missing(&mut c, "trace"),
        },
        Experiment::Exit => match &config.exit {
            Some(e) => {
                c.finite("exit.arclength", e.arclength);
                angle_in_open_half_turn(&mut c, "exit.angle", e.angle);
            }
            None => missing(&mut c, "exit"),
        },
        Experiment::Jacobi => match &config.jacobi {
            Some(j) => {
                c.point("jacobi.position", j.position);
                c.finite("jacobi.angle", j.angle);
                c.positive("jacobi.duration", j.duration);
                c.point("jacobi.value", j.value);
                c.finite("jacobi.derivative", j.derivative);
            }
            None => missing(&mut c, "jacobi"),
        },
        Experiment::Conjugates => match &config.conjugates {
            Some(j) => {
                c.point("conjugates.position", j.position);
                if j.angles.is_empty() {
                    c.fail("conjugates.angles", "needs at least one angle");
                }
                for a in &j.angles {
                    c.finite("conjugates.angles", *a);
                }
                c.positive("conjugates.tmax", j.tmax);
            }
            None => missing(&mut c, "conjugates"),
        },
        Experiment::Index => match &config.index {
            Some(x) => {
                c.point("index.position", x.position);
                c.finite("index.angle", x.angle);
                c.positive("index.duration", x.duration);
                c.at_least("index.n", x.n, 4);
                c.positive("index.kernel_c", x.kernel_c);
                for s in &x.sweep {
                    c.positive("index.sweep", *s);
                }
                match x.field.as_str() {
                    "sine" => {}
                    "cut_corner" => match x.eps {
                        Some(e) => c.positive("index.eps", e),
                        None => c.fail("index.eps", "required for field = \"cut_corner\""),
                    },
                    other => c.fail("index.field", format!("unknown field `{other}`; expected sine or cut_corner")),
                }
                if x.trials > 0 && config.seed.is_none() {
                    c.fail("seed", "index trials need a seed (config `seed` or --seed)");
                }
            }
            None => missing(&mut c, "index"),
        },
        Experiment::Convexity => {
            if let Some(x) = &config.convexity {
                c.at_least("convexity.samples", x.samples, 8);
            }
        }
        Experiment::Simplicity => {
            if let Some(x) = &config.simplicity {
                c.positive("simplicity.h", x.h);
                if x.h.is_finite() && x.h >= 0.5 * std::f64::consts::PI / config.grid.n_angle.max(1) as f64 {
                    c.fail("simplicity.h", "must be smaller than half the angular grid spacing");
                }
            }
        }
        Experiment::Closure => match &config.closure {
            Some(x) => {
                c.positive("closure.tmax", x.tmax);
                c.positive_opt("closure.closure_tol", x.closure_tol);
                c.positive_opt("closure.escape", x.escape);
                c.positive_opt("closure.touch_tol", x.touch_tol);
                c.positive_opt("closure.detection_threshold", x.detection_threshold);
                c.positive_opt("closure.position_weight", x.position_weight);
                c.positive_opt("closure.angle_weight", x.angle_weight);
            }
            None => missing(&mut c, "closure"),
        },
        Experiment::CompareScatter => {
            if let Some(x) = &config.compare_scatter {
                c.positive("compare_scatter.threshold", x.threshold);
                if let Some(o) = &x.other {
                    c.system(
                        "compare_scatter.other.chart",
                        "compare_scatter.other.field",
                        o.chart.as_ref().unwrap_or(&config.chart),
                        o.field.as_ref().unwrap_or(&config.field),
                    );
                }
            }
        }
        Experiment::Scatter => {}
    }

    if !c.violations.is_empty() {
        return Err(c.violations);
    }
    Ok(Prepared {
        system: system.expect("validated"),
        domain,
        step,
        scatter,
        grid,
        config,
    })
}

impl Prepared {
    pub fn closure_settings(&self) -> ClosureSettings {
        let d = ClosureSettings::default();
        let x = self.config.closure.as_ref().expect("validated");
        ClosureSettings {
            position_weight: x.position_weight.unwrap_or(d.position_weight),
            angle_weight: x.angle_weight.unwrap_or(d.angle_weight),
            closure_tol: x.closure_tol.unwrap_or(d.closure_tol),
            escape: x.escape.unwrap_or(d.escape),
            touch_tol: x.touch_tol.unwrap_or(d.touch_tol),
            detection_threshold: x.detection_threshold.unwrap_or(d.detection_threshold),
            step: self.step,
        }
    }

    /// The second system of `compare-scatter`.
    pub fn other_system(&self) -> MagneticSystem {
        let cfg = &self.config;
        let other = cfg.compare_scatter.as_ref().and_then(|c| c.other.as_ref());
        match other {
            None => self.system.clone(),
            Some(o) => {
                let mut c = Checker { violations: Vec::new() };
                c.system(
                    "compare_scatter.other.chart",
                    "compare_scatter.other.field",
                    o.chart.as_ref().unwrap_or(&cfg.chart),
                    o.field.as_ref().unwrap_or(&cfg.field),
                )
                .expect("validated")
            }
        }
    }

    /// SHA-256 of the canonical JSON form of the config, without the output
    /// location.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut cfg = self.config.clone();
        cfg.output = OutputConfig::default();
        let canonical = serde_json::to_vec(&cfg).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema = "magflow/1"
[chart]
kind = "euclidean"
[field]
constant = 1.0
[domain]
kind = "circle"
radius = 0.5
"#;

    #[test]
    fn minimal_config_loads() {
        let p = load(BASE, Experiment::Convexity, None).unwrap();
        assert!(p.domain.is_some());
        assert_eq!(p.grid.len(), 256);
    }

    #[test]
    fn template_covers_every_section() {
        let v = toml::Value::try_from(template()).unwrap();
        let mut paths = BTreeSet::new();
        collect_paths(&v, "", &mut paths);
        for key in ["chart.bump.amplitude", "compare_scatter.other.field.expression", "closure.touch_tol", "index.sweep"] {
            assert!(paths.contains(key), "{key}");
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let text = BASE.replace("radius = 0.5", "radius = -0.5\ncolour = 3") + "\n[grid]\nn_boundary = 0\nn_angle = 4\nwidth = 2\n";
        let v = load(&text, Experiment::Scatter, None).unwrap_err();
        let keys: Vec<&str> = v.iter().map(|v| v.key.as_str()).collect();
        assert!(keys.contains(&"domain.radius"));
        assert!(keys.contains(&"domain.colour"));
        assert!(keys.contains(&"grid.width"));
        assert!(keys.contains(&"grid.n_boundary"));
    }

    #[test]
    fn schema_mismatch_has_hint() {
        let v = load(&BASE.replace("magflow/1", "magflow/0"), Experiment::Convexity, None).unwrap_err();
        assert_eq!(v[0].key, "schema");
        assert!(v[0].message.contains("migrate"));
        let v = load(&BASE.replace("schema = \"magflow/1\"", ""), Experiment::Convexity, None).unwrap_err();
        assert!(v.iter().any(|v| v.key == "schema"));
    }

    #[test]
    fn missing_section_is_reported() {
        let v = load(BASE, Experiment::Trace, None).unwrap_err();
        assert_eq!(v[0].key, "trace");
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = load(BASE, Experiment::Convexity, None).unwrap();
        let b = load(&(BASE.to_string() + "[output]\ndir = \"elsewhere\"\n"), Experiment::Convexity, None).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c = load(BASE, Experiment::Convexity, Some(3)).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }
}
