//! Scenario files, the builtin catalog, and report emission.
//!
//! A scenario names a field, a grid and a list of analyses. Running it yields
//! a [`RunReport`] whose JSON is deterministic for a fixed seed and grid once
//! the `timing` block is removed.

mod catalog;
mod svg;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::annulus::{AnnulusDomain, LaurentSeries, PolarGrid};
use crate::conformal::{
    classify_type, halfspace_cross_check, mask_from_level, mc_harmonic_measure, shrinking_trend, Side,
    SubdomainMask,
};
use crate::error::{LabError, Result};
use crate::field::{HarmonicField, RealSampler, SampledField};
use crate::levelset::{
    angular_limit_with, count_ends, end_limit_point, trace_level_with, AngularLimit, AngularSector, Endpoint,
    LevelSetComplex, LevelWarning, Schedule, Tolerances,
};
use crate::meromorphic::{classify_boundedness, empirically_bounded, field_pole_report, BoundednessVerdict};
use crate::weierstrass::{
    check_corollary_equivalence, default_curvature_schedule, immerse, plane_height_field, plane_slice,
    total_curvature, MinimalImmersion, Plane, SliceOutcome, WeierstrassData,
};
use crate::Complex64;

pub use catalog::{catalog, catalog_entry, list_examples, CatalogEntry};
pub use svg::{render_svg, RadialScale, SvgStyle};

/// Version stamped into scenarios, reports, CSV and mesh side files.
pub const FORMAT_VERSION: u32 = 1;

/// `[m, re, im]` triples.
pub type TermList = Vec<(i32, f64, f64)>;

fn series(terms: &TermList) -> Result<LaurentSeries> {
    LaurentSeries::from_terms(terms.iter().map(|&(m, re, im)| (m, Complex64::new(re, im))))
}

fn default_format() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    #[serde(default)]
    pub log_coeff: f64,
    #[serde(default)]
    pub terms: TermList,
    /// `0` for the punctured disk.
    #[serde(default)]
    pub inner_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeierstrassSpec {
    pub n: i32,
    #[serde(rename = "H", default)]
    pub log_factor: TermList,
    pub dh: TermList,
    #[serde(rename = "R_prime")]
    pub r_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSpec {
    Harmonic(HarmonicSpec),
    /// A catalog entry's field, or one of the synthetic black-box fields.
    Builtin(String),
    Weierstrass(WeierstrassSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Trace,
    Ends,
    Pole,
    Flux,
    Boundedness,
    AngularLimits,
    Slice,
    Curvature,
    Equivalence,
    ConformalType,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Trace => "trace",
            Self::Ends => "ends",
            Self::Pole => "pole",
            Self::Flux => "flux",
            Self::Boundedness => "boundedness",
            Self::AngularLimits => "angular-limits",
            Self::Slice => "slice",
            Self::Curvature => "curvature",
            Self::Equivalence => "equivalence",
            Self::ConformalType => "conformal-type",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    /// Defaults to 1, or to `R′` for Weierstrass data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

impl GridSpec {
    pub fn new(r_min: f64, n_radial: usize, n_angular: usize) -> Self {
        Self {
            r_min,
            n_radial,
            n_angular,
            r_max: None,
        }
    }

    pub fn build(&self, default_outer: f64) -> Result<PolarGrid> {
        PolarGrid::with_outer(self.r_min, self.r_max.unwrap_or(default_outer), self.n_radial, self.n_angular)
            .map_err(|e| LabError::InvalidConfig(format!("grid: {e}")))
    }
}

/// Partial overrides of the scale-relative defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_tol: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            f_tol: self.f_tol.unwrap_or(base.f_tol),
            g_tol: self.g_tol.unwrap_or(base.g_tol),
            angle_tol: self.angle_tol.unwrap_or(base.angle_tol),
            limit_tol: self.limit_tol.unwrap_or(base.limit_tol),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub normal: [f64; 3],
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub top: f64,
    pub bottom: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularOptions {
    #[serde(default = "AngularOptions::default_points")]
    pub points: usize,
    #[serde(default = "AngularOptions::default_half_angles")]
    pub half_angles: Vec<f64>,
    /// Sector radius; defaults to `0.6 (1 - R)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "AngularOptions::default_depth")]
    pub depth: usize,
    /// Angle of the first boundary point.
    #[serde(default = "AngularOptions::default_phase")]
    pub phase: f64,
}

impl AngularOptions {
    fn default_points() -> usize {
        8
    }
    fn default_half_angles() -> Vec<f64> {
        vec![PI / 12.0, PI / 6.0, PI / 4.0]
    }
    fn default_depth() -> usize {
        30
    }
    fn default_phase() -> f64 {
        0.1
    }
}

impl Default for AngularOptions {
    fn default() -> Self {
        Self {
            points: Self::default_points(),
            half_angles: Self::default_half_angles(),
            radius: None,
            depth: Self::default_depth(),
            phase: Self::default_phase(),
        }
    }
}

fn default_basepoint() -> [f64; 2] {
    [0.5, 0.0]
}

fn default_steps() -> f64 {
    16.0
}

fn default_trend_angular() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConformalSpec {
    /// The whole grid annulus, `u = 1` on the inner circle.
    FullAnnulus {
        #[serde(default = "default_basepoint")]
        basepoint: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mc_walks: Option<u64>,
        /// Grid for the walks; the scenario grid when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mc_grid: Option<GridSpec>,
    },
    /// The component of `{f ≥ t}` or `{f ≤ t}` containing `seed_point`.
    Level {
        side: Side,
        seed_point: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mc_walks: Option<u64>,
    },
    /// Full annuli with inner radius `ε → 0`.
    Shrinking {
        #[serde(default = "default_basepoint")]
        basepoint: [f64; 2],
        eps: Vec<f64>,
        #[serde(default = "default_steps")]
        steps_per_unit_log: f64,
        #[serde(default = "default_trend_angular")]
        n_angular: usize,
    },
    /// Halfspace components of a Weierstrass end at the scenario level.
    Halfspace,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Levels for the `ends` analysis; the scenario level when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// Slice and equivalence planes; defaults to `x₃ = level` and `x₁ = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planes: Option<Vec<PlaneSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_radii: Option<Vec<f64>>,
    /// Schedule for end limit points on annuli with `R > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_schedule: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular: Option<AngularOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<ConformalSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_format")]
    pub format_version: u32,
    pub name: String,
    pub field: FieldSpec,
    pub analyses: Vec<Analysis>,
    pub grid: GridSpec,
    #[serde(default)]
    pub level: f64,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: Options,
}

impl Scenario {
    /// Parses and validates; every failure is an `InvalidConfig`.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| LabError::InvalidConfig(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(LabError::InvalidConfig(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.analyses.is_empty() {
            return Err(LabError::InvalidConfig("analysis list is empty".into()));
        }
        if !self.level.is_finite() {
            return Err(LabError::InvalidConfig("level must be finite".into()));
        }
        let subject = self.subject()?;
        subject.grid(&self.grid)?;
        Ok(())
    }

    /// Resolves the field spec against the catalog.
    pub fn subject(&self) -> Result<Subject> {
        resolve(&self.field, &self.grid, 0)
    }
}

/// A resolved field: a harmonic function or Weierstrass data.
#[derive(Debug, Clone)]
pub enum Subject {
    Harmonic(HarmonicField),
    Weierstrass(WeierstrassData),
}

impl Subject {
    fn outer(&self) -> f64 {
        match self {
            Self::Harmonic(_) => 1.0,
            Self::Weierstrass(d) => d.r_prime,
        }
    }

    /// The scenario grid, checked against the domain.
    pub fn grid(&self, spec: &GridSpec) -> Result<PolarGrid> {
        let grid = spec.build(self.outer())?;
        match self {
            Self::Harmonic(f) => grid
                .check_domain(&f.domain())
                .map_err(|e| LabError::InvalidConfig(format!("grid: {e}")))?,
            Self::Weierstrass(d) => {
                if grid.r_max() > d.r_prime * (1.0 + 1e-12) {
                    return Err(LabError::InvalidConfig(format!(
                        "grid reaches {} beyond R_prime = {}",
                        grid.r_max(),
                        d.r_prime
                    )));
                }
            }
        }
        Ok(grid)
    }

    /// The function whose level sets are traced: `f` itself, or `x₃`.
    pub fn level_field(&self) -> Result<HarmonicField> {
        match self {
            Self::Harmonic(f) => Ok(f.clone()),
            Self::Weierstrass(d) => plane_height_field(d, &Plane::horizontal(0.0)),
        }
    }
}

fn synthetic(name: &str, grid: &GridSpec) -> Option<Result<HarmonicField>> {
    let (domain, sampler): (AnnulusDomain, RealSampler) = match name {
        "essential_end" => (AnnulusDomain::punctured(), Arc::new(|z: Complex64| z.inv().exp().re)),
        "spiral_end" => {
            let big_r = 0.25;
            (
                AnnulusDomain::new(big_r).ok()?,
                Arc::new(move |z: Complex64| {
                    let d = z.norm() - big_r;
                    (z.arg() - (1.0 / d).ln().ln()).sin()
                }),
            )
        }
        "boundary_pole" => {
            let big_r = 0.25;
            (AnnulusDomain::new(big_r).ok()?, Arc::new(move |z: Complex64| (z - big_r).inv().re))
        }
        _ => return None,
    };
    Some(
        grid.build(1.0)
            .and_then(|g| SampledField::from_sampler(domain, g, sampler))
            .map(HarmonicField::sampled),
    )
}

/// Names of the black-box fields available as builtins.
pub const SYNTHETIC_FIELDS: [&str; 3] = ["essential_end", "spiral_end", "boundary_pole"];

fn resolve(spec: &FieldSpec, grid: &GridSpec, depth: usize) -> Result<Subject> {
    match spec {
        FieldSpec::Harmonic(h) => {
            let analytic = series(&h.terms).map_err(|e| LabError::InvalidConfig(e.to_string()))?;
            let domain = if h.inner_radius == 0.0 {
                AnnulusDomain::punctured()
            } else {
                AnnulusDomain::new(h.inner_radius).map_err(|e| LabError::InvalidConfig(e.to_string()))?
            };
            if !h.log_coeff.is_finite() {
                return Err(LabError::InvalidConfig("log_coeff must be finite".into()));
            }
            Ok(Subject::Harmonic(HarmonicField::closed_form(h.log_coeff, analytic, domain)))
        }
        FieldSpec::Weierstrass(w) => {
            let bad = |e: LabError| match e {
                e @ LabError::SlicePeriod { .. } => e,
                e => LabError::InvalidConfig(e.to_string()),
            };
            let h = series(&w.log_factor).map_err(bad)?;
            let dh = series(&w.dh).map_err(bad)?;
            WeierstrassData::new(w.n, h, dh, w.r_prime).map(Subject::Weierstrass).map_err(bad)
        }
        FieldSpec::Builtin(name) => {
            if let Some(f) = synthetic(name, grid) {
                return f.map(Subject::Harmonic).map_err(|e| LabError::InvalidConfig(e.to_string()));
            }
            let entry = catalog_entry(name)
                .ok_or_else(|| LabError::InvalidConfig(format!("unknown builtin field \"{name}\"")))?;
            if depth > 4 {
                return Err(LabError::InvalidConfig(format!("builtin \"{name}\" does not resolve")));
            }
            resolve(&entry.scenario.field, grid, depth + 1)
        }
    }
}

/// Result of one analysis: a JSON value or a structured error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AnalysisOutcome {
    Ok { value: Value },
    Error { kind: String, message: String },
}

impl AnalysisOutcome {
    pub fn value(&self) -> Option<&Value> {
        match self {
            Self::Ok { value } => Some(value),
            Self::Error { .. } => None,
        }
    }

    pub fn error_kind(&self) -> Option<&str> {
        match self {
            Self::Ok { .. } => None,
            Self::Error { kind, .. } => Some(kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum RunWarning {
    CriticalLevel {
        requested: f64,
        traced: f64,
        critical_value: f64,
        location: Complex64,
    },
    EssentialSuspected {
        analysis: String,
        score: f64,
    },
    Censored {
        censored: u64,
        walks: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub timestamp_unix: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub scenario: Scenario,
    /// Keyed by analysis name.
    pub results: BTreeMap<String, AnalysisOutcome>,
    pub warnings: Vec<RunWarning>,
    pub versions: BTreeMap<String, String>,
    pub timing: Timing,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its `timing` block.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn result(&self, analysis: Analysis) -> Option<&AnalysisOutcome> {
        self.results.get(analysis.name())
    }

    /// 0, or 3 for a numerical non-convergence, or 4 for an invariant
    /// violation (which wins).
    pub fn exit_code(&self) -> i32 {
        let kinds: Vec<&str> = self.results.values().filter_map(|r| r.error_kind()).collect();
        if kinds.contains(&"InvariantViolation") {
            4
        } else if kinds.contains(&"NumericalNonconvergence") {
            3
        } else {
            0
        }
    }
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("levelends-core".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("format".to_string(), FORMAT_VERSION.to_string()),
    ])
}

struct Run<'a> {
    scenario: &'a Scenario,
    subject: Subject,
    grid: PolarGrid,
    warnings: Vec<RunWarning>,
}

/// Runs every analysis in declaration order; failures are recorded and the
/// run continues.
pub fn run_scenario(scenario: &Scenario) -> Result<RunReport> {
    scenario.validate()?;
    let clock = Instant::now();
    let subject = scenario.subject()?;
    let grid = subject.grid(&scenario.grid)?;
    let mut run = Run {
        scenario,
        subject,
        grid,
        warnings: Vec::new(),
    };
    let mut results = BTreeMap::new();
    for &a in &scenario.analyses {
        let outcome = match run.analysis(a) {
            Ok(value) => AnalysisOutcome::Ok { value },
            Err(e) => {
                if let LabError::NonMeromorphicSuspected { score } = e {
                    run.warnings.push(RunWarning::EssentialSuspected {
                        analysis: a.name().into(),
                        score,
                    });
                }
                AnalysisOutcome::Error {
                    kind: e.kind().into(),
                    message: e.to_string(),
                }
            }
        };
        results.insert(a.name().to_string(), outcome);
    }
    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(RunReport {
        format_version: FORMAT_VERSION,
        scenario: scenario.clone(),
        results,
        warnings: run.warnings,
        versions: versions(),
        timing: Timing {
            timestamp_unix,
            wall_clock_seconds: clock.elapsed().as_secs_f64(),
        },
    })
}

/// Traces the scenario level for CSV and SVG side files.
pub fn export_complex(scenario: &Scenario) -> Result<LevelSetComplex> {
    let subject = scenario.subject()?;
    let grid = subject.grid(&scenario.grid)?;
    let field = subject.level_field()?;
    let tol = scenario.tolerances.apply(Tolerances::for_scale(field.value_scale()));
    trace_level_with(&field, scenario.level, &grid, &tol)
}

/// The immersion on the scenario grid, based at `R′`.
pub fn export_immersion(scenario: &Scenario) -> Result<MinimalImmersion> {
    match scenario.subject()? {
        Subject::Weierstrass(d) => {
            let grid = Subject::Weierstrass(d.clone()).grid(&scenario.grid)?;
            immerse(&d, &grid, Complex64::new(d.r_prime, 0.0))
        }
        Subject::Harmonic(_) => Err(LabError::InvalidConfig("a mesh needs Weierstrass data".into())),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn point(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl Run<'_> {
    fn analysis(&mut self, a: Analysis) -> Result<Value> {
        match a {
            Analysis::Trace => self.trace(),
            Analysis::Ends => self.ends(),
            Analysis::Pole => Ok(to_value(&field_pole_report(&self.subject.level_field()?)?)),
            Analysis::Flux => self.flux(),
            Analysis::Boundedness => self.boundedness(),
            Analysis::AngularLimits => self.angular(),
            Analysis::Slice => self.slice(),
            Analysis::Curvature => {
                let d = self.weierstrass("curvature")?;
                let report = total_curvature(d, &default_curvature_schedule(d.r_prime)?)?;
                Ok(to_value(&report))
            }
            Analysis::Equivalence => {
                let d = self.weierstrass("equivalence")?.clone();
                let planes = self.planes()?;
                if planes.len() < 2 {
                    return Err(LabError::InvalidConfig("equivalence needs two planes".into()));
                }
                Ok(to_value(&check_corollary_equivalence(&d, &planes[0], &planes[1], &self.grid)?))
            }
            Analysis::ConformalType => self.conformal(),
        }
    }

    fn weierstrass(&self, what: &str) -> Result<&WeierstrassData> {
        match &self.subject {
            Subject::Weierstrass(d) => Ok(d),
            Subject::Harmonic(_) => Err(LabError::InvalidConfig(format!("{what} needs Weierstrass data"))),
        }
    }

    fn tolerances(&self, field: &HarmonicField) -> Tolerances {
        self.scenario.tolerances.apply(Tolerances::for_scale(field.value_scale()))
    }

    /// Traces `t`, moving off a critical level by `1e-6` of the value scale.
    fn trace_at(&mut self, field: &HarmonicField, t: f64) -> Result<LevelSetComplex> {
        let tol = self.tolerances(field);
        let cx = trace_level_with(field, t, &self.grid, &tol)?;
        let Some(LevelWarning::CriticalLevel {
            critical_value,
            location,
        }) = cx.warnings.first().cloned()
        else {
            return Ok(cx);
        };
        let traced = t + 1e-6 * field.value_scale();
        self.warnings.push(RunWarning::CriticalLevel {
            requested: t,
            traced,
            critical_value,
            location,
        });
        trace_level_with(field, traced, &self.grid, &tol)
    }

    fn trace(&mut self) -> Result<Value> {
        let field = self.subject.level_field()?;
        let cx = self.trace_at(&field, self.scenario.level)?;
        let inner_ends = cx
            .arcs
            .iter()
            .map(|a| [a.start, a.end].iter().filter(|e| **e == Endpoint::InnerLimit).count())
            .sum::<usize>();
        Ok(json!({
            "level": cx.level,
            "arcs": cx.arcs.len(),
            "closed_loops": cx.closed_loops().count(),
            "crossing_nodes": cx.nodes.iter().map(|n| n.z).collect::<Vec<_>>(),
            "components": cx.components.len(),
            "inner_arc_ends": inner_ends,
            "vertices": cx.arcs.iter().map(|a| a.vertices.len()).sum::<usize>(),
        }))
    }

    fn limit_schedule(&self, field: &HarmonicField, fallback: &Schedule) -> Result<Schedule> {
        let domain = field.domain();
        match self.scenario.options.limit_schedule {
            Some(s) => Schedule::geometric(&domain, s.top, s.bottom, s.count),
            None if !domain.is_punctured() && field.has_exact_values() => {
                let big_r = domain.inner_radius();
                Schedule::geometric(&domain, big_r + 0.1 * (1.0 - big_r), big_r + 1e-10, Schedule::DEFAULT_LEN)
            }
            None => Ok(fallback.clone()),
        }
    }

    fn ends(&mut self) -> Result<Value> {
        let field = self.subject.level_field()?;
        let levels = self
            .scenario
            .options
            .levels
            .clone()
            .unwrap_or_else(|| vec![self.scenario.level]);
        let schedule = Schedule::default_for(&field.domain(), &self.grid)?;
        let limit_schedule = self.limit_schedule(&field, &schedule)?;
        let tol = self.tolerances(&field);
        let mut counts = Vec::new();
        for &t in &levels {
            let cx = self.trace_at(&field, t)?;
            let ends = count_ends(&cx, &cx.domain, &schedule)?;
            let mut limits = Vec::new();
            if !field.domain().is_punctured() {
                for arc in &cx.arcs {
                    if arc.start == Endpoint::InnerLimit || arc.end == Endpoint::InnerLimit {
                        limits.push(to_value(&end_limit_point(&field, &cx, arc.id, &limit_schedule, &tol)?));
                    }
                }
            }
            counts.push(json!({
                "requested": t,
                "traced": cx.level,
                "ends": ends,
                "arcs": cx.arcs.len(),
                "end_limits": limits,
            }));
        }
        let first = counts.first().and_then(|c| c["ends"].as_u64());
        let level_independent = counts.iter().all(|c| c["ends"].as_u64() == first);
        Ok(json!({
            "schedule": schedule.radii(),
            "counts": counts,
            "level_independent": level_independent,
        }))
    }

    fn flux(&mut self) -> Result<Value> {
        let field = self.subject.level_field()?;
        let radii = match &self.scenario.options.flux_radii {
            Some(r) => r.clone(),
            None => {
                let (lo, hi) = (self.grid.r_min(), self.grid.r_max());
                vec![lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)]
            }
        };
        let mut out = Vec::new();
        for r in radii {
            let v = field.flux(r)?;
            out.push(json!({"radius": v.contour_radius, "flux": v.value}));
        }
        Ok(json!({ "values": out }))
    }

    fn boundedness(&mut self) -> Result<Value> {
        let field = self.subject.level_field()?;
        let verdict = classify_boundedness(&field)?;
        if let BoundednessVerdict::EssentialSuspected(score) = verdict {
            self.warnings.push(RunWarning::EssentialSuspected {
                analysis: Analysis::Boundedness.name().into(),
                score,
            });
        }
        let schedule = Schedule::default_for(&field.domain(), &self.grid)?;
        let empirical = empirically_bounded(&field, &schedule);
        Ok(json!({ "verdict": to_value(&verdict), "empirically_bounded": empirical }))
    }

    fn angular(&mut self) -> Result<Value> {
        let field = self.subject.level_field()?;
        let domain = field.domain();
        let opts = self.scenario.options.angular.clone().unwrap_or_default();
        let radius = opts.radius.unwrap_or(0.6 * (1.0 - domain.inner_radius()));
        let tol = self.tolerances(&field);
        let mut out = Vec::new();
        for k in 0..opts.points {
            let xi = Complex64::from_polar(domain.inner_radius(), opts.phase + TAU * k as f64 / opts.points as f64);
            for &alpha in &opts.half_angles {
                let sector = AngularSector::new(&domain, xi, alpha, radius)?;
                let limit = angular_limit_with(&field, &sector, opts.depth, &tol)?;
                let (converged, value, oscillation) = match limit {
                    AngularLimit::Converged { value, oscillation } => (true, Some(value), oscillation),
                    AngularLimit::Divergent { oscillation } => (false, None, oscillation),
                };
                out.push(json!({
                    "xi": xi,
                    "half_angle": alpha,
                    "converged": converged,
                    "value": value,
                    "oscillation": oscillation,
                }));
            }
        }
        Ok(json!({ "radius": radius, "limits": out }))
    }

    fn planes(&self) -> Result<Vec<Plane>> {
        match &self.scenario.options.planes {
            Some(ps) => ps
                .iter()
                .map(|p| Plane::new(p.normal, p.offset).map_err(|e| LabError::InvalidConfig(e.to_string())))
                .collect(),
            None => Ok(vec![Plane::horizontal(self.scenario.level), Plane::new([1.0, 0.0, 0.0], 0.0)?]),
        }
    }

    fn slice(&mut self) -> Result<Value> {
        let d = self.weierstrass("slice")?.clone();
        let mut out = Vec::new();
        for plane in self.planes()? {
            let entry = match plane_slice(&d, &plane, &self.grid)? {
                SliceOutcome::Traced {
                    complex,
                    ends,
                    components,
                } => json!({
                    "plane": plane,
                    "finite": true,
                    "ends": ends,
                    "components": components,
                    "arcs": complex.arcs.len(),
                }),
                SliceOutcome::InfiniteSuspected { score } => {
                    self.warnings.push(RunWarning::EssentialSuspected {
                        analysis: Analysis::Slice.name().into(),
                        score,
                    });
                    json!({ "plane": plane, "finite": false, "score": score })
                }
            };
            out.push(entry);
        }
        Ok(json!({ "slices": out }))
    }

    fn conformal(&mut self) -> Result<Value> {
        let spec = match (&self.scenario.options.conformal, &self.subject) {
            (Some(s), _) => s.clone(),
            (None, Subject::Weierstrass(_)) => ConformalSpec::Halfspace,
            (None, Subject::Harmonic(_)) => ConformalSpec::FullAnnulus {
                basepoint: default_basepoint(),
                mc_walks: None,
                mc_grid: None,
            },
        };
        let grid = self.grid;
        let seed = self.scenario.seed;
        match spec {
            ConformalSpec::FullAnnulus {
                basepoint,
                mc_walks,
                mc_grid,
            } => {
                let z0 = point(basepoint);
                let build = |g: &PolarGrid| SubdomainMask::full_annulus(g, z0);
                let mut report = classify_type(build, &grid, None)?;
                if let Some(walks) = mc_walks {
                    let g = match mc_grid {
                        Some(spec) => spec.build(grid.r_max())?,
                        None => grid,
                    };
                    let mc = mc_harmonic_measure(&build(&g)?, z0, walks, seed)?;
                    self.note_censored(mc.censored, mc.walks);
                    report.u_mc = Some(mc.probability);
                    report.half_width = Some(mc.half_width);
                }
                Ok(to_value(&report))
            }
            ConformalSpec::Level {
                side,
                seed_point,
                mc_walks,
            } => {
                let field = self.subject.level_field()?;
                let t = self.scenario.level;
                let z0 = point(seed_point);
                let build = |g: &PolarGrid| mask_from_level(&field, t, side, z0, g);
                let mut report = classify_type(build, &grid, None)?;
                if let Some(walks) = mc_walks {
                    let mc = mc_harmonic_measure(&build(&grid)?, z0, walks, seed)?;
                    self.note_censored(mc.censored, mc.walks);
                    report.u_mc = Some(mc.probability);
                    report.half_width = Some(mc.half_width);
                }
                Ok(to_value(&report))
            }
            ConformalSpec::Shrinking {
                basepoint,
                eps,
                steps_per_unit_log,
                n_angular,
            } => {
                let z0 = point(basepoint);
                let trend = shrinking_trend(
                    |g| SubdomainMask::full_annulus(g, z0),
                    &eps,
                    grid.r_max(),
                    steps_per_unit_log,
                    n_angular,
                )?;
                let exact: Vec<f64> = eps.iter().map(|e| (z0.norm() / grid.r_max()).ln() / (e / grid.r_max()).ln()).collect();
                let mut v = to_value(&trend);
                v["exact_log_profile"] = to_value(&exact);
                Ok(v)
            }
            ConformalSpec::Halfspace => {
                let d = self.weierstrass("a halfspace check")?;
                Ok(to_value(&halfspace_cross_check(d, self.scenario.level, &grid)?))
            }
        }
    }

    fn note_censored(&mut self, censored: u64, walks: u64) {
        if censored > 0 {
            self.warnings.push(RunWarning::Censored { censored, walks });
        }
    }
}
