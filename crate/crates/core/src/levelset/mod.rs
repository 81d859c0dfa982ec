//! Level sets `f⁻¹(t)` as traced 1-complexes, their ends, end limit
//! points on the inner boundary, and angular limits.

mod angular;
mod ends;
mod export;
mod trace;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::annulus::{AnnulusDomain, PolarGrid};
use crate::error::{LabError, Result};

pub use angular::{angular_limit, angular_limit_with, AngularLimit, AngularSector};
pub use ends::{
    alternation_holds, check_no_compact_bounding, circle_crossings, count_ends, end_limit_point,
    end_representatives, EndDescriptor, EndVerdict,
};
pub use export::write_arcs_csv;
pub use trace::{trace_level, trace_level_with};

/// Scale-relative tolerances for level-set work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `|f - t|` below which a critical point counts as lying on the level.
    pub f_tol: f64,
    /// `|∇f|` below which a point counts as critical.
    pub g_tol: f64,
    /// Tail oscillation bound for end limit angles, in radians.
    pub angle_tol: f64,
    /// Oscillation bound for angular limits.
    pub limit_tol: f64,
}

impl Tolerances {
    pub fn for_scale(scale: f64) -> Self {
        Self {
            f_tol: 1e-9 * scale,
            g_tol: 1e-6 * scale,
            angle_tol: 1e-2,
            limit_tol: 1e-6 * scale,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::for_scale(1.0)
    }
}

/// How an arc terminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    /// On the outer circle `|z| = r_max`.
    OuterBoundary,
    /// On the innermost grid circle, heading toward `∂_R` or the puncture.
    InnerLimit,
    /// At a crossing node (index into `LevelSetComplex::nodes`).
    CrossingNode(usize),
    /// The arc closes up; both endpoints carry this tag.
    ClosedLoop,
}

/// A vertex in both cylinder coordinates and the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcVertex {
    /// `log r`.
    pub s: f64,
    /// Unwrapped angle; consecutive vertices differ by less than `π`.
    pub theta: f64,
}

impl ArcVertex {
    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(self.s.exp(), self.theta)
    }

    pub fn radius(&self) -> f64 {
        self.s.exp()
    }
}

/// One simple polyline of the level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelArc {
    pub id: usize,
    pub vertices: Vec<ArcVertex>,
    pub start: Endpoint,
    pub end: Endpoint,
}

impl LevelArc {
    pub fn is_closed(&self) -> bool {
        self.start == Endpoint::ClosedLoop
    }

    /// Net turns around `z = 0`, from the unwrapped angle.
    pub fn winding(&self) -> i64 {
        match (self.vertices.first(), self.vertices.last()) {
            (Some(a), Some(b)) => ((b.theta - a.theta) / std::f64::consts::TAU).round() as i64,
            _ => 0,
        }
    }

    /// Vertices ordered so that the given endpoint comes first.
    pub fn walk_from_end(&self, from_start: bool) -> Vec<ArcVertex> {
        if from_start {
            self.vertices.clone()
        } else {
            self.vertices.iter().rev().copied().collect()
        }
    }
}

/// A critical point of `f` lying on the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingNode {
    pub z: Complex64,
    /// `(arc id, true if the arc starts here)` per incident arc end.
    pub incident: Vec<(usize, bool)>,
}

/// Non-fatal findings attached to a traced level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LevelWarning {
    /// The level passes through (or within `f_tol` of) a critical value.
    CriticalLevel { critical_value: f64, location: Complex64 },
}

/// The traced 1-complex `f⁻¹(t)` inside the grid's annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetComplex {
    pub level: f64,
    pub grid: PolarGrid,
    pub domain: AnnulusDomain,
    pub arcs: Vec<LevelArc>,
    pub nodes: Vec<CrossingNode>,
    /// Arc ids grouped by connectivity through crossing nodes.
    pub components: Vec<Vec<usize>>,
    pub warnings: Vec<LevelWarning>,
}

impl LevelSetComplex {
    pub fn arc(&self, id: usize) -> Result<&LevelArc> {
        self.arcs
            .get(id)
            .ok_or_else(|| LabError::InvalidArgument(format!("no arc with id {id}")))
    }

    pub fn closed_loops(&self) -> impl Iterator<Item = &LevelArc> {
        self.arcs.iter().filter(|a| a.is_closed())
    }

    pub fn has_critical_warning(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, LevelWarning::CriticalLevel { .. }))
    }
}

/// Nested circles `r_0 > r_1 > …` shrinking toward `∂_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    radii: Vec<f64>,
}

impl Schedule {
    pub const DEFAULT_LEN: usize = 12;

    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 4 {
            return Err(LabError::InvalidArgument(
                "a schedule needs at least four radii".into(),
            ));
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|r| *r <= 0.0) {
            return Err(LabError::InvalidArgument(
                "schedule radii must be positive and strictly decreasing".into(),
            ));
        }
        Ok(Self { radii })
    }

    /// `count` radii with `r - R` geometric from `top - R` down to `bottom - R`.
    pub fn geometric(domain: &AnnulusDomain, top: f64, bottom: f64, count: usize) -> Result<Self> {
        let big_r = domain.inner_radius();
        if !(bottom > big_r && top > bottom) || count < 2 {
            return Err(LabError::InvalidArgument(format!(
                "bad schedule bounds [{bottom}, {top}] over R = {big_r}"
            )));
        }
        let (d0, d1) = (top - big_r, bottom - big_r);
        let ratio = (d1 / d0).powf(1.0 / (count - 1) as f64);
        let mut radii: Vec<f64> = (0..count).map(|k| big_r + d0 * ratio.powi(k as i32)).collect();
        radii[count - 1] = bottom;
        Self::new(radii)
    }

    /// Twelve radii from `d^{1/4}` down to `d = r_min - R`, capped at half the
    /// annulus width.
    pub fn default_for(domain: &AnnulusDomain, grid: &PolarGrid) -> Result<Self> {
        let big_r = domain.inner_radius();
        let d = grid.r_min() - big_r;
        let top = d.powf(0.25).min(0.5 * (grid.r_max() - big_r));
        Self::geometric(domain, big_r + top, grid.r_min(), Self::DEFAULT_LEN)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn outermost(&self) -> f64 {
        self.radii[0]
    }

    pub fn innermost(&self) -> f64 {
        *self.radii.last().unwrap()
    }
}
