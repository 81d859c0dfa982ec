//! Pole order of `ω̃` at the puncture, the ends/pole-order law, and the
//! boundedness verdicts that go with it.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::annulus::{PolarGrid, COEFF_THRESHOLD};
use crate::error::{LabError, Result};
use crate::field::{HarmonicField, OneForm};
use crate::levelset::{count_ends, trace_level, Endpoint, LevelSetComplex, Schedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    /// Order of the pole of `ω̃` at 0; zero when `ω̃` is holomorphic there.
    pub pole_order: u32,
    pub principal_coefficients: BTreeMap<i32, Complex64>,
    pub agreement_score: f64,
    pub predicted_end_count: u32,
}

/// `2(p - 1)` for `p ≥ 2`, else 0.
pub fn predicted_ends(p: u32) -> u32 {
    if p >= 2 {
        2 * (p - 1)
    } else {
        0
    }
}

/// Reads the pole order off the series of `w` in `ω = w dz`.
///
/// The threshold is relative to the largest coefficient, so rescaling `f`
/// never moves the detected leading index.
pub fn pole_order(form: &OneForm, tau: f64) -> PoleReport {
    let series = &form.coeff_series;
    let threshold = tau * series.max_abs();
    let significant: Vec<(i32, Complex64)> = series
        .terms()
        .into_iter()
        .filter(|(_, a)| a.norm() > threshold)
        .collect();
    let m_min = significant.iter().map(|(m, _)| *m).min().unwrap_or(0);
    let p = (-m_min).max(0) as u32;
    PoleReport {
        pole_order: p,
        principal_coefficients: significant.into_iter().filter(|(m, _)| *m < 0).collect(),
        agreement_score: form.recovery_score.unwrap_or(0.0),
        predicted_end_count: predicted_ends(p),
    }
}

/// Pole report straight from a field at the default threshold.
pub fn field_pole_report(field: &HarmonicField) -> Result<PoleReport> {
    Ok(pole_order(&field.omega()?, COEFF_THRESHOLD))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundednessVerdict {
    Bounded,
    UnboundedPole(u32),
    EssentialSuspected(f64),
}

fn require_punctured(field: &HarmonicField) -> Result<()> {
    if field.domain().is_punctured() {
        Ok(())
    } else {
        Err(LabError::Domain("needs the punctured disk (R = 0)".into()))
    }
}

pub fn classify_boundedness(field: &HarmonicField) -> Result<BoundednessVerdict> {
    require_punctured(field)?;
    match field_pole_report(field) {
        Ok(r) if r.pole_order == 0 => Ok(BoundednessVerdict::Bounded),
        Ok(r) => Ok(BoundednessVerdict::UnboundedPole(r.pole_order)),
        Err(LabError::NonMeromorphicSuspected { score }) => Ok(BoundednessVerdict::EssentialSuspected(score)),
        Err(e) => Err(e),
    }
}

/// `max |f|` on each schedule circle, from 1024 samples.
pub fn circle_maxima(field: &HarmonicField, schedule: &Schedule) -> Vec<f64> {
    let n = 1024;
    schedule
        .radii()
        .iter()
        .map(|&r| {
            (0..n)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / n as f64;
                    field.probe(Complex64::from_polar(r, th)).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Empirical boundedness: the circle maxima never grow as the circles shrink
/// (after the first).
pub fn empirically_bounded(field: &HarmonicField, schedule: &Schedule) -> bool {
    let m = circle_maxima(field, schedule);
    m[1..]
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub requested: f64,
    /// Level actually traced; differs from `requested` after a critical retry.
    pub traced: f64,
    pub ends: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndPoleReport {
    pub pass: bool,
    /// False when the law makes no claim (no pole) and counts were only recorded.
    pub judged: bool,
    pub pole_order: u32,
    pub counts: Vec<LevelCount>,
}

/// Traces `t`, retrying at `t + ε` (ε = 1e-6 · value scale) when the level is
/// critical.
pub fn trace_regular(field: &HarmonicField, t: f64, grid: &PolarGrid) -> Result<LevelSetComplex> {
    let cx = trace_level(field, t, grid)?;
    if !cx.has_critical_warning() {
        return Ok(cx);
    }
    trace_level(field, t + 1e-6 * field.value_scale(), grid)
}

/// Checks `count_ends(t) = 2(p - 1)` over the given levels.
pub fn check_end_pole_relation(field: &HarmonicField, t_values: &[f64], grid: &PolarGrid) -> Result<EndPoleReport> {
    require_punctured(field)?;
    let report = field_pole_report(field)?;
    let schedule = Schedule::default_for(&field.domain(), grid)?;
    let mut counts = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let cx = trace_regular(field, t, grid)?;
        let ends = count_ends(&cx, &cx.domain, &schedule)?;
        counts.push(LevelCount {
            requested: t,
            traced: cx.level,
            ends,
        });
    }
    let p = report.pole_order;
    // p = 1 means w = c/z + holomorphic, i.e. c log|z| plus a bounded part
    let judged = p >= 1;
    let pass = !judged || counts.iter().all(|c| c.ends == report.predicted_end_count as usize);
    Ok(EndPoleReport {
        pass,
        judged,
        pole_order: p,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailVerdict {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfIntegral {
    /// `∫ |∇f| ds` over the traced arc.
    pub value: f64,
    /// Contributions of the schedule annuli, outermost first.
    pub per_annulus: Vec<f64>,
    pub verdict: TailVerdict,
}

/// `∫_α |df|` along an end arc, with a summability verdict from the last six
/// schedule annuli.
pub fn arc_df_integral(
    field: &HarmonicField,
    cx: &LevelSetComplex,
    arc: usize,
    schedule: &Schedule,
) -> Result<DfIntegral> {
    let a = cx.arc(arc)?;
    if a.start != Endpoint::InnerLimit && a.end != Endpoint::InnerLimit {
        return Err(LabError::NotAnEnd { arc });
    }
    if a.vertices.len() < 4 {
        return Err(LabError::InsufficientResolution {
            vertices: a.vertices.len(),
        });
    }
    let log_radii: Vec<f64> = schedule.radii().iter().map(|r| r.ln()).collect();
    let mut per_annulus = vec![0.0; log_radii.len() - 1];
    let mut value = 0.0;
    for w in a.vertices.windows(2) {
        let (p, q) = (w[0], w[1]);
        let (zp, zq) = (p.z(), q.z());
        let len = (zq - zp).norm();
        let at = |u: f64| zp + (zq - zp) * u;
        value += len * field.complex_gradient(at(0.5)).norm();
        for (j, slot) in per_annulus.iter_mut().enumerate() {
            let (hi, lo) = (log_radii[j], log_radii[j + 1]);
            let (u0, u1) = if p.s == q.s {
                if p.s >= lo && p.s < hi {
                    (0.0, 1.0)
                } else {
                    continue;
                }
            } else {
                let ua = ((lo - p.s) / (q.s - p.s)).clamp(0.0, 1.0);
                let ub = ((hi - p.s) / (q.s - p.s)).clamp(0.0, 1.0);
                (ua.min(ub), ua.max(ub))
            };
            if u1 > u0 {
                *slot += len * (u1 - u0) * field.complex_gradient(at(0.5 * (u0 + u1))).norm();
            }
        }
    }
    let tail = &per_annulus[per_annulus.len().saturating_sub(6)..];
    let summable = tail.windows(2).all(|w| w[0] > 0.0 && w[1] / w[0] < 0.9);
    Ok(DfIntegral {
        value,
        per_annulus,
        verdict: if summable {
            TailVerdict::Finite
        } else {
            TailVerdict::Infinite
        },
    })
}
