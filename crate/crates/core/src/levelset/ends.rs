use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ArcVertex, Endpoint, LevelSetComplex, Schedule, Tolerances};
use crate::annulus::AnnulusDomain;
use crate::error::{LabError, Result};
use crate::field::HarmonicField;

/// Where an end of the level set accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndVerdict {
    /// `R = 0`: every end runs into the puncture.
    PunctureLimit,
    /// The end converges to the point `xi` on `∂_R`.
    InnerPointLimit { xi: Complex64 },
    /// The angles along the schedule never settle.
    NonConvergent { oscillation: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndDescriptor {
    pub arc: usize,
    pub verdict: EndVerdict,
    pub radii_visited: Vec<f64>,
    /// Unwrapped angle of the end on each visited circle.
    pub angles: Vec<f64>,
}

/// `(arc id, true if the end is the arc's start)` for every end that crosses
/// the whole schedule.
pub fn end_representatives(cx: &LevelSetComplex, schedule: &Schedule) -> Result<Vec<(usize, bool)>> {
    let r_top = schedule.outermost();
    let mut ends = Vec::new();
    for arc in &cx.arcs {
        for (from_start, kind) in [(true, arc.start), (false, arc.end)] {
            if kind != Endpoint::InnerLimit {
                continue;
            }
            let walk = arc.walk_from_end(from_start);
            if walk.iter().any(|v| v.radius() >= r_top) {
                ends.push((arc.id, from_start));
            } else {
                return Err(LabError::UndeterminedEnd { arc: arc.id });
            }
        }
    }
    Ok(ends)
}

/// Number of arc ends that cross every circle of the schedule.
///
/// Each end is an arc germ running into the inner grid circle; an arc whose
/// two ends both do so (a loop through the puncture) contributes two.
pub fn count_ends(cx: &LevelSetComplex, domain: &AnnulusDomain, schedule: &Schedule) -> Result<usize> {
    if schedule.innermost() < cx.grid.r_min() * (1.0 - 1e-12) {
        return Err(LabError::InvalidArgument(format!(
            "schedule reaches {} below the traced grid (r_min = {})",
            schedule.innermost(),
            cx.grid.r_min()
        )));
    }
    if schedule.innermost() <= domain.inner_radius() {
        return Err(LabError::Domain("schedule leaves the annulus".into()));
    }
    Ok(end_representatives(cx, schedule)?.len())
}

/// Angle at which a walk first climbs through the circle `|z| = r`.
fn crossing_angle(walk: &[ArcVertex], r: f64) -> Option<f64> {
    let s = r.ln();
    walk.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.s <= s && b.s >= s && b.s > a.s {
            let tau = (s - a.s) / (b.s - a.s);
            Some(a.theta + tau * (b.theta - a.theta))
        } else {
            None
        }
    })
}

/// Root of `f(r e^{iθ}) = t` closest to `theta`, searched in widening windows.
fn follow_root(field: &HarmonicField, t: f64, r: f64, theta: f64, hint: f64) -> Option<f64> {
    let g = |th: f64| field.probe(Complex64::from_polar(r, th)) - t;
    let samples = 129;
    let mut w = hint.max(1e-9);
    while w <= PI {
        let mut best: Option<(f64, f64)> = None;
        let step = 2.0 * w / (samples - 1) as f64;
        let mut prev_th = theta - w;
        let mut prev_g = g(prev_th);
        for k in 1..samples {
            let th = theta - w + k as f64 * step;
            let gv = g(th);
            if prev_g == 0.0 || prev_g.signum() != gv.signum() {
                let (mut lo, mut hi, mut glo) = (prev_th, th, prev_g);
                if prev_g != 0.0 {
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        let gm = g(mid);
                        if gm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if gm.signum() == glo.signum() {
                            lo = mid;
                            glo = gm;
                        } else {
                            hi = mid;
                        }
                    }
                }
                let root = 0.5 * (lo + hi);
                let dist = (root - theta).abs();
                if best.is_none_or(|(_, d)| dist < d) {
                    best = Some((root, dist));
                }
            }
            prev_th = th;
            prev_g = gv;
        }
        if let Some((root, _)) = best {
            return Some(root);
        }
        w *= 2.0;
    }
    None
}

/// Follows an end of `arc` down the schedule and decides its limit point.
///
/// The traced polyline fixes the angle on the outermost circle; below that the
/// end is continued on each circle by root finding on the field itself, so the
/// schedule may run deeper than the traced grid when exact values exist.
pub fn end_limit_point(
    field: &HarmonicField,
    cx: &LevelSetComplex,
    arc: usize,
    schedule: &Schedule,
    tol: &Tolerances,
) -> Result<EndDescriptor> {
    let level_arc = cx.arc(arc)?;
    let from_start = if level_arc.start == Endpoint::InnerLimit {
        true
    } else if level_arc.end == Endpoint::InnerLimit {
        false
    } else {
        return Err(LabError::NotAnEnd { arc });
    };
    let domain = field.domain();
    if domain.is_punctured() {
        return Ok(EndDescriptor {
            arc,
            verdict: EndVerdict::PunctureLimit,
            radii_visited: schedule.radii().to_vec(),
            angles: Vec::new(),
        });
    }
    let walk = level_arc.walk_from_end(from_start);
    let theta0 = crossing_angle(&walk, schedule.outermost()).ok_or(LabError::UndeterminedEnd { arc })?;

    let mut angles = vec![theta0];
    let mut radii = vec![schedule.outermost()];
    let mut hint = 0.1;
    for &r in &schedule.radii()[1..] {
        let prev = *angles.last().unwrap();
        match follow_root(field, cx.level, r, prev, hint) {
            Some(th) => {
                hint = 4.0 * (th - prev).abs();
                angles.push(th);
                radii.push(r);
            }
            None => {
                return Ok(EndDescriptor {
                    arc,
                    verdict: EndVerdict::NonConvergent {
                        oscillation: f64::INFINITY,
                    },
                    radii_visited: radii,
                    angles,
                })
            }
        }
    }

    let tail = &angles[angles.len() / 2..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let oscillation = hi - lo;
    let verdict = if oscillation < tol.angle_tol {
        EndVerdict::InnerPointLimit {
            xi: Complex64::from_polar(domain.inner_radius(), *angles.last().unwrap()),
        }
    } else {
        EndVerdict::NonConvergent { oscillation }
    };
    Ok(EndDescriptor {
        arc,
        verdict,
        radii_visited: radii,
        angles,
    })
}

/// True iff every closed loop winds around the origin.
pub fn check_no_compact_bounding(cx: &LevelSetComplex) -> bool {
    cx.closed_loops().all(|arc| arc.winding() != 0)
}

/// Angles in `[0, 2π)` where the complex meets `|z| = r`, sorted.
pub fn circle_crossings(cx: &LevelSetComplex, r: f64) -> Vec<f64> {
    let s = r.ln();
    let mut out = Vec::new();
    for arc in &cx.arcs {
        let last = arc.vertices.len().saturating_sub(2);
        for (k, w) in arc.vertices.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if (a.s - s) * (b.s - s) < 0.0 || (a.s == s && b.s != s) {
                let tau = (s - a.s) / (b.s - a.s);
                out.push((a.theta + tau * (b.theta - a.theta)).rem_euclid(TAU));
            } else if k == last && b.s == s && a.s != s && !arc.is_closed() {
                // an arc ending on the circle
                out.push(b.theta.rem_euclid(TAU));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Checks that `f - t` changes sign between consecutive crossings on `|z| = r`.
pub fn alternation_holds(field: &HarmonicField, cx: &LevelSetComplex, r: f64) -> bool {
    let crossings = circle_crossings(cx, r);
    let n = crossings.len();
    if n == 0 {
        return true;
    }
    if n % 2 == 1 {
        return false;
    }
    let signs: Vec<bool> = (0..n)
        .map(|k| {
            let a = crossings[k];
            let b = if k + 1 < n { crossings[k + 1] } else { crossings[0] + TAU };
            field.probe(Complex64::from_polar(r, 0.5 * (a + b))) > cx.level
        })
        .collect();
    (0..n).all(|k| signs[k] != signs[(k + 1) % n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{LaurentSeries, PolarGrid};
    use crate::field::{RealSampler, SampledField};
    use crate::levelset::{trace_level, LevelArc};
    use std::sync::Arc;

    fn closed(log_coeff: f64, terms: &[(i32, f64)]) -> HarmonicField {
        HarmonicField::punctured(log_coeff, LaurentSeries::from_real(terms))
    }

    fn default_schedule(cx: &LevelSetComplex) -> Schedule {
        Schedule::default_for(&cx.domain, &cx.grid).unwrap()
    }

    #[test]
    fn end_count_examples() {
        let grid = PolarGrid::new(1e-3, 256, 512).unwrap();
        let dipole = closed(0.0, &[(-1, 1.0)]);
        let cx = trace_level(&dipole, 0.0, &grid).unwrap();
        assert_eq!(count_ends(&cx, &cx.domain, &default_schedule(&cx)).unwrap(), 2);

        let log_end = closed(1.0, &[]);
        for t in [-2.0, 0.5f64.ln(), -0.1] {
            let cx = trace_level(&log_end, t, &grid).unwrap();
            assert_eq!(count_ends(&cx, &cx.domain, &default_schedule(&cx)).unwrap(), 0);
        }

        let quad = closed(0.0, &[(-2, 1.0)]);
        let cx = trace_level(&quad, 0.0, &grid).unwrap();
        assert_eq!(count_ends(&cx, &cx.domain, &default_schedule(&cx)).unwrap(), 4);
    }

    #[test]
    fn loop_through_puncture_counts_twice() {
        // Re(1/z) = 2 is the circle |z - 1/4| = 1/4, both ends at z = 0
        let grid = PolarGrid::new(1e-3, 256, 512).unwrap();
        let cx = trace_level(&closed(0.0, &[(-1, 1.0)]), 2.0, &grid).unwrap();
        assert_eq!(cx.arcs.len(), 1);
        assert_eq!(cx.arcs[0].start, Endpoint::InnerLimit);
        assert_eq!(cx.arcs[0].end, Endpoint::InnerLimit);
        assert_eq!(count_ends(&cx, &cx.domain, &default_schedule(&cx)).unwrap(), 2);
    }

    #[test]
    fn shallow_excursion_is_undetermined() {
        // Re(1/z) = 100: a circle of diameter 0.01 through the puncture
        let grid = PolarGrid::new(1e-3, 256, 512).unwrap();
        let cx = trace_level(&closed(0.0, &[(-1, 1.0)]), 100.0, &grid).unwrap();
        assert!(matches!(
            count_ends(&cx, &cx.domain, &default_schedule(&cx)),
            Err(LabError::UndeterminedEnd { .. })
        ));
    }

    #[test]
    fn puncture_limit_for_punctured_domain() {
        let grid = PolarGrid::new(1e-3, 256, 512).unwrap();
        let f = closed(0.0, &[(-1, 1.0)]);
        let cx = trace_level(&f, 0.0, &grid).unwrap();
        let schedule = default_schedule(&cx);
        for arc in &cx.arcs {
            let d = end_limit_point(&f, &cx, arc.id, &schedule, &Tolerances::default()).unwrap();
            assert_eq!(d.verdict, EndVerdict::PunctureLimit);
        }
    }

    #[test]
    fn inner_point_limit_for_boundary_pole() {
        // f = Re(1/(z - 1/4)) on A(1/4, 1); level 0 is the line Re z = 1/4,
        // tangent to the inner circle at 1/4
        let big_r = 0.25;
        let domain = AnnulusDomain::new(big_r).unwrap();
        let grid = PolarGrid::new(big_r + 1e-4, 256, 512).unwrap();
        let sampler: RealSampler = Arc::new(move |z: Complex64| (z - big_r).inv().re);
        let f = HarmonicField::sampled(SampledField::from_sampler(domain, grid, sampler).unwrap());
        let cx = trace_level(&f, 0.0, &grid).unwrap();
        let schedule = Schedule::geometric(&domain, big_r + 0.075, big_r + 7.5e-11, 12).unwrap();
        let ends: Vec<&LevelArc> = cx
            .arcs
            .iter()
            .filter(|a| a.start == Endpoint::InnerLimit || a.end == Endpoint::InnerLimit)
            .collect();
        assert_eq!(ends.len(), 2);
        for arc in ends {
            let d = end_limit_point(&f, &cx, arc.id, &schedule, &Tolerances::default()).unwrap();
            let EndVerdict::InnerPointLimit { xi } = d.verdict else {
                panic!("expected a limit point, got {:?}", d.verdict);
            };
            assert!((xi - Complex64::new(big_r, 0.0)).norm() < 1e-3);
            // exact crossing angles: r cos θ = 1/4
            for (r, th) in d.radii_visited.iter().zip(&d.angles).skip(1) {
                assert!(((big_r / r).acos() - th.rem_euclid(TAU).min(TAU - th.rem_euclid(TAU))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spiral_end_does_not_converge() {
        let big_r = 0.25;
        let domain = AnnulusDomain::new(big_r).unwrap();
        let grid = PolarGrid::new(big_r + 1e-4, 256, 512).unwrap();
        let sampler: RealSampler = Arc::new(move |z: Complex64| {
            let d = z.norm() - big_r;
            (z.arg() - (1.0 / d).ln().ln()).sin()
        });
        let f = HarmonicField::sampled(SampledField::from_sampler(domain, grid, sampler).unwrap());
        let cx = trace_level(&f, 0.0, &grid).unwrap();
        let schedule = Schedule::geometric(&domain, big_r + 0.075, big_r + 7.5e-11, 12).unwrap();
        let arc = cx
            .arcs
            .iter()
            .find(|a| a.start == Endpoint::InnerLimit || a.end == Endpoint::InnerLimit)
            .unwrap();
        let d = end_limit_point(&f, &cx, arc.id, &schedule, &Tolerances::default()).unwrap();
        assert!(matches!(d.verdict, EndVerdict::NonConvergent { .. }), "{:?}", d.verdict);
    }

    #[test]
    fn closed_loop_is_not_an_end() {
        let grid = PolarGrid::new(1e-3, 128, 256).unwrap();
        let f = closed(1.0, &[]);
        let cx = trace_level(&f, -1.0, &grid).unwrap();
        let schedule = default_schedule(&cx);
        assert!(matches!(
            end_limit_point(&f, &cx, 0, &schedule, &Tolerances::default()),
            Err(LabError::NotAnEnd { arc: 0 })
        ));
    }

    #[test]
    fn compact_bounding_examples() {
        let grid = PolarGrid::new(1e-3, 128, 256).unwrap();
        let cx = trace_level(&closed(1.0, &[]), 0.5f64.ln(), &grid).unwrap();
        assert!(check_no_compact_bounding(&cx));
        let cx = trace_level(&closed(0.0, &[(-1, 1.0)]), 0.0, &grid).unwrap();
        assert!(check_no_compact_bounding(&cx));

        // inject a tiny null-homotopic loop, as noise would
        let mut bad = cx.clone();
        let c = ArcVertex { s: -1.0, theta: 1.0 };
        let loop_vertices: Vec<ArcVertex> = (0..=8)
            .map(|k| {
                let a = TAU * k as f64 / 8.0;
                ArcVertex {
                    s: c.s + 1e-3 * a.cos(),
                    theta: c.theta + 1e-3 * a.sin(),
                }
            })
            .collect();
        bad.arcs.push(LevelArc {
            id: bad.arcs.len(),
            vertices: loop_vertices,
            start: Endpoint::ClosedLoop,
            end: Endpoint::ClosedLoop,
        });
        assert!(!check_no_compact_bounding(&bad));
    }

    #[test]
    fn alternation_on_circles() {
        let grid = PolarGrid::new(1e-3, 256, 512).unwrap();
        let f = closed(0.1, &[(-3, 1.0), (1, 0.5)]);
        let cx = trace_level(&f, 0.4, &grid).unwrap();
        for r in Schedule::default_for(&cx.domain, &grid).unwrap().radii() {
            assert_eq!(circle_crossings(&cx, *r).len() % 2, 0);
            assert!(alternation_holds(&f, &cx, *r));
        }
    }
}
