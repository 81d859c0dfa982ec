use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{ArcVertex, CrossingNode, Endpoint, LevelArc, LevelSetComplex, LevelWarning, Tolerances};
use crate::annulus::PolarGrid;
use crate::error::{LabError, Result};
use crate::field::{sample_grid, HarmonicField};

/// A level crossing on a grid edge.
#[derive(Debug, Clone, Copy)]
struct EdgePoint {
    key: u64,
    s: f64,
    theta: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: EdgePoint,
    b: EdgePoint,
}

struct Band {
    segments: Vec<Segment>,
    saddles: Vec<(usize, usize)>,
    crossed: Vec<(usize, usize)>,
}

struct Cells<'a> {
    grid: &'a PolarGrid,
    values: &'a [f64],
}

impl Cells<'_> {
    fn na(&self) -> usize {
        self.grid.n_angular()
    }

    fn v(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.na() + j % self.na()]
    }

    fn h_key(&self, i: usize, j: usize) -> u64 {
        2 * (i * self.na() + j % self.na()) as u64
    }

    fn v_key(&self, i: usize, j: usize) -> u64 {
        2 * (i * self.na() + j % self.na()) as u64 + 1
    }

    /// Crossing on the angular edge between nodes `(i, j)` and `(i, j+1)`.
    fn h_point(&self, i: usize, j: usize) -> EdgePoint {
        let (v0, v1) = (self.v(i, j), self.v(i, j + 1));
        let tau = v0 / (v0 - v1);
        EdgePoint {
            key: self.h_key(i, j),
            s: self.grid.log_radius(i),
            theta: (j as f64 + tau) * self.grid.angle_step(),
        }
    }

    /// Crossing on the radial edge between nodes `(i, j)` and `(i+1, j)`.
    fn v_point(&self, i: usize, j: usize) -> EdgePoint {
        let (v0, v1) = (self.v(i, j), self.v(i + 1, j));
        let tau = v0 / (v0 - v1);
        let (s0, s1) = (self.grid.log_radius(i), self.grid.log_radius(i + 1));
        EdgePoint {
            key: self.v_key(i, j % self.na()),
            s: s0 + tau * (s1 - s0),
            theta: (j % self.na()) as f64 * self.grid.angle_step(),
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0
}

fn march_band<F>(cells: &Cells<'_>, i: usize, center: &F) -> Band
where
    F: Fn(usize, usize) -> f64,
{
    let mut band = Band {
        segments: Vec::new(),
        saddles: Vec::new(),
        crossed: Vec::new(),
    };
    for j in 0..cells.na() {
        // corners: a = (i, j), b = (i, j+1), c = (i+1, j+1), d = (i+1, j)
        let a = positive(cells.v(i, j));
        let b = positive(cells.v(i, j + 1));
        let c = positive(cells.v(i + 1, j + 1));
        let d = positive(cells.v(i + 1, j));
        let bottom = (a != b).then(|| cells.h_point(i, j));
        let right = (b != c).then(|| cells.v_point(i, j + 1));
        let top = (d != c).then(|| cells.h_point(i + 1, j));
        let left = (a != d).then(|| cells.v_point(i, j));
        let crossings: Vec<EdgePoint> = [bottom, right, top, left].into_iter().flatten().collect();
        match crossings.len() {
            0 => continue,
            2 => band.segments.push(Segment {
                a: crossings[0],
                b: crossings[1],
            }),
            4 => {
                let (bottom, right, top, left) =
                    (bottom.unwrap(), right.unwrap(), top.unwrap(), left.unwrap());
                if positive(center(i, j)) == a {
                    // a and c joined through the center: cut off corners b and d
                    band.segments.push(Segment { a: bottom, b: right });
                    band.segments.push(Segment { a: left, b: top });
                } else {
                    band.segments.push(Segment { a: bottom, b: left });
                    band.segments.push(Segment { a: right, b: top });
                }
                band.saddles.push((i, j));
            }
            _ => unreachable!("a cell has an even number of sign changes"),
        }
        band.crossed.push((i, j));
    }
    band
}

/// Traces `{f = t}` with tolerances scaled to the field's outer-circle values.
pub fn trace_level(field: &HarmonicField, t: f64, grid: &PolarGrid) -> Result<LevelSetComplex> {
    let tol = Tolerances::for_scale(field.value_scale());
    trace_level_with(field, t, grid, &tol)
}

/// Marching squares on the `(log r, θ)` grid with periodic stitching in `θ`.
///
/// Saddle cells are resolved by the sign of `f - t` at the cell center.
/// Critical points of `f` on the level become crossing nodes; the arcs near
/// them are cut and reattached to the node.
pub fn trace_level_with(
    field: &HarmonicField,
    t: f64,
    grid: &PolarGrid,
    tol: &Tolerances,
) -> Result<LevelSetComplex> {
    if !t.is_finite() {
        return Err(LabError::InvalidArgument(format!("level {t} is not finite")));
    }
    let domain = field.domain();
    grid.check_domain(&domain)?;

    let values = sample_grid(grid, |z| field.probe(z) - t);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Evaluation("field is not finite on the grid".into()));
    }
    let cells = Cells {
        grid,
        values: &values,
    };
    let (hs, ht) = (grid.log_step(), grid.angle_step());
    let center = |i: usize, j: usize| {
        let s = grid.log_radius(i) + 0.5 * hs;
        field.probe(Complex64::from_polar(s.exp(), (j as f64 + 0.5) * ht)) - t
    };

    let bands: Vec<Band> = (0..grid.n_radial() - 1)
        .into_par_iter()
        .map(|i| march_band(&cells, i, &center))
        .collect();

    let mut segments = Vec::new();
    let mut saddles = Vec::new();
    let mut crossed = Vec::new();
    for band in bands {
        segments.extend(band.segments);
        saddles.extend(band.saddles);
        crossed.extend(band.crossed);
    }

    let critical = find_critical_points(field, grid, &crossed);
    for &(i, j) in &saddles {
        let near = critical.iter().any(|zc| {
            let (fi, fj) = grid.locate(*zc);
            let dj = periodic_diff(fj, j as f64 + 0.5, grid.n_angular() as f64);
            (fi - (i as f64 + 0.5)).abs() <= 2.0 && dj.abs() <= 2.0
        });
        if !near && !block_has_zero(field, grid, i, j) {
            return Err(LabError::Resolution {
                location: format!("{:.6}", grid.node(i, j)),
            });
        }
    }

    let mut warnings = Vec::new();
    let mut node_points = Vec::new();
    for zc in critical {
        let value = field.probe(zc);
        if (value - t).abs() < tol.f_tol {
            warnings.push(LevelWarning::CriticalLevel {
                critical_value: value,
                location: zc,
            });
            node_points.push(zc);
        }
    }

    let arcs = chain(&segments, grid);
    let (arcs, nodes) = attach_nodes(arcs, &node_points, grid);
    let components = components(&arcs, nodes.len());

    Ok(LevelSetComplex {
        level: t,
        grid: *grid,
        domain,
        arcs,
        nodes,
        components,
        warnings,
    })
}

fn periodic_diff(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    if d > 0.5 * period {
        d - period
    } else {
        d
    }
}

fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Winding number of `w` along a closed loop of sample points.
fn winding_of(ws: &[Complex64]) -> i64 {
    let mut total = 0.0;
    for k in 0..ws.len() {
        let (a, b) = (ws[k], ws[(k + 1) % ws.len()]);
        total += wrap_angle(b.arg() - a.arg());
    }
    (total / TAU).round() as i64
}

/// True if `w` has a zero inside the 3×3 block of cells around `(i, j)`.
fn block_has_zero(field: &HarmonicField, grid: &PolarGrid, i: usize, j: usize) -> bool {
    let na = grid.n_angular();
    let i0 = i.saturating_sub(1);
    let i1 = (i + 2).min(grid.n_radial() - 1);
    let j0 = (j + na - 1) % na;
    let width_r = i1 - i0;
    // ring over a (width_r × 3) block
    let mut ring = Vec::new();
    for k in 0..3 {
        ring.push(grid.node(i0, j0 + k));
    }
    for k in 0..width_r {
        ring.push(grid.node(i0 + k, j0 + 3));
    }
    for k in 0..3 {
        ring.push(grid.node(i1, j0 + 3 - k));
    }
    for k in 0..width_r {
        ring.push(grid.node(i1 - k, j0));
    }
    let ws: Vec<Complex64> = ring.iter().map(|z| field.complex_gradient(*z)).collect();
    winding_of(&ws) != 0
}

/// Zeros of `w = f_x − i f_y` in the crossed cells, refined by Newton.
fn find_critical_points(
    field: &HarmonicField,
    grid: &PolarGrid,
    crossed: &[(usize, usize)],
) -> Vec<Complex64> {
    let mut found: Vec<Complex64> = Vec::new();
    let (hs, ht) = (grid.log_step(), grid.angle_step());
    for &(i, j) in crossed {
        // the 3×3 block keeps zeros lying on the cell's own edges strictly inside
        if !block_has_zero(field, grid, i, j) {
            continue;
        }
        let mut zc = Complex64::from_polar(
            (grid.log_radius(i) + 0.5 * hs).exp(),
            (j as f64 + 0.5) * ht,
        );
        for _ in 0..50 {
            let w = field.complex_gradient(zc);
            let h = 1e-6 * zc.norm();
            let dw = (field.complex_gradient(zc + h) - field.complex_gradient(zc - h)) / (2.0 * h);
            if dw.norm() == 0.0 {
                break;
            }
            let step = w / dw;
            zc -= step;
            if step.norm() < 1e-15 * zc.norm() {
                break;
            }
        }
        let (fi, fj) = grid.locate(zc);
        let dj = periodic_diff(fj, j as f64 + 0.5, grid.n_angular() as f64);
        let inside = (fi - (i as f64 + 0.5)).abs() <= 1.5 && dj.abs() <= 1.5;
        let tol = 1e-3 * zc.norm() * hs.min(ht);
        if inside && !found.iter().any(|p| (p - zc).norm() < tol.max(1e-12)) {
            found.push(zc);
        }
    }
    found
}

fn endpoint_of_key(key: u64, grid: &PolarGrid) -> Option<Endpoint> {
    if key % 2 == 1 {
        return None;
    }
    let i = (key / 2) as usize / grid.n_angular();
    if i == 0 {
        Some(Endpoint::InnerLimit)
    } else if i + 1 == grid.n_radial() {
        Some(Endpoint::OuterBoundary)
    } else {
        None
    }
}

fn push_unwrapped(vertices: &mut Vec<ArcVertex>, p: &EdgePoint) {
    let mut theta = p.theta;
    if let Some(prev) = vertices.last() {
        theta += TAU * ((prev.theta - theta) / TAU).round();
    }
    vertices.push(ArcVertex { s: p.s, theta });
}

/// Joins segments that share an edge into arcs; open chains first, in
/// segment order, then closed loops.
fn chain(segments: &[Segment], grid: &PolarGrid) -> Vec<LevelArc> {
    let mut by_edge: HashMap<u64, Vec<usize>> = HashMap::new();
    for (k, seg) in segments.iter().enumerate() {
        by_edge.entry(seg.a.key).or_default().push(k);
        by_edge.entry(seg.b.key).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut arcs = Vec::new();

    let walk = |start: EdgePoint, first: usize, used: &mut Vec<bool>| -> (Vec<ArcVertex>, u64) {
        let mut vertices = Vec::new();
        push_unwrapped(&mut vertices, &start);
        let mut seg = first;
        let mut at = start;
        loop {
            used[seg] = true;
            let s = segments[seg];
            let next = if s.a.key == at.key { s.b } else { s.a };
            push_unwrapped(&mut vertices, &next);
            at = next;
            let follow = by_edge[&at.key].iter().copied().find(|k| !used[*k]);
            match follow {
                Some(k) => seg = k,
                None => return (vertices, at.key),
            }
        }
    };

    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let seg = segments[k];
        let start = [seg.a, seg.b]
            .into_iter()
            .find(|p| endpoint_of_key(p.key, grid).is_some() && by_edge[&p.key].len() == 1);
        let Some(start) = start else { continue };
        let (vertices, last) = walk(start, k, &mut used);
        arcs.push(LevelArc {
            id: arcs.len(),
            vertices,
            start: endpoint_of_key(start.key, grid).unwrap(),
            end: endpoint_of_key(last, grid).unwrap_or(Endpoint::InnerLimit),
        });
    }
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (vertices, _) = walk(segments[k].a, k, &mut used);
        arcs.push(LevelArc {
            id: arcs.len(),
            vertices,
            start: Endpoint::ClosedLoop,
            end: Endpoint::ClosedLoop,
        });
    }
    arcs
}

/// Cuts arcs inside a small disk around each crossing node and reattaches
/// the pieces to the node.
fn attach_nodes(
    arcs: Vec<LevelArc>,
    points: &[Complex64],
    grid: &PolarGrid,
) -> (Vec<LevelArc>, Vec<CrossingNode>) {
    let mut nodes: Vec<CrossingNode> = points
        .iter()
        .map(|z| CrossingNode {
            z: *z,
            incident: Vec::new(),
        })
        .collect();
    if nodes.is_empty() {
        return (arcs, nodes);
    }
    let rho = 2.0 * grid.log_step().max(grid.angle_step());
    let centers: Vec<(f64, f64)> = points.iter().map(|z| (z.norm().ln(), z.arg())).collect();
    let inside = |v: &ArcVertex| -> Option<usize> {
        centers.iter().position(|(s, th)| {
            let dth = wrap_angle(v.theta - th);
            (v.s - s).hypot(dth) < rho
        })
    };
    let node_vertex = |n: usize, near: &ArcVertex| -> ArcVertex {
        let (s, th) = centers[n];
        ArcVertex {
            s,
            theta: th + TAU * ((near.theta - th) / TAU).round(),
        }
    };

    let mut out: Vec<LevelArc> = Vec::new();
    for arc in arcs {
        let tags: Vec<Option<usize>> = arc.vertices.iter().map(&inside).collect();
        if tags.iter().all(Option::is_none) {
            out.push(arc);
            continue;
        }
        let (verts, tags, open_start, open_end) = if arc.is_closed() {
            // rotate so the walk starts inside a node disk
            let first_in = tags.iter().position(Option::is_some).unwrap();
            let body = &arc.vertices[..arc.vertices.len() - 1];
            let body_tags = &tags[..tags.len() - 1];
            let n = body.len();
            let mut verts = Vec::with_capacity(n + 1);
            let mut vt = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let idx = (first_in + k) % n;
                let mut v = body[idx];
                if let Some(prev) = verts.last() {
                    let p: &ArcVertex = prev;
                    v.theta += TAU * ((p.theta - v.theta) / TAU).round();
                }
                verts.push(v);
                vt.push(body_tags[idx]);
            }
            (verts, vt, Endpoint::ClosedLoop, Endpoint::ClosedLoop)
        } else {
            (arc.vertices.clone(), tags, arc.start, arc.end)
        };

        let mut piece: Vec<ArcVertex> = Vec::new();
        let mut piece_start = open_start;
        let mut last_node: Option<usize> = None;
        for (k, v) in verts.iter().enumerate() {
            match tags[k] {
                Some(n) => {
                    if !piece.is_empty() {
                        piece.push(node_vertex(n, piece.last().unwrap()));
                        let id = out.len();
                        if let Endpoint::CrossingNode(m) = piece_start {
                            nodes[m].incident.push((id, true));
                        }
                        nodes[n].incident.push((id, false));
                        out.push(LevelArc {
                            id,
                            vertices: std::mem::take(&mut piece),
                            start: piece_start,
                            end: Endpoint::CrossingNode(n),
                        });
                    }
                    last_node = Some(n);
                }
                None => {
                    if piece.is_empty() {
                        if let Some(n) = last_node {
                            piece.push(node_vertex(n, v));
                            piece_start = Endpoint::CrossingNode(n);
                        }
                    }
                    piece.push(*v);
                }
            }
        }
        if piece.len() > 1 {
            let id = out.len();
            if let Endpoint::CrossingNode(m) = piece_start {
                nodes[m].incident.push((id, true));
            }
            out.push(LevelArc {
                id,
                vertices: piece,
                start: piece_start,
                end: open_end,
            });
        }
    }
    for (id, arc) in out.iter_mut().enumerate() {
        arc.id = id;
    }
    (out, nodes)
}

fn components(arcs: &[LevelArc], n_nodes: usize) -> Vec<Vec<usize>> {
    // union-find over arcs and nodes (nodes offset by arcs.len())
    let n = arcs.len() + n_nodes;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for arc in arcs {
        for e in [arc.start, arc.end] {
            if let Endpoint::CrossingNode(m) = e {
                let (a, b) = (find(&mut parent, arc.id), find(&mut parent, arcs.len() + m));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<usize, usize> = HashMap::new();
    for arc in arcs {
        let root = find(&mut parent, arc.id);
        let g = *index.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(arc.id);
    }
    groups
}
