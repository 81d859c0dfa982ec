use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::levelset::{ArcVertex, Endpoint, LevelSetComplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadialScale {
    Linear,
    /// `log r` mapped linearly, so ends near a puncture stay visible.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvgStyle {
    pub size: f64,
    pub radial: RadialScale,
    pub stroke_width: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            size: 600.0,
            radial: RadialScale::Log,
            stroke_width: 1.5,
        }
    }
}

struct Frame {
    center: f64,
    outer: f64,
    inner: f64,
    log_min: f64,
    log_max: f64,
    linear: bool,
    r_max: f64,
}

impl Frame {
    fn radius(&self, s: f64) -> f64 {
        if self.linear {
            self.outer * s.exp() / self.r_max
        } else {
            let u = (s - self.log_min) / (self.log_max - self.log_min);
            self.inner + u * (self.outer - self.inner)
        }
    }

    fn map(&self, v: &ArcVertex) -> (f64, f64) {
        let rho = self.radius(v.s);
        // y grows downward in SVG
        (self.center + rho * v.theta.cos(), self.center - rho * v.theta.sin())
    }
}

/// Static SVG of a traced level set. Output bytes depend only on the input.
pub fn render_svg(cx: &LevelSetComplex, style: &SvgStyle) -> String {
    let size = style.size;
    let center = 0.5 * size;
    let outer = 0.45 * size;
    let linear = style.radial == RadialScale::Linear;
    let frame = Frame {
        center,
        outer,
        inner: 0.12 * size,
        log_min: cx.grid.r_min().ln(),
        log_max: cx.grid.r_max().ln(),
        linear,
        r_max: cx.grid.r_max(),
    };
    let inner_px = frame.radius(frame.log_min);
    let mut doc = String::new();
    let _ = writeln!(
        doc,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0}" height="{size:.0}" viewBox="0 0 {size:.0} {size:.0}" data-format-version="{}">"#,
        super::FORMAT_VERSION
    );
    let _ = writeln!(doc, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        doc,
        r##"<circle class="outline" cx="{center:.3}" cy="{center:.3}" r="{outer:.3}" fill="none" stroke="#444" stroke-width="1"/>"##
    );
    let _ = writeln!(
        doc,
        r##"<circle class="outline" cx="{center:.3}" cy="{center:.3}" r="{inner_px:.3}" fill="none" stroke="#444" stroke-width="1" stroke-dasharray="4 3"/>"##
    );
    for arc in &cx.arcs {
        if arc.vertices.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for v in &arc.vertices {
            let (x, y) = frame.map(v);
            let _ = write!(pts, "{x:.3},{y:.3} ");
        }
        let _ = writeln!(
            doc,
            r##"<polyline class="arc" data-arc="{}" points="{}" fill="none" stroke="#1f5fa8" stroke-width="{:.2}"/>"##,
            arc.id,
            pts.trim_end(),
            style.stroke_width
        );
        for (from_start, kind) in [(true, arc.start), (false, arc.end)] {
            if kind != Endpoint::InnerLimit || arc.vertices.len() < 2 {
                continue;
            }
            // walk toward this end; the arrow points along the last step
            let walk = arc.walk_from_end(from_start);
            let (x1, y1) = frame.map(&walk[1]);
            let (x0, y0) = frame.map(&walk[0]);
            let (mut dx, mut dy) = (x0 - x1, y0 - y1);
            let len = (dx * dx + dy * dy).sqrt();
            if len < 1e-9 {
                (dx, dy) = (center - x0, center - y0);
            }
            let len = (dx * dx + dy * dy).sqrt().max(1e-9);
            let (ux, uy) = (dx / len, dy / len);
            let head = 8.0;
            let (bx, by) = (x0 - head * ux, y0 - head * uy);
            let (px, py) = (-uy * 0.5 * head, ux * 0.5 * head);
            let _ = writeln!(
                doc,
                r##"<polygon class="end" data-arc="{}" points="{x0:.3},{y0:.3} {:.3},{:.3} {:.3},{:.3}" fill="#c0392b"/>"##,
                arc.id,
                bx + px,
                by + py,
                bx - px,
                by - py
            );
        }
    }
    for node in &cx.nodes {
        let v = ArcVertex {
            s: node.z.norm().ln(),
            theta: node.z.arg(),
        };
        let (x, y) = frame.map(&v);
        let _ = writeln!(
            doc,
            r##"<circle class="node" cx="{x:.3}" cy="{y:.3}" r="4.000" fill="#2c3e50"/>"##
        );
    }
    let _ = writeln!(
        doc,
        r##"<text x="8" y="{:.0}" font-family="monospace" font-size="12" fill="#222">t = {:.6}</text>"##,
        size - 8.0,
        cx.level
    );
    doc.push_str("</svg>\n");
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{LaurentSeries, PolarGrid};
    use crate::field::HarmonicField;
    use crate::levelset::trace_level;

    fn count(doc: &str, class: &str) -> usize {
        doc.matches(&format!("class=\"{class}\"")).count()
    }

    #[test]
    fn empty_complex_draws_only_the_outline() {
        let grid = PolarGrid::new(1e-2, 32, 64).unwrap();
        let f = HarmonicField::punctured(1.0, LaurentSeries::zero());
        // log|z| < 0 everywhere inside
        let cx = trace_level(&f, 1.0, &grid).unwrap();
        assert!(cx.arcs.is_empty());
        let doc = render_svg(&cx, &SvgStyle::default());
        assert_eq!(count(&doc, "outline"), 2);
        assert_eq!(count(&doc, "arc") + count(&doc, "end") + count(&doc, "node"), 0);
    }

    #[test]
    fn arcs_and_end_arrows() {
        let grid = PolarGrid::new(1e-3, 128, 256).unwrap();
        let dipole = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(-1, 1.0)]));
        let doc = render_svg(&trace_level(&dipole, 0.0, &grid).unwrap(), &SvgStyle::default());
        assert_eq!(count(&doc, "arc"), 2);
        assert_eq!(count(&doc, "end"), 2);

        let quad = HarmonicField::punctured(0.0, LaurentSeries::from_real(&[(2, 1.0)]));
        let cx = trace_level(&quad, 0.0, &grid).unwrap();
        let doc = render_svg(&cx, &SvgStyle::default());
        assert_eq!(count(&doc, "arc"), 4);
        assert_eq!(count(&doc, "end"), 4);
        assert_eq!(doc, render_svg(&cx, &SvgStyle::default()));
    }
}
