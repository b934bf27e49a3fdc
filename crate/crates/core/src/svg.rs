//! Minimal deterministic SVG output.

use std::fmt::Write as _;
use std::path::Path;

use crate::curve::{ConvexBoundary, ThetaDomain, Vec2};
use crate::error::Result;
use crate::io::write_text;
use crate::octagon::{CycleLine, EightCycle, OctagonTable};

/// Samples used for a full boundary curve.
pub const CURVE_SAMPLES: usize = 1024;
const CANVAS: f64 = 800.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec2>,
    pub closed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    /// Closed boundary curves.
    pub curves: Vec<Vec<Vec2>>,
    /// Open pieces of boundary, e.g. hyperbola arcs.
    pub arcs: Vec<Vec<Vec2>>,
    /// Reference polygons drawn dashed.
    pub outlines: Vec<Vec<Vec2>>,
    pub orbits: Vec<Polyline>,
    pub highlights: Vec<(Vec2, Vec2)>,
    pub tangencies: Vec<Vec2>,
}

/// Boundary sampled at equally spaced normal angles over its domain.
pub fn sample_boundary<B: ConvexBoundary + ?Sized>(curve: &B, n: usize) -> Vec<Vec2> {
    match curve.domain() {
        ThetaDomain::Full => (0..n)
            .map(|i| curve.point(std::f64::consts::TAU * i as f64 / n as f64))
            .collect(),
        ThetaDomain::Window { lo, hi } => (0..n)
            .map(|i| curve.point(lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64))
            .collect(),
    }
}

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_curve<B: ConvexBoundary + ?Sized>(mut self, curve: &B) -> Self {
        self.curves.push(sample_boundary(curve, CURVE_SAMPLES));
        self
    }

    pub fn with_orbit(mut self, vertices: Vec<Vec2>, closed: bool) -> Self {
        self.orbits.push(Polyline {
            points: vertices,
            closed,
        });
        self
    }

    pub fn with_tangencies(mut self, pts: impl IntoIterator<Item = Vec2>) -> Self {
        self.tangencies.extend(pts);
        self
    }

    /// Octagon outline, its eight arcs, and the segments swept by the two
    /// families of 8-periodic points.
    pub fn octagon(table: &OctagonTable, cycles: &[EightCycle]) -> Self {
        let mut scene = Scene::new();
        scene.outlines.push(table.vertices.to_vec());
        for arc in &table.arcs {
            let (lo, hi) = arc.window_u();
            scene.arcs.push(
                (0..=64)
                    .map(|i| arc.point_at(lo + (hi - lo) * i as f64 / 64.0))
                    .collect(),
            );
        }
        for line in [CycleLine::X8X1, CycleLine::X1X2] {
            let starts: Vec<Vec2> = cycles
                .iter()
                .filter(|c| c.line == line)
                .map(|c| c.points[0])
                .collect();
            if let Some(seg) = extreme_pair(&starts) {
                scene.highlights.push(seg);
            }
        }
        scene
    }

    fn all_points(&self) -> impl Iterator<Item = &Vec2> {
        self.curves
            .iter()
            .chain(&self.arcs)
            .chain(&self.outlines)
            .flatten()
            .chain(self.orbits.iter().flat_map(|p| &p.points))
            .chain(self.highlights.iter().flat_map(|(a, b)| [a, b]))
            .chain(&self.tangencies)
    }
}

/// The two mutually farthest points of a collinear set.
fn extreme_pair(pts: &[Vec2]) -> Option<(Vec2, Vec2)> {
    let first = *pts.first()?;
    let far = |from: Vec2| {
        pts.iter()
            .copied()
            .max_by(|a, b| (a - from).norm().total_cmp(&(b - from).norm()))
            .unwrap_or(from)
    };
    let a = far(first);
    let b = far(a);
    (pts.len() > 1).then_some((a, b))
}

fn points_attr(pts: &[Vec2]) -> String {
    let mut s = String::new();
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{},{}", p.x, -p.y);
    }
    s
}

fn path_d(pts: &[Vec2], closed: bool) -> String {
    let mut s = String::new();
    for (i, p) in pts.iter().enumerate() {
        let _ = write!(s, "{}{},{} ", if i == 0 { 'M' } else { 'L' }, p.x, -p.y);
    }
    if closed {
        s.push('Z');
    }
    s.trim_end().to_string()
}

/// Render the scene. The y axis points up; the view box is fitted to the
/// content with a 5% margin.
pub fn emit_svg(scene: &Scene) -> String {
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in scene
        .all_points()
        .filter(|p| p.x.is_finite() && p.y.is_finite())
    {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if !lo.x.is_finite() {
        lo = Vec2::new(-1.0, -1.0);
        hi = Vec2::new(1.0, 1.0);
    }
    let span = (hi - lo).max().max(1e-9);
    let pad = 0.05 * span;
    let (x0, y0) = (lo.x - pad, -hi.y - pad);
    let (w, h) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
    let stroke = span / 400.0;
    let dot = span / 150.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{}" viewBox="{x0} {y0} {w} {h}">"#,
        (CANVAS * h / w).round()
    );
    let _ = writeln!(
        out,
        r#"<style>.curve,.arc{{fill:none;stroke:#222}}.outline{{fill:none;stroke:#999;stroke-dasharray:{} {}}}.orbit{{fill:none;stroke:#1f5fbf}}.highlight{{stroke:#c0392b}}.tangency{{fill:#e67e22}}</style>"#,
        4.0 * stroke,
        2.0 * stroke
    );
    let _ = writeln!(out, r#"<g stroke-width="{stroke}">"#);
    for c in &scene.curves {
        let _ = writeln!(out, r#"<path class="curve" d="{}"/>"#, path_d(c, true));
    }
    for o in &scene.outlines {
        let _ = writeln!(
            out,
            r#"<polygon class="outline" points="{}"/>"#,
            points_attr(o)
        );
    }
    for a in &scene.arcs {
        let _ = writeln!(out, r#"<path class="arc" d="{}"/>"#, path_d(a, false));
    }
    for o in &scene.orbits {
        let tag = if o.closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            out,
            r#"<{tag} class="orbit" points="{}"/>"#,
            points_attr(&o.points)
        );
    }
    for (a, b) in &scene.highlights {
        let _ = writeln!(
            out,
            r#"<line class="highlight" stroke-width="{}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            3.0 * stroke,
            a.x,
            -a.y,
            b.x,
            -b.y
        );
    }
    for p in &scene.tangencies {
        let _ = writeln!(
            out,
            r#"<circle class="tangency" cx="{}" cy="{}" r="{dot}"/>"#,
            p.x, -p.y
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

pub fn write_svg(scene: &Scene, path: &Path) -> Result<()> {
    write_text(path, &emit_svg(scene))
}
