//! A regular octagon whose sides are replaced near their midpoints by pieces
//! of hyperbolas asymptotic to the two neighbouring sides. The outer billiard
//! about such a table has two segments of 8-periodic points through `x_1`.
//!
//! Arcs and vertices are indexed from zero: `arcs[k]` is `h_{k+1}`.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, TAU};

use crate::curve::{normal_at, tangent_at, ConvexBoundary, Support, ThetaDomain, Vec2};
use crate::error::{BilliardError, Result};

/// Default window half-width along the asymptote coordinate, as a fraction of
/// the circumradius.
pub const DEFAULT_WINDOW: f64 = 0.1;
/// Off-asymptote tolerance for inputs of the tangent map.
const ON_LINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolaArc {
    /// Intersection of the asymptotes.
    pub origin: Vec2,
    /// Unit direction from `origin` towards `x_i`.
    pub u_dir: Vec2,
    /// Unit direction from `origin` towards `x_{i+1}`.
    pub v_dir: Vec2,
    /// `u·v = c` on the arc.
    pub c: f64,
    /// The side midpoint `z_i`.
    pub tangency: Vec2,
    /// Half-width of the retained window in the `u` coordinate.
    pub arc_halfwidth: f64,
}

impl HyperbolaArc {
    pub fn coords(&self, p: &Vec2) -> (f64, f64) {
        let d = p - self.origin;
        (d.dot(&self.u_dir), d.dot(&self.v_dir))
    }

    pub fn from_coords(&self, u: f64, v: f64) -> Vec2 {
        self.origin + self.u_dir * u + self.v_dir * v
    }

    pub fn u_z(&self) -> f64 {
        self.coords(&self.tangency).0
    }

    pub fn point_at(&self, u: f64) -> Vec2 {
        self.from_coords(u, self.c / u)
    }

    pub fn window_u(&self) -> (f64, f64) {
        let uz = self.u_z();
        (uz - self.arc_halfwidth, uz + self.arc_halfwidth)
    }

    /// Outward normal angle (pointing towards `origin`) at parameter `u`.
    pub fn normal_angle(&self, u: f64) -> f64 {
        let n = -(self.u_dir * (self.c / u) + self.v_dir * u);
        n.y.atan2(n.x)
    }

    /// Curvature of `u·v = c` at parameter `u`.
    pub fn curvature(&self, u: f64) -> f64 {
        let c = self.c;
        let speed2 = 1.0 + c * c / u.powi(4);
        (2.0 * c / u.powi(3)) / speed2.powf(1.5)
    }

    fn rotated(&self, angle: f64) -> Self {
        let rot = nalgebra::Rotation2::new(angle);
        HyperbolaArc {
            origin: rot * self.origin,
            u_dir: rot * self.u_dir,
            v_dir: rot * self.v_dir,
            c: self.c,
            tangency: rot * self.tangency,
            arc_halfwidth: self.arc_halfwidth,
        }
    }

    fn max_deviation(&self, other: &Self) -> f64 {
        [
            (self.origin - other.origin).amax(),
            (self.u_dir - other.u_dir).amax(),
            (self.v_dir - other.v_dir).amax(),
            (self.tangency - other.tangency).amax(),
            (self.c - other.c).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The arc as a local convex boundary: the region `u·v >= c`, whose support
/// function is `N·O - 2 sqrt(c (N·u_dir)(N·v_dir))` for normals pointing
/// into the opposite quadrant.
impl ConvexBoundary for HyperbolaArc {
    fn support(&self, theta: f64) -> Support {
        let (n, t) = (normal_at(theta), tangent_at(theta));
        let (p, q) = (n.dot(&self.u_dir), n.dot(&self.v_dir));
        let (dp, dq) = (t.dot(&self.u_dir), t.dot(&self.v_dir));
        let prod = p * q;
        let dprod = dp * q + p * dq;
        let d2prod = -2.0 * prod + 2.0 * dp * dq;
        let g = (self.c * prod).max(0.0).sqrt();
        let dg = self.c * dprod / (2.0 * g);
        let d2g = (self.c * d2prod / 2.0 - dg * dg) / g;
        let no = n.dot(&self.origin);
        Support {
            h: no - 2.0 * g,
            dh: t.dot(&self.origin) - 2.0 * dg,
            d2h: -no - 2.0 * d2g,
        }
    }

    fn domain(&self) -> ThetaDomain {
        let (lo, hi) = self.window_u();
        let mid = self.normal_angle(self.u_z());
        let unwrap = |a: f64| mid + crate::curve::angle_diff(a, mid);
        let (a, b) = (unwrap(self.normal_angle(lo)), unwrap(self.normal_angle(hi)));
        ThetaDomain::Window {
            lo: a.min(b),
            hi: a.max(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OctagonTable {
    pub radius: f64,
    pub vertices: [Vec2; 8],
    pub midpoints: [Vec2; 8],
    pub arcs: [HyperbolaArc; 8],
}

fn line_intersection(p1: &Vec2, d1: &Vec2, p2: &Vec2, d2: &Vec2) -> Vec2 {
    let det = d1.x * (-d2.y) - d1.y * (-d2.x);
    let rhs = p2 - p1;
    let t = (rhs.x * (-d2.y) - rhs.y * (-d2.x)) / det;
    p1 + d1 * t
}

pub fn build_table(radius: f64) -> Result<OctagonTable> {
    build_table_with_window(radius, DEFAULT_WINDOW * radius)
}

pub fn build_table_with_window(radius: f64, halfwidth: f64) -> Result<OctagonTable> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(BilliardError::InvalidBody(format!(
            "circumradius must be positive, got {radius}"
        )));
    }
    if !(halfwidth > 0.0 && halfwidth.is_finite()) {
        return Err(BilliardError::InvalidBody(format!(
            "window half-width must be positive, got {halfwidth}"
        )));
    }
    let vertices: [Vec2; 8] = std::array::from_fn(|k| normal_at(FRAC_PI_4 * k as f64) * radius);
    let midpoints: [Vec2; 8] = std::array::from_fn(|k| (vertices[k] + vertices[(k + 1) % 8]) * 0.5);
    let arcs = std::array::from_fn(|k| {
        let prev = vertices[(k + 7) % 8];
        let xi = vertices[k];
        let xn = vertices[(k + 1) % 8];
        let xnn = vertices[(k + 2) % 8];
        let origin = line_intersection(&prev, &(xi - prev), &xn, &(xnn - xn));
        let u_dir = (xi - origin).normalize();
        let v_dir = (xn - origin).normalize();
        let z = midpoints[k];
        let d = z - origin;
        HyperbolaArc {
            origin,
            u_dir,
            v_dir,
            c: d.dot(&u_dir) * d.dot(&v_dir),
            tangency: z,
            arc_halfwidth: halfwidth,
        }
    });
    Ok(OctagonTable {
        radius,
        vertices,
        midpoints,
        arcs,
    })
}

impl OctagonTable {
    /// Max deviation between `h_{k+1}` rotated by `π/4` and `h_{k+2}`.
    pub fn dihedral_deviation(&self) -> f64 {
        (0..8)
            .map(|k| {
                self.arcs[k]
                    .rotated(FRAC_PI_4)
                    .max_deviation(&self.arcs[(k + 1) % 8])
            })
            .fold(0.0, f64::max)
    }

    pub fn side_length(&self) -> f64 {
        2.0 * self.radius * FRAC_PI_8.sin()
    }
}

/// A tangent segment `pq` with ends on the two asymptotes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentSegment {
    pub p: Vec2,
    pub q: Vec2,
    pub tangency: Vec2,
    /// Asymptote coordinate of the tangency point.
    pub u0: f64,
}

/// Reflect `p` (on the `u` asymptote) through the tangency point of the arc
/// tangent line through it; the image lies on the `v` asymptote.
pub fn hyperbola_tangent_map(arc: &HyperbolaArc, p: Vec2) -> Result<TangentSegment> {
    let (u, v) = arc.coords(&p);
    if v.abs() > ON_LINE_TOL * (1.0 + p.norm()) {
        return Err(BilliardError::InvalidBody(format!(
            "point is off the first asymptote by {v:.3e}"
        )));
    }
    let u0 = u / 2.0;
    let (lo, hi) = arc.window_u();
    if !(u0 >= lo && u0 <= hi) {
        return Err(BilliardError::OutsideWindow { u0, lo, hi });
    }
    let w = arc.c / u0;
    Ok(TangentSegment {
        p,
        q: arc.origin + arc.v_dir * (2.0 * w),
        tangency: arc.from_coords(u0, w),
        u0,
    })
}

/// Line through `x_1` carrying the segment of periodic points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleLine {
    /// Line `x_8 x_1`; steps `h_1, z_2, h_3, z_4, h_5, z_6, h_7, z_8`.
    X8X1,
    /// Line `x_1 x_2`; steps `z_1, h_2, z_3, h_4, z_5, h_6, z_7, h_8`.
    X1X2,
}

impl CycleLine {
    pub fn name(&self) -> &'static str {
        match self {
            CycleLine::X8X1 => "x8x1",
            CycleLine::X1X2 => "x1x2",
        }
    }

    /// Vertex whose displacement equals that of `x_1` by symmetry (0-based).
    pub fn partner(&self) -> usize {
        match self {
            CycleLine::X8X1 => 3,
            CycleLine::X1X2 => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EightCycle {
    pub line: CycleLine,
    pub offset: f64,
    /// `x_1', ..., x_8'`.
    pub points: Vec<Vec2>,
    /// Tangency point used at each step.
    pub tangencies: Vec<Vec2>,
    /// Image of `x_8'`, which should coincide with `x_1'`.
    pub returned: Vec2,
    pub closure_residual: f64,
    /// `| |x_1 x_1'| - |x_j x_j'| |` for the symmetric partner vertex `j`.
    pub symmetry_residual: f64,
}

/// Start at `x_1' = x_1 + offset·e`, where `e` is the unit vector from `x_1`
/// towards `x_8` (resp. `x_2`), and run eight steps.
pub fn eight_cycle(table: &OctagonTable, line: CycleLine, offset: f64) -> Result<EightCycle> {
    let x = &table.vertices;
    let (toward, first_arc) = match line {
        CycleLine::X8X1 => (x[7], true),
        CycleLine::X1X2 => (x[1], false),
    };
    let start = x[0] + (toward - x[0]).normalize() * offset;
    let mut points = Vec::with_capacity(8);
    let mut tangencies = Vec::with_capacity(8);
    let mut p = start;
    for k in 0..8 {
        points.push(p);
        let on_arc = (k % 2 == 0) == first_arc;
        if on_arc {
            let seg = hyperbola_tangent_map(&table.arcs[k], p)?;
            tangencies.push(seg.tangency);
            p = seg.q;
        } else {
            let z = table.midpoints[k];
            tangencies.push(z);
            p = z * 2.0 - p;
        }
    }
    let j = line.partner();
    let symmetry_residual = ((start - x[0]).norm() - (points[j] - x[j]).norm()).abs();
    Ok(EightCycle {
        line,
        offset,
        closure_residual: (p - start).norm(),
        returned: p,
        points,
        tangencies,
        symmetry_residual,
    })
}

/// `eight_cycle` over many offsets; results in input order.
pub fn sweep(table: &OctagonTable, line: CycleLine, offsets: &[f64]) -> Vec<Result<EightCycle>> {
    offsets
        .iter()
        .map(|&o| eight_cycle(table, line, o))
        .collect()
}

/// `count` offsets with magnitudes log-spaced over `[lo, hi]·R`, alternating
/// in sign.
pub fn offset_grid(radius: f64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let half = count.div_ceil(2).max(2);
    let mags: Vec<f64> = (0..half)
        .map(|i| (a + (b - a) * i as f64 / (half - 1) as f64).exp() * radius)
        .collect();
    mags.iter().flat_map(|&m| [m, -m]).take(count).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditViolation {
    /// Tangent at `z_i` is not the octagon side.
    TangencyMisaligned { arc: usize, deviation: f64 },
    /// `z_i` does not lie on the hyperbola.
    TangencyOffCurve { arc: usize, deviation: f64 },
    /// The window reaches the asymptotes.
    WindowOutsideQuadrant { arc: usize, u_lo: f64 },
    /// Curvature not positive and finite somewhere in the window.
    NonConvexArc { arc: usize, curvature: f64 },
    /// Polar sectors of two adjacent arcs intersect.
    WindowOverlap { arc: usize, neighbor: usize },
    /// Arc set not invariant under rotation by `π/4`.
    SymmetryBroken { deviation: f64 },
}

impl AuditViolation {
    pub fn name(&self) -> &'static str {
        match self {
            AuditViolation::TangencyMisaligned { .. } => "TangencyMisaligned",
            AuditViolation::TangencyOffCurve { .. } => "TangencyOffCurve",
            AuditViolation::WindowOutsideQuadrant { .. } => "WindowOutsideQuadrant",
            AuditViolation::NonConvexArc { .. } => "NonConvexArc",
            AuditViolation::WindowOverlap { .. } => "WindowOverlap",
            AuditViolation::SymmetryBroken { .. } => "SymmetryBroken",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub violations: Vec<AuditViolation>,
    /// `(u_lo, u_hi)` per arc.
    pub windows: Vec<(f64, f64)>,
    /// Polar-angle sector covered by each arc.
    pub sectors: Vec<(f64, f64)>,
    /// `(min, max)` curvature sampled over each window.
    pub curvature_ranges: Vec<(f64, f64)>,
    pub dihedral_deviation: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const AUDIT_SAMPLES: usize = 257;

pub fn consistency_audit(table: &OctagonTable) -> AuditReport {
    let mut violations = Vec::new();
    let mut windows = Vec::new();
    let mut sectors = Vec::new();
    let mut curvature_ranges = Vec::new();
    for (k, arc) in table.arcs.iter().enumerate() {
        let side = table.vertices[(k + 1) % 8] - table.vertices[k];
        let (uz, vz) = arc.coords(&arc.tangency);
        // gradient of u·v at z is (v_z, u_z)
        let grad = arc.u_dir * vz + arc.v_dir * uz;
        let deviation = (grad.dot(&side) / (grad.norm() * side.norm())).abs().asin();
        if !(deviation < 1e-12) {
            violations.push(AuditViolation::TangencyMisaligned { arc: k, deviation });
        }
        let off = (uz * vz - arc.c).abs() / arc.c;
        if !(off < 1e-12 && uz > 0.0 && vz > 0.0) {
            violations.push(AuditViolation::TangencyOffCurve {
                arc: k,
                deviation: off,
            });
        }
        let (lo, hi) = arc.window_u();
        windows.push((lo, hi));
        if !(lo > 0.0) {
            violations.push(AuditViolation::WindowOutsideQuadrant { arc: k, u_lo: lo });
            sectors.push((f64::NAN, f64::NAN));
            curvature_ranges.push((f64::NAN, f64::NAN));
            continue;
        }
        let mut kmin = f64::INFINITY;
        let mut kmax = f64::NEG_INFINITY;
        let base = FRAC_PI_4 * k as f64;
        let mut smin = f64::INFINITY;
        let mut smax = f64::NEG_INFINITY;
        for i in 0..AUDIT_SAMPLES {
            let u = lo + (hi - lo) * i as f64 / (AUDIT_SAMPLES - 1) as f64;
            let kappa = arc.curvature(u);
            kmin = kmin.min(kappa);
            kmax = kmax.max(kappa);
            let p = arc.point_at(u);
            let polar = base + crate::curve::angle_diff(p.y.atan2(p.x), base);
            smin = smin.min(polar);
            smax = smax.max(polar);
        }
        if !(kmin > 0.0 && kmax.is_finite()) {
            violations.push(AuditViolation::NonConvexArc {
                arc: k,
                curvature: kmin,
            });
        }
        curvature_ranges.push((kmin, kmax));
        sectors.push((smin, smax));
    }
    for k in 0..8 {
        let next = (k + 1) % 8;
        let (_, hi) = sectors[k];
        let (lo, _) = sectors[next];
        if hi.is_nan() || lo.is_nan() {
            continue;
        }
        let lo = if next == 0 { lo + TAU } else { lo };
        // each arc must stay strictly inside its own octant
        let vertex = FRAC_PI_4 * (k + 1) as f64;
        if !(hi < vertex && lo > vertex) {
            violations.push(AuditViolation::WindowOverlap {
                arc: k,
                neighbor: next,
            });
        }
    }
    let dihedral_deviation = table.dihedral_deviation();
    if !(dihedral_deviation < 1e-12 * table.radius.max(1.0)) {
        violations.push(AuditViolation::SymmetryBroken {
            deviation: dihedral_deviation,
        });
    }
    AuditReport {
        violations,
        windows,
        sectors,
        curvature_ranges,
        dihedral_deviation,
    }
}

/// Shear-rotation letters `(α, 2ρ/r)` along the unperturbed octagon orbit.
pub fn octagon_letters(table: &OctagonTable) -> Vec<(f64, f64)> {
    (0..8)
        .map(|k| {
            let arc = &table.arcs[k];
            let rho = 1.0 / arc.curvature(arc.u_z());
            let r = (table.vertices[k] - table.midpoints[k]).norm();
            (PI - FRAC_PI_4, 2.0 * rho / r)
        })
        .collect()
}
