//! Smooth strongly convex planar curves parametrized by the outward-normal
//! angle.
//!
//! A curve is described by its support function `h(θ)`: the signed distance
//! from the origin to the tangent line with outward normal
//! `N(θ) = (cos θ, sin θ)`. Everything else follows from two derivatives:
//!
//! ```text
//! γ(θ) = h(θ) N(θ) + h'(θ) T(θ),   T(θ) = (-sin θ, cos θ),   ρ(θ) = h(θ) + h''(θ)
//! ```
//!
//! Tangency from an exterior point `x` becomes a scalar root problem for
//! `f(θ) = x·N(θ) - h(θ)`, whose derivative is `(x - γ(θ))·T(θ)`.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;

use crate::error::{BilliardError, Result};
use crate::roots::safeguarded_newton;

pub type Vec2 = Vector2<f64>;

/// Grid used to audit strong convexity.
pub const AUDIT_GRID: usize = 4096;
/// Grid used to bracket tangency roots.
pub const TANGENCY_GRID: usize = 256;

#[inline]
pub fn normal_at(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

#[inline]
pub fn tangent_at(theta: f64) -> Vec2 {
    Vec2::new(-theta.sin(), theta.cos())
}

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Reduce an angle to `[0, 2π)`.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed difference `a - b` reduced to `(-π, π]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Support function value and its first two derivatives at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

/// Range of normal angles on which a boundary is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaDomain {
    /// Closed curve, all of `[0, 2π)`.
    Full,
    /// A local patch of boundary, normals in `[lo, hi]`.
    Window { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub position: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub rho: f64,
}

/// A strongly convex boundary given through its support function in global
/// coordinates.
pub trait ConvexBoundary {
    fn support(&self, theta: f64) -> Support;

    fn domain(&self) -> ThetaDomain {
        ThetaDomain::Full
    }

    fn evaluate(&self, theta: f64) -> BoundaryPoint {
        let s = self.support(theta);
        let normal = normal_at(theta);
        let tangent = tangent_at(theta);
        BoundaryPoint {
            theta,
            position: normal * s.h + tangent * s.dh,
            tangent,
            normal,
            rho: s.h + s.d2h,
        }
    }

    fn point(&self, theta: f64) -> Vec2 {
        let s = self.support(theta);
        normal_at(theta) * s.h + tangent_at(theta) * s.dh
    }
}

impl<B: ConvexBoundary + ?Sized> ConvexBoundary for &B {
    fn support(&self, theta: f64) -> Support {
        (**self).support(theta)
    }
    fn domain(&self) -> ThetaDomain {
        (**self).domain()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveShape {
    Circle {
        radius: f64,
    },
    /// Semi-axes along x and y, `a >= b > 0`.
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `h(θ) = a0 + Σ a_k cos kθ + b_k sin kθ` about the center, `k >= 2`.
    SupportFourier {
        a0: f64,
        terms: Vec<FourierTerm>,
    },
}

/// An immutable, validated smooth strongly convex curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveModel {
    shape: CurveShape,
    center: Vec2,
}

impl CurveModel {
    pub fn new(shape: CurveShape, center: Vec2) -> Result<Self> {
        match &shape {
            CurveShape::Circle { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(BilliardError::InvalidCurve(format!(
                        "circle radius must be positive, got {radius}"
                    )));
                }
            }
            CurveShape::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && *b > 0.0 && a >= b) {
                    return Err(BilliardError::InvalidCurve(format!(
                        "ellipse needs a >= b > 0, got a = {a}, b = {b}"
                    )));
                }
            }
            CurveShape::SupportFourier { a0, terms } => {
                if !a0.is_finite() {
                    return Err(BilliardError::InvalidCurve("a0 is not finite".into()));
                }
                for t in terms {
                    if t.k < 2 {
                        return Err(BilliardError::InvalidCurve(format!(
                            "Fourier mode k = {} not allowed (k >= 2)",
                            t.k
                        )));
                    }
                    if !(t.a.is_finite() && t.b.is_finite()) {
                        return Err(BilliardError::InvalidCurve(format!(
                            "non-finite coefficient for k = {}",
                            t.k
                        )));
                    }
                }
            }
        }
        if !(center.x.is_finite() && center.y.is_finite()) {
            return Err(BilliardError::InvalidCurve("center is not finite".into()));
        }
        let curve = CurveModel { shape, center };
        curve.audit()?;
        Ok(curve)
    }

    pub fn circle(radius: f64) -> Result<Self> {
        Self::new(CurveShape::Circle { radius }, Vec2::zeros())
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(CurveShape::Ellipse { a, b }, Vec2::zeros())
    }

    pub fn support_fourier(a0: f64, terms: Vec<FourierTerm>) -> Result<Self> {
        Self::new(CurveShape::SupportFourier { a0, terms }, Vec2::zeros())
    }

    pub fn with_center(self, center: Vec2) -> Result<Self> {
        Self::new(self.shape, center)
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    /// Support function about the curve's own center.
    pub fn local_support(&self, theta: f64) -> Support {
        match &self.shape {
            CurveShape::Circle { radius } => Support {
                h: *radius,
                dh: 0.0,
                d2h: 0.0,
            },
            CurveShape::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                let (a2, b2) = (a * a, b * b);
                let g = a2 * c * c + b2 * s * s;
                let dg = (b2 - a2) * (2.0 * theta).sin();
                let d2g = 2.0 * (b2 - a2) * (2.0 * theta).cos();
                let h = g.sqrt();
                let dh = dg / (2.0 * h);
                let d2h = d2g / (2.0 * h) - dg * dg / (4.0 * h * h * h);
                Support { h, dh, d2h }
            }
            CurveShape::SupportFourier { a0, terms } => {
                let mut out = Support {
                    h: *a0,
                    dh: 0.0,
                    d2h: 0.0,
                };
                for t in terms {
                    let k = f64::from(t.k);
                    let (s, c) = (k * theta).sin_cos();
                    out.h += t.a * c + t.b * s;
                    out.dh += k * (t.b * c - t.a * s);
                    out.d2h -= k * k * (t.a * c + t.b * s);
                }
                out
            }
        }
    }

    /// Minimum of `ρ` over an `n`-point grid, with the angle where it occurs.
    pub fn min_radius_of_curvature(&self, n: usize) -> (f64, f64) {
        (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                let s = self.local_support(th);
                (s.h + s.d2h, th)
            })
            .fold(
                (f64::INFINITY, 0.0),
                |acc, v| if v.0 < acc.0 { v } else { acc },
            )
    }

    fn audit(&self) -> Result<()> {
        let (min_h, th_h) = (0..AUDIT_GRID)
            .map(|i| {
                let th = TAU * i as f64 / AUDIT_GRID as f64;
                (self.local_support(th).h, th)
            })
            .fold(
                (f64::INFINITY, 0.0),
                |acc, v| if v.0 < acc.0 { v } else { acc },
            );
        let (min_rho, th_rho) = self.min_radius_of_curvature(AUDIT_GRID);
        if min_rho <= 0.0 {
            return Err(BilliardError::NonConvexCurve {
                min_rho,
                theta: th_rho,
            });
        }
        if min_h <= 0.0 {
            return Err(BilliardError::CenterNotInterior {
                h: min_h,
                theta: th_h,
            });
        }
        Ok(())
    }

    /// Boundary polyline with `n` vertices, for plotting.
    pub fn sample(&self, n: usize) -> Vec<Vec2> {
        (0..n)
            .map(|i| self.point(TAU * i as f64 / n as f64))
            .collect()
    }
}

impl ConvexBoundary for CurveModel {
    fn support(&self, theta: f64) -> Support {
        let s = self.local_support(theta);
        let c = &self.center;
        Support {
            h: s.h + c.dot(&normal_at(theta)),
            dh: s.dh + c.dot(&tangent_at(theta)),
            d2h: s.d2h - c.dot(&normal_at(theta)),
        }
    }
}

pub fn evaluate<B: ConvexBoundary + ?Sized>(curve: &B, theta: f64) -> BoundaryPoint {
    curve.evaluate(theta)
}

/// Which of the two tangent lines through an exterior point to select.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentSide {
    /// `(x - z)·T(z) < 0`: the image `2z - x` lies ahead in the positive
    /// orientation.
    Forward,
    /// `(x - z)·T(z) > 0`.
    Backward,
}

#[inline]
fn tangency_fn<B: ConvexBoundary + ?Sized>(curve: &B, x: &Vec2, theta: f64) -> (f64, f64) {
    let s = curve.support(theta);
    let f = x.dot(&normal_at(theta)) - s.h;
    let df = x.dot(&tangent_at(theta)) - s.dh;
    (f, df)
}

/// Tolerance on the tangency residual `|(x - z)·N|`.
#[inline]
pub fn tangency_tolerance(x: &Vec2) -> f64 {
    1e-12 * (1.0 + x.norm())
}

/// Normal angle of the boundary point nearest to `x` together with the support
/// margin `max_θ (x·N(θ) - h(θ))`, which is positive iff `x` is outside.
pub fn support_margin<B: ConvexBoundary + ?Sized>(curve: &B, x: &Vec2) -> (f64, f64) {
    let n = TANGENCY_GRID;
    let (lo, hi) = match curve.domain() {
        ThetaDomain::Full => (0.0, TAU),
        ThetaDomain::Window { lo, hi } => (lo, hi),
    };
    let step = (hi - lo) / n as f64;
    let grid_n = match curve.domain() {
        ThetaDomain::Full => n,
        ThetaDomain::Window { .. } => n + 1,
    };
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..grid_n {
        let th = lo + step * i as f64;
        let (f, _) = tangency_fn(curve, x, th);
        if f > best.0 {
            best = (f, th);
        }
    }
    // f' = (x - γ)·T and f'' = -f - ρ: refine the maximizer on its neighbours
    let (a, b) = (best.1 - step, best.1 + step);
    let g = |th: f64| {
        let (f, df) = tangency_fn(curve, x, th);
        let s = curve.support(th);
        (df, -f - (s.h + s.d2h))
    };
    let ga = g(a).0;
    let gb = g(b).0;
    let theta_max = if ga > 0.0 && gb < 0.0 {
        safeguarded_newton(g, a, b, 1e-15 * (1.0 + x.norm())).unwrap_or(best.1)
    } else {
        best.1
    };
    let margin = tangency_fn(curve, x, theta_max).0.max(best.0);
    (theta_max, margin)
}

fn tangency<B: ConvexBoundary + ?Sized>(
    curve: &B,
    x: Vec2,
    side: TangentSide,
) -> Result<BoundaryPoint> {
    let tol = tangency_tolerance(&x);
    let ftol = 0.1 * tol;
    let theta = match curve.domain() {
        ThetaDomain::Full => {
            let (theta_max, margin) = support_margin(curve, &x);
            if margin <= tol {
                return Err(BilliardError::PointInsideBody {
                    x: x.x,
                    y: x.y,
                    margin,
                });
            }
            // the visible arc of normals is shorter than π, so the half-turn
            // on either side of the maximizer holds exactly one root
            let f = |th: f64| tangency_fn(curve, &x, th);
            match side {
                TangentSide::Forward => safeguarded_newton(f, theta_max, theta_max + PI, ftol)?,
                TangentSide::Backward => safeguarded_newton(f, theta_max - PI, theta_max, ftol)?,
            }
        }
        ThetaDomain::Window { lo, hi } => {
            let n = TANGENCY_GRID;
            let step = (hi - lo) / n as f64;
            let mut found = None;
            let mut prev = (lo, tangency_fn(curve, &x, lo).0);
            for i in 1..=n {
                let th = lo + step * i as f64;
                let f = tangency_fn(curve, &x, th).0;
                let crosses = match side {
                    TangentSide::Forward => prev.1 >= 0.0 && f <= 0.0,
                    TangentSide::Backward => prev.1 <= 0.0 && f >= 0.0,
                };
                if crosses && !(prev.1 == 0.0 && f == 0.0) {
                    found = Some((prev.0, th));
                    break;
                }
                prev = (th, f);
            }
            let (a, b) = found.ok_or(BilliardError::TangencyOutsideDomain)?;
            safeguarded_newton(|th| tangency_fn(curve, &x, th), a, b, ftol)?
        }
    };
    let theta = match curve.domain() {
        ThetaDomain::Full => wrap_angle(theta),
        ThetaDomain::Window { .. } => theta,
    };
    let z = curve.evaluate(theta);
    let along = (x - z.position).dot(&z.tangent);
    let ok = match side {
        TangentSide::Forward => along < 0.0,
        TangentSide::Backward => along > 0.0,
    };
    if !ok {
        return Err(BilliardError::NoConvergence(format!(
            "tangency at theta = {theta} has the wrong orientation"
        )));
    }
    Ok(z)
}

/// Tangency point `z` of the tangent line through exterior `x` such that
/// `y = 2z - x` moves in the positive orientation of the boundary.
pub fn forward_tangency<B: ConvexBoundary + ?Sized>(curve: &B, x: Vec2) -> Result<BoundaryPoint> {
    tangency(curve, x, TangentSide::Forward)
}

/// The other tangency: `(x - z)·T(z) > 0`.
pub fn backward_tangency<B: ConvexBoundary + ?Sized>(curve: &B, x: Vec2) -> Result<BoundaryPoint> {
    tangency(curve, x, TangentSide::Backward)
}

/// `x·N(θ) <= h(θ)` for all θ, up to the boundary tolerance.
pub fn is_strictly_outside<B: ConvexBoundary + ?Sized>(curve: &B, x: &Vec2) -> bool {
    support_margin(curve, x).1 > tangency_tolerance(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fourier_demo() -> CurveModel {
        CurveModel::support_fourier(
            1.0,
            vec![
                FourierTerm {
                    k: 2,
                    a: 0.05,
                    b: 0.0,
                },
                FourierTerm {
                    k: 3,
                    a: 0.0,
                    b: 0.02,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn circle_top_point() {
        let c = CurveModel::circle(1.0).unwrap();
        let p = c.evaluate(PI / 2.0);
        assert_abs_diff_eq!(p.position, Vec2::new(0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.tangent, Vec2::new(-1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.normal, Vec2::new(0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rho, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ellipse_major_vertex_curvature() {
        let e = CurveModel::ellipse(2.0, 1.0).unwrap();
        let p = e.evaluate(0.0);
        assert_abs_diff_eq!(p.position, Vec2::new(2.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rho, 0.5, epsilon = 1e-14);
        // oracle: second difference of h(θ) = sqrt(a² cos² + b² sin²)
        let h = |t: f64| (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt();
        let dt = 1e-4;
        let fd = h(0.0) + (h(dt) - 2.0 * h(0.0) + h(-dt)) / (dt * dt);
        assert_abs_diff_eq!(p.rho, fd, epsilon = 1e-6);
    }

    #[test]
    fn fourier_without_terms_is_unit_circle() {
        let c = CurveModel::support_fourier(1.0, vec![]).unwrap();
        let p = c.evaluate(PI);
        assert_abs_diff_eq!(p.position, Vec2::new(-1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.rho, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_convex_fourier() {
        // ρ = 1 - 8 a_3 cos 3θ goes negative for a_3 > 1/8
        let err = CurveModel::support_fourier(
            1.0,
            vec![FourierTerm {
                k: 3,
                a: 0.2,
                b: 0.0,
            }],
        )
        .unwrap_err();
        match err {
            BilliardError::NonConvexCurve { min_rho, theta } => {
                assert!(min_rho < 0.0);
                assert_abs_diff_eq!(min_rho, 1.0 - 8.0 * 0.2, epsilon = 1e-9);
                assert_abs_diff_eq!((3.0 * theta).cos(), 1.0, epsilon = 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CurveModel::circle(0.0).is_err());
        assert!(CurveModel::ellipse(1.0, 2.0).is_err());
        assert!(CurveModel::support_fourier(
            1.0,
            vec![FourierTerm {
                k: 1,
                a: 0.1,
                b: 0.0
            }]
        )
        .is_err());
    }

    #[test]
    fn finite_difference_tangent_matches_curvature() {
        for curve in [
            CurveModel::circle(1.3).unwrap(),
            CurveModel::ellipse(2.0, 1.0).unwrap(),
            fourier_demo().with_center(Vec2::new(0.3, -0.2)).unwrap(),
        ] {
            let dt = 1e-5;
            for i in 0..4096 {
                let th = TAU * i as f64 / 4096.0;
                let p = curve.evaluate(th);
                let d = (curve.point(th + dt) - curve.point(th - dt)) / (2.0 * dt);
                assert!(cross(&d, &p.tangent).abs() <= 1e-6 * p.rho);
                assert!((d.norm() - p.rho).abs() <= 1e-6 * p.rho, "theta {th}");
                assert!(d.dot(&p.tangent) > 0.0);
            }
        }
    }

    #[test]
    fn circle_forward_tangency() {
        let c = CurveModel::circle(1.0).unwrap();
        let z = forward_tangency(&c, Vec2::new(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z.theta, PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            z.position,
            Vec2::new(0.5, 3f64.sqrt() / 2.0),
            epsilon = 1e-12
        );
        let z = forward_tangency(&c, Vec2::new(0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(z.theta, PI / 3.0 + PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_backward_tangency() {
        let c = CurveModel::circle(1.0).unwrap();
        let z = backward_tangency(&c, Vec2::new(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(angle_diff(z.theta, -PI / 3.0), 0.0, epsilon = 1e-12);
        // x ↦ -x is a rotation, so it carries each tangency type to itself
        let r3 = 3f64.sqrt();
        let z = backward_tangency(&c, Vec2::new(-2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z.position, Vec2::new(-0.5, r3 / 2.0), epsilon = 1e-12);
        let z = forward_tangency(&c, Vec2::new(-2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z.position, Vec2::new(-0.5, -r3 / 2.0), epsilon = 1e-12);
    }

    #[test]
    fn ellipse_tangency_matches_dense_scan() {
        let e = CurveModel::ellipse(2.0, 1.0).unwrap();
        let x = Vec2::new(4.0, 0.0);
        let z = forward_tangency(&e, x).unwrap();
        let resid = (x - z.position).dot(&z.normal).abs();
        assert!(resid < tangency_tolerance(&x));
        // oracle: sign changes of f on a 10^6 grid, forward = + to -
        let n = 1_000_000;
        let f = |th: f64| {
            let p = e.evaluate(th);
            (x - p.position).dot(&p.normal)
        };
        let mut roots = vec![];
        let mut prev = f(0.0);
        for i in 1..=n {
            let th = TAU * i as f64 / n as f64;
            let v = f(th);
            if prev > 0.0 && v <= 0.0 {
                roots.push(th);
            }
            prev = v;
        }
        assert_eq!(roots.len(), 1);
        assert!(angle_diff(roots[0], z.theta).abs() < 2.0 * TAU / n as f64);
        // closed form: tangent from (4,0) to x²/4 + y² = 1 touches at x = 1
        assert_abs_diff_eq!(z.position.x, 1.0, epsilon = 1e-12);
        assert!(z.position.y > 0.0);
    }

    #[test]
    fn forward_then_backward_share_tangency() {
        let c = fourier_demo();
        let x = Vec2::new(1.7, 0.9);
        let z = forward_tangency(&c, x).unwrap();
        let y = z.position * 2.0 - x;
        let zb = backward_tangency(&c, y).unwrap();
        assert_abs_diff_eq!(zb.position, z.position, epsilon = 1e-10);
    }

    #[test]
    fn inside_and_boundary_points_rejected() {
        let c = CurveModel::ellipse(2.0, 1.0).unwrap();
        for x in [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(2.0, 0.0),
        ] {
            let err = forward_tangency(&c, x).unwrap_err();
            assert_eq!(err.name(), "PointInsideBody");
        }
    }

    #[test]
    fn near_boundary_point_still_resolved() {
        let c = CurveModel::circle(1.0).unwrap();
        let x = Vec2::new(1.0 + 1e-7, 0.0);
        let f = forward_tangency(&c, x).unwrap();
        let b = backward_tangency(&c, x).unwrap();
        assert!(f.theta > 0.0 && f.theta < 1e-2);
        assert!(b.theta > TAU - 1e-2);
    }
}
