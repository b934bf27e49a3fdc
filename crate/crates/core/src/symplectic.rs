//! Symplectic billiards: the chord `xy` reflects to `yz` when `xz` is parallel
//! to the tangent (in `R^{2n}`, the characteristic line `JN_y`) at `y`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use crate::curve::{cross, tangent_at, wrap_angle, ConvexBoundary, Vec2};
use crate::error::{BilliardError, Result};
use crate::outer::OuterOrbit;
use crate::roots::safeguarded_newton;
use crate::search::{
    circumscribed_vertices, side_normal_angle, symplectic_residual, TangencyVector,
};

/// Phase point `(x, y) = (γ(t_prev), γ(t_cur))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordState {
    pub t_prev: f64,
    pub t_cur: f64,
}

impl ChordState {
    pub fn new(t_prev: f64, t_cur: f64) -> Self {
        ChordState { t_prev, t_cur }
    }

    /// `cross(T(t_prev), T(t_cur)) = sin(t_cur - t_prev) > 0`.
    pub fn is_admissible(&self) -> bool {
        (self.t_cur - self.t_prev).sin() > 0.0
    }
}

/// One step of the planar map. The returned `t_cur` lies in
/// `(t_cur_in, t_cur_in + π)`.
pub fn symplectic_map<B: ConvexBoundary + ?Sized>(curve: &B, s: ChordState) -> Result<ChordState> {
    let c = s.t_cur;
    // lift t_prev into (c - π, c)
    let t_prev = c - (c - s.t_prev).rem_euclid(TAU);
    if !(t_prev > c - PI) || (c - t_prev).sin() <= 1e-14 {
        return Err(BilliardError::NoAdmissibleImage(format!(
            "state ({}, {}) is not positively oriented",
            s.t_prev, s.t_cur
        )));
    }
    let x = curve.point(t_prev);
    let tc = tangent_at(c);
    // cross(γ(t) - x, T(c)) = (γ(t) - x)·N(c), derivative ρ(t) sin(c - t)
    let g = |t: f64| {
        let p = curve.evaluate(t);
        (cross(&(p.position - x), &tc), p.rho * (c - t).sin())
    };
    let scale = 1.0 + x.norm();
    let mut t_next = safeguarded_newton(g, c, c + PI, 1e-13 * scale)?;
    // the residual bound leaves angle error |g|/(ρ sin(c - t)); polish on the angle
    for _ in 0..3 {
        let (f, df) = g(t_next);
        if df == 0.0 {
            break;
        }
        let cand = t_next - f / df;
        if !(cand > c && cand < c + PI) || (cand - t_next).abs() < 1e-16 {
            break;
        }
        t_next = cand;
    }
    if (t_next - t_prev - TAU).abs() < 1e-12 {
        return Err(BilliardError::NoAdmissibleImage(
            "image coincides with t_prev".into(),
        ));
    }
    Ok(ChordState {
        t_prev: c,
        t_cur: t_next,
    })
}

/// `steps` iterates, starting state included.
pub fn symplectic_orbit<B: ConvexBoundary + ?Sized>(
    curve: &B,
    s: ChordState,
    steps: usize,
) -> Result<Vec<ChordState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s);
    let mut cur = s;
    for _ in 0..steps {
        cur = symplectic_map(curve, cur)?;
        out.push(cur);
    }
    Ok(out)
}

/// Max of the reflection residuals around a closed parameter cycle.
pub fn cycle_residual<B: ConvexBoundary + ?Sized>(curve: &B, ts: &[f64]) -> f64 {
    symplectic_residual(curve, ts)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

fn lift_increasing(ts: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ts.len());
    let mut prev = ts[0];
    out.push(prev);
    for &t in &ts[1..] {
        let lifted = prev + (t - prev).rem_euclid(TAU);
        out.push(lifted);
        prev = lifted;
    }
    out
}

/// The outer billiard triangle whose side midpoints are a symplectic
/// 3-cycle: vertices are the pairwise intersections of the three tangent
/// lines.
pub fn three_periodic_to_outer<B: ConvexBoundary + ?Sized>(
    curve: &B,
    triangle: [f64; 3],
) -> Result<OuterOrbit> {
    let resid = cycle_residual(curve, &triangle);
    if resid >= 1e-10 {
        return Err(BilliardError::NotClosed(resid));
    }
    let ts = lift_increasing(&triangle);
    if ts[2] - ts[0] >= TAU {
        return Err(BilliardError::NotClosed(resid));
    }
    let tv = TangencyVector::new(ts, 1)?;
    let vertices = circumscribed_vertices(curve, &tv)?;
    for i in 0..3 {
        let mid = (vertices[i] + vertices[(i + 1) % 3]) * 0.5;
        let err = (mid - curve.point(tv.thetas[i])).norm();
        if err >= 1e-9 {
            return Err(BilliardError::NotClosed(err));
        }
    }
    let orbit = OuterOrbit::from_parts(
        curve,
        vertices,
        tv.thetas.iter().map(|&t| wrap_angle(t)).collect(),
    )?;
    if orbit.closure_residual >= 1e-9 {
        return Err(BilliardError::OrbitNotClosed(orbit.closure_residual));
    }
    Ok(orbit)
}

/// Parameters of the side midpoints of an outer 3-periodic orbit.
pub fn outer_to_three_periodic(orbit: &OuterOrbit) -> [f64; 3] {
    let v = &orbit.vertices;
    [
        side_normal_angle(&v[0], &v[1]),
        side_normal_angle(&v[1], &v[2]),
        side_normal_angle(&v[2], &v[0]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPeriodicCandidate {
    pub t_a: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub t_d: f64,
    /// Max absolute reflection residual over the four vertices.
    pub closure_residual: f64,
}

impl FourPeriodicCandidate {
    pub fn is_closed(&self) -> bool {
        self.closure_residual < 1e-10
    }

    pub fn params(&self) -> [f64; 4] {
        [self.t_a, self.t_b, self.t_c, self.t_d]
    }
}

/// The only possible 4-periodic trajectory through `γ(t_A)`.
///
/// `C` has the opposite tangent, which in the normal-angle parametrization is
/// `t_A + π`; `B` and `D` are the two points with tangent parallel to `AC`.
pub fn four_periodic_through<B: ConvexBoundary + ?Sized>(
    curve: &B,
    t_a: f64,
) -> Result<FourPeriodicCandidate> {
    let t_c = t_a + PI;
    let d = curve.point(t_c) - curve.point(t_a);
    if d.norm() < 1e-12 {
        return Err(BilliardError::DegenerateChord);
    }
    // T(t) = d/|d| means t + π/2 = arg d
    let raw = d.y.atan2(d.x) - PI / 2.0;
    let t_b = t_a + (raw - t_a).rem_euclid(TAU);
    let t_b = if t_b - t_a >= PI { t_b - PI } else { t_b };
    let t_d = t_b + PI;
    let ts = [t_a, t_b, t_c, t_d];
    Ok(FourPeriodicCandidate {
        t_a,
        t_b,
        t_c,
        t_d,
        closure_residual: cycle_residual(curve, &ts),
    })
}

/// A centered ellipsoid `{x : x·Qx = 1}` in `R^{2n}` with the standard
/// complex structure `J = [[0, I], [-I, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid2n {
    q: DMatrix<f64>,
    j: DMatrix<f64>,
}

/// Boundary membership tolerance for `x·Qx = 1`.
pub const ON_BODY_TOL: f64 = 1e-10;

pub fn complex_structure(dim: usize) -> DMatrix<f64> {
    let n = dim / 2;
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Sine of the angle between two vectors; zero when parallel.
pub fn parallel_residual(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return 1.0;
    }
    let c = u.dot(v) / (nu * nv);
    (1.0 - c * c).max(0.0).sqrt()
}

impl Ellipsoid2n {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let dim = q.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || q.ncols() != dim {
            return Err(BilliardError::InvalidBody(format!(
                "Q must be square of even size, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(BilliardError::InvalidBody("non-finite entry".into()));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 {
            return Err(BilliardError::InvalidBody(format!(
                "Q is not symmetric (deviation {asym:.3e})"
            )));
        }
        let min_eig = q.clone().symmetric_eigenvalues().min();
        if !(min_eig > 0.0) {
            return Err(BilliardError::InvalidBody(format!(
                "Q is not positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Ellipsoid2n {
            j: complex_structure(dim),
            q,
        })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn level(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x))
    }

    /// Scale a nonzero vector onto the boundary.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        v / self.level(v).sqrt()
    }

    /// Characteristic direction `J Q x` at a boundary point.
    pub fn characteristic(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.j * (&self.q * x)
    }

    fn check_on_body(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(BilliardError::InvalidBody(format!(
                "point has dimension {}, body has {}",
                x.len(),
                self.dim()
            )));
        }
        let lv = self.level(x);
        if (lv - 1.0).abs() > ON_BODY_TOL {
            return Err(BilliardError::InvalidBody(format!(
                "point is off the boundary (x·Qx = {lv})"
            )));
        }
        Ok(())
    }
}

/// Second intersection of the line through `x` with direction `J Q y`.
pub fn symplectic_map_2n(
    body: &Ellipsoid2n,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    body.check_on_body(x)?;
    body.check_on_body(y)?;
    let d = body.characteristic(y);
    let qd = body.q() * &d;
    let xqd = x.dot(&qd);
    if xqd.abs() < 1e-12 {
        return Err(BilliardError::TangentialChord(xqd));
    }
    let t = -2.0 * xqd / d.dot(&qd);
    Ok(x + d * t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourPeriodic2n {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: DVector<f64>,
    /// Parallelism residuals (sine of angle) at A, B, C, D between the
    /// characteristic direction and the opposite diagonal.
    pub residuals: [f64; 4],
}

impl FourPeriodic2n {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// The only possible 4-periodic trajectory through `A` on a centered
/// ellipsoid: `C = -A`, `B = -D ∝ (JQ)⁻¹(C - A)`.
pub fn four_periodic_through_2n(body: &Ellipsoid2n, a: &DVector<f64>) -> Result<FourPeriodic2n> {
    body.check_on_body(a)?;
    let c = -a;
    let jq = body.j() * body.q();
    let w = jq
        .lu()
        .solve(&(&c - a))
        .ok_or_else(|| BilliardError::InvalidBody("JQ is singular".into()))?;
    if w.norm() < 1e-14 {
        return Err(BilliardError::DegenerateChord);
    }
    let b = body.project(&w);
    let d = -&b;
    let residuals = [
        parallel_residual(&body.characteristic(a), &(&b - &d)),
        parallel_residual(&body.characteristic(&b), &(&c - a)),
        parallel_residual(&body.characteristic(&c), &(&d - &b)),
        parallel_residual(&body.characteristic(&d), &(a - &c)),
    ];
    Ok(FourPeriodic2n {
        a: a.clone(),
        b,
        c,
        d,
        residuals,
    })
}

/// Boundary point of a planar curve as a 2-vector, used when embedding the
/// planar map into `R^2`.
pub fn as_dvector(v: &Vec2) -> DVector<f64> {
    DVector::from_vec(vec![v.x, v.y])
}
