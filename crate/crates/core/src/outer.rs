//! The outer billiard map about a strongly convex body.
//!
//! `x ↦ y = 2z - x` where `z` is the forward tangency from `x`. The
//! differential at `x`, in the frame (unit `z→x`, outward normal at `z`), is
//! `[[-1, -2ρ/r], [0, -1]]`. Chaining frames along a closed orbit turns the
//! differential of the n-th iterate into `R(α_n)A_n ⋯ R(α_1)A_1` with positive
//! shears `A_i = [[1, 2ρ_i/r_i], [0, 1]]`.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;

use crate::certificate::{rotation, shear};
use crate::curve::{
    backward_tangency, cross, forward_tangency, BoundaryPoint, ConvexBoundary, Vec2,
};
use crate::error::{BilliardError, Result};

pub type Mat2 = Matrix2<f64>;

/// Absolute closure tolerance separating closed from open orbits.
pub const PERIODICITY_TOL: f64 = 1e-8;
/// Step for central-difference validation Jacobians.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterStep {
    pub x: Vec2,
    pub z: BoundaryPoint,
    pub y: Vec2,
    pub r: f64,
}

pub fn outer_map<B: ConvexBoundary + ?Sized>(curve: &B, x: Vec2) -> Result<OuterStep> {
    let z = forward_tangency(curve, x)?;
    let y = z.position * 2.0 - x;
    Ok(OuterStep {
        x,
        z,
        y,
        r: (x - z.position).norm(),
    })
}

/// Preimage of `y`; the returned step has `step.y == y`.
pub fn outer_map_inverse<B: ConvexBoundary + ?Sized>(curve: &B, y: Vec2) -> Result<OuterStep> {
    let z = backward_tangency(curve, y)?;
    let x = z.position * 2.0 - y;
    Ok(OuterStep {
        x,
        z,
        y,
        r: (x - z.position).norm(),
    })
}

/// `steps` forward iterates starting at `x`.
pub fn iterate<B: ConvexBoundary + ?Sized>(
    curve: &B,
    x: Vec2,
    steps: usize,
) -> Result<Vec<OuterStep>> {
    let mut out = Vec::with_capacity(steps);
    let mut cur = x;
    for _ in 0..steps {
        let s = outer_map(curve, cur)?;
        cur = s.y;
        out.push(s);
    }
    Ok(out)
}

pub fn iterate_point<B: ConvexBoundary + ?Sized>(curve: &B, x: Vec2, n: usize) -> Result<Vec2> {
    let mut cur = x;
    for _ in 0..n {
        cur = outer_map(curve, cur)?.y;
    }
    Ok(cur)
}

/// Orthonormal frame at an exterior point: `e1` points from the tangency to
/// the point, `e2` is the outward normal at the tangency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub e1: Vec2,
    pub e2: Vec2,
}

impl Frame {
    /// Matrix whose columns are the frame vectors (frame → global).
    pub fn matrix(&self) -> Mat2 {
        Mat2::from_columns(&[self.e1, self.e2])
    }

    /// Express a global linear map in this frame: `Fᵀ M F`.
    pub fn conjugate(&self, global: &Mat2) -> Mat2 {
        let f = self.matrix();
        f.transpose() * global * f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDifferential {
    pub matrix: Mat2,
    pub frame: Frame,
    pub rho: f64,
    pub r: f64,
}

pub fn frame_at<B: ConvexBoundary + ?Sized>(curve: &B, x: Vec2) -> Result<Frame> {
    let step = outer_map(curve, x)?;
    Ok(Frame {
        e1: (x - step.z.position) / step.r,
        e2: step.z.normal,
    })
}

pub fn local_differential<B: ConvexBoundary + ?Sized>(
    curve: &B,
    x: Vec2,
) -> Result<LocalDifferential> {
    let step = outer_map(curve, x)?;
    let rho = step.z.rho;
    Ok(LocalDifferential {
        matrix: Mat2::new(-1.0, -2.0 * rho / step.r, 0.0, -1.0),
        frame: Frame {
            e1: (x - step.z.position) / step.r,
            e2: step.z.normal,
        },
        rho,
        r: step.r,
    })
}

/// Central-difference Jacobian of `F^n` at `x` in global coordinates, without
/// any periodicity requirement.
pub fn iterate_jacobian<B: ConvexBoundary + ?Sized>(
    curve: &B,
    x: Vec2,
    n: usize,
    h: f64,
) -> Result<Mat2> {
    let mut cols = [Vec2::zeros(); 2];
    for (j, col) in cols.iter_mut().enumerate() {
        let mut e = Vec2::zeros();
        e[j] = h;
        let plus = iterate_point(curve, x + e, n)?;
        let minus = iterate_point(curve, x - e, n)?;
        *col = (plus - minus) / (2.0 * h);
    }
    Ok(Mat2::from_columns(&cols))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitAngles {
    /// `alphas[i]`: interior angle at vertex `i + 1` between sides `i` and `i + 1`.
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub winding: i64,
}

/// Interior/exterior angles and winding number of a closed polygon.
///
/// Exterior angles are signed turning angles in `(-π, π]`, so a polygon
/// traversed counterclockwise has positive winding.
pub fn orbit_angles(vertices: &[Vec2]) -> Result<OrbitAngles> {
    let n = vertices.len();
    if n < 3 {
        return Err(BilliardError::DegeneratePolygon(format!(
            "need at least 3 vertices, got {n}"
        )));
    }
    let sides: Vec<Vec2> = (0..n)
        .map(|i| vertices[(i + 1) % n] - vertices[i])
        .collect();
    let scale = vertices.iter().map(|v| v.norm()).fold(1.0, f64::max);
    for (i, s) in sides.iter().enumerate() {
        if s.norm() <= 1e-14 * scale {
            return Err(BilliardError::DegeneratePolygon(format!(
                "vertices {i} and {} coincide",
                (i + 1) % n
            )));
        }
    }
    let mut alphas = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (&sides[i], &sides[(i + 1) % n]);
        let beta = cross(a, b).atan2(a.dot(b));
        if (beta.abs() - PI).abs() < 1e-14 {
            return Err(BilliardError::DegeneratePolygon(format!(
                "side {i} reverses direction"
            )));
        }
        betas.push(beta);
        alphas.push(PI - beta);
    }
    let total: f64 = betas.iter().sum();
    let winding = (total / TAU).round() as i64;
    if (total - TAU * winding as f64).abs() > 1e-8 {
        return Err(BilliardError::DegeneratePolygon(format!(
            "turning angles sum to {total}, not a multiple of 2π"
        )));
    }
    Ok(OrbitAngles {
        alphas,
        betas,
        winding,
    })
}

/// A closed outer billiard trajectory.
///
/// Side `i` joins `vertices[i]` to `vertices[i + 1]` and touches the body at
/// normal angle `thetas[i]`; `alphas[i]` is the interior angle at the far end
/// of that side.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterOrbit {
    pub n: usize,
    pub vertices: Vec<Vec2>,
    pub thetas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub winding: u32,
    pub closure_residual: f64,
}

impl OuterOrbit {
    /// Assemble an orbit from its vertices and the tangency angles of its
    /// sides, measuring closure by iterating the map from the first vertex.
    pub fn from_parts<B: ConvexBoundary + ?Sized>(
        curve: &B,
        vertices: Vec<Vec2>,
        thetas: Vec<f64>,
    ) -> Result<Self> {
        let n = vertices.len();
        if thetas.len() != n {
            return Err(BilliardError::DegeneratePolygon(format!(
                "{n} vertices but {} tangencies",
                thetas.len()
            )));
        }
        let angles = orbit_angles(&vertices)?;
        if angles.winding < 1 || 2 * angles.winding as usize >= n {
            return Err(BilliardError::DegeneratePolygon(format!(
                "winding {} violates 0 < 2m < n = {n}",
                angles.winding
            )));
        }
        if let Some(a) = angles.alphas.iter().find(|a| !(**a > 0.0 && **a < PI)) {
            return Err(BilliardError::DegeneratePolygon(format!(
                "interior angle {a} outside (0, π)"
            )));
        }
        let back = iterate_point(curve, vertices[0], n)?;
        Ok(OuterOrbit {
            n,
            closure_residual: (back - vertices[0]).norm(),
            vertices,
            thetas,
            alphas: angles.alphas,
            betas: angles.betas,
            winding: angles.winding as u32,
        })
    }

    /// Follow the map `n` times from `x1` and package the visited points.
    pub fn from_start<B: ConvexBoundary + ?Sized>(curve: &B, x1: Vec2, n: usize) -> Result<Self> {
        let steps = iterate(curve, x1, n)?;
        let residual = (steps[n - 1].y - x1).norm();
        if residual > PERIODICITY_TOL {
            return Err(BilliardError::OrbitNotClosed(residual));
        }
        let vertices = steps.iter().map(|s| s.x).collect();
        let thetas = steps.iter().map(|s| s.z.theta).collect();
        Self::from_parts(curve, vertices, thetas)
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alphas.iter().sum()
    }

    pub fn tangency_points<B: ConvexBoundary + ?Sized>(&self, curve: &B) -> Vec<Vec2> {
        self.thetas.iter().map(|&t| curve.point(t)).collect()
    }
}

/// `(α_i, s_i = 2ρ_i / r_i)` along a closed orbit, in the order they act.
pub fn monodromy_letters<B: ConvexBoundary + ?Sized>(
    curve: &B,
    orbit: &OuterOrbit,
) -> Vec<(f64, f64)> {
    (0..orbit.n)
        .map(|i| {
            let z = curve.evaluate(orbit.thetas[i]);
            let r = (orbit.vertices[i] - z.position).norm();
            (orbit.alphas[i], 2.0 * z.rho / r)
        })
        .collect()
}

/// `R(α_n)A_n ⋯ R(α_1)A_1`, the differential of `F^n` at the first vertex in
/// that vertex's frame.
pub fn monodromy_analytic<B: ConvexBoundary + ?Sized>(
    curve: &B,
    orbit: &OuterOrbit,
) -> Result<Mat2> {
    if orbit.closure_residual >= PERIODICITY_TOL {
        return Err(BilliardError::OrbitNotClosed(orbit.closure_residual));
    }
    Ok(monodromy_letters(curve, orbit)
        .into_iter()
        .fold(Mat2::identity(), |acc, (alpha, s)| {
            rotation(alpha) * shear(s) * acc
        }))
}

/// Central-difference Jacobian of `F^n` at an n-periodic `x`, global frame.
pub fn monodromy_numeric<B: ConvexBoundary + ?Sized>(
    curve: &B,
    x: Vec2,
    n: usize,
    h: f64,
) -> Result<Mat2> {
    let back = iterate_point(curve, x, n)?;
    let residual = (back - x).norm();
    if residual > PERIODICITY_TOL {
        return Err(BilliardError::NotPeriodic(residual));
    }
    iterate_jacobian(curve, x, n, h)
}
