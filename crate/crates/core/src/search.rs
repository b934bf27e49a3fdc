//! Periodic outer billiard orbits as zeros of midpoint conditions.
//!
//! An (n, m) orbit is encoded by the normal angles `θ_1 < … < θ_n < θ_1 + 2πm`
//! of its tangency points. Consecutive tangent lines meet at the vertices, and
//! the configuration is an orbit exactly when every tangency point is the
//! midpoint of its side.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificate::winding_sum_check;
use crate::curve::{angle_diff, cross, wrap_angle, ConvexBoundary, CurveModel, Vec2};
use crate::error::{BilliardError, Result};
use crate::lsq::{gauss_newton, LsqOutcome};
use crate::outer::OuterOrbit;

/// Newton stops once `‖residual‖_∞` drops below this.
pub const NEWTON_TOL: f64 = 1e-12;
/// Acceptance threshold for the constrained (fixed tangency) search.
pub const CONSTRAINED_TOL: f64 = 1e-10;
/// Reported orbits must close to this.
pub const REPORT_CLOSURE_TOL: f64 = 1e-10;
/// Smallest Jacobian singular value below which a solution is part of a
/// one-parameter family.
pub const CONTINUUM_TOL: f64 = 1e-8;
/// Two orbits are the same if some cyclic shift matches to this, in θ.
pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TangencyVector {
    pub thetas: Vec<f64>,
    pub winding: u32,
}

impl TangencyVector {
    pub fn new(thetas: Vec<f64>, winding: u32) -> Result<Self> {
        if thetas.len() < 3 {
            return Err(BilliardError::InvalidTangencyVector(format!(
                "need at least 3 tangencies, got {}",
                thetas.len()
            )));
        }
        if winding == 0 {
            return Err(BilliardError::InvalidTangencyVector(
                "winding must be positive".into(),
            ));
        }
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(BilliardError::InvalidTangencyVector(
                "non-finite angle".into(),
            ));
        }
        Ok(TangencyVector { thetas, winding })
    }

    /// Equally spaced angles `phase + 2πm i / n`.
    pub fn equally_spaced(n: usize, m: u32, phase: f64) -> Result<Self> {
        let gap = TAU * f64::from(m) / n as f64;
        Self::new((0..n).map(|i| phase + gap * i as f64).collect(), m)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Gap between tangency `i` and the next one, the last gap closing the
    /// `m`-fold lift.
    pub fn gap(&self, i: usize) -> f64 {
        let n = self.len();
        if i + 1 < n {
            self.thetas[i + 1] - self.thetas[i]
        } else {
            self.thetas[0] + TAU * f64::from(self.winding) - self.thetas[n - 1]
        }
    }

    /// All gaps in `(0, π)`: a convex circumscribed star polygon.
    pub fn is_admissible(&self) -> bool {
        (0..self.len()).all(|i| {
            let g = self.gap(i);
            g > 0.0 && g < PI
        })
    }

    /// Shift by a multiple of 2π so that the first angle lies in `[0, 2π)`.
    pub fn normalized(&self) -> Self {
        let shift = self.thetas[0] - wrap_angle(self.thetas[0]);
        TangencyVector {
            thetas: self.thetas.iter().map(|t| t - shift).collect(),
            winding: self.winding,
        }
    }
}

fn line_intersection<B: ConvexBoundary + ?Sized>(curve: &B, a: f64, b: f64) -> Option<Vec2> {
    let det = (b - a).sin();
    if det.abs() < 1e-12 {
        return None;
    }
    let ha = curve.support(a).h;
    let hb = curve.support(b).h;
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    Some(Vec2::new(
        (ha * sb - hb * sa) / det,
        (ca * hb - cb * ha) / det,
    ))
}

/// Vertex `i` is where the tangent lines at `θ_{i-1}` and `θ_i` meet.
pub fn circumscribed_vertices<B: ConvexBoundary + ?Sized>(
    curve: &B,
    tv: &TangencyVector,
) -> Result<Vec<Vec2>> {
    let n = tv.len();
    (0..n)
        .map(|i| {
            let prev = if i == 0 { n - 1 } else { i - 1 };
            line_intersection(curve, tv.thetas[prev], tv.thetas[i])
                .ok_or(BilliardError::ParallelTangents(prev, i))
        })
        .collect()
}

/// `(γ(θ_i) - (x_i + x_{i+1})/2)·T(θ_i)` for every side.
pub fn midpoint_residual<B: ConvexBoundary + ?Sized>(
    curve: &B,
    tv: &TangencyVector,
) -> Result<Vec<f64>> {
    let xs = circumscribed_vertices(curve, tv)?;
    let n = tv.len();
    Ok((0..n)
        .map(|i| {
            let z = curve.evaluate(tv.thetas[i]);
            let mid = (xs[i] + xs[(i + 1) % n]) * 0.5;
            (z.position - mid).dot(&z.tangent)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SolvedOrbit {
    pub orbit: OuterOrbit,
    pub tangency: TangencyVector,
    pub residual_history: Vec<f64>,
    pub min_singular_value: f64,
    pub damped_steps: usize,
}

impl SolvedOrbit {
    pub fn is_continuum(&self) -> bool {
        self.min_singular_value < CONTINUUM_TOL
    }
}

fn finish_orbit<B: ConvexBoundary + ?Sized>(
    curve: &B,
    tv: TangencyVector,
    out: &LsqOutcome,
) -> Result<SolvedOrbit> {
    if !tv.is_admissible() {
        return Err(BilliardError::InvalidTangencyVector(
            "solution leaves the admissible lift (a gap outside (0, π))".into(),
        ));
    }
    let vertices = circumscribed_vertices(curve, &tv)?;
    let thetas = tv.thetas.iter().map(|&t| wrap_angle(t)).collect();
    let orbit = OuterOrbit::from_parts(curve, vertices, thetas)?;
    if orbit.closure_residual >= REPORT_CLOSURE_TOL {
        return Err(BilliardError::OrbitNotClosed(orbit.closure_residual));
    }
    if !winding_sum_check(&orbit) {
        return Err(BilliardError::DegeneratePolygon(
            "angle sum disagrees with the winding number".into(),
        ));
    }
    Ok(SolvedOrbit {
        orbit,
        tangency: tv.normalized(),
        residual_history: out.history.clone(),
        min_singular_value: out.min_singular_value(),
        damped_steps: out.damped_steps,
    })
}

/// Damped Newton on the midpoint conditions from `tv0`.
pub fn newton_solve<B: ConvexBoundary + ?Sized>(
    curve: &B,
    tv0: &TangencyVector,
    max_iter: usize,
) -> Result<SolvedOrbit> {
    // precondition: the starting polygon must exist
    circumscribed_vertices(curve, tv0)?;
    let m = tv0.winding;
    let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let tv = TangencyVector {
            thetas: x.iter().copied().collect(),
            winding: m,
        };
        Ok(DVector::from_vec(midpoint_residual(curve, &tv)?))
    };
    let out = gauss_newton(
        f,
        DVector::from_vec(tv0.thetas.clone()),
        max_iter,
        NEWTON_TOL,
    )?;
    let tv = TangencyVector {
        thetas: out.x.iter().copied().collect(),
        winding: m,
    };
    finish_orbit(curve, tv, &out)
}

/// Solve along a sequence of curves, each solution seeding the next.
pub fn continue_orbit(
    curves: &[CurveModel],
    tv0: &TangencyVector,
    max_iter: usize,
) -> Result<Vec<SolvedOrbit>> {
    let mut out: Vec<SolvedOrbit> = Vec::with_capacity(curves.len());
    let mut guess = tv0.clone();
    for c in curves {
        let s = newton_solve(c, &guess, max_iter)?;
        // keep the lift continuous with the previous guess
        let shift = guess.thetas[0] - s.tangency.thetas[0];
        let k = (shift / TAU).round() * TAU;
        guess = TangencyVector {
            thetas: s.tangency.thetas.iter().map(|t| t + k).collect(),
            winding: s.tangency.winding,
        };
        out.push(SolvedOrbit {
            tangency: guess.clone(),
            ..s
        });
    }
    Ok(out)
}

/// Min over cyclic shifts of the max angular deviation between two orbits.
pub fn cyclic_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| angle_diff(a[i], b[(i + k) % n]).abs())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchReport {
    pub n: usize,
    pub m: u32,
    pub orbits: Vec<OuterOrbit>,
    pub tangencies: Vec<TangencyVector>,
    pub continuum: bool,
    pub residual_histories: Vec<Vec<f64>>,
    pub dedup_log: Vec<String>,
    pub warnings: Vec<String>,
    pub seeds_tried: usize,
    pub seeds_converged: usize,
}

impl SearchReport {
    fn empty(n: usize, m: u32) -> Self {
        SearchReport {
            n,
            m,
            ..Default::default()
        }
    }

    /// `{"n":..,"m":..,"orbits_found":..,"continuum":..}`.
    pub fn summary_json(&self) -> String {
        serde_json::json!({
            "n": self.n,
            "m": self.m,
            "orbits_found": self.orbits.len(),
            "continuum": self.continuum,
        })
        .to_string()
    }

    fn push(&mut self, s: SolvedOrbit, cyclic: bool) {
        self.seeds_converged += 1;
        let angles = &s.orbit.thetas;
        for (k, existing) in self.orbits.iter().enumerate() {
            let d = if cyclic {
                cyclic_distance(angles, &existing.thetas)
            } else {
                angles
                    .iter()
                    .zip(&existing.thetas)
                    .map(|(a, b)| angle_diff(*a, *b).abs())
                    .fold(0.0, f64::max)
            };
            if d < DEDUP_TOL {
                self.dedup_log.push(format!(
                    "seed solution identified with orbit {k} (distance {d:.2e})"
                ));
                return;
            }
        }
        self.residual_histories.push(s.residual_history);
        self.tangencies.push(s.tangency);
        self.orbits.push(s.orbit);
    }
}

fn check_pair(n: usize, m: u32, report: &mut SearchReport) -> bool {
    let m_us = m as usize;
    if m == 0 || 2 * m_us >= n {
        let mut msg = format!("({n},{m}) violates 0 < 2m < n");
        if 2 * m_us == n {
            msg.push_str(&format!(
                "; it would be a degenerate {m}-fold cover of a (2,1) configuration"
            ));
        }
        report.warnings.push(msg);
        return false;
    }
    let g = gcd(n, m_us);
    if g > 1 {
        report.warnings.push(format!(
            "gcd({n},{m}) = {g}: solutions may be {g}-fold covers of ({},{}) orbits",
            n / g,
            m_us / g
        ));
    }
    true
}

/// Multistart Newton for (n, m) orbits.
///
/// Seeds are the equally spaced configuration rotated through `grid_size`
/// phases, each jittered by a seeded random perturbation.
pub fn find_orbits<B: ConvexBoundary + ?Sized>(
    curve: &B,
    n: usize,
    m: u32,
    grid_size: usize,
    seed: u64,
) -> SearchReport {
    let mut report = SearchReport::empty(n, m);
    if !check_pair(n, m, &mut report) {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = TAU * f64::from(m) / n as f64;
    let jitter = 0.05 * gap.min(PI - gap);
    let mut continuum_rep: Option<SolvedOrbit> = None;
    for k in 0..grid_size {
        let phase = TAU * k as f64 / grid_size as f64;
        let thetas = (0..n)
            .map(|i| phase + gap * i as f64 + rng.random_range(-jitter..jitter))
            .collect();
        report.seeds_tried += 1;
        let Ok(tv0) = TangencyVector::new(thetas, m) else {
            continue;
        };
        match newton_solve(curve, &tv0, 100) {
            Ok(s) if s.is_continuum() => {
                report.seeds_converged += 1;
                report.continuum = true;
                if continuum_rep.is_none() {
                    continuum_rep = Some(s);
                } else {
                    report
                        .dedup_log
                        .push(format!("seed {k}: member of the one-parameter family"));
                }
            }
            Ok(s) => report.push(s, true),
            Err(_) => {}
        }
    }
    if let Some(rep) = continuum_rep {
        report.dedup_log.push(format!(
            "continuum detected: Jacobian singular value {:.2e} < {CONTINUUM_TOL:.0e}; one representative kept",
            rep.min_singular_value
        ));
        report.residual_histories.insert(0, rep.residual_history);
        report.tangencies.insert(0, rep.tangency);
        report.orbits.insert(0, rep.orbit);
    }
    if report.orbits.is_empty() {
        report
            .warnings
            .push(format!("no ({n},{m}) orbit found from {grid_size} seeds"));
    } else if !report.continuum && report.orbits.len() < 2 {
        report.warnings.push(format!(
            "only {} isolated ({n},{m}) orbit found; at least two are expected",
            report.orbits.len()
        ));
    }
    report
}

/// Trajectories whose first side touches the body at `theta_fixed`.
///
/// With `θ_1` pinned the n midpoint conditions overdetermine the remaining
/// `n - 1` angles; Gauss–Newton least squares is run from `grid_size` seeds
/// and only solutions with residual below [`CONSTRAINED_TOL`] are kept.
pub fn orbits_through_tangency<B: ConvexBoundary + ?Sized>(
    curve: &B,
    theta_fixed: f64,
    n: usize,
    m: u32,
    grid_size: usize,
    seed: u64,
) -> SearchReport {
    let mut report = SearchReport::empty(n, m);
    if !check_pair(n, m, &mut report) {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = TAU * f64::from(m) / n as f64;
    let spread = 0.3 * gap.min(PI - gap);
    let assemble = |x: &DVector<f64>| {
        let mut thetas = Vec::with_capacity(n);
        thetas.push(theta_fixed);
        thetas.extend(x.iter().copied());
        TangencyVector { thetas, winding: m }
    };
    for _ in 0..grid_size {
        report.seeds_tried += 1;
        let x0 = DVector::from_iterator(
            n - 1,
            (1..n).map(|i| theta_fixed + gap * i as f64 + rng.random_range(-spread..spread)),
        );
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(midpoint_residual(curve, &assemble(x))?))
        };
        let Ok(out) = gauss_newton(f, x0, 100, NEWTON_TOL) else {
            continue;
        };
        if out.residual_inf >= CONSTRAINED_TOL {
            continue;
        }
        if let Ok(s) = finish_orbit(curve, assemble(&out.x), &out) {
            if s.is_continuum() {
                report.continuum = true;
            }
            report.push(s, false);
        }
    }
    report
}

/// Parameter cycles of the planar symplectic billiard.
#[derive(Debug, Clone, Default)]
pub struct SymplecticReport {
    pub n: usize,
    pub cycles: Vec<Vec<f64>>,
    pub continuum: bool,
    pub residual_histories: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// `cross(γ(t_{i+1}) - γ(t_{i-1}), T(t_i))` around a cycle lifted once.
pub fn symplectic_residual<B: ConvexBoundary + ?Sized>(curve: &B, ts: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let pts: Vec<Vec2> = ts.iter().map(|&t| curve.point(t)).collect();
    (0..n)
        .map(|i| {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            cross(&(next - prev), &crate::curve::tangent_at(ts[i]))
        })
        .collect()
}

fn symplectic_admissible(ts: &[f64]) -> bool {
    let n = ts.len();
    (0..n).all(|i| {
        let g = if i + 1 < n {
            ts[i + 1] - ts[i]
        } else {
            ts[0] + TAU - ts[n - 1]
        };
        g > 0.0 && g < PI
    })
}

/// Multistart Newton for n-periodic symplectic billiard cycles.
pub fn symplectic_find_orbits<B: ConvexBoundary + ?Sized>(
    curve: &B,
    n: usize,
    grid_size: usize,
    seed: u64,
) -> Result<SymplecticReport> {
    if n < 3 {
        return Err(BilliardError::InvalidPeriod {
            n,
            reason: "symplectic cycles need n >= 3".into(),
        });
    }
    let mut report = SymplecticReport {
        n,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = TAU / n as f64;
    let jitter = 0.05 * gap.min(PI - gap);
    let mut any_attempt_converged = false;
    for k in 0..grid_size {
        let phase = TAU * k as f64 / grid_size as f64;
        let x0 = DVector::from_iterator(
            n,
            (0..n).map(|i| phase + gap * i as f64 + rng.random_range(-jitter..jitter)),
        );
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(symplectic_residual(curve, x.as_slice())))
        };
        let Ok(out) = gauss_newton(f, x0, 100, NEWTON_TOL) else {
            continue;
        };
        any_attempt_converged = true;
        let ts: Vec<f64> = out.x.iter().copied().collect();
        if !symplectic_admissible(&ts) {
            continue;
        }
        let ts: Vec<f64> = ts.iter().map(|&t| wrap_angle(t)).collect();
        let family = out.min_singular_value() < CONTINUUM_TOL;
        if family && report.continuum {
            continue;
        }
        if report
            .cycles
            .iter()
            .any(|c| cyclic_distance(c, &ts) < DEDUP_TOL)
        {
            continue;
        }
        report.continuum |= family;
        report.cycles.push(ts);
        report.residual_histories.push(out.history);
    }
    if !any_attempt_converged {
        return Err(BilliardError::NoConvergence(format!(
            "no symplectic {n}-cycle converged from {grid_size} seeds"
        )));
    }
    if report.cycles.is_empty() {
        report
            .warnings
            .push("only inadmissible cycles found".into());
    }
    Ok(report)
}

/// Normal angle of the side joining `a` to `b`, traversed in the positive
/// orientation.
pub fn side_normal_angle(a: &Vec2, b: &Vec2) -> f64 {
    let d = b - a;
    wrap_angle(d.y.atan2(d.x) - PI / 2.0)
}
