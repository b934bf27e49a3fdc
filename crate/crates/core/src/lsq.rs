//! Small dense Gauss–Newton solver with finite-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{BilliardError, Result};

/// Central-difference step for Jacobians of residual maps.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Singular values below this fraction of the largest are treated as zero.
const RANK_CUTOFF: f64 = 1e-8;
/// Largest accepted update in max-norm.
const MAX_STEP: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct LsqOutcome {
    pub x: DVector<f64>,
    pub residual_inf: f64,
    /// `‖R‖_∞` at the start of every iteration plus the final value.
    pub history: Vec<f64>,
    /// Singular values of the Jacobian at the returned point, descending.
    pub singular_values: DVector<f64>,
    /// Iterations in which the Gauss–Newton step failed and damping took over.
    pub damped_steps: usize,
}

impl LsqOutcome {
    pub fn min_singular_value(&self) -> f64 {
        self.singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn fd_jacobian<F>(f: &F, x: &DVector<f64>, r0_len: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(r0_len, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += JACOBIAN_STEP;
        xm[j] -= JACOBIAN_STEP;
        let col = (f(&xp)? - f(&xm)?) / (2.0 * JACOBIAN_STEP);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

fn singular_values(jac: &DMatrix<f64>) -> DVector<f64> {
    let mut sv = jac.clone().svd(false, false).singular_values;
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    sv
}

fn gn_step(jac: &DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    svd.solve(&(-r), RANK_CUTOFF * smax).ok()
}

fn lm_step(jac: &DMatrix<f64>, r: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let jt = jac.transpose();
    let mut a = &jt * jac;
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    a.cholesky().map(|c| c.solve(&(-(jt * r))))
}

fn clamp_step(mut d: DVector<f64>) -> DVector<f64> {
    let m = d.amax();
    if m > MAX_STEP {
        d *= MAX_STEP / m;
    }
    d
}

/// Minimize `‖f(x)‖₂` from `x0` until `‖f‖_∞ < tol`.
///
/// Each iteration tries the minimum-norm Gauss–Newton step with backtracking;
/// if no backtracked step decreases the residual, Levenberg–Marquardt damping
/// is tried with increasing λ.
pub fn gauss_newton<F>(f: F, x0: DVector<f64>, max_iter: usize, tol: f64) -> Result<LsqOutcome>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut x = x0;
    let mut r = f(&x)?;
    let mut history = Vec::new();
    let mut damped_steps = 0;
    for _ in 0..max_iter {
        let rinf = r.amax();
        history.push(rinf);
        if rinf < tol {
            let jac = fd_jacobian(&f, &x, r.len())?;
            return Ok(LsqOutcome {
                singular_values: singular_values(&jac),
                x,
                residual_inf: rinf,
                history,
                damped_steps,
            });
        }
        let jac = fd_jacobian(&f, &x, r.len())?;
        let norm0 = r.norm();
        let mut accepted = None;
        if let Some(d) = gn_step(&jac, &r).map(clamp_step) {
            let mut t = 1.0;
            for _ in 0..30 {
                let xt = &x + &d * t;
                if let Ok(rt) = f(&xt) {
                    if rt.norm() < norm0 {
                        accepted = Some((xt, rt));
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        if accepted.is_none() {
            damped_steps += 1;
            let scale = (jac.transpose() * &jac).diagonal().amax().max(1e-300);
            let mut lambda = 1e-6 * scale;
            for _ in 0..20 {
                if let Some(d) = lm_step(&jac, &r, lambda).map(clamp_step) {
                    let xt = &x + &d;
                    if let Ok(rt) = f(&xt) {
                        if rt.norm() < norm0 {
                            accepted = Some((xt, rt));
                            break;
                        }
                    }
                }
                lambda *= 10.0;
            }
        }
        match accepted {
            Some((xn, rn)) => {
                x = xn;
                r = rn;
            }
            None => {
                return Err(BilliardError::NoConvergence(format!(
                    "stalled with residual {rinf:.3e}"
                )))
            }
        }
    }
    let rinf = r.amax();
    history.push(rinf);
    if rinf < tol {
        let jac = fd_jacobian(&f, &x, r.len())?;
        return Ok(LsqOutcome {
            singular_values: singular_values(&jac),
            x,
            residual_inf: rinf,
            history,
            damped_steps,
        });
    }
    Err(BilliardError::NoConvergence(format!(
        "{max_iter} iterations, residual {rinf:.3e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        // x² + y² = 4, x = y
        let f = |v: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![
                v[0] * v[0] + v[1] * v[1] - 4.0,
                v[0] - v[1],
            ]))
        };
        let out = gauss_newton(f, DVector::from_vec(vec![1.0, 0.5]), 50, 1e-13).unwrap();
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(out.min_singular_value() > 1.0);
    }

    #[test]
    fn rank_deficient_family_flagged() {
        // a circle of solutions: only the radius is pinned
        let f = |v: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![
                v[0] * v[0] + v[1] * v[1] - 1.0,
                0.0,
            ]))
        };
        let out = gauss_newton(f, DVector::from_vec(vec![0.9, 0.3]), 50, 1e-13).unwrap();
        assert!(out.min_singular_value() < 1e-8);
        assert!((out.x.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_stall() {
        let f = |v: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![v[0] * v[0] + 1.0]))
        };
        assert!(gauss_newton(f, DVector::from_vec(vec![0.3]), 100, 1e-12).is_err());
    }
}
